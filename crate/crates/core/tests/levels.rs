use groundstate::action::{
    action_level_with, ground_state_level, monotonicity_check_with, semitrivial_level, threshold, Dominance,
};
use groundstate::{classify, MultistartOptions, ProblemSpec, Support, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = rng.random_range(lo..hi);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

fn light() -> MultistartOptions {
    MultistartOptions { n_random: 50, ..MultistartOptions::default() }
}

#[test]
fn strict_gap_decides_nontriviality() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = light();
    let (mut below, mut above) = (0, 0);
    for _ in 0..1000 {
        let m = rng.random_range(2..=4);
        let k = random_matrix(&mut rng, m, -2.0, 3.0);
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, k).unwrap();
        let full = ground_state_level(&spec, &opts).unwrap().value;
        let sem = semitrivial_level(&spec, &opts).unwrap().value;
        assert!(full <= sem * (1.0 + 1e-12) || !sem.is_finite() && !full.is_finite());
        let verdict = classify(&spec, &opts).unwrap().verdict;
        if !full.is_finite() {
            assert_eq!(verdict, Verdict::NoGroundStates);
            continue;
        }
        let gap = (sem - full) / full;
        if gap > 1e-9 {
            assert_eq!(verdict, Verdict::AllNontrivial, "{spec:?}");
            below += 1;
        } else if gap.abs() <= 1e-12 {
            assert_ne!(verdict, Verdict::AllNontrivial, "{spec:?}");
            above += 1;
        }
    }
    assert!(below > 50 && above > 50, "{below} / {above}");
}

#[test]
fn thresholds_separate_finite_levels() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let opts = light();
    for _ in 0..40 {
        let m = rng.random_range(2..=3);
        let mut k = random_matrix(&mut rng, m, -2.0, 1.0);
        k[0][1] = rng.random_range(0.1..2.0);
        k[1][0] = k[0][1];
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, k).unwrap().with_split(&[(0, 1)], 1.0).unwrap();
        for support in Support::all_nonempty(m) {
            let t = threshold(&spec, support, &opts).unwrap();
            if !t.is_finite() {
                let level = action_level_with(&spec.with_beta(0.0), support, &opts).unwrap();
                assert_eq!(level.value.is_finite(), t == f64::NEG_INFINITY);
                continue;
            }
            let d = 1e-3 * t.abs().max(1.0);
            assert!(action_level_with(&spec.with_beta(t + d), support, &opts).unwrap().value.is_finite());
            assert!(!action_level_with(&spec.with_beta(t - d), support, &opts).unwrap().value.is_finite());
        }
    }
}

#[test]
fn levels_are_monotone_in_frequency_and_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let opts = light();
    let mut checked = 0;
    for n in 0..200 {
        let m = rng.random_range(2..=4);
        let p = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let k = random_matrix(&mut rng, m, -1.0, 2.0);
        let w: f64 = rng.random_range(0.2..3.0);
        let spec1 = ProblemSpec::uniform(p, 1, w, k.clone()).unwrap();
        let spec2 = if n % 2 == 0 {
            ProblemSpec::uniform(p, 1, w * rng.random_range(1.0..3.0), k).unwrap()
        } else {
            let mut k2 = k.clone();
            let (i, j) = (rng.random_range(0..m), rng.random_range(0..m));
            let dk = rng.random_range(0.0..1.0);
            k2[i][j] += dk;
            if i != j {
                k2[j][i] += dk;
            }
            ProblemSpec::uniform(p, 1, w, k2).unwrap()
        };
        let report = monotonicity_check_with(&spec1, &spec2, &opts).unwrap();
        let expected = if n % 2 == 0 { Dominance::Frequency } else { Dominance::Coupling };
        assert_eq!(report.dominance, expected);
        if report.level1.is_finite() || report.level2.is_finite() {
            let scale = report.level1.min(report.level2);
            assert!(report.margin >= -1e-9 * scale, "{report:?}");
            checked += 1;
        }
    }
    assert!(checked > 100);
}

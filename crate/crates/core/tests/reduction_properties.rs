use groundstate::reduction::{maximize_f, simplex_certificate, MultistartOptions, DEDUP_RADIUS};
use groundstate::{AmplitudeVector, ProblemSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn symmetric(m: usize, entries: &[f64]) -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; m]; m];
    let mut it = entries.iter();
    for i in 0..m {
        for j in i..m {
            let v = *it.next().unwrap();
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

fn coupling() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=4).prop_flat_map(|m| (Just(m), prop::collection::vec(-2.0f64..3.0, m * (m + 1) / 2)))
}

fn same_points(a: &[AmplitudeVector], b: &[Vec<f64>]) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| {
            b.iter()
                .any(|y| x.as_slice().iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt() < DEDUP_RADIUS)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn scaling_couplings_scales_the_maximum((m, ks) in coupling(), c in 0.2f64..5.0, p in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        let opts = MultistartOptions::default();
        let k = symmetric(m, &ks);
        let base = maximize_f(&ProblemSpec::uniform(p, 1, 1.0, k.clone()).unwrap(), &opts).unwrap();
        let scaled_k = k.iter().map(|r| r.iter().map(|v| c * v).collect()).collect();
        let scaled = maximize_f(&ProblemSpec::uniform(p, 1, 1.0, scaled_k).unwrap(), &opts).unwrap();
        prop_assert!((scaled.f_max - c * base.f_max).abs() <= 1e-9 * scaled.f_max.abs().max(1e-12));
        if !base.possibly_continuum {
            let pts: Vec<Vec<f64>> = scaled.points.iter().map(|x| x.as_slice().to_vec()).collect();
            prop_assert!(same_points(&base.points, &pts));
        }
    }

    #[test]
    fn maximizers_follow_relabeling((m, ks) in coupling(), rot in 1usize..4) {
        let opts = MultistartOptions::default();
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, symmetric(m, &ks)).unwrap();
        let perm: Vec<usize> = (0..m).map(|i| (i + rot) % m).collect();
        let a = maximize_f(&spec, &opts).unwrap();
        let b = maximize_f(&spec.permuted(&perm), &opts).unwrap();
        prop_assert!((a.f_max - b.f_max).abs() <= 1e-10 * a.f_max.abs().max(1.0));
        if !a.possibly_continuum {
            // Component i of the relabeled problem is component perm[i] of the original.
            let mapped: Vec<Vec<f64>> = a.points.iter().map(|x| perm.iter().map(|&g| x.as_slice()[g]).collect()).collect();
            prop_assert!(same_points(&b.points, &mapped));
        }
    }

    #[test]
    fn ascent_matches_face_certificate((m, ks) in coupling()) {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, symmetric(m, &ks)).unwrap();
        let set = maximize_f(&spec, &MultistartOptions::default()).unwrap();
        let cert = simplex_certificate(m, &spec.effective_matrix());
        prop_assert!((set.f_max - cert).abs() <= 1e-8, "{} vs {}", set.f_max, cert);
        prop_assert_eq!(set.certificate.map(|c| (c - cert).abs() <= 1e-12), Some(true));
    }
}

#[test]
fn maximum_bounds_random_sphere_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let opts = MultistartOptions::default();
    for (m, p) in [(3usize, 1.0), (4, 2.0), (3, 0.5)] {
        let entries: Vec<f64> = (0..m * (m + 1) / 2).map(|_| rng.random_range(-2.0..3.0)).collect();
        let spec = ProblemSpec::uniform(p, 1, 1.0, symmetric(m, &entries)).unwrap();
        let f_max = maximize_f(&spec, &opts).unwrap().f_max;
        let k = spec.effective_matrix();
        let mut worst = f64::NEG_INFINITY;
        let mut y = vec![0.0; m];
        for _ in 0..1_000_000 {
            let mut norm = 0.0;
            for v in y.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *v = g.abs();
                norm += g * g;
            }
            let norm = norm.sqrt();
            for v in y.iter_mut() {
                *v = (*v / norm).powf(p + 1.0);
            }
            let mut f = 0.0;
            for i in 0..m {
                for j in 0..m {
                    f += k[i * m + j] * y[i] * y[j];
                }
            }
            worst = worst.max(f);
        }
        assert!(worst <= f_max + 1e-9, "sample {worst} exceeds maximum {f_max}");
    }
}

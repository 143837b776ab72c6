//! End-to-end acceptance criteria. Each test writes one `PASS`/`FAIL` line
//! to stderr (bypassing output capture) before asserting.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use groundstate::action::{action_level, check_corollary_13, continuity_scan, monotonicity_check_with};
use groundstate::algebraic::{residual, solve_general_p, Outcome};
use groundstate::mandel::{beta_hat, prop_17_sweep, Regime};
use groundstate::model::{evaluate_i, evaluate_j};
use groundstate::reduction::f_value;
use groundstate::scalar::{scale_omega, shoot_profile, solve_scalar};
use groundstate::variational::{minimize_constrained, verify_characterization};
use groundstate::{classify, AmplitudeVector, DiscreteField, Grid, MultistartOptions, ProblemSpec, Support, Verdict};
use groundstate_cli::{run_sweep, Config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, title: &str, ok: bool, detail: &str, start: Instant) {
    let status = if ok { "PASS" } else { "FAIL" };
    let secs = start.elapsed().as_secs_f64();
    let _ = writeln!(std::io::stderr().lock(), "criterion {n} {status}: {title} ({detail}; {secs:.1} s)");
}

fn triangle(a: f64, b: f64, c: f64) -> ProblemSpec {
    ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![0.0, a, b], vec![a, 0.0, c], vec![b, c, 0.0]]).unwrap()
}

#[test]
fn criterion_1_triangle_law() {
    let start = Instant::now();
    let opts = MultistartOptions::default();
    let axis: Vec<f64> = (1..=50).map(|k| 3.0 * k as f64 / 50.0).collect();
    let (mut checked, mut wrong_verdict, mut max_amp_err) = (0usize, 0usize, 0.0f64);
    let mut first_failure = None;
    for (ia, &a) in axis.iter().enumerate() {
        for (ib, &b) in axis.iter().enumerate().skip(ia) {
            for &c in axis.iter().skip(ib) {
                if (a + b - c).abs() <= 1e-3 {
                    continue;
                }
                let rep = classify(&triangle(a, b, c), &opts).unwrap();
                checked += 1;
                let nontrivial = a + b > c;
                if (rep.verdict == Verdict::AllNontrivial) != nontrivial {
                    wrong_verdict += 1;
                    first_failure.get_or_insert((a, b, c, rep.verdict));
                    continue;
                }
                if nontrivial {
                    let x = [(a + b - c) / (2.0 * a * b), (a + c - b) / (2.0 * a * c), (b + c - a) / (2.0 * b * c)];
                    for amp in &rep.amplitudes {
                        for i in 0..3 {
                            max_amp_err = max_amp_err.max((amp[i] * amp[i] - x[i]).abs());
                        }
                    }
                }
            }
        }
    }
    let ok = wrong_verdict == 0 && max_amp_err <= 1e-9;
    let detail = format!("{checked} points, {wrong_verdict} wrong verdicts, max amplitude error {max_amp_err:.2e}");
    report(1, "nontrivial exactly when a+b>c, Cramer amplitudes", ok, &detail, start);
    assert!(ok, "{detail}; first failure {first_failure:?}");
}

/// Region of the `(b, μ)` plane from the closed-form comparisons.
fn closed_form_label(b: f64, mu: f64) -> &'static str {
    if b < 3.0 && mu < 2.0 * (b - 1.0) / b {
        "E"
    } else if mu > 2.0 && mu > b / 2.0 {
        "D"
    } else if mu < 2.0 && mu > 4.0 - 8.0 / b {
        "A"
    } else {
        "C"
    }
}

fn near_boundary(b: f64, mu: f64, band: f64) -> bool {
    [2.0 * (b - 1.0) / b, 2.0, b / 2.0, 4.0 - 8.0 / b].iter().any(|c| (mu - c).abs() <= band) || (b - 3.0).abs() <= band
}

#[test]
fn criterion_2_phase_diagram() {
    let start = Instant::now();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example3_phase_diagram.json");
    let cfg = Config::load(&path).unwrap();
    let rows = run_sweep(&cfg.spec, &cfg.axes, &cfg.labels, &MultistartOptions::default()).unwrap();
    assert_eq!(rows.len(), 200 * 200);
    let (mut compared, mut agree) = (0usize, 0usize);
    let mut disagreements = Vec::new();
    for r in &rows {
        let (b, mu) = (r.values[0], r.values[1]);
        if near_boundary(b, mu, 1e-3) {
            continue;
        }
        compared += 1;
        let expected = closed_form_label(b, mu);
        if r.label == expected {
            agree += 1;
        } else if disagreements.len() < 10 {
            disagreements.push((b, mu, expected, r.label.clone()));
        }
    }
    let rate = agree as f64 / compared as f64;
    let ok = rate >= 0.995;
    let detail = format!("{agree}/{compared} points agree ({:.3}%)", 100.0 * rate);
    report(2, "phase diagram matches closed-form regions", ok, &detail, start);
    assert!(ok, "{detail}; e.g. {disagreements:?}");
}

#[test]
fn criterion_3_cubic_triangle() {
    let start = Instant::now();
    let k = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
    let spec = ProblemSpec::uniform(3.0, 1, 1.0, k).unwrap();
    let full = Support::full(3);
    let start_point = AmplitudeVector::uniform_on(3, full);
    let Outcome::Found(sol) = solve_general_p(&spec, full, &start_point).unwrap() else {
        panic!("no full-support solution");
    };
    let a_exact = 2f64.powf(-1.0 / 6.0);
    let amp_err = sol.a.iter().fold(0.0f64, |m, a| m.max((a - a_exact).abs()));
    let res = residual(&spec, full, &sol.a);
    let pair = action_level(&spec, Support::from_indices([0, 1])).unwrap().coeff;
    let triple_exact = 3.0 * 2f64.powf(-1.0 / 3.0);
    let gap = sol.reduced_action_coeff - pair;
    let verdict = classify(&spec, &MultistartOptions::default()).unwrap().verdict;
    let ok = amp_err <= 1e-12
        && res <= 1e-12
        && (sol.reduced_action_coeff - triple_exact).abs() <= 1e-12
        && (pair - 2.0).abs() <= 1e-12
        && (gap - 0.3811).abs() <= 5e-5
        && verdict == Verdict::SemitrivialOnly;
    let detail = format!("a error {amp_err:.1e}, residual {res:.1e}, gap {gap:.6}, verdict {}", verdict.as_str());
    report(3, "p = 3 triangle prefers pairs", ok, &detail, start);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_4_negative_diagonal_thresholds() {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for m in 3..=5 {
        let rep = check_corollary_13(m, 1.0).unwrap();
        let mf = m as f64;
        let (want_full, want_sem) = (2.0 / (mf - 1.0), 2.0 / (mf - 2.0));
        ok &= (rep.threshold_full - want_full).abs() <= 1e-4 && (rep.threshold_semitrivial - want_sem).abs() <= 1e-4;
        parts.push(format!(
            "M={m}: full {:.6} (stated {want_full:.6}), sem {:.6} (stated {want_sem:.6})",
            rep.threshold_full, rep.threshold_semitrivial
        ));
    }
    let detail = parts.join("; ");
    report(4, "negative-diagonal thresholds 2/(M-1), 2/(M-2)", ok, &detail, start);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_5_scalar_solver() {
    let start = Instant::now();
    let mut sup_err = 0.0f64;
    for p in [1.0f64, 2.0, 3.0] {
        for omega in [0.5f64, 1.0, 4.0] {
            let amp = ((p + 1.0) * omega).powf(0.5 / p);
            for gs in [solve_scalar(p, 1, omega).unwrap(), shoot_profile(p, 1, omega).unwrap()] {
                for (r, u) in gs.r.iter().zip(&gs.u) {
                    let exact = amp * (1.0 / (p * omega.sqrt() * r).cosh()).powf(1.0 / p);
                    sup_err = sup_err.max((u - exact).abs());
                }
            }
        }
    }
    let mut ij_err = 0.0f64;
    let mut scale_err = 0.0f64;
    for dim in 1..=3 {
        for p in [1.0, 2.0] {
            if dim == 3 && p >= 2.0 {
                continue;
            }
            let base = solve_scalar(p, dim, 1.0).unwrap();
            ij_err = ij_err.max(base.bound_state_defect());
            for omega in [0.5, 2.0, 4.0] {
                let direct = solve_scalar(p, dim, omega).unwrap();
                ij_err = ij_err.max(direct.bound_state_defect());
                let factor = omega.powf((2.0 - p * (dim as f64 - 2.0)) / (2.0 * p));
                scale_err = scale_err.max((base.i_value * factor - direct.i_value).abs() / direct.i_value);
                let scaled = scale_omega(&base, omega).unwrap();
                scale_err = scale_err.max((scaled.u0_at_0 - direct.u0_at_0).abs() / direct.u0_at_0);
            }
        }
    }
    let ok = sup_err <= 1e-6 && ij_err <= 1e-6 && scale_err <= 1e-5;
    let detail = format!("profile {sup_err:.1e}, I=J {ij_err:.1e}, scaling {scale_err:.1e}");
    report(5, "scalar profiles, I=J and frequency scaling", ok, &detail, start);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_6_pde_characterization() {
    let start = Instant::now();
    let specs = [
        vec![vec![1.0]],
        vec![vec![1.0, 0.5], vec![0.5, 2.0]],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![vec![1.0, 0.0], vec![0.0, 1.5]],
        vec![vec![-0.5, 2.0], vec![2.0, 1.0]],
        vec![vec![1.0, -0.3], vec![-0.3, 1.0]],
        vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
        vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 3.0], vec![1.0, 3.0, 0.0]],
        vec![vec![0.0, 4.0, 1.0], vec![4.0, 0.0, 2.0], vec![1.0, 2.0, 3.0]],
        vec![vec![1.0, 0.5, 0.2], vec![0.5, 1.0, 0.5], vec![0.2, 0.5, 1.0]],
    ];
    let grid = Grid::symmetric(20.0, 4001).unwrap();
    let gs = solve_scalar(1.0, 1, 1.0).unwrap();
    let mut failures = Vec::new();
    let (mut worst_prop, mut worst_amp, mut worst_action) = (0.0f64, 0.0f64, 0.0f64);
    for (n, k) in specs.into_iter().enumerate() {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, k).unwrap();
        let r = minimize_constrained(&spec, grid, None).unwrap();
        let rep = verify_characterization(&spec, &r, &gs).unwrap();
        worst_prop = worst_prop.max(rep.proportionality_defect);
        worst_amp = worst_amp.max(rep.amplitude_error);
        worst_action = worst_action.max(rep.action_relative_error);
        if !(r.converged
            && rep.proportionality_defect <= 1e-3
            && rep.amplitude_error <= 1e-3
            && rep.action_relative_error <= 2e-3)
        {
            failures.push(n);
        }
    }
    let ok = failures.is_empty();
    let detail = format!(
        "10 specs, worst proportionality {worst_prop:.1e}, amplitude {worst_amp:.1e}, action {worst_action:.1e}"
    );
    report(6, "PDE minimizers have the separable form", ok, &detail, start);
    assert!(ok, "{detail}; failing specs {failures:?}");
}

#[test]
fn criterion_7_characteristic_values() {
    let start = Instant::now();
    let pair = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![1.0, 1.0], vec![1.0, 1.0]])
        .unwrap()
        .with_split(&[(0, 1)], 1.0)
        .unwrap();
    let below = beta_hat(&pair, 0.5).unwrap();
    let above = beta_hat(&pair, 2.0).unwrap();
    let pair_ok = [&below, &above].iter().all(|r| (r.beta_hat.unwrap() - 1.0).abs() <= 1e-3)
        && below.regime == Regime::NontrivialEmpty
        && above.regime == Regime::AllNontrivial;

    let base = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![0.0, 4.0, 1.0], vec![4.0, 0.0, 2.0], vec![1.0, 2.0, 1.0]])
        .unwrap()
        .with_split(&[(2, 2)], 1.0)
        .unwrap();
    let mut flat = Vec::new();
    let mut tracking_err = 0.0f64;
    for k in 0..=25 {
        let mu = 0.5 + 0.1 * k as f64;
        let hat = beta_hat(&base, mu).unwrap().beta_hat.unwrap();
        if mu <= 2.0 + 1e-12 {
            flat.push(hat);
        } else {
            tracking_err = tracking_err.max((hat - mu).abs());
        }
    }
    let variation =
        flat.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - flat.iter().cloned().fold(f64::INFINITY, f64::min);
    let ok = pair_ok && variation <= 1e-6 && tracking_err <= 1e-3;
    let detail = format!(
        "pair β̂ {:.6}, μ̂ variation up to 2 {variation:.1e} (value {:.6}), |μ̂ − μ| beyond {tracking_err:.1e}",
        below.beta_hat.unwrap(),
        flat[0]
    );
    report(7, "characteristic values and regime flips", ok, &detail, start);
    assert!(ok, "{detail}");
}

fn random_symmetric(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = rng.random_range(-1.0..2.0);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

#[test]
fn criterion_8_property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = MultistartOptions { n_random: 60, ..MultistartOptions::default() };

    let mut worst_margin = f64::INFINITY;
    for n in 0..500 {
        let m = rng.random_range(2..=4);
        let p = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let k = random_symmetric(&mut rng, m);
        let w = rng.random_range(0.3..3.0);
        let spec1 = ProblemSpec::uniform(p, 1, w, k.clone()).unwrap();
        let spec2 = if n % 2 == 0 {
            ProblemSpec::uniform(p, 1, w * rng.random_range(1.0..2.5), k).unwrap()
        } else {
            let mut k2 = k;
            let (i, j) = (rng.random_range(0..m), rng.random_range(0..m));
            let d = rng.random_range(0.0..1.0);
            k2[i][j] += d;
            if i != j {
                k2[j][i] += d;
            }
            ProblemSpec::uniform(p, 1, w, k2).unwrap()
        };
        let rep = monotonicity_check_with(&spec1, &spec2, &opts).unwrap();
        if rep.level1.is_finite() || rep.level2.is_finite() {
            worst_margin = worst_margin.min(rep.margin);
        }
    }
    let monotone = worst_margin >= -1e-9;

    let scans = [
        (vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![(0, 1)], (0.0, 3.0)),
        (vec![vec![0.0, 4.0, 1.0], vec![4.0, 0.0, 2.0], vec![1.0, 2.0, 1.0]], vec![(2, 2)], (0.5, 3.0)),
        (vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 2.0], vec![1.0, 2.0, 1.0]], vec![(0, 1)], (1.0, 4.0)),
        (
            vec![vec![-1.0, 1.0, 1.0], vec![1.0, -1.0, 1.0], vec![1.0, 1.0, -1.0]],
            vec![(0, 1), (0, 2), (1, 2)],
            (0.6, 2.0),
        ),
    ];
    let mut jumps = 0;
    for (k, pairs, range) in scans {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, k).unwrap().with_split(&pairs, 1.0).unwrap();
        jumps += continuity_scan(&spec, range, 41).unwrap().jumps.len();
    }
    let continuous = jumps == 0;

    let grid = Grid::symmetric(8.0, 161).unwrap();
    let mut invariance_err = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(2..=4);
        let p = rng.random_range(0.5..3.0);
        let omega: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
        let spec = ProblemSpec::new(p, 1, omega, random_symmetric(&mut rng, m)).unwrap();
        let params: Vec<(f64, f64)> =
            (0..m).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0))).collect();
        let u = DiscreteField::from_fn(grid, m, |i, x| params[i].0 * (-(x - params[i].1).powi(2)).exp());
        let c = rng.random_range(0.3..2.0);
        let cu = DiscreteField::from_fn(grid, m, |i, x| c * params[i].0 * (-(x - params[i].1).powi(2)).exp());
        let (j, i_val) = (evaluate_j(&spec, &u).unwrap(), evaluate_i(&spec, &u).unwrap());
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        if j.abs() > 1e-8 {
            invariance_err = invariance_err.max(rel(evaluate_j(&spec, &cu).unwrap(), c.powf(2.0 * p + 2.0) * j));
        }
        invariance_err = invariance_err.max(rel(evaluate_i(&spec, &cu).unwrap(), c * c * i_val));
        let mut perm: Vec<usize> = (0..m).collect();
        perm.reverse();
        let spec_p = spec.permuted(&perm);
        let up = DiscreteField::from_fn(grid, m, |i, x| params[perm[i]].0 * (-(x - params[perm[i]].1).powi(2)).exp());
        let jp = evaluate_j(&spec_p, &up).unwrap();
        invariance_err = invariance_err.max((jp - j).abs() / j.abs().max(1.0));
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let xp: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let f = f_value(&spec, &AmplitudeVector::new(x).unwrap()).unwrap();
        let fp = f_value(&spec_p, &AmplitudeVector::new(xp).unwrap()).unwrap();
        invariance_err = invariance_err.max((f - fp).abs() / f.abs().max(1.0));
    }
    let invariant = invariance_err <= 1e-12;

    let mut bound = f64::INFINITY;
    for (m, n) in [(2, 2001), (3, 201), (4, 41)] {
        for p in [1.0, 2.0, 3.0] {
            bound = bound.min(prop_17_sweep(m, p, n).unwrap().lower_bound());
        }
    }
    let positive = bound > 0.0;

    let ok = monotone && continuous && invariant && positive;
    let detail = format!(
        "worst monotonicity margin {worst_margin:.1e}, {jumps} jumps, invariance error {invariance_err:.1e}, g lower bound {bound:.4}"
    );
    report(8, "monotonicity, continuity, invariances, g-bound", ok, &detail, start);
    assert!(ok, "{detail}");
}

use groundstate::action::action_level;
use groundstate::scalar::solve_scalar;
use groundstate::variational::{minimize_constrained, numerical_level, verify_characterization};
use groundstate::{Grid, ProblemSpec, Support};

fn grid() -> Grid {
    Grid::symmetric(20.0, 4001).unwrap()
}

#[test]
fn minimizers_have_the_separable_form() {
    let cases = [
        vec![vec![1.0, 0.5], vec![0.5, 2.0]],
        vec![vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 1.5], vec![1.0, 1.5, 0.0]],
        vec![vec![-0.5, 1.0], vec![1.0, 0.3]],
    ];
    let gs = solve_scalar(1.0, 1, 1.0).unwrap();
    for k in cases {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, k).unwrap();
        let r = minimize_constrained(&spec, grid(), None).unwrap();
        assert!(r.converged);
        let rep = verify_characterization(&spec, &r, &gs).unwrap();
        assert!(rep.holds(), "{rep:?}");
        let level = action_level(&spec, Support::full(spec.m)).unwrap().value;
        assert!((r.lambda_g - level).abs() <= 2e-3 * level, "{} vs {level}", r.lambda_g);
    }
}

#[test]
fn equal_triangle_has_equal_amplitudes() {
    let k = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
    let spec = ProblemSpec::uniform(1.0, 1, 1.0, k).unwrap();
    let r = minimize_constrained(&spec, grid(), None).unwrap();
    let gs = solve_scalar(1.0, 1, 1.0).unwrap();
    let rep = verify_characterization(&spec, &r, &gs).unwrap();
    for a in &rep.fitted_amplitudes {
        assert!((a - 0.5f64.sqrt()).abs() <= 1e-3, "{:?}", rep.fitted_amplitudes);
    }
}

#[test]
fn cubic_triangle_minimizer_uses_two_components() {
    let k = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
    let spec = ProblemSpec::uniform(3.0, 1, 1.0, k).unwrap();
    let r = minimize_constrained(&spec, grid(), None).unwrap();
    assert_eq!(r.support().len(), 2, "peaks {:?}", r.peaks());
    let pair = action_level(&spec, Support::from_indices([0, 1])).unwrap().value;
    let triple = action_level(&spec, Support::full(3)).unwrap().value;
    assert!((r.lambda_g - pair).abs() <= 2e-3 * pair);
    assert!(r.lambda_g < triple);
}

#[test]
fn numerical_levels_rise_with_frequencies() {
    let k = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
    let full = Support::full(2);
    let mut prev = 0.0;
    for omega in [vec![1.0, 1.0], vec![1.0, 1.5], vec![1.5, 1.5], vec![1.5, 2.5]] {
        let spec = ProblemSpec::new(1.0, 1, omega, k.clone()).unwrap();
        let level = numerical_level(&spec, full, 4001).unwrap();
        assert!(level >= prev * (1.0 - 2e-3), "{level} < {prev}");
        prev = level;
    }
    let weak = ProblemSpec::new(1.0, 1, vec![1.0, 2.0], k.clone()).unwrap();
    let mut k2 = k;
    k2[0][1] = 1.0;
    k2[1][0] = 1.0;
    let strong = ProblemSpec::new(1.0, 1, vec![1.0, 2.0], k2).unwrap();
    let l_weak = numerical_level(&weak, full, 4001).unwrap();
    let l_strong = numerical_level(&strong, full, 4001).unwrap();
    assert!(l_strong <= l_weak * (1.0 + 2e-3), "{l_strong} > {l_weak}");
}

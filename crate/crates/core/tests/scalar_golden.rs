use groundstate::scalar::{scale_omega, solve_scalar};

const GOLDEN: &str = include_str!("data/scalar_golden.csv");

fn rows() -> Vec<(f64, usize, f64, f64, f64)> {
    GOLDEN
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Vec<&str> = l.split(',').collect();
            (
                v[0].parse().unwrap(),
                v[1].parse().unwrap(),
                v[2].parse().unwrap(),
                v[3].parse().unwrap(),
                v[4].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn matches_reference_profiles() {
    for (p, n, omega, u0, i) in rows() {
        let gs = solve_scalar(p, n, omega).unwrap();
        assert!((gs.u0_at_0 - u0).abs() <= 1e-6 * u0, "N={n}: u(0) = {} vs {u0}", gs.u0_at_0);
        assert!((gs.i_value - i).abs() <= 1e-5 * i, "N={n}: I = {} vs {i}", gs.i_value);
        assert!(gs.bound_state_defect() <= 1e-5, "N={n}: I/J defect {}", gs.bound_state_defect());
        assert!(gs.pohozaev_defect() <= 1e-5, "N={n}: Pohozaev defect {}", gs.pohozaev_defect());
        assert!(gs.is_monotone_decreasing(), "N={n}");
    }
}

#[test]
fn frequency_scaling_agrees_with_direct_solve() {
    for (p, n) in [(1.0, 2), (1.0, 3), (0.5, 2), (2.0, 1)] {
        let base = solve_scalar(p, n, 1.0).unwrap();
        for omega in [0.5, 2.0, 4.0] {
            let scaled = scale_omega(&base, omega).unwrap();
            let direct = solve_scalar(p, n, omega).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            assert!(rel(scaled.u0_at_0, direct.u0_at_0) <= 1e-5, "p={p} N={n} ω={omega}");
            assert!(rel(scaled.i_value, direct.i_value) <= 1e-5, "p={p} N={n} ω={omega}");
            for k in 1..8 {
                let r = 0.25 * k as f64;
                assert!(
                    (scaled.eval(r) - direct.eval(r)).abs() <= 1e-5 * direct.u0_at_0,
                    "p={p} N={n} ω={omega} r={r}"
                );
            }
        }
    }
}

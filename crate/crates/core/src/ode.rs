//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (same as the last stage row, FSAL).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

/// Integrates `y' = f(t, y)` from `t0` towards `t_end`. After every accepted
/// step `observe(t, y)` is called; returning `false` stops the integration.
/// Returns the final time reached, or `None` if the step size underflowed.
pub(crate) fn integrate<const D: usize>(
    f: impl Fn(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    tol: Tolerance,
    mut observe: impl FnMut(f64, &[f64; D]) -> bool,
) -> Option<f64> {
    let mut t = t0;
    let mut y = y0;
    let mut k = [[0.0; D]; 7];
    k[0] = f(t, &y);
    let mut h = initial_step(&f, t, &y, &k[0], tol, t_end - t0);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut stage = [0.0; D];
        for s in 1..7 {
            for d in 0..D {
                let mut acc = y[d];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[d];
                }
                stage[d] = acc;
            }
            k[s] = f(t + C[s] * h, &stage);
        }
        let mut y5 = [0.0; D];
        let mut err = 0.0f64;
        for d in 0..D {
            let mut hi = y[d];
            let mut lo = y[d];
            for s in 0..7 {
                hi += h * B5[s] * k[s][d];
                lo += h * B4[s] * k[s][d];
            }
            y5[d] = hi;
            let sc = tol.atol + tol.rtol * y[d].abs().max(hi.abs());
            err = err.max(((hi - lo) / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.2;
        } else if err <= 1.0 {
            t += h;
            y = y5;
            k[0] = k[6];
            if !observe(t, &y) {
                return Some(t);
            }
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h <= 1e-14 * t.abs().max(1e-300) {
            return None;
        }
    }
    Some(t)
}

fn initial_step<const D: usize>(
    f: &impl Fn(f64, &[f64; D]) -> [f64; D],
    t: f64,
    y: &[f64; D],
    dy: &[f64; D],
    tol: Tolerance,
    span: f64,
) -> f64 {
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for d in 0..D {
        let sc = tol.atol + tol.rtol * y[d].abs();
        d0 = d0.max((y[d] / sc).abs());
        d1 = d1.max((dy[d] / sc).abs());
    }
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y1 = [0.0; D];
    for d in 0..D {
        y1[d] = y[d] + h0 * dy[d];
    }
    let dy1 = f(t + h0, &y1);
    let mut d2 = 0.0f64;
    for d in 0..D {
        let sc = tol.atol + tol.rtol * y[d].abs();
        d2 = d2.max(((dy1[d] - dy[d]) / sc).abs() / h0);
    }
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span.abs())
}

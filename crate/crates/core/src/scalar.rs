//! Positive radial ground-state of `Δu − ωu + |u|^{2p} u = 0` on `R^N`.
//!
//! In one dimension the profile is the explicit soliton
//! `((p+1)ω)^{1/2p} sech^{1/p}(p√ω x)`; in higher dimensions it is found by
//! shooting on the central value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::scaling_exponent;
use crate::numeric::pow;
use crate::ode::{self, Tolerance};

const PROFILE_NODES: usize = 4001;
const SHOOT_RTOL: f64 = 1e-10;
/// Bracket trajectories that differ by more than this (relative) have separated.
const SEPARATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Shooting,
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarGroundState {
    pub p: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub omega: f64,
    /// Uniform radial grid on `[0, r_max]`.
    #[serde(skip)]
    pub r: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub du: Vec<f64>,
    pub u0_at_0: f64,
    /// `∫ u²` over `R^N`.
    pub mass: f64,
    /// `∫ |∇u|²` over `R^N`.
    pub grad_energy: f64,
    /// `∫ u^{2p+2}` over `R^N`.
    pub lp_norm: f64,
    #[serde(rename = "I_value")]
    pub i_value: f64,
    pub method: Method,
}

impl ScalarGroundState {
    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Profile value at radius `r >= 0` (cubic Hermite between samples, 0 beyond `r_max`).
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if self.method == Method::ClosedForm {
            return soliton(self.p, self.omega, r);
        }
        if r >= self.r_max() {
            return 0.0;
        }
        let h = self.r[1] - self.r[0];
        let k = ((r / h) as usize).min(self.r.len() - 2);
        hermite(self.r[k], self.u[k], self.du[k], self.r[k + 1], self.u[k + 1], self.du[k + 1], r)
    }

    /// `|I − J| / I` with `J = ∫ u^{2p+2}`; zero for an exact bound-state.
    pub fn bound_state_defect(&self) -> f64 {
        (self.i_value - self.lp_norm).abs() / self.i_value
    }

    /// Relative defect of the Pohozaev identity `∫|∇u|² = N p / (2p+2) ∫ u^{2p+2}`.
    pub fn pohozaev_defect(&self) -> f64 {
        let rhs = self.dim as f64 * self.p / (2.0 * self.p + 2.0) * self.lp_norm;
        (self.grad_energy - rhs).abs() / self.grad_energy
    }

    /// Strictly decreasing and positive on every sampled radius in `(0, r_max)`.
    pub fn is_monotone_decreasing(&self) -> bool {
        let n = self.u.len();
        self.u[..n - 1].iter().all(|v| *v > 0.0) && self.u.windows(2).all(|w| w[1] < w[0])
    }
}

fn hermite(r0: f64, u0: f64, d0: f64, r1: f64, u1: f64, d1: f64, r: f64) -> f64 {
    let h = r1 - r0;
    let s = (r - r0) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * u0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * u1 + (s3 - s2) * h * d1
}

fn soliton(p: f64, omega: f64, x: f64) -> f64 {
    ((p + 1.0) * omega).powf(0.5 / p) * (1.0 / (p * omega.sqrt() * x).cosh()).powf(1.0 / p)
}

fn soliton_derivative(p: f64, omega: f64, x: f64) -> f64 {
    -omega.sqrt() * (p * omega.sqrt() * x).tanh() * soliton(p, omega, x)
}

/// `∫_R sech^a(s) ds = √π Γ(a/2) / Γ((a+1)/2)`.
fn sech_power_integral(a: f64) -> f64 {
    std::f64::consts::PI.sqrt() * libm::tgamma(0.5 * a) / libm::tgamma(0.5 * (a + 1.0))
}

/// Surface area of the unit sphere in `R^N` (2 for `N = 1`).
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * std::f64::consts::PI.powf(0.5 * n) / libm::tgamma(0.5 * n)
}

fn check_args(p: f64, dim: usize, omega: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if dim >= 3 && p >= 2.0 / (dim as f64 - 2.0) {
        return Err(Error::InvalidArgument(format!("p = {p} is not subcritical in dimension {dim}")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
    }
    Ok(())
}

pub fn solve_scalar(p: f64, dim: usize, omega: f64) -> Result<ScalarGroundState> {
    check_args(p, dim, omega)?;
    if dim == 1 {
        Ok(closed_form(p, omega))
    } else {
        shoot_profile(p, dim, omega)
    }
}

fn closed_form(p: f64, omega: f64) -> ScalarGroundState {
    let r_max = 50.0 / omega.sqrt();
    let h = r_max / (PROFILE_NODES - 1) as f64;
    let r: Vec<f64> = (0..PROFILE_NODES).map(|k| k as f64 * h).collect();
    let u = r.iter().map(|x| soliton(p, omega, *x)).collect();
    let du = r.iter().map(|x| soliton_derivative(p, omega, *x)).collect();
    let amp2 = ((p + 1.0) * omega).powf(1.0 / p);
    let scale = 1.0 / (p * omega.sqrt());
    let b0 = sech_power_integral(2.0 / p);
    let b1 = sech_power_integral(2.0 / p + 2.0);
    let mass = amp2 * scale * b0;
    // u'² = ω u² tanh² = ω u² (1 − sech²).
    let grad_energy = omega * amp2 * scale * (b0 - b1);
    let lp_norm = pow(amp2, p + 1.0) * scale * b1;
    ScalarGroundState {
        p,
        dim: 1,
        omega,
        r,
        u,
        du,
        u0_at_0: amp2.sqrt(),
        mass,
        grad_energy,
        lp_norm,
        i_value: grad_energy + omega * mass,
        method: Method::ClosedForm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ShotKind {
    /// `u` crossed zero: central value too large.
    Over,
    /// `u'` turned positive: central value too small.
    Under,
}

/// Samples `(r, [u, u', ∫u² r^{N−1}, ∫u'² r^{N−1}, ∫u^{2p+2} r^{N−1}])`.
type Trace = Vec<(f64, [f64; 5])>;

fn shoot(p: f64, dim: usize, omega: f64, u0: f64, r_max: f64, record: bool) -> (ShotKind, Trace) {
    let nm1 = dim as f64 - 1.0;
    let rhs = move |r: f64, y: &[f64; 5]| {
        let (u, v) = (y[0], y[1]);
        let w = pow(r, nm1);
        let up = pow(u.abs(), 2.0 * p);
        [v, -nm1 / r * v + omega * u - up * u, u * u * w, v * v * w, up * u * u * w]
    };
    let r0 = 1e-4 * (1.0 / omega.sqrt()).min(pow(u0, -p));
    let c = omega * u0 - pow(u0, 2.0 * p + 1.0);
    let n = dim as f64;
    let y0 = [
        u0 + c * r0 * r0 / (2.0 * n),
        c * r0 / n,
        u0 * u0 * pow(r0, dim as f64) / n,
        0.0,
        pow(u0, 2.0 * p + 2.0) * pow(r0, dim as f64) / n,
    ];
    let tol = Tolerance { rtol: SHOOT_RTOL, atol: 1e-15 * u0.max(1.0) };
    let mut trace = Vec::new();
    if record {
        trace.push((0.0, [u0, 0.0, 0.0, 0.0, 0.0]));
        trace.push((r0, y0));
    }
    let mut kind = None;
    let mut last = y0;
    ode::integrate(rhs, r0, y0, r_max, tol, |r, y| {
        if record {
            trace.push((r, *y));
        }
        last = *y;
        if y[0] < 0.0 {
            kind = Some(ShotKind::Over);
        } else if y[1] > 0.0 {
            kind = Some(ShotKind::Under);
        }
        kind.is_none()
    });
    // Undecided at r_max: compare with the decaying branch u' ≈ −√ω u.
    let kind = kind.unwrap_or(if last[1] + omega.sqrt() * last[0] > 0.0 { ShotKind::Under } else { ShotKind::Over });
    (kind, trace)
}

/// Radial ground-state by shooting, available in every dimension (including
/// `N = 1`, where it serves as a cross-check of the closed form).
pub fn shoot_profile(p: f64, dim: usize, omega: f64) -> Result<ScalarGroundState> {
    check_args(p, dim, omega)?;
    let r_max = 50.0 / omega.sqrt();
    let shot = |u0: f64| shoot(p, dim, omega, u0, r_max, false).0;

    let (lo_lim, hi_lim) = (1e-6, 1e6);
    let mut guess = ((p + 1.0) * omega).powf(0.5 / p);
    let (mut lo, mut hi);
    if shot(guess) == ShotKind::Under {
        lo = guess;
        loop {
            guess *= 2.0;
            if guess > hi_lim {
                return Err(Error::Solver(format!("shooting failed to bracket the central value below {hi_lim}")));
            }
            if shot(guess) == ShotKind::Over {
                hi = guess;
                break;
            }
            lo = guess;
        }
    } else {
        hi = guess;
        loop {
            guess *= 0.5;
            if guess < lo_lim {
                return Err(Error::Solver(format!("shooting failed to bracket the central value above {lo_lim}")));
            }
            if shot(guess) == ShotKind::Under {
                lo = guess;
                break;
            }
            hi = guess;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shot(mid) {
            ShotKind::Under => lo = mid,
            ShotKind::Over => hi = mid,
        }
    }

    let (_, lo_trace) = shoot(p, dim, omega, lo, r_max, true);
    let (_, hi_trace) = shoot(p, dim, omega, hi, r_max, true);
    let sep = separation_index(&lo_trace, &hi_trace);
    let (r_sep, y_sep) = lo_trace[sep];
    if y_sep[0] > 1e-3 * lo {
        return Err(Error::Solver(format!(
            "bracketing trajectories separate too early (r = {r_sep}, u/u(0) = {})",
            y_sep[0] / lo
        )));
    }

    // Asymptotic tail u ≈ C r^{−(N−1)/2} e^{−√ω r} beyond the separation radius.
    let sw = omega.sqrt();
    let half = 0.5 * (dim as f64 - 1.0);
    let c_tail = y_sep[0] * pow(r_sep, half) * (sw * r_sep).exp();
    let tail = |r: f64| c_tail * pow(r, -half) * (-sw * r).exp();
    let tail_d = |r: f64| -tail(r) * (sw + half / r);
    let nm1 = dim as f64 - 1.0;
    let tail_mass = y_sep[0] * y_sep[0] * pow(r_sep, nm1) / (2.0 * sw);
    let (mut tail_grad, mut tail_lp) = (0.0, 0.0);
    let tail_nodes = 8001;
    let th = 40.0 / sw / (tail_nodes - 1) as f64;
    for k in 0..tail_nodes {
        let r = r_sep + k as f64 * th;
        let w = if k == 0 || k == tail_nodes - 1 { 0.5 * th } else { th };
        let rn = pow(r, nm1);
        tail_grad += w * tail_d(r).powi(2) * rn;
        tail_lp += w * pow(tail(r), 2.0 * p + 2.0) * rn;
    }

    let area = sphere_area(dim);
    let mass = area * (y_sep[2] + tail_mass);
    let grad_energy = area * (y_sep[3] + tail_grad);
    let lp_norm = area * (y_sep[4] + tail_lp);

    let h = r_max / (PROFILE_NODES - 1) as f64;
    let r: Vec<f64> = (0..PROFILE_NODES).map(|k| k as f64 * h).collect();
    let mut u = Vec::with_capacity(PROFILE_NODES);
    let mut du = Vec::with_capacity(PROFILE_NODES);
    let mut seg = 0;
    for &x in &r {
        if x <= r_sep {
            while seg + 1 < sep && lo_trace[seg + 1].0 < x {
                seg += 1;
            }
            let (ra, ya) = lo_trace[seg];
            let (rb, yb) = lo_trace[(seg + 1).min(sep)];
            if rb > ra {
                u.push(hermite(ra, ya[0], ya[1], rb, yb[0], yb[1], x));
                du.push(hermite_derivative(ra, ya[0], ya[1], rb, yb[0], yb[1], x));
            } else {
                u.push(ya[0]);
                du.push(ya[1]);
            }
        } else {
            u.push(tail(x));
            du.push(tail_d(x));
        }
    }
    Ok(ScalarGroundState {
        p,
        dim,
        omega,
        r,
        u,
        du,
        u0_at_0: lo,
        mass,
        grad_energy,
        lp_norm,
        i_value: grad_energy + omega * mass,
        method: Method::Shooting,
    })
}

fn hermite_derivative(r0: f64, u0: f64, d0: f64, r1: f64, u1: f64, d1: f64, r: f64) -> f64 {
    let h = r1 - r0;
    let s = (r - r0) / h;
    let s2 = s * s;
    ((6.0 * s2 - 6.0 * s) * u0 + (-6.0 * s2 + 6.0 * s) * u1) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * d0
        + (3.0 * s2 - 2.0 * s) * d1
}

/// Last index of `lo` at which the two bracketing trajectories still agree.
fn separation_index(lo: &Trace, hi: &Trace) -> usize {
    let mut j = 0;
    let mut last_good = 1;
    for (i, &(r, y)) in lo.iter().enumerate().skip(1) {
        if y[0] <= 0.0 || y[1] > 0.0 {
            break;
        }
        while j + 1 < hi.len() && hi[j + 1].0 < r {
            j += 1;
        }
        if j + 1 >= hi.len() {
            break;
        }
        let (ra, ya) = hi[j];
        let (rb, yb) = hi[j + 1];
        let u_hi = hermite(ra, ya[0], ya[1], rb, yb[0], yb[1], r);
        if (y[0] - u_hi).abs() > SEPARATION_TOL * y[0] {
            break;
        }
        last_good = i;
    }
    last_good
}

/// Ground-state at `omega_new` from one at `gs.omega` via
/// `u_ω'(x) = λ^{1/2p} u_ω(√λ x)` with `λ = ω'/ω`.
pub fn scale_omega(gs: &ScalarGroundState, omega_new: f64) -> Result<ScalarGroundState> {
    if !(omega_new.is_finite() && omega_new > 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be positive, got {omega_new}")));
    }
    let lambda = omega_new / gs.omega;
    let (p, n) = (gs.p, gs.dim as f64);
    let amp = lambda.powf(0.5 / p);
    let stretch = lambda.sqrt();
    let s = scaling_exponent(p, gs.dim);
    let mass = gs.mass * lambda.powf(1.0 / p - 0.5 * n);
    let grad_energy = gs.grad_energy * lambda.powf(s);
    let lp_norm = gs.lp_norm * lambda.powf(s);
    Ok(ScalarGroundState {
        p,
        dim: gs.dim,
        omega: omega_new,
        r: gs.r.iter().map(|r| r / stretch).collect(),
        u: gs.u.iter().map(|u| amp * u).collect(),
        du: gs.du.iter().map(|d| amp * stretch * d).collect(),
        u0_at_0: amp * gs.u0_at_0,
        mass,
        grad_energy,
        lp_norm,
        i_value: grad_energy + omega_new * mass,
        method: if gs.method == Method::ClosedForm { Method::ClosedForm } else { Method::Scaled },
    })
}

/// `I(u_0)` at frequency `omega`, from the solution at `ω = 1` and the scaling law.
pub fn scalar_action(p: f64, dim: usize, omega: f64) -> Result<f64> {
    let base = solve_scalar(p, dim, 1.0)?;
    Ok(base.i_value * omega.powf(scaling_exponent(p, dim)))
}

//! Amplitude systems `a_i^{p−1} Σ_j k_ij a_j^{p+1} = 1` (on a support) that
//! separable bound-states `U = (a_i u_0)` must satisfy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AmplitudeVector, ProblemSpec, Support};
use crate::numeric::{self, pow};
use crate::reduction::{self, CouplingForm, MultistartOptions};

pub const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;
/// Linear solutions with an entry this close to zero sit on an existence boundary.
const DEGENERATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeSolution {
    #[serde(serialize_with = "serialize_mask")]
    pub support: Support,
    pub a: Vec<f64>,
    /// Max-norm residual of the amplitude system on the support.
    pub residual: f64,
    /// `I(U) / I(u_0) = Σ a_i²` for equal frequencies.
    pub reduced_action_coeff: f64,
}

fn serialize_mask<S: serde::Serializer>(s: &Support, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_u64(s.bits())
}

/// Outcome of an amplitude solve on one support.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Found(AmplitudeSolution),
    /// The restricted coupling matrix is singular (`p = 1` only).
    Singular,
    /// The linear solution `X = a²` has an entry `<= 0` (`p = 1` only).
    NonPositive {
        x: Vec<f64>,
    },
    /// Newton did not converge; this does not prove that no solution exists.
    NotFound,
}

impl Outcome {
    pub fn solution(self) -> Option<AmplitudeSolution> {
        match self {
            Outcome::Found(s) => Some(s),
            _ => None,
        }
    }
}

fn check_support(spec: &ProblemSpec, support: Support) -> Result<Vec<usize>> {
    spec.check()?;
    if support.is_empty() {
        return Err(Error::InvalidArgument("support must be nonempty".into()));
    }
    if !support.is_subset_of(Support::full(spec.m)) {
        return Err(Error::InvalidArgument(format!("support {:#b} exceeds {} components", support.bits(), spec.m)));
    }
    Ok(support.indices())
}

/// Max-norm residual of the amplitude system on `support`.
pub fn residual(spec: &ProblemSpec, support: Support, a: &[f64]) -> f64 {
    let k = spec.effective_matrix();
    let m = spec.m;
    let y: Vec<f64> = a.iter().map(|v| pow(*v, spec.p + 1.0)).collect();
    support
        .indices()
        .into_iter()
        .map(|i| (pow(a[i], spec.p - 1.0) * numeric::dot(&k[i * m..(i + 1) * m], &y) - 1.0).abs())
        .fold(0.0, f64::max)
}

fn make_solution(spec: &ProblemSpec, support: Support, a: Vec<f64>) -> AmplitudeSolution {
    let residual = residual(spec, support, &a);
    let reduced_action_coeff = a.iter().map(|v| v * v).sum();
    AmplitudeSolution { support, a, residual, reduced_action_coeff }
}

/// For `p = 1` the system is linear in `X = a²`: `K_S X = 1`.
pub fn solve_p1(spec: &ProblemSpec, support: Support) -> Result<Outcome> {
    let idx = check_support(spec, support)?;
    if spec.p != 1.0 {
        return Err(Error::UnsupportedRegime(format!("linear amplitude system needs p = 1, got p = {}", spec.p)));
    }
    let s = idx.len();
    let mut ks = vec![0.0; s * s];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            ks[r * s + c] = spec.effective(i, j);
        }
    }
    let scale = ks.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let ones = vec![1.0; s];
    let Some(mut x) = numeric::lu_solve(s, &ks, &ones) else { return Ok(Outcome::Singular) };
    // Condition guard: LU can return huge values for numerically singular blocks.
    if scale == 0.0 || x.iter().any(|v| v.abs() * scale > 1e13) {
        return Ok(Outcome::Singular);
    }
    // One step of iterative refinement.
    let r: Vec<f64> = (0..s).map(|a| 1.0 - numeric::dot(&ks[a * s..(a + 1) * s], &x)).collect();
    if let Some(dx) = numeric::lu_solve(s, &ks, &r) {
        x.iter_mut().zip(&dx).for_each(|(v, d)| *v += d);
    }
    if x.iter().any(|v| *v <= 0.0) {
        let mut full = vec![0.0; spec.m];
        for (r, &i) in idx.iter().enumerate() {
            full[i] = x[r];
        }
        return Ok(Outcome::NonPositive { x: full });
    }
    let mut a = vec![0.0; spec.m];
    for (r, &i) in idx.iter().enumerate() {
        a[i] = x[r].sqrt();
    }
    Ok(Outcome::Found(make_solution(spec, support, a)))
}

/// Damped Newton on `t_i = log a_i`, which keeps every amplitude positive.
pub fn solve_general_p(spec: &ProblemSpec, support: Support, start: &AmplitudeVector) -> Result<Outcome> {
    let idx = check_support(spec, support)?;
    if start.len() != spec.m {
        return Err(Error::DimensionMismatch { expected: spec.m, got: start.len() });
    }
    if idx.iter().any(|&i| start.as_slice()[i] <= 0.0) {
        return Err(Error::InvalidArgument("start must be positive on the support".into()));
    }
    let k = spec.effective_matrix();
    let (m, p, s) = (spec.m, spec.p, idx.len());
    let mut t: Vec<f64> = idx.iter().map(|&i| start.as_slice()[i].ln()).collect();

    let eval = |t: &[f64], f: &mut [f64], ky: &mut [f64]| -> f64 {
        let mut y = vec![0.0; m];
        for (r, &i) in idx.iter().enumerate() {
            y[i] = ((p + 1.0) * t[r]).exp();
        }
        let mut worst = 0.0f64;
        for (r, &i) in idx.iter().enumerate() {
            ky[r] = numeric::dot(&k[i * m..(i + 1) * m], &y);
            f[r] = ((p - 1.0) * t[r]).exp() * ky[r] - 1.0;
            worst = worst.max(f[r].abs());
        }
        worst
    };

    let mut f = vec![0.0; s];
    let mut ky = vec![0.0; s];
    let mut trial = vec![0.0; s];
    let mut f_trial = vec![0.0; s];
    let mut ky_trial = vec![0.0; s];
    let mut jac = vec![0.0; s * s];
    let mut norm = eval(&t, &mut f, &mut ky);
    for _ in 0..NEWTON_MAX_ITER {
        if !norm.is_finite() {
            return Ok(Outcome::NotFound);
        }
        if norm <= NEWTON_TOL {
            break;
        }
        for (r, &i) in idx.iter().enumerate() {
            let ai = ((p - 1.0) * t[r]).exp();
            for (c, &j) in idx.iter().enumerate() {
                let mut v = (p + 1.0) * ai * k[i * m + j] * ((p + 1.0) * t[c]).exp();
                if r == c {
                    v += (p - 1.0) * ai * ky[r];
                }
                jac[r * s + c] = v;
            }
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        // The Jacobian can be singular at the solution itself (equal amplitudes
        // with (p−1)(M−1) = p+1), so use the minimum-norm Newton step.
        let Some(dt) = numeric::pinv_solve(s, &jac, &rhs, 1e-12) else { return Ok(Outcome::NotFound) };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-10 {
            for r in 0..s {
                // Cap log-steps so a bad Jacobian cannot overflow the exponentials.
                trial[r] = t[r] + lambda * dt[r].clamp(-5.0, 5.0);
            }
            let n = eval(&trial, &mut f_trial, &mut ky_trial);
            if n.is_finite() && n < norm * (1.0 - 1e-4 * lambda) {
                t.copy_from_slice(&trial);
                f.copy_from_slice(&f_trial);
                ky.copy_from_slice(&ky_trial);
                norm = n;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm > NEWTON_TOL {
        return Ok(Outcome::NotFound);
    }
    let mut a = vec![0.0; m];
    for (r, &i) in idx.iter().enumerate() {
        a[i] = t[r].exp();
    }
    Ok(Outcome::Found(make_solution(spec, support, a)))
}

/// Every positive amplitude solution found on every nonempty support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateList {
    /// Sorted ascending by `reduced_action_coeff`.
    pub solutions: Vec<AmplitudeSolution>,
    /// Supports whose linear solution is nonnegative with a vanishing entry:
    /// the candidate degenerates onto a smaller support with the same action.
    #[serde(serialize_with = "serialize_masks")]
    pub degenerate: Vec<Support>,
}

fn serialize_masks<S: serde::Serializer>(s: &[Support], ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.collect_seq(s.iter().map(|x| x.bits()))
}

impl CandidateList {
    pub fn best(&self) -> Option<&AmplitudeSolution> {
        self.solutions.first()
    }
}

pub fn enumerate_candidates(spec: &ProblemSpec, opts: &MultistartOptions) -> Result<CandidateList> {
    spec.check()?;
    if !spec.has_equal_omega() {
        return Err(Error::UnsupportedRegime("action coefficients Σ a_i² need equal frequencies".into()));
    }
    let m = spec.m;
    let mut solutions = Vec::new();
    let mut degenerate = Vec::new();
    for support in Support::all_nonempty(m) {
        if spec.p == 1.0 {
            match solve_p1(spec, support)? {
                Outcome::Found(sol) => {
                    let x: Vec<f64> = sol.a.iter().map(|v| v * v).collect();
                    let (lo, hi) = support
                        .indices()
                        .iter()
                        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &i| (lo.min(x[i]), hi.max(x[i])));
                    if lo <= DEGENERATE_TOL * hi {
                        degenerate.push(support);
                    } else {
                        solutions.push(sol);
                    }
                }
                Outcome::NonPositive { x } => {
                    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let on: Vec<f64> = support.indices().iter().map(|&i| x[i]).collect();
                    if on.iter().all(|v| *v > -DEGENERATE_TOL * scale)
                        && on.iter().any(|v| v.abs() <= DEGENERATE_TOL * scale)
                    {
                        degenerate.push(support);
                    }
                }
                _ => {}
            }
        } else {
            solutions.extend(general_on_support(spec, support, opts)?);
        }
    }
    solutions.sort_by(|a, b| a.reduced_action_coeff.total_cmp(&b.reduced_action_coeff));
    Ok(CandidateList { solutions, degenerate })
}

fn general_on_support(
    spec: &ProblemSpec,
    support: Support,
    opts: &MultistartOptions,
) -> Result<Vec<AmplitudeSolution>> {
    let m = spec.m;
    let idx = support.indices();
    let restricted = spec.restricted(support);
    let form = CouplingForm::from_spec(&restricted);
    let lift = |local: &[f64], scale: f64| {
        let mut x = vec![0.0; m];
        for (r, &i) in idx.iter().enumerate() {
            x[i] = scale * local[r];
        }
        x
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let face_opts = MultistartOptions { n_random: opts.n_random.min(20), ..opts.clone() };
    let set = reduction::maximize_form(&form, &face_opts);
    if set.f_max > reduction::POSITIVITY_TOL {
        let scale = set.f_max.powf(-1.0 / (2.0 * spec.p));
        for x in &set.points {
            if x.as_slice().iter().all(|v| *v > 0.0) {
                starts.push(lift(x.as_slice(), scale));
            }
        }
    }
    let uniform = AmplitudeVector::uniform_on(idx.len(), Support::full(idx.len())).into_vec();
    let fu = form.value(&uniform);
    if fu > 0.0 {
        starts.push(lift(&uniform, fu.powf(-1.0 / (2.0 * spec.p))));
    }
    let mut found: Vec<AmplitudeSolution> = Vec::new();
    for start in starts {
        let start = AmplitudeVector::new(start)?;
        if let Outcome::Found(sol) = solve_general_p(spec, support, &start)? {
            if found.iter().all(|f| numeric::distance(&f.a, &sol.a) > 1e-6) {
                found.push(sol);
            }
        }
    }
    Ok(found)
}

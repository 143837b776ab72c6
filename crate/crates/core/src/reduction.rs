//! Finite-dimensional reduction for equal frequencies.
//!
//! Ground-states of the coupled system are exactly `U = (a_i u_0)` where `u_0`
//! is a scalar ground-state and `f_max^{1/2p} (|a_1|, .., |a_M|)` maximizes
//! `f(X) = Σ k_ij x_i^{p+1} x_j^{p+1}` on the nonnegative unit sphere. This
//! module computes that maximum by multistart projected-gradient ascent,
//! refines each maximizer with a Newton step on its Lagrange system, and turns
//! the supports of the maximizers into a classification verdict.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AmplitudeVector, ProblemSpec, Support, SUPPORT_TOL};
use crate::numeric::{self, pow};

/// `f_max` at or below this value means no positive-coupling direction exists.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Maximizer candidates within this (scaled) f-distance of the best are kept.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Candidates closer than this are the same maximizer.
pub const DEDUP_RADIUS: f64 = 1e-5;
const CONTINUUM_RADIUS: f64 = 0.1;
/// Exhaustive support starts up to this many components.
const MAX_EXHAUSTIVE_M: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartOptions {
    /// Additional uniformly random (Dirichlet) starting points.
    pub n_random: usize,
    pub seed: u64,
    /// Number of random support subsets sampled when `M` is too large to enumerate.
    pub sampled_subsets: usize,
    pub max_iter: usize,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        MultistartOptions { n_random: 200, seed: 12345, sampled_subsets: 4096, max_iter: 20_000 }
    }
}

/// `f(X) = Σ_ij k_ij x_i^{p+1} x_j^{p+1}` for a fixed row-major matrix.
#[derive(Debug, Clone)]
pub(crate) struct CouplingForm {
    pub m: usize,
    pub p: f64,
    pub k: Vec<f64>,
}

impl CouplingForm {
    pub fn from_spec(spec: &ProblemSpec) -> Self {
        CouplingForm { m: spec.m, p: spec.p, k: spec.effective_matrix() }
    }

    pub fn new(m: usize, p: f64, k: Vec<f64>) -> Self {
        CouplingForm { m, p, k }
    }

    fn powers(&self, x: &[f64], y: &mut [f64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = if *xi > 0.0 { pow(*xi, self.p + 1.0) } else { 0.0 };
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.m];
        self.powers(x, &mut y);
        self.value_of_powers(&y)
    }

    fn value_of_powers(&self, y: &[f64]) -> f64 {
        let m = self.m;
        let mut f = 0.0;
        for i in 0..m {
            if y[i] == 0.0 {
                continue;
            }
            let row = &self.k[i * m..(i + 1) * m];
            f += y[i] * numeric::dot(row, y);
        }
        f
    }

    /// Value and Euclidean gradient `2(p+1) x_i^p (K y)_i`.
    pub fn value_and_grad(&self, x: &[f64], y: &mut [f64], g: &mut [f64]) -> f64 {
        let m = self.m;
        self.powers(x, y);
        let mut f = 0.0;
        for i in 0..m {
            let row = &self.k[i * m..(i + 1) * m];
            let ky = numeric::dot(row, y);
            f += y[i] * ky;
            g[i] = if x[i] > 0.0 { 2.0 * (self.p + 1.0) * pow(x[i], self.p) * ky } else { 0.0 };
        }
        f
    }
}

/// Projected-gradient ascent on the nonnegative unit sphere with backtracking.
pub(crate) fn ascend(form: &CouplingForm, start: &[f64], max_iter: usize) -> Option<(Vec<f64>, f64)> {
    let m = form.m;
    let mut x = start.to_vec();
    numeric::project_to_sphere(&mut x)?;
    let mut y = vec![0.0; m];
    let mut g = vec![0.0; m];
    let mut gt = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut fx = form.value_and_grad(&x, &mut y, &mut g);
    let mut step = f64::NAN;
    for _ in 0..max_iter {
        let radial = numeric::dot(&g, &x);
        for i in 0..m {
            gt[i] = g[i] - radial * x[i];
        }
        let gnorm = numeric::norm(&gt);
        if gnorm <= 1e-15 * (1.0 + fx.abs()) {
            break;
        }
        if !step.is_finite() {
            step = 0.5 / gnorm;
        }
        let mut accepted = false;
        let mut moved = 0.0;
        while step * gnorm > 1e-17 {
            for i in 0..m {
                trial[i] = x[i] + step * gt[i];
            }
            if numeric::project_to_sphere(&mut trial).is_some() {
                let ft = form.value(&trial);
                let mut ascent = 0.0;
                for i in 0..m {
                    ascent += gt[i] * (trial[i] - x[i]);
                }
                if ft >= fx + 1e-4 * ascent.max(0.0) && ft >= fx {
                    moved = numeric::distance(&trial, &x);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut x, &mut trial);
        fx = form.value_and_grad(&x, &mut y, &mut g);
        step *= 2.0;
        if moved < 1e-13 {
            break;
        }
    }
    Some((x, fx))
}

/// Newton iteration on the Lagrange system of `max f` on the face `support`:
/// `(p+1) x_i^p (K y)_i = μ x_i`, `|x|² = 1`.
pub(crate) fn polish(form: &CouplingForm, x0: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = form.m;
    let p = form.p;
    let idx: Vec<usize> = (0..m).filter(|&i| x0[i] > 0.0).collect();
    let s = idx.len();
    if s == 0 {
        return None;
    }
    let mut x = x0.to_vec();
    let f0 = form.value(&x);
    let mut mu = (p + 1.0) * f0;
    let n = s + 1;
    let mut jac = vec![0.0; n * n];
    let mut res = vec![0.0; n];
    let mut y = vec![0.0; m];
    let scale = 1.0 + form.k.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut converged = false;
    for _ in 0..40 {
        form.powers(&x, &mut y);
        let ky: Vec<f64> = idx.iter().map(|&i| numeric::dot(&form.k[i * m..(i + 1) * m], &y)).collect();
        for (a, &i) in idx.iter().enumerate() {
            res[a] = (p + 1.0) * pow(x[i], p) * ky[a] - mu * x[i];
        }
        res[s] = idx.iter().map(|&i| x[i] * x[i]).sum::<f64>() - 1.0;
        let rnorm = res.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if rnorm <= 1e-14 * scale {
            converged = true;
            break;
        }
        jac.iter_mut().for_each(|v| *v = 0.0);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &k) in idx.iter().enumerate() {
                let mut v = (p + 1.0) * (p + 1.0) * pow(x[i], p) * form.k[i * m + k] * pow(x[k], p);
                if a == b {
                    v += (p + 1.0) * p * pow(x[i], p - 1.0) * ky[a] - mu;
                }
                jac[a * n + b] = v;
            }
            jac[a * n + s] = -x[i];
            jac[s * n + a] = 2.0 * x[i];
        }
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let delta = numeric::lu_solve(n, &jac, &rhs)?;
        for (a, &i) in idx.iter().enumerate() {
            x[i] += delta[a];
            if x[i] <= 0.0 {
                return None;
            }
        }
        mu += delta[s];
        if delta.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let f = form.value(&x);
    let tol = 1e-12 * f0.abs().max(1.0);
    (f >= f0 - tol && numeric::distance(&x, x0) < 1e-3).then_some((x, f))
}

/// Coordinates below these thresholds are tried at zero, smallest first: for
/// `p = 1` ascent approaches a face maximizer only linearly and can stall
/// inside the face, far from it when the form is nearly flat across the face.
const FACE_SNAP: [f64; 3] = [1e-6, 1e-4, 1e-2];

fn snap_to_face(form: &CouplingForm, x: Vec<f64>, fx: f64) -> (Vec<f64>, f64) {
    for threshold in FACE_SNAP {
        if !x.iter().any(|v| *v > 0.0 && *v < threshold) {
            continue;
        }
        let mut y: Vec<f64> = x.iter().map(|v| if *v < threshold { 0.0 } else { *v }).collect();
        if numeric::project_to_sphere(&mut y).is_none() {
            continue;
        }
        let fy = form.value(&y);
        let (y, fy) = polish(form, &y).unwrap_or((y, fy));
        if fy >= fx - 1e-12 * fx.abs().max(1.0) {
            return (y, fy);
        }
    }
    (x, fx)
}

/// Off-face coordinates along which `f` increases from a face point `x`,
/// with a seed value for each. Adding `x_j = ε` changes `f` by
/// `2ε^{p+1}(Ky)_j − (p+1)ε² f + o(ε²)`; for `p < 1` the gain peaks at
/// `ε* = ((Ky)_j / f)^{1/(1−p)}` and the seed is `ε*/2`.
fn escape_directions(form: &CouplingForm, x: &[f64], fx: f64) -> Vec<(usize, f64)> {
    let m = form.m;
    let p = form.p;
    if p > 1.0 || fx <= 0.0 {
        return Vec::new();
    }
    let mut y = vec![0.0; m];
    form.powers(x, &mut y);
    (0..m)
        .filter(|&j| x[j] == 0.0)
        .filter_map(|j| {
            let kyj = numeric::dot(&form.k[j * m..(j + 1) * m], &y);
            if p < 1.0 {
                (kyj > 0.0).then(|| (j, (0.5 * (kyj / fx).powf(1.0 / (1.0 - p))).min(ESCAPE_SEED)))
            } else {
                (kyj > fx + 1e-12 * fx.abs().max(1.0)).then_some((j, ESCAPE_SEED))
            }
        })
        .filter(|&(_, seed)| seed > SUPPORT_TOL)
        .collect()
}

/// Re-ascends from face points that are not local maxima: for `p <= 1` the
/// gradient vanishes across the face, so ascent cannot leave it unaided.
fn escape_face(form: &CouplingForm, mut x: Vec<f64>, mut fx: f64, max_iter: usize) -> (Vec<f64>, f64) {
    for _ in 0..form.m {
        let dirs = escape_directions(form, &x, fx);
        if dirs.is_empty() {
            break;
        }
        let mut start = x.clone();
        for &(j, seed) in &dirs {
            start[j] = seed;
        }
        let Some((mut z, _)) = ascend(form, &start, max_iter) else { break };
        for v in z.iter_mut() {
            if *v <= SUPPORT_TOL {
                *v = 0.0;
            }
        }
        if numeric::project_to_sphere(&mut z).is_none() {
            break;
        }
        let fz = form.value(&z);
        let (z, fz) = polish(form, &z).unwrap_or((z, fz));
        let (z, fz) = snap_to_face(form, z, fz);
        if fz <= fx {
            break;
        }
        x = z;
        fx = fz;
    }
    (x, fx)
}

const ESCAPE_SEED: f64 = 1e-2;

fn starting_points(m: usize, opts: &MultistartOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = Vec::new();
    let uniform = |s: Support| AmplitudeVector::uniform_on(m, s).into_vec();
    if m <= MAX_EXHAUSTIVE_M {
        starts.extend(Support::all_nonempty(m).map(uniform));
    } else {
        starts.extend((0..m).map(|i| uniform(Support::singleton(i))));
        starts.push(uniform(Support::full(m)));
        for _ in 0..opts.sampled_subsets {
            let bits: u64 = rand::Rng::random(&mut rng);
            let s = Support::from_bits(bits & Support::full(m).bits());
            if !s.is_empty() {
                starts.push(uniform(s));
            }
        }
    }
    for _ in 0..opts.n_random {
        // Uniform on the simplex for y = x², mapped back to the sphere.
        let e: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = e.iter().sum();
        starts.push(e.iter().map(|v| (v / total).sqrt()).collect());
    }
    starts
}

/// The maximizer set 𝒳 of `f` on the nonnegative unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximizerSet {
    pub f_max: f64,
    pub points: Vec<AmplitudeVector>,
    pub all_positive: bool,
    pub some_positive: bool,
    /// Two distinct representatives with equal value lie close together,
    /// suggesting a continuum of maximizers.
    pub possibly_continuum: bool,
    /// Exhaustive face-by-face KKT bound for `p = 1` and `M <= 12`.
    pub certificate: Option<f64>,
}

impl MaximizerSet {
    pub fn supports(&self) -> Vec<Support> {
        self.points.iter().map(|x| x.support()).collect()
    }
}

/// `f(X)` with the effective couplings of `spec`.
pub fn f_value(spec: &ProblemSpec, x: &AmplitudeVector) -> Result<f64> {
    spec.check()?;
    if x.len() != spec.m {
        return Err(Error::DimensionMismatch { expected: spec.m, got: x.len() });
    }
    Ok(CouplingForm::from_spec(spec).value(x.as_slice()))
}

pub fn maximize_f(spec: &ProblemSpec, opts: &MultistartOptions) -> Result<MaximizerSet> {
    spec.check()?;
    let form = CouplingForm::from_spec(spec);
    Ok(maximize_form(&form, opts))
}

pub(crate) fn maximize_form(form: &CouplingForm, opts: &MultistartOptions) -> MaximizerSet {
    let m = form.m;
    // Ascend from every start, merging near-duplicates before the Newton refinement.
    let mut reps: Vec<(Vec<f64>, f64)> = Vec::new();
    for start in starting_points(m, opts) {
        let Some((mut x, _)) = ascend(form, &start, opts.max_iter) else { continue };
        for v in x.iter_mut() {
            if *v <= SUPPORT_TOL {
                *v = 0.0;
            }
        }
        if numeric::project_to_sphere(&mut x).is_none() {
            continue;
        }
        let fx = form.value(&x);
        let support = Support::of_vector(&x, 0.0);
        if reps.iter().any(|(r, _)| Support::of_vector(r, 0.0) == support && numeric::distance(r, &x) < 1e-6) {
            continue;
        }
        reps.push((x, fx));
    }
    let refined: Vec<(Vec<f64>, f64)> = reps
        .into_iter()
        .map(|(x, fx)| polish(form, &x).unwrap_or((x, fx)))
        .map(|(x, fx)| snap_to_face(form, x, fx))
        .map(|(x, fx)| escape_face(form, x, fx, opts.max_iter))
        .collect();

    let f_max = refined.iter().map(|(_, f)| *f).fold(f64::NEG_INFINITY, f64::max);
    let tol = CLUSTER_TOL * f_max.abs().max(1.0);
    let mut near: Vec<&(Vec<f64>, f64)> = refined.iter().filter(|(_, f)| *f >= f_max - tol).collect();
    near.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (x, _) in near {
        if points.iter().all(|q| numeric::distance(q, x) >= DEDUP_RADIUS) {
            points.push(x.clone());
        }
    }
    points.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut possibly_continuum = false;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let d = numeric::distance(&points[a], &points[b]);
            if d > DEDUP_RADIUS && d < CONTINUUM_RADIUS {
                possibly_continuum = true;
            }
        }
    }
    let full = Support::full(m);
    let full_support: Vec<bool> = points.iter().map(|x| Support::of_vector(x, SUPPORT_TOL) == full).collect();
    let certificate = (form.p == 1.0 && m <= MAX_EXHAUSTIVE_M).then(|| simplex_certificate(m, &form.k));
    MaximizerSet {
        f_max,
        all_positive: !full_support.is_empty() && full_support.iter().all(|b| *b),
        some_positive: full_support.iter().any(|b| *b),
        possibly_continuum,
        certificate,
        points: points
            .into_iter()
            .map(|x| AmplitudeVector::new(x).expect("projected points are nonnegative"))
            .collect(),
    }
}

/// For `p = 1`, `f = yᵀ K y` on the simplex `y = x²`. Every maximizer lies in
/// the relative interior of some face, where it solves the bordered KKT
/// system `K_S y = λ 1`, `1ᵀ y = 1` with value `λ`; the best feasible face
/// value is the global maximum.
pub fn simplex_certificate(m: usize, k: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for support in Support::all_nonempty(m) {
        let idx = support.indices();
        let s = idx.len();
        let n = s + 1;
        let mut a = vec![0.0; n * n];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[r * n + c] = k[i * m + j];
            }
            a[r * n + s] = -1.0;
            a[s * n + r] = 1.0;
        }
        let mut b = vec![0.0; n];
        b[s] = 1.0;
        let Some(sol) = numeric::lu_solve(n, &a, &b) else { continue };
        let y = &sol[..s];
        if y.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let mut value = 0.0;
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                value += y[r] * k[i * m + j] * y[c];
            }
        }
        // Reject near-singular faces whose solve is not a genuine KKT point.
        let lambda = sol[s];
        if (value - lambda).abs() > 1e-8 * lambda.abs().max(1.0) {
            continue;
        }
        best = best.max(value);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// `f_max <= 0`: hypothesis (P1) fails and there are no bound-states.
    NoGroundStates,
    /// No maximizer has full support.
    SemitrivialOnly,
    /// Some, but not all, maximizers have full support.
    Mixed,
    /// Every maximizer has full support.
    AllNontrivial,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NoGroundStates => "NoGroundStates",
            Verdict::SemitrivialOnly => "SemitrivialOnly",
            Verdict::Mixed => "Mixed",
            Verdict::AllNontrivial => "AllNontrivial",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundStateReport {
    pub verdict: Verdict,
    pub f_max: f64,
    pub maximizers: Vec<Vec<f64>>,
    /// `a = f_max^{-1/(2p)} X` for each maximizer `X`; empty without ground-states.
    pub amplitudes: Vec<Vec<f64>>,
    pub support_masks: Vec<String>,
    pub possibly_continuum: bool,
}

impl GroundStateReport {
    /// Ground-state action as a multiple of the scalar ground-state's `I(u_0)`.
    pub fn action_coeff(&self, p: f64) -> f64 {
        if self.verdict == Verdict::NoGroundStates {
            f64::INFINITY
        } else {
            self.f_max.powf(-1.0 / p)
        }
    }
}

/// Classifies the ground-state family of an equal-frequency system.
pub fn classify(spec: &ProblemSpec, opts: &MultistartOptions) -> Result<GroundStateReport> {
    spec.check()?;
    if !spec.has_equal_omega() {
        return Err(Error::UnsupportedRegime(
            "the separable reduction needs equal frequencies; use the action or mandel modules".into(),
        ));
    }
    let set = maximize_f(spec, opts)?;
    Ok(report_from_set(spec, &set))
}

pub(crate) fn report_from_set(spec: &ProblemSpec, set: &MaximizerSet) -> GroundStateReport {
    let m = spec.m;
    let maximizers: Vec<Vec<f64>> = set.points.iter().map(|x| x.as_slice().to_vec()).collect();
    let support_masks = set.points.iter().map(|x| x.support().mask_string(m)).collect();
    let verdict = if set.f_max <= POSITIVITY_TOL {
        Verdict::NoGroundStates
    } else if set.all_positive {
        Verdict::AllNontrivial
    } else if set.some_positive {
        Verdict::Mixed
    } else {
        Verdict::SemitrivialOnly
    };
    let amplitudes = if verdict == Verdict::NoGroundStates {
        Vec::new()
    } else {
        let scale = set.f_max.powf(-1.0 / (2.0 * spec.p));
        maximizers.iter().map(|x| x.iter().map(|v| scale * v).collect()).collect()
    };
    GroundStateReport {
        verdict,
        f_max: set.f_max,
        maximizers,
        amplitudes,
        support_masks,
        possibly_continuum: set.possibly_continuum,
    }
}

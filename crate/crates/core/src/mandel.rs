//! Characteristic value `β̂` for a β-split system, computed over the
//! separable family `U = X u_0`.
//!
//! With `I(X u_0) = |X|² I(u_0)`, `J_P = f_P(X) I(u_0)`, `J_NP = f_NP(X) I(u_0)`
//! and `𝓘^sem = F_sem^{−1/p} I(u_0)`, the quotient becomes
//! `B(X) = (F_sem |X|^{2p+2} − f_NP(X)) / f_P(X)`, which is invariant under
//! `X → cX`. Since `B(X) < t ⇔ f_t(X) > F_sem |X|^{2p+2}`, the infimum
//! also equals `inf { t : f_max(t) > F_sem }`, which gives an independent
//! bisection check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::action;
use crate::error::{Error, Result};
use crate::model::{AmplitudeVector, ProblemSpec, Support};
use crate::numeric::{self, pow};
use crate::reduction::{self, CouplingForm, MultistartOptions, POSITIVITY_TOL};

pub const BOUNDARY_TOL: f64 = 1e-6;
/// Descent stays where `f_P` exceeds this fraction of `F_sem`; below it the
/// numerator `F_sem − f_NP` is dominated by cancellation error.
const FP_FLOOR: f64 = 1e-5;
const DESCENT_MAX_ITER: usize = 300;
/// Corner ball excluded from the `g` sweep.
pub const CORNER_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `β < β̂`: no nontrivial ground-states.
    NontrivialEmpty,
    /// `β > β̂`: every ground-state is nontrivial.
    AllNontrivial,
    /// `|β − β̂| <= BOUNDARY_TOL`.
    Boundary,
    /// No bound-states at all: both levels are infinite.
    NoGroundStates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaHatResult {
    pub beta: f64,
    /// `None` when the semitrivial level is infinite (quotient undefined).
    pub beta_hat: Option<f64>,
    /// `inf { t : f_max(t) > F_sem }` located by bisection.
    pub beta_hat_bisection: Option<f64>,
    pub regime: Regime,
    /// Unit-norm amplitude vector attaining the smallest quotient found, or the
    /// face point it is approached from when the infimum is a boundary limit.
    pub minimizer: Option<Vec<f64>>,
    /// `false` when the infimum is only approached as `J_P → 0`.
    pub attained: Option<bool>,
    pub family: &'static str,
    /// `𝓘_β^sem / I(u_0)`.
    pub semitrivial_coeff: f64,
    /// When `β̂ > β`: whether `𝓘^sem` agrees at `β` and `β̂` to 1e−9.
    pub semitrivial_constant: Option<bool>,
}

/// Reduced split forms `f_P`, `f_NP` with base (unweighted) couplings.
struct SplitForms {
    m: usize,
    p: f64,
    kp: Vec<f64>,
    knp: Vec<f64>,
}

impl SplitForms {
    fn new(spec: &ProblemSpec) -> Self {
        let (kp, knp) = spec.split_matrices();
        SplitForms { m: spec.m, p: spec.p, kp, knp }
    }

    /// `(f_P, f_NP, ∇f_P, ∇f_NP)` at `x`.
    fn eval(&self, x: &[f64], gp: &mut [f64], gnp: &mut [f64]) -> (f64, f64) {
        let m = self.m;
        let y: Vec<f64> = x.iter().map(|v| if *v > 0.0 { pow(*v, self.p + 1.0) } else { 0.0 }).collect();
        let (mut fp, mut fnp) = (0.0, 0.0);
        for i in 0..m {
            let kpy = numeric::dot(&self.kp[i * m..(i + 1) * m], &y);
            let knpy = numeric::dot(&self.knp[i * m..(i + 1) * m], &y);
            fp += y[i] * kpy;
            fnp += y[i] * knpy;
            let d = if x[i] > 0.0 { 2.0 * (self.p + 1.0) * pow(x[i], self.p) } else { 0.0 };
            gp[i] = d * kpy;
            gnp[i] = d * knpy;
        }
        (fp, fnp)
    }
}

fn check_beta_hat_spec(spec: &ProblemSpec) -> Result<&Vec<(usize, usize)>> {
    spec.check()?;
    let Some(pairs) = &spec.pairs else {
        return Err(Error::InvalidArgument("the characteristic value needs a pair set P".into()));
    };
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| spec.coupling[i][j] <= 0.0) {
        return Err(Error::InvalidArgument(format!("P: coupling K[{}][{}] must be positive", i + 1, j + 1)));
    }
    Ok(pairs)
}

/// `B_β(X u_0)` with the semitrivial level given as a multiple `sem_coeff` of `I(u_0)`.
pub fn b_beta(spec: &ProblemSpec, x: &AmplitudeVector, sem_coeff: f64) -> Result<f64> {
    check_beta_hat_spec(spec)?;
    if x.len() != spec.m {
        return Err(Error::DimensionMismatch { expected: spec.m, got: x.len() });
    }
    if !(sem_coeff.is_finite() && sem_coeff > 0.0) {
        return Err(Error::InvalidArgument(format!("semitrivial level must be finite and positive, got {sem_coeff}")));
    }
    let forms = SplitForms::new(spec);
    let mut g1 = vec![0.0; spec.m];
    let mut g2 = vec![0.0; spec.m];
    let (fp, fnp) = forms.eval(x.as_slice(), &mut g1, &mut g2);
    if fp == 0.0 {
        return Err(Error::Undefined("J_P vanishes on this amplitude vector".into()));
    }
    let f_sem = sem_coeff.powf(-spec.p);
    let norm = x.norm();
    Ok((f_sem * pow(norm, 2.0 * spec.p + 2.0) - fnp) / fp)
}

/// Projected-gradient minimization of `B` on the unit sphere from `start`.
fn descend(forms: &SplitForms, f_sem: f64, start: &[f64], max_iter: usize) -> Option<(Vec<f64>, f64)> {
    let m = forms.m;
    let mut gp = vec![0.0; m];
    let mut gnp = vec![0.0; m];
    let value = |x: &[f64], gp: &mut [f64], gnp: &mut [f64]| -> Option<(f64, f64, f64)> {
        let (fp, fnp) = forms.eval(x, gp, gnp);
        (fp > FP_FLOOR * f_sem.max(1.0)).then(|| ((f_sem - fnp) / fp, fp, fnp))
    };
    let mut x = start.to_vec();
    numeric::project_to_sphere(&mut x)?;
    let (mut b, mut fp, mut fnp) = value(&x, &mut gp, &mut gnp)?;
    let mut g = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut tgp = vec![0.0; m];
    let mut tgnp = vec![0.0; m];
    let mut step = f64::NAN;
    for _ in 0..max_iter {
        for i in 0..m {
            g[i] = ((2.0 * forms.p + 2.0) * f_sem * x[i] - gnp[i] - b * gp[i]) / fp;
        }
        let radial = numeric::dot(&g, &x);
        for i in 0..m {
            g[i] -= radial * x[i];
        }
        let gnorm = numeric::norm(&g);
        if gnorm <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
        if !step.is_finite() {
            step = 0.1 / gnorm;
        }
        let mut accepted = None;
        while step * gnorm > 1e-17 {
            for i in 0..m {
                trial[i] = x[i] - step * g[i];
            }
            if numeric::project_to_sphere(&mut trial).is_some() {
                if let Some((bt, fpt, fnpt)) = value(&trial, &mut tgp, &mut tgnp) {
                    let decrease: f64 = (0..m).map(|i| g[i] * (x[i] - trial[i])).sum();
                    if bt <= b - 1e-4 * decrease.max(0.0) && bt <= b {
                        accepted = Some((bt, fpt, fnpt));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((bt, fpt, fnpt)) = accepted else { break };
        let moved = numeric::distance(&trial, &x);
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut gp, &mut tgp);
        std::mem::swap(&mut gnp, &mut tgnp);
        (b, fp, fnp) = (bt, fpt, fnpt);
        step *= 2.0;
        if moved < 1e-14 {
            break;
        }
    }
    let _ = fnp;
    Some((x, b))
}

fn descent_starts(spec: &ProblemSpec, beta_set: &reduction::MaximizerSet, opts: &MultistartOptions) -> Vec<Vec<f64>> {
    let m = spec.m;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let uniform = AmplitudeVector::uniform_on(m, Support::full(m)).into_vec();
    // Maximizers of f_β, nudged off faces where f_P may vanish.
    for x in &beta_set.points {
        starts.push(x.as_slice().iter().zip(&uniform).map(|(a, u)| a + 1e-3 * u).collect());
    }
    if m <= 12 {
        starts.extend(Support::all_nonempty(m).map(|s| AmplitudeVector::uniform_on(m, s).into_vec()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    for _ in 0..opts.n_random.min(64) {
        let e: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = e.iter().sum();
        starts.push(e.iter().map(|v| (v / total).sqrt()).collect());
    }
    starts
}

/// Maximizers of `f_β` over the proper faces that attain `F_sem`, embedded in `R^M`.
fn semitrivial_maximizers(spec: &ProblemSpec, f_sem: f64, opts: &MultistartOptions) -> Vec<Vec<f64>> {
    let m = spec.m;
    let mut out = Vec::new();
    for skip in 0..m {
        let face = Support::from_bits(Support::full(m).bits() & !(1u64 << skip));
        let idx = face.indices();
        let set = reduction::maximize_f(&spec.restricted(face), opts);
        let Ok(set) = set else { continue };
        if set.f_max < f_sem - reduction::CLUSTER_TOL * f_sem.abs().max(1.0) {
            continue;
        }
        for x in &set.points {
            let mut full = vec![0.0; m];
            for (slot, v) in idx.iter().zip(x.as_slice()) {
                full[*slot] = *v;
            }
            out.push(full);
        }
    }
    out
}

/// Limit of `B` when leaving a semitrivial maximizer `x0` with `f_P(x0) = 0`
/// along the coordinate `j` (`x0_j = 0`). With `X = x0 + t e_j` the numerator is
/// `F(p+1)t² − 2t^{p+1}(K_NP y0)_j + …` and the denominator `2t^{p+1}(K_P y0)_j + …`;
/// mixed directions give ratios of linear forms, so single coordinates suffice.
fn boundary_limit(forms: &SplitForms, f_sem: f64, x0: &[f64]) -> Option<f64> {
    let (m, p) = (forms.m, forms.p);
    let y: Vec<f64> = x0.iter().map(|v| pow(v.max(0.0), p + 1.0)).collect();
    let mut best: Option<f64> = None;
    for j in 0..m {
        if x0[j] > 1e-9 {
            continue;
        }
        let kp = numeric::dot(&forms.kp[j * m..(j + 1) * m], &y);
        let knp = numeric::dot(&forms.knp[j * m..(j + 1) * m], &y);
        if kp <= POSITIVITY_TOL {
            continue;
        }
        let limit = if p == 1.0 {
            (f_sem - knp) / kp
        } else if p < 1.0 {
            -knp / kp
        } else {
            f64::INFINITY
        };
        best = Some(best.map_or(limit, |b: f64| b.min(limit)));
    }
    best
}

/// `inf { t : f_max(t) > f_sem }` by bracketing and bisection.
fn bisect_beta_hat(spec: &ProblemSpec, f_sem: f64, opts: &MultistartOptions) -> Option<f64> {
    // Near a degenerate crossing the ascent stalls on a flat ridge; a capped
    // budget only shifts the estimate within the oracle's own resolution.
    let opts =
        &MultistartOptions { n_random: opts.n_random.min(50), max_iter: opts.max_iter.min(2000), ..opts.clone() };
    let exceeds = |t: f64| {
        let form = CouplingForm::from_spec(&spec.with_beta(t));
        reduction::maximize_form(&form, opts).f_max > f_sem + 1e-12 * f_sem.abs().max(1.0)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while exceeds(lo) {
        hi = lo;
        lo *= 2.0;
        if lo < -1e6 {
            return None;
        }
    }
    while !exceeds(hi) {
        lo = hi;
        hi = if hi <= 0.0 { 1.0 } else { hi * 2.0 };
        if hi > 1e6 {
            return None;
        }
    }
    while hi - lo > 1e-10 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if exceeds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn beta_hat(spec: &ProblemSpec, beta: f64) -> Result<BetaHatResult> {
    beta_hat_with(spec, beta, &MultistartOptions::default())
}

pub fn beta_hat_with(spec: &ProblemSpec, beta: f64, opts: &MultistartOptions) -> Result<BetaHatResult> {
    check_beta_hat_spec(spec)?;
    if !spec.has_equal_omega() {
        return Err(Error::UnsupportedRegime(
            "the separable family contains every ground-state only for equal frequencies".into(),
        ));
    }
    let spec = spec.with_beta(beta);
    let p = spec.p;
    let f_sem = action::semitrivial_f_max(&spec, opts);
    let beta_set = reduction::maximize_f(&spec, opts)?;
    if f_sem <= POSITIVITY_TOL {
        let regime = if beta_set.f_max > POSITIVITY_TOL { Regime::AllNontrivial } else { Regime::NoGroundStates };
        return Ok(BetaHatResult {
            beta,
            beta_hat: None,
            beta_hat_bisection: None,
            regime,
            minimizer: None,
            attained: None,
            family: "separable",
            semitrivial_coeff: f64::INFINITY,
            semitrivial_constant: None,
        });
    }
    let forms = SplitForms::new(&spec);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |x: Vec<f64>, b: f64, best: &mut Option<(Vec<f64>, f64)>| {
        if best.as_ref().is_none_or(|(_, bb)| b < *bb) {
            *best = Some((x, b));
        }
    };
    for start in descent_starts(&spec, &beta_set, opts) {
        if let Some((x, b)) = descend(&forms, f_sem, &start, opts.max_iter.min(DESCENT_MAX_ITER)) {
            consider(x, b, &mut best);
        }
    }
    // Semitrivial maximizers: B is either evaluated there or approached as a limit.
    let mut attained = true;
    let mut gp = vec![0.0; spec.m];
    let mut gnp = vec![0.0; spec.m];
    for x0 in semitrivial_maximizers(&spec, f_sem, opts) {
        let (fp, fnp) = forms.eval(&x0, &mut gp, &mut gnp);
        if fp > FP_FLOOR * f_sem.max(1.0) {
            consider(x0, (f_sem - fnp) / fp, &mut best);
        } else if let Some(limit) = boundary_limit(&forms, f_sem, &x0) {
            if best.as_ref().is_none_or(|(_, bb)| limit <= *bb + 1e-12 * bb.abs().max(1.0)) {
                best = Some((x0, limit));
                attained = false;
            }
        }
    }
    let (minimizer, b_min) = best.ok_or_else(|| Error::Solver("no start has J_P > 0".into()))?;
    let regime = if (beta - b_min).abs() <= BOUNDARY_TOL {
        Regime::Boundary
    } else if beta > b_min {
        Regime::AllNontrivial
    } else {
        Regime::NontrivialEmpty
    };
    let semitrivial_coeff = f_sem.powf(-1.0 / p);
    let semitrivial_constant = (b_min > beta).then(|| {
        let at_hat = action::semitrivial_f_max(&spec.with_beta(b_min), opts);
        (at_hat - f_sem).abs() <= 1e-9 * f_sem.abs().max(1.0)
    });
    Ok(BetaHatResult {
        beta,
        beta_hat: Some(b_min),
        beta_hat_bisection: bisect_beta_hat(&spec, f_sem, opts),
        regime,
        minimizer: Some(minimizer),
        attained: Some(attained),
        family: "separable",
        semitrivial_coeff,
        semitrivial_constant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitorReport {
    /// Face maximum of the candidate, identical for every probed β.
    pub candidate_f_max: f64,
    pub beta_independent: bool,
    /// First β at which another state has strictly lower action (refined by bisection).
    pub crossover: Option<f64>,
    pub inconclusive: bool,
}

/// For a candidate support with no coupled pair inside it, finds the β beyond
/// which a competitor using the pairs of `P` undercuts it.
pub fn check_prop_16(spec: &ProblemSpec, candidate: Support, betas: &[f64]) -> Result<CompetitorReport> {
    let pairs = check_beta_hat_spec(spec)?;
    if !spec.has_equal_omega() {
        return Err(Error::UnsupportedRegime(
            "competitor search compares reduced levels; needs equal frequencies".into(),
        ));
    }
    if candidate.is_empty() || !candidate.is_subset_of(Support::full(spec.m)) {
        return Err(Error::InvalidArgument("candidate support must be a nonempty subset of the components".into()));
    }
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| candidate.contains(i) && candidate.contains(j)) {
        return Err(Error::InvalidArgument(format!(
            "candidate support contains the coupled pair ({}, {})",
            i + 1,
            j + 1
        )));
    }
    if betas.is_empty() || betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("β sequence must be nonempty and increasing".into()));
    }
    let opts = MultistartOptions::default();
    let cand = |t: f64| action::face_f_max(&spec.with_beta(t), candidate, &opts);
    let candidate_f_max = cand(betas[0]);
    let last = cand(*betas.last().unwrap());
    let beta_independent = (last - candidate_f_max).abs() <= 1e-12 * candidate_f_max.abs().max(1.0);
    let tol = 1e-10 * candidate_f_max.abs().max(1.0);
    let wins = |t: f64| reduction::maximize_f(&spec.with_beta(t), &opts).map(|s| s.f_max > candidate_f_max + tol);
    let mut crossover = None;
    for (k, &t) in betas.iter().enumerate() {
        if wins(t)? {
            if k == 0 {
                crossover = Some(t);
            } else {
                let (mut lo, mut hi) = (betas[k - 1], t);
                while hi - lo > 1e-10 * hi.abs().max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    if wins(mid)? {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                crossover = Some(0.5 * (lo + hi));
            }
            break;
        }
    }
    Ok(CompetitorReport { candidate_f_max, beta_independent, crossover, inconclusive: crossover.is_none() })
}

/// `g(r) = ((1+Σr²)^{p+1} − 1 − Σr^{2p+2}) / (2Σr^{p+1} + (Σr^{p+1})²)` for
/// `r ∈ [0,1]^{M−1}`; at `r = 0` the limit along the first axis.
pub fn prop_17_bound(m: usize, p: f64, r: &[f64]) -> Result<f64> {
    if m < 2 || r.len() != m - 1 {
        return Err(Error::DimensionMismatch { expected: m.saturating_sub(1), got: r.len() });
    }
    if p < 1.0 {
        return Err(Error::InvalidArgument(format!("the bound needs p >= 1, got {p}")));
    }
    if r.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument("r must lie in [0, 1]^(M-1)".into()));
    }
    if r.iter().all(|v| *v == 0.0) {
        let mut d = vec![0.0; r.len()];
        d[0] = 1.0;
        return Ok(corner_limit(p, &d));
    }
    let s2: f64 = r.iter().map(|v| v * v).sum();
    let sq: f64 = r.iter().map(|v| pow(*v, p + 1.0)).sum();
    let s2p: f64 = r.iter().map(|v| pow(*v, 2.0 * p + 2.0)).sum();
    Ok((pow(1.0 + s2, p + 1.0) - 1.0 - s2p) / (2.0 * sq + sq * sq))
}

/// `lim_{t→0} g(t d)`: leading terms `(p+1) t² |d|²` over `2 t^{p+1} Σ d^{p+1}`.
pub fn corner_limit(p: f64, d: &[f64]) -> f64 {
    let d2: f64 = d.iter().map(|v| v * v).sum();
    let dq: f64 = d.iter().map(|v| pow(*v, p + 1.0)).sum();
    let lead = (p + 1.0) * d2 / (2.0 * dq);
    if p == 1.0 {
        lead
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSweep {
    pub min_value: f64,
    pub argmin: Vec<f64>,
    /// Limits at the origin along each axis and the diagonal.
    pub corner_limits: Vec<f64>,
    pub excluded_radius: f64,
}

impl BoundSweep {
    pub fn lower_bound(&self) -> f64 {
        self.corner_limits.iter().cloned().fold(self.min_value, f64::min)
    }
}

/// Minimum of `g` over a uniform grid with `n` points per axis on `[0,1]^{M−1}`,
/// skipping the ball of radius `CORNER_RADIUS` around the origin.
pub fn prop_17_sweep(m: usize, p: f64, n: usize) -> Result<BoundSweep> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument("need M >= 2 and n >= 2".into()));
    }
    let dims = m - 1;
    let total = n
        .checked_pow(dims as u32)
        .filter(|t| *t <= 50_000_000)
        .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
    let mut min_value = f64::INFINITY;
    let mut argmin = vec![0.0; dims];
    let mut r = vec![0.0; dims];
    for idx in 0..total {
        let mut rem = idx;
        for slot in r.iter_mut() {
            *slot = (rem % n) as f64 / (n - 1) as f64;
            rem /= n;
        }
        if numeric::norm(&r) < CORNER_RADIUS {
            continue;
        }
        let g = prop_17_bound(m, p, &r)?;
        if g < min_value {
            min_value = g;
            argmin.copy_from_slice(&r);
        }
    }
    let mut directions: Vec<Vec<f64>> = (0..dims)
        .map(|i| {
            let mut d = vec![0.0; dims];
            d[i] = 1.0;
            d
        })
        .collect();
    directions.push(vec![1.0; dims]);
    let corner_limits = directions.iter().map(|d| corner_limit(p, d)).collect();
    Ok(BoundSweep { min_value, argmin, corner_limits, excluded_radius: CORNER_RADIUS })
}

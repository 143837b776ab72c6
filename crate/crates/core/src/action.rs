//! Ground-state and semitrivial action levels at the reduced level, the
//! coupling thresholds below which they are infinite, and comparison checks
//! built on them.
//!
//! For equal frequencies the level restricted to a support `X` is
//! `f_max(X)^{−1/p} I(u_0)`, where `f_max(X)` is the maximum of the reduced
//! coupling form over the face of the sphere spanned by `X` (sub-faces included).

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ProblemSpec, Support};
use crate::reduction::{self, CouplingForm, MultistartOptions, Verdict, POSITIVITY_TOL};
use crate::scalar;

/// Bracket expansion limit for threshold searches.
const THRESHOLD_LIMIT: f64 = 1e6;
const THRESHOLD_RESOLUTION: f64 = 1e-10;

thread_local! {
    static SCALAR_ACTION: RefCell<HashMap<(u64, usize), f64>> = RefCell::new(HashMap::new());
}

/// `I(u_0)` at frequency `omega`, with the `ω = 1` solve cached per thread.
pub fn scalar_level(p: f64, dim: usize, omega: f64) -> Result<f64> {
    let key = (p.to_bits(), dim);
    let cached = SCALAR_ACTION.with(|c| c.borrow().get(&key).copied());
    let base = match cached {
        Some(v) => v,
        None => {
            let v = scalar::solve_scalar(p, dim, 1.0)?.i_value;
            SCALAR_ACTION.with(|c| c.borrow_mut().insert(key, v));
            v
        }
    };
    Ok(base * omega.powf(crate::model::scaling_exponent(p, dim)))
}

/// Maximum of the reduced coupling form over the face spanned by `support`.
pub fn face_f_max(spec: &ProblemSpec, support: Support, opts: &MultistartOptions) -> f64 {
    let idx = support.indices();
    let m = spec.m;
    let k = spec.effective_matrix();
    let s = idx.len();
    let mut ks = vec![0.0; s * s];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            ks[r * s + c] = k[i * m + j];
        }
    }
    if s == 1 {
        return ks[0];
    }
    reduction::maximize_form(&CouplingForm::new(s, spec.p, ks), opts).f_max
}

/// Largest face maximum over the proper faces (the semitrivial competitor).
pub fn semitrivial_f_max(spec: &ProblemSpec, opts: &MultistartOptions) -> f64 {
    let m = spec.m;
    if m < 2 {
        return f64::NEG_INFINITY;
    }
    (0..m).map(|skip| face_f_max(spec, all_but(m, skip), opts)).fold(f64::NEG_INFINITY, f64::max)
}

/// All components except `skip`.
fn all_but(m: usize, skip: usize) -> Support {
    Support::from_bits(Support::full(m).bits() & !(1u64 << skip))
}

fn coeff_from_f_max(f: f64, p: f64) -> f64 {
    if f > POSITIVITY_TOL {
        f.powf(-1.0 / p)
    } else {
        f64::INFINITY
    }
}

/// An action level in energy units together with its multiple of the scalar
/// action `I(u_0)` at the smallest frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub value: f64,
    pub coeff: f64,
    /// Computed by the PDE-level minimizer rather than the reduction.
    pub numerical: bool,
}

impl Level {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

fn reference_level(spec: &ProblemSpec) -> Result<f64> {
    scalar_level(spec.p, spec.dim, spec.min_omega())
}

/// Level `𝓘^X` restricted to fields supported in `support`.
pub fn action_level(spec: &ProblemSpec, support: Support) -> Result<Level> {
    action_level_with(spec, support, &MultistartOptions::default())
}

pub fn action_level_with(spec: &ProblemSpec, support: Support, opts: &MultistartOptions) -> Result<Level> {
    spec.check()?;
    if support.is_empty() || !support.is_subset_of(Support::full(spec.m)) {
        return Err(Error::InvalidArgument("support must be a nonempty subset of the components".into()));
    }
    let reference = reference_level(spec)?;
    let restricted = spec.restricted(support);
    if restricted.has_equal_omega() {
        let coeff_local = coeff_from_f_max(face_f_max(spec, support, opts), spec.p);
        let value = coeff_local * scalar_level(spec.p, spec.dim, restricted.omega[0])?;
        return Ok(Level { value, coeff: value / reference, numerical: false });
    }
    if is_diagonal(&restricted) {
        let value = decoupled_level(&restricted)?;
        return Ok(Level { value, coeff: value / reference, numerical: false });
    }
    if spec.dim == 1 {
        let value = crate::variational::numerical_level(spec, support, NUMERICAL_NODES)?;
        return Ok(Level { value, coeff: value / reference, numerical: true });
    }
    Err(Error::UnsupportedRegime(
        "unequal frequencies with cross-coupling on this support need the one-dimensional variational solver".into(),
    ))
}

/// Grid size for levels delegated to the variational solver.
pub const NUMERICAL_NODES: usize = 4001;

fn is_diagonal(spec: &ProblemSpec) -> bool {
    (0..spec.m).all(|i| (0..spec.m).all(|j| i == j || spec.effective(i, j) == 0.0))
}

/// Decoupled components: the cheapest single-component ground-state.
fn decoupled_level(spec: &ProblemSpec) -> Result<f64> {
    let mut best = f64::INFINITY;
    for i in 0..spec.m {
        let k = spec.effective(i, i);
        if k > POSITIVITY_TOL {
            best = best.min(k.powf(-1.0 / spec.p) * scalar_level(spec.p, spec.dim, spec.omega[i])?);
        }
    }
    Ok(best)
}

/// Ground-state level `𝓘` over all fields.
pub fn ground_state_level(spec: &ProblemSpec, opts: &MultistartOptions) -> Result<Level> {
    action_level_with(spec, Support::full(spec.m), opts)
}

/// Semitrivial level `𝓘^sem`: minimum over proper nonempty supports.
pub fn semitrivial_level(spec: &ProblemSpec, opts: &MultistartOptions) -> Result<Level> {
    spec.check()?;
    let reference = reference_level(spec)?;
    if spec.has_equal_omega() {
        let value =
            coeff_from_f_max(semitrivial_f_max(spec, opts), spec.p) * scalar_level(spec.p, spec.dim, spec.omega[0])?;
        return Ok(Level { value, coeff: value / reference, numerical: false });
    }
    let mut best = Level { value: f64::INFINITY, coeff: f64::INFINITY, numerical: false };
    for skip in 0..spec.m {
        let level = action_level_with(spec, all_but(spec.m, skip), opts)?;
        if level.value < best.value {
            best = level;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionLevels {
    pub full: f64,
    /// Keyed by support mask (`"101"` = components 1 and 3).
    pub per_support: BTreeMap<String, f64>,
    pub semitrivial: f64,
    /// Coupling threshold `ubar β_X` per support when a β-split is present.
    pub thresholds: Option<BTreeMap<String, f64>>,
    /// `I(u_0)` at the smallest frequency; every level is a multiple of it when ω is equal.
    pub reference: f64,
}

pub fn action_levels(spec: &ProblemSpec, opts: &MultistartOptions) -> Result<ActionLevels> {
    spec.check()?;
    let m = spec.m;
    let mut per_support = BTreeMap::new();
    let mut semitrivial = f64::INFINITY;
    for support in Support::all_nonempty(m) {
        let level = action_level_with(spec, support, opts)?;
        if !support.is_full(m) {
            semitrivial = semitrivial.min(level.value);
        }
        per_support.insert(support.mask_string(m), level.value);
    }
    let full = per_support[&Support::full(m).mask_string(m)];
    let thresholds = if spec.pairs.is_some() {
        let mut t = BTreeMap::new();
        for support in Support::all_nonempty(m) {
            t.insert(support.mask_string(m), threshold(spec, support, opts)?);
        }
        Some(t)
    } else {
        None
    };
    Ok(ActionLevels { full, per_support, semitrivial, thresholds, reference: reference_level(spec)? })
}

/// Smallest `t` in `(lo, hi]` with `finite(t)`, for a predicate that is false
/// below and true above a single switch point. `±∞` when no switch exists
/// within `±THRESHOLD_LIMIT`.
fn locate_switch(mut finite: impl FnMut(f64) -> bool) -> f64 {
    let (mut lo, mut hi);
    if finite(0.0) {
        hi = 0.0;
        let mut t = -1.0;
        loop {
            if !finite(t) {
                lo = t;
                break;
            }
            hi = t;
            t *= 2.0;
            if t < -THRESHOLD_LIMIT {
                return f64::NEG_INFINITY;
            }
        }
    } else {
        lo = 0.0;
        let mut t = 1.0;
        loop {
            if finite(t) {
                hi = t;
                break;
            }
            lo = t;
            t *= 2.0;
            if t > THRESHOLD_LIMIT {
                return f64::INFINITY;
            }
        }
    }
    while hi - lo > THRESHOLD_RESOLUTION * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if finite(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn require_split(spec: &ProblemSpec) -> Result<()> {
    spec.check()?;
    let Some(pairs) = &spec.pairs else {
        return Err(Error::InvalidArgument("coupling thresholds need a pair set P".into()));
    };
    if pairs.iter().any(|&(i, j)| spec.coupling[i][j] < 0.0) {
        return Err(Error::UnsupportedRegime("threshold search needs k_ij >= 0 on P".into()));
    }
    Ok(())
}

/// `ubar β_X`: the level on `support` is infinite exactly for `β <= ubar β_X`.
pub fn threshold(spec: &ProblemSpec, support: Support, opts: &MultistartOptions) -> Result<f64> {
    require_split(spec)?;
    Ok(locate_switch(|t| face_f_max(&spec.with_beta(t), support, opts) > POSITIVITY_TOL))
}

/// `ubar β^sem = min` over proper supports of `ubar β_X`.
pub fn semitrivial_threshold(spec: &ProblemSpec, opts: &MultistartOptions) -> Result<f64> {
    require_split(spec)?;
    Ok(locate_switch(|t| semitrivial_f_max(&spec.with_beta(t), opts) > POSITIVITY_TOL))
}

/// `k_ii = −1`, `k_ij = β` for `i ≠ j`, with the off-diagonal pairs as `P`.
pub fn negative_diagonal_system(m: usize, p: f64, beta: f64) -> Result<ProblemSpec> {
    let k = (0..m).map(|i| (0..m).map(|j| if i == j { -1.0 } else { 1.0 }).collect()).collect();
    let pairs: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    ProblemSpec::uniform(p, 1, 1.0, k)?.with_split(&pairs, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime")]
pub enum NegativeDiagonalRegime {
    NoGroundStates,
    /// The semitrivial level is infinite, so every ground-state is nontrivial.
    AllNontrivial,
    /// Both levels finite; the verdict comes from comparing them.
    FiniteComparison {
        full: f64,
        semitrivial: f64,
        verdict: Verdict,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativeDiagonalReport {
    pub m: usize,
    pub beta: f64,
    pub threshold_full: f64,
    pub threshold_semitrivial: f64,
    pub regime: NegativeDiagonalRegime,
}

/// Regime of the `k_ii = −1`, `k_ij = β` system (`p = 1`), with both
/// thresholds located by bisection on the action levels.
pub fn check_corollary_13(m: usize, beta: f64) -> Result<NegativeDiagonalReport> {
    if m < 3 {
        return Err(Error::InvalidArgument("the negative-diagonal comparison needs M >= 3".into()));
    }
    let opts = MultistartOptions::default();
    let spec = negative_diagonal_system(m, 1.0, beta)?;
    let threshold_full = threshold(&spec, Support::full(m), &opts)?;
    let threshold_semitrivial = semitrivial_threshold(&spec, &opts)?;
    let regime = if beta <= threshold_full {
        NegativeDiagonalRegime::NoGroundStates
    } else if beta <= threshold_semitrivial {
        NegativeDiagonalRegime::AllNontrivial
    } else {
        let full = ground_state_level(&spec, &opts)?.coeff;
        let semitrivial = semitrivial_level(&spec, &opts)?.coeff;
        let verdict = reduction::classify(&spec, &opts)?.verdict;
        NegativeDiagonalRegime::FiniteComparison { full, semitrivial, verdict }
    };
    Ok(NegativeDiagonalReport { m, beta, threshold_full, threshold_semitrivial, regime })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallDiagonalReport {
    /// `(M−1)/(M−2)^{1/p}`: semitrivial coefficient of the unperturbed system.
    pub lhs: f64,
    /// `M/(M−1)^{1/p} (ω_max/ω_min)^{(2−p(N−2))/(2p)}`.
    pub rhs: f64,
    pub margin: f64,
    /// When true, small enough diagonal couplings give only nontrivial ground-states.
    pub holds: bool,
}

/// Frequency-spread inequality for equal off-diagonal couplings `b > 0`.
pub fn check_corollary_14(spec: &ProblemSpec) -> Result<SmallDiagonalReport> {
    spec.check()?;
    let (m, p) = (spec.m, spec.p);
    if p > 1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "p = {p} > 1: the inequality argument fails (for p = 3 with three components nontrivial ground-states do not exist)"
        )));
    }
    if m < 3 {
        return Err(Error::InvalidArgument("the inequality needs M >= 3".into()));
    }
    let b = spec.effective(0, 1);
    if !(b > 0.0) || (0..m).any(|i| (0..m).any(|j| i != j && spec.effective(i, j) != b)) {
        return Err(Error::InvalidArgument("off-diagonal couplings must all equal some b > 0".into()));
    }
    let w_min = spec.min_omega();
    let w_max = spec.omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mf = m as f64;
    let lhs = (mf - 1.0) / (mf - 2.0).powf(1.0 / p);
    let rhs = mf / (mf - 1.0).powf(1.0 / p) * (w_max / w_min).powf(spec.scaling_exponent());
    Ok(SmallDiagonalReport { lhs, rhs, margin: lhs - rhs, holds: lhs > rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dominance {
    /// Second spec has componentwise larger-or-equal frequencies, same couplings.
    Frequency,
    /// Second spec has entrywise larger-or-equal couplings, same frequencies.
    Coupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub dominance: Dominance,
    pub level1: f64,
    pub level2: f64,
    /// Nonnegative when the expected ordering holds.
    pub margin: f64,
}

/// Ground-state levels of two ordered specs: larger frequencies raise the
/// level, larger couplings lower it.
pub fn monotonicity_check(spec1: &ProblemSpec, spec2: &ProblemSpec) -> Result<MonotonicityReport> {
    monotonicity_check_with(spec1, spec2, &MultistartOptions::default())
}

pub fn monotonicity_check_with(
    spec1: &ProblemSpec,
    spec2: &ProblemSpec,
    opts: &MultistartOptions,
) -> Result<MonotonicityReport> {
    spec1.check()?;
    spec2.check()?;
    if spec1.m != spec2.m || spec1.p != spec2.p || spec1.dim != spec2.dim {
        return Err(Error::InvalidArgument("specs must share M, p and N".into()));
    }
    let m = spec1.m;
    let same_k = spec1.effective_matrix() == spec2.effective_matrix();
    let same_w = spec1.omega == spec2.omega;
    let w_le = spec1.omega.iter().zip(&spec2.omega).all(|(a, b)| a <= b);
    let k1 = spec1.effective_matrix();
    let k2 = spec2.effective_matrix();
    let k_le = k1.iter().zip(&k2).all(|(a, b)| a <= b);
    let dominance = if same_k && w_le {
        Dominance::Frequency
    } else if same_w && k_le {
        Dominance::Coupling
    } else {
        return Err(Error::InvalidArgument("specs are not ordered in ω (same K) or in K (same ω)".into()));
    };
    let full = Support::full(m);
    let level1 = action_level_with(spec1, full, opts)?.value;
    let level2 = action_level_with(spec2, full, opts)?.value;
    let (small, large) = match dominance {
        Dominance::Frequency => (level1, level2),
        Dominance::Coupling => (level2, level1),
    };
    let margin = if small == large { 0.0 } else { large - small };
    Ok(MonotonicityReport { dominance, level1, level2, margin })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub beta: f64,
    pub level_full: f64,
    pub level_semitrivial: f64,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityScan {
    pub points: Vec<ScanPoint>,
    /// Largest change between adjacent finite samples of either curve.
    pub max_jump: f64,
    /// Intervals `[β_k, β_{k+1}]` whose jump survived refinement.
    pub jumps: Vec<(f64, f64)>,
    /// Some curve passes between finite and infinite values inside the range.
    pub divergence: bool,
}

impl ContinuityScan {
    pub fn is_continuous(&self) -> bool {
        self.jumps.is_empty()
    }
}

fn levels_at(spec: &ProblemSpec, beta: f64, opts: &MultistartOptions) -> Result<(f64, f64)> {
    let s = spec.with_beta(beta);
    Ok((ground_state_level(&s, opts)?.coeff, semitrivial_level(&s, opts)?.coeff))
}

/// Samples `𝓘_β` and `𝓘_β^sem` (as multiples of `I(u_0)`) over a β range and
/// looks for jumps. A difference between neighbouring samples larger than
/// `10 · scale / n` (scale = larger of the two values) is refined by
/// repeated bisection of the interval; it is reported only if it does not
/// shrink.
pub fn continuity_scan(spec: &ProblemSpec, range: (f64, f64), n: usize) -> Result<ContinuityScan> {
    continuity_scan_with(spec, range, n, &MultistartOptions::default())
}

pub fn continuity_scan_with(
    spec: &ProblemSpec,
    range: (f64, f64),
    n: usize,
    opts: &MultistartOptions,
) -> Result<ContinuityScan> {
    if spec.pairs.is_none() {
        return Err(Error::InvalidArgument("continuity scans need a pair set P".into()));
    }
    if n < 2 || !(range.0 < range.1) {
        return Err(Error::InvalidArgument("need n >= 2 and an increasing β range".into()));
    }
    let betas: Vec<f64> = (0..n).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64).collect();
    let mut points = Vec::with_capacity(n);
    for &beta in &betas {
        let (full, sem) = levels_at(spec, beta, opts)?;
        let s = spec.with_beta(beta);
        let verdict = if s.has_equal_omega() { Some(reduction::classify(&s, opts)?.verdict) } else { None };
        points.push(ScanPoint { beta, level_full: full, level_semitrivial: sem, verdict });
    }
    let mut max_jump = 0.0f64;
    let mut jumps = Vec::new();
    let mut divergence = false;
    for k in 0..n - 1 {
        let (a, b) = (&points[k], &points[k + 1]);
        for curve in 0..2 {
            let pick = |pt: &ScanPoint| if curve == 0 { pt.level_full } else { pt.level_semitrivial };
            let (va, vb) = (pick(a), pick(b));
            if va.is_finite() != vb.is_finite() {
                divergence = true;
                continue;
            }
            if !va.is_finite() {
                continue;
            }
            let jump = (vb - va).abs();
            max_jump = max_jump.max(jump);
            let tol = 10.0 * va.abs().max(vb.abs()) / n as f64;
            if jump > tol && !refines_away(spec, (a.beta, b.beta), (va, vb), curve, opts)? {
                jumps.push((a.beta, b.beta));
            }
        }
    }
    Ok(ContinuityScan { points, max_jump, jumps, divergence })
}

/// Bisects `[lo, hi]`, following the half with the larger change, and reports
/// whether the change decays below half of its initial size.
fn refines_away(
    spec: &ProblemSpec,
    (mut lo, mut hi): (f64, f64),
    (mut vlo, mut vhi): (f64, f64),
    curve: usize,
    opts: &MultistartOptions,
) -> Result<bool> {
    let initial = (vhi - vlo).abs();
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let (f, s) = levels_at(spec, mid, opts)?;
        let vm = if curve == 0 { f } else { s };
        if !vm.is_finite() {
            return Ok(true);
        }
        if (vm - vlo).abs() >= (vhi - vm).abs() {
            hi = mid;
            vhi = vm;
        } else {
            lo = mid;
            vlo = vm;
        }
        if (vhi - vlo).abs() < 0.5 * initial {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> MultistartOptions {
        MultistartOptions::default()
    }

    #[test]
    fn unequal_frequencies_use_numerical_level() {
        let k = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let spec = ProblemSpec::new(1.0, 1, vec![1.0, 2.0], k.clone()).unwrap();
        let level = action_level(&spec, Support::full(2)).unwrap();
        assert!(level.numerical);
        assert!(level.value <= 16.0 / 3.0 * (1.0 + 1e-3), "{}", level.value);
        assert!(level.value > 0.0);
        let planar = ProblemSpec::new(1.0, 2, vec![1.0, 2.0], k).unwrap();
        assert!(matches!(action_level(&planar, Support::full(2)), Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn single_support_is_scalar_action() {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![1.0, 0.3], vec![0.3, 2.0]]).unwrap();
        let level = action_level(&spec, Support::singleton(0)).unwrap();
        assert!((level.value - 16.0 / 3.0).abs() < 1e-12);
        assert!((level.coeff - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_diagonal_thresholds() {
        // f_max = β − (1+β)/M at the uniform point: ubar β = 1/(M−1).
        for m in 3..=4 {
            let spec = negative_diagonal_system(m, 1.0, 1.0).unwrap();
            let t = threshold(&spec, Support::full(m), &opts()).unwrap();
            assert!((t - 1.0 / (m as f64 - 1.0)).abs() < 1e-8, "M={m}: {t}");
            let s = semitrivial_threshold(&spec, &opts()).unwrap();
            assert!((s - 1.0 / (m as f64 - 2.0)).abs() < 1e-8, "M={m}: {s}");
        }
    }

    #[test]
    fn negative_diagonal_regimes() {
        let r = check_corollary_13(3, 0.4).unwrap();
        assert_eq!(r.regime, NegativeDiagonalRegime::NoGroundStates);
        let r = check_corollary_13(3, 0.75).unwrap();
        assert_eq!(r.regime, NegativeDiagonalRegime::AllNontrivial);
        let r = check_corollary_13(3, 5.0).unwrap();
        let NegativeDiagonalRegime::FiniteComparison { full, semitrivial, verdict } = r.regime else { panic!() };
        assert!(full < semitrivial);
        assert_eq!(verdict, Verdict::AllNontrivial);
    }

    #[test]
    fn small_diagonal_inequality() {
        let k3 = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let r = check_corollary_14(&ProblemSpec::uniform(1.0, 1, 1.0, k3.clone()).unwrap()).unwrap();
        assert!(r.holds && (r.lhs - 2.0).abs() < 1e-15 && (r.rhs - 1.5).abs() < 1e-15);
        let r = check_corollary_14(&ProblemSpec::new(1.0, 1, vec![1.0, 1.5, 2.0], k3.clone()).unwrap()).unwrap();
        assert!(!r.holds);
        assert!((r.rhs - 1.5 * 2f64.powf(1.5)).abs() < 1e-12);
        let k4: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
        let r = check_corollary_14(&ProblemSpec::uniform(1.0, 1, 1.0, k4).unwrap()).unwrap();
        assert!(r.holds && (r.lhs - 1.5).abs() < 1e-15 && (r.rhs - 4.0 / 3.0).abs() < 1e-15);
        let cubic = ProblemSpec::uniform(3.0, 1, 1.0, k3).unwrap();
        assert!(matches!(check_corollary_14(&cubic), Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn frequency_and_coupling_monotonicity() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let a = ProblemSpec::new(1.0, 1, vec![1.0, 1.0], id.clone()).unwrap();
        let b = ProblemSpec::new(1.0, 1, vec![1.0, 2.0], id).unwrap();
        let r = monotonicity_check(&a, &b).unwrap();
        assert_eq!(r.dominance, Dominance::Frequency);
        assert!(r.margin >= 0.0);
        let c = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let d = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let r = monotonicity_check(&c, &d).unwrap();
        assert_eq!(r.dominance, Dominance::Coupling);
        assert!(r.margin > 0.0);
        let r = monotonicity_check(&c, &c).unwrap();
        assert_eq!(r.margin, 0.0);
        assert!(monotonicity_check(&b, &d).is_err());
    }

    #[test]
    fn scan_far_above_threshold_is_continuous() {
        let spec = negative_diagonal_system(3, 1.0, 1.0).unwrap();
        let scan = continuity_scan(&spec, (1.05, 3.0), 40).unwrap();
        assert!(scan.is_continuous());
        assert!(!scan.divergence);
        assert!(scan.points.iter().all(|p| p.level_full.is_finite()));
    }

    #[test]
    fn scan_across_threshold_reports_divergence_not_jump() {
        let spec = negative_diagonal_system(3, 1.0, 1.0).unwrap();
        let scan = continuity_scan(&spec, (0.3, 1.5), 25).unwrap();
        assert!(scan.divergence);
        assert!(scan.is_continuous(), "{:?}", scan.jumps);
    }

    #[test]
    fn scan_below_threshold_is_all_infinite() {
        let spec = negative_diagonal_system(3, 1.0, 1.0).unwrap();
        let scan = continuity_scan(&spec, (-1.0, 0.2), 10).unwrap();
        assert!(scan.points.iter().all(|p| p.level_full.is_infinite() && p.level_semitrivial.is_infinite()));
    }
}

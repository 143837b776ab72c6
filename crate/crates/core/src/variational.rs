//! Direct minimization of `I` on `{J = const}` for fields on a 1D interval.
//!
//! Discretization: `I_h = Σ_i [Σ_cells (u_{k+1} − u_k)²/h + ω_i h Σ_k u_k²]`
//! and `J_h = h Σ_k Σ_{ij} k_ij |u_i|^{p+1} |u_j|^{p+1}` over the nodes, with
//! homogeneous Dirichlet values at both ends. The quotient
//! `R = I / J^{1/(p+1)}` is minimized by a Sobolev-preconditioned gradient
//! method; every trial is rescaled back to `J = 1` along its ray.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DiscreteField, Grid, ProblemSpec, Support};
use crate::numeric::{self, pow};
use crate::reduction::{self, CouplingForm, MultistartOptions, POSITIVITY_TOL};
use crate::scalar::ScalarGroundState;

const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const STALL_WINDOW: usize = 50;
const STALL_TOL: f64 = 1e-12;
/// A later start replaces an earlier one only when lower by this relative margin.
const PREFERENCE_MARGIN: f64 = 1e-9;
/// Nodes below this fraction of a component's peak are ignored in ratio checks.
const RATIO_FLOOR: f64 = 1e-4;
/// Components whose peak is below this fraction of the largest peak count as vanishing.
pub const VANISHING_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct VariationalOptions {
    pub max_iter: usize,
    /// Random positive seeds in addition to the separable and single-component ones.
    pub n_random: usize,
    pub seed: u64,
    /// Components outside this set are held at zero.
    pub support: Option<Support>,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        VariationalOptions { max_iter: 20_000, n_random: 3, seed: 2024, support: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizationResult {
    /// Minimizer scaled to the constraint level `J = λ_G`; it solves the discrete system.
    #[serde(skip)]
    pub field: DiscreteField,
    #[serde(rename = "I_value")]
    pub i_value: f64,
    #[serde(rename = "J_value")]
    pub j_value: f64,
    #[serde(rename = "lambda_G")]
    pub lambda_g: f64,
    pub proportionality_defect: f64,
    /// `‖u_i‖ / ‖u_r‖` where `r` is the first non-vanishing component.
    pub amplitude_ratios: Vec<f64>,
    /// Max-norm residual of the discrete Euler–Lagrange system relative to the peak value.
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the winning start: separable seeds first, then single-component, then random.
    pub start: usize,
}

impl MinimizationResult {
    /// Action `S = I/2 − J/(2p+2)` of the scaled minimizer.
    pub fn action(&self, p: f64) -> f64 {
        self.i_value / 2.0 - self.j_value / (2.0 * p + 2.0)
    }

    /// Peaks of `|u_i|`.
    pub fn peaks(&self) -> Vec<f64> {
        self.field.values().iter().map(|row| row.iter().fold(0.0f64, |a, v| a.max(v.abs()))).collect()
    }

    /// Components whose peak exceeds `VANISHING_TOL` times the largest peak.
    pub fn support(&self) -> Support {
        let peaks = self.peaks();
        let top = peaks.iter().cloned().fold(0.0, f64::max);
        Support::from_indices((0..peaks.len()).filter(|&i| peaks[i] > VANISHING_TOL * top))
    }
}

/// Discrete functionals and their gradients for a fixed spec and grid.
struct Problem {
    m: usize,
    p: f64,
    k: Vec<f64>,
    omega: Vec<f64>,
    h: f64,
    n: usize,
    active: Support,
}

impl Problem {
    fn i_value(&self, u: &[Vec<f64>]) -> f64 {
        let h = self.h;
        let mut total = 0.0;
        for (i, row) in u.iter().enumerate() {
            let grad: f64 = row.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
            let mass: f64 = row.iter().map(|v| v * v).sum();
            total += grad / h + self.omega[i] * h * mass;
        }
        total
    }

    fn powers(&self, u: &[Vec<f64>], y: &mut [Vec<f64>]) {
        for (row, yr) in u.iter().zip(y.iter_mut()) {
            for (v, out) in row.iter().zip(yr.iter_mut()) {
                *out = pow(v.abs(), self.p + 1.0);
            }
        }
    }

    fn j_value(&self, u: &[Vec<f64>], y: &mut [Vec<f64>]) -> f64 {
        self.powers(u, y);
        let m = self.m;
        let mut total = 0.0;
        for node in 0..self.n {
            for i in 0..m {
                if y[i][node] == 0.0 {
                    continue;
                }
                let mut row = 0.0;
                for j in 0..m {
                    row += self.k[i * m + j] * y[j][node];
                }
                total += y[i][node] * row;
            }
        }
        self.h * total
    }

    /// Gradient of `I − c J` at interior nodes; boundary entries stay zero.
    fn gradient(&self, u: &[Vec<f64>], c: f64, y: &mut [Vec<f64>], g: &mut [Vec<f64>]) {
        self.powers(u, y);
        let (m, h, n) = (self.m, self.h, self.n);
        for i in 0..m {
            g[i][0] = 0.0;
            g[i][n - 1] = 0.0;
            if !self.active.contains(i) {
                g[i].iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            let row = &u[i];
            for node in 1..n - 1 {
                let lap = (2.0 * row[node] - row[node - 1] - row[node + 1]) / h;
                let mut coupling = 0.0;
                for j in 0..m {
                    coupling += self.k[i * m + j] * y[j][node];
                }
                let v = row[node];
                let dy = if v == 0.0 { 0.0 } else { v.signum() * pow(v.abs(), self.p) };
                g[i][node] = 2.0 * lap + 2.0 * self.omega[i] * h * v - c * 2.0 * (self.p + 1.0) * h * coupling * dy;
            }
        }
    }

    /// Solves `H_i d_i = g_i` on the interior, with `H_i` the Hessian of the quadratic part of `I_h`.
    fn precondition(&self, g: &[Vec<f64>], d: &mut [Vec<f64>], scratch: &mut Vec<f64>, out: &mut Vec<f64>) {
        let (h, n) = (self.h, self.n);
        for i in 0..self.m {
            d[i].iter_mut().for_each(|v| *v = 0.0);
            if !self.active.contains(i) {
                continue;
            }
            let diag = vec![2.0 * (2.0 / h + self.omega[i] * h); n - 2];
            scratch.resize(n - 2, 0.0);
            out.resize(n - 2, 0.0);
            numeric::solve_tridiagonal(&diag, -2.0 / h, &g[i][1..n - 1], out, scratch);
            d[i][1..n - 1].copy_from_slice(out);
        }
    }
}

struct Descent {
    u: Vec<Vec<f64>>,
    ratio: f64,
    iterations: usize,
    converged: bool,
}

fn descend(prob: &Problem, mut u: Vec<Vec<f64>>, max_iter: usize) -> Result<Option<Descent>> {
    let (m, n, p) = (prob.m, prob.n, prob.p);
    let mut y = vec![vec![0.0; n]; m];
    let j = prob.j_value(&u, &mut y);
    if !(j > 0.0) {
        return Ok(None);
    }
    let scale = j.powf(-1.0 / (2.0 * p + 2.0));
    u.iter_mut().flatten().for_each(|v| *v *= scale);
    let mut i_val = prob.i_value(&u);
    let mut history = vec![i_val];
    let mut g = vec![vec![0.0; n]; m];
    let mut d = vec![vec![0.0; n]; m];
    let mut trial = u.clone();
    let (mut scratch, mut out) = (Vec::new(), Vec::new());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        prob.gradient(&u, i_val / (p + 1.0), &mut y, &mut g);
        prob.precondition(&g, &mut d, &mut scratch, &mut out);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| numeric::dot(a, b)).sum();
        if !(slope > 0.0) {
            converged = true;
            break;
        }
        let mut tau = 1.0;
        let mut accepted = false;
        while tau > 1e-20 {
            for i in 0..m {
                for node in 0..n {
                    trial[i][node] = u[i][node] - tau * d[i][node];
                }
            }
            let jt = prob.j_value(&trial, &mut y);
            if jt > 0.0 {
                let s = jt.powf(-1.0 / (2.0 * p + 2.0));
                trial.iter_mut().flatten().for_each(|v| *v *= s);
                let it = prob.i_value(&trial);
                if !it.is_finite() {
                    return Err(Error::Solver("descent diverged: non-finite energy".into()));
                }
                if it <= i_val - ARMIJO_C * tau * slope {
                    std::mem::swap(&mut u, &mut trial);
                    i_val = it;
                    accepted = true;
                    break;
                }
            }
            tau *= SHRINK;
        }
        if !accepted {
            // No representable decrease left.
            converged = true;
            break;
        }
        history.push(i_val);
        if history.len() > STALL_WINDOW {
            let old = history[history.len() - 1 - STALL_WINDOW];
            if (old - i_val) < STALL_TOL * i_val.abs() {
                converged = true;
                break;
            }
        }
    }
    Ok(Some(Descent { u, ratio: i_val, iterations, converged }))
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

fn seeds(spec: &ProblemSpec, grid: &Grid, active: Support, opts: &VariationalOptions) -> Vec<Vec<Vec<f64>>> {
    let m = spec.m;
    let xs = grid.points();
    let n = grid.nodes;
    let build = |amp: &dyn Fn(usize) -> f64, center: f64| -> Vec<Vec<f64>> {
        (0..m)
            .map(|i| {
                let a = if active.contains(i) { amp(i) } else { 0.0 };
                let mut row: Vec<f64> = xs.iter().map(|x| a * sech(spec.omega[i].sqrt() * (x - center))).collect();
                row[0] = 0.0;
                row[n - 1] = 0.0;
                row
            })
            .collect()
    };
    let mut out = Vec::new();
    let restricted = spec.restricted(active);
    let face_opts = MultistartOptions { n_random: 40, ..MultistartOptions::default() };
    if let Ok(set) = reduction::maximize_f(&restricted, &face_opts) {
        let idx = active.indices();
        for x in &set.points {
            let mut full = vec![0.0; m];
            for (slot, v) in idx.iter().zip(x.as_slice()) {
                full[*slot] = *v;
            }
            out.push(build(&|i| full[i], 0.0));
        }
    }
    for i in active.indices() {
        if spec.effective(i, i) > 0.0 {
            out.push(build(&|j| if j == i { 1.0 } else { 0.0 }, 0.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let width = grid.right - grid.left;
    for _ in 0..opts.n_random {
        let mut field = vec![vec![0.0; n]; m];
        for i in active.indices() {
            let s = 1.0 / spec.omega[i].sqrt();
            for _ in 0..3 {
                let a: f64 = rng.random_range(0.2..1.0);
                let c: f64 = rng.random_range(-0.1..0.1) * width;
                let w: f64 = rng.random_range(0.5..2.0) * s;
                for (k, x) in xs.iter().enumerate().skip(1).take(n - 2) {
                    field[i][k] += a * (-(x - c) * (x - c) / (2.0 * w * w)).exp();
                }
            }
        }
        out.push(field);
    }
    out
}

pub fn minimize_constrained(
    spec: &ProblemSpec,
    grid: Grid,
    seed_field: Option<&DiscreteField>,
) -> Result<MinimizationResult> {
    minimize_with(spec, grid, seed_field, &VariationalOptions::default())
}

/// Minimizes `I` on `{J = λ_G}`. With `seed_field` only that start is used;
/// otherwise separable seeds `X·sech` (X a reduced maximizer), single-component
/// seeds and random positive bumps are tried in that order.
pub fn minimize_with(
    spec: &ProblemSpec,
    grid: Grid,
    seed_field: Option<&DiscreteField>,
    opts: &VariationalOptions,
) -> Result<MinimizationResult> {
    spec.check()?;
    if spec.dim != 1 {
        return Err(Error::UnsupportedRegime(format!("the discrete oracle is one-dimensional, got N = {}", spec.dim)));
    }
    let active = opts.support.unwrap_or(Support::full(spec.m));
    if active.is_empty() || !active.is_subset_of(Support::full(spec.m)) {
        return Err(Error::InvalidArgument("support must be a nonempty subset of the components".into()));
    }
    let min_omega = active.indices().iter().map(|&i| spec.omega[i]).fold(f64::INFINITY, f64::min);
    if grid.right - grid.left < 20.0 / min_omega.sqrt() {
        return Err(Error::InvalidArgument(format!(
            "interval length {} is below 20/sqrt(min omega) = {}",
            grid.right - grid.left,
            20.0 / min_omega.sqrt()
        )));
    }
    if grid.nodes < 5 {
        return Err(Error::InvalidArgument("need at least 5 grid nodes".into()));
    }
    let restricted = spec.restricted(active);
    let f_max = reduction::maximize_form(&CouplingForm::from_spec(&restricted), &MultistartOptions::default()).f_max;
    if f_max <= POSITIVITY_TOL {
        return Err(Error::NoGroundStates(format!("coupling form maximum {f_max:.3e} is not positive")));
    }
    let prob = Problem {
        m: spec.m,
        p: spec.p,
        k: spec.effective_matrix(),
        omega: spec.omega.clone(),
        h: grid.spacing(),
        n: grid.nodes,
        active,
    };
    let starts: Vec<Vec<Vec<f64>>> = match seed_field {
        Some(f) => {
            if f.components() != spec.m || *f.grid() != grid {
                return Err(Error::DimensionMismatch { expected: spec.m, got: f.components() });
            }
            let mut v = f.values().to_vec();
            for i in 0..spec.m {
                if !active.contains(i) {
                    v[i].iter_mut().for_each(|x| *x = 0.0);
                }
            }
            vec![v]
        }
        None => seeds(spec, &grid, active, opts),
    };
    let mut best: Option<(usize, Descent)> = None;
    for (idx, start) in starts.into_iter().enumerate() {
        let Some(run) = descend(&prob, start, opts.max_iter)? else { continue };
        let better = match &best {
            None => true,
            Some((_, b)) => run.ratio < b.ratio * (1.0 - PREFERENCE_MARGIN),
        };
        if better {
            best = Some((idx, run));
        }
    }
    let (start, run) = best.ok_or_else(|| Error::Solver("no start has positive J".into()))?;
    finish(&prob, grid, run, start)
}

fn finish(prob: &Problem, grid: Grid, run: Descent, start: usize) -> Result<MinimizationResult> {
    let p = prob.p;
    let lambda_g = run.ratio.powf((p + 1.0) / p);
    let scale = lambda_g.powf(1.0 / (2.0 * p + 2.0));
    let values: Vec<Vec<f64>> = run.u.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mut y = vec![vec![0.0; prob.n]; prob.m];
    let i_value = prob.i_value(&values);
    let j_value = prob.j_value(&values, &mut y);
    // Bound-state residual: ∇(I/2 − J/(2p+2)) per unit length.
    let mut g = vec![vec![0.0; prob.n]; prob.m];
    prob.gradient(&values, 1.0 / (p + 1.0), &mut y, &mut g);
    let peak = values.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let el_residual =
        g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())) / (2.0 * prob.h * peak.max(f64::MIN_POSITIVE));
    let field = DiscreteField::new(grid, values)?;
    let proportionality_defect = proportionality_defect(&field);
    let amplitude_ratios = amplitude_ratios(&field);
    Ok(MinimizationResult {
        field,
        i_value,
        j_value,
        lambda_g,
        proportionality_defect,
        amplitude_ratios,
        el_residual,
        iterations: run.iterations,
        converged: run.converged,
        start,
    })
}

fn l2_norms(field: &DiscreteField) -> Vec<f64> {
    let w = field.grid().trapezoid_weights();
    field.values().iter().map(|row| row.iter().zip(&w).map(|(v, wk)| wk * v * v).sum::<f64>().sqrt()).collect()
}

fn nonvanishing(field: &DiscreteField) -> Vec<usize> {
    let peaks: Vec<f64> = field.values().iter().map(|r| r.iter().fold(0.0f64, |a, v| a.max(v.abs()))).collect();
    let top = peaks.iter().cloned().fold(0.0, f64::max);
    (0..peaks.len()).filter(|&i| peaks[i] > VANISHING_TOL * top).collect()
}

/// Largest relative spread `(max − min)/max` of `|u_i|/|u_j|` over nodes where
/// both exceed `1e−4` of their peaks; vanishing components are skipped.
pub fn proportionality_defect(field: &DiscreteField) -> f64 {
    let live = nonvanishing(field);
    let mut defect = 0.0f64;
    for (a, &i) in live.iter().enumerate() {
        for &j in &live[a + 1..] {
            let (ui, uj) = (field.component(i), field.component(j));
            let pi = ui.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let pj = uj.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for (a, b) in ui.iter().zip(uj) {
                if a.abs() > RATIO_FLOOR * pi && b.abs() > RATIO_FLOOR * pj {
                    let r = a.abs() / b.abs();
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
            if hi > 0.0 {
                defect = defect.max((hi - lo) / hi);
            }
        }
    }
    defect
}

fn amplitude_ratios(field: &DiscreteField) -> Vec<f64> {
    let norms = l2_norms(field);
    let live = nonvanishing(field);
    let reference = live.first().map(|&r| norms[r]).unwrap_or(1.0);
    norms.iter().map(|v| v / reference).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterizationReport {
    pub proportionality_defect: f64,
    /// `‖u_i‖ / ‖u_0‖` with `u_0` the scalar ground-state on the same grid.
    pub fitted_amplitudes: Vec<f64>,
    /// Closest predicted amplitude vector `f_max^{−1/(2p)} X` over the maximizer set.
    pub predicted_amplitudes: Vec<f64>,
    pub amplitude_error: f64,
    /// Relative sup-norm gap between the common profile and `u_0`, after centering.
    pub profile_error: f64,
    pub center: f64,
    /// `λ_G` against `Σ a_i² I(u_0)`.
    pub action_relative_error: f64,
    pub proportional: bool,
    pub amplitudes_match: bool,
    pub profile_matches: bool,
}

impl CharacterizationReport {
    pub fn holds(&self) -> bool {
        self.proportional && self.amplitudes_match && self.profile_matches
    }
}

pub const CHARACTERIZATION_TOL: f64 = 1e-3;

/// Checks that the minimizer has the form `(a_i u_0)` with `a = f_max^{−1/(2p)} X`.
pub fn verify_characterization(
    spec: &ProblemSpec,
    result: &MinimizationResult,
    gs: &ScalarGroundState,
) -> Result<CharacterizationReport> {
    if !result.converged {
        return Err(Error::InvalidArgument("minimization did not converge".into()));
    }
    if !spec.has_equal_omega() {
        return Err(Error::UnsupportedRegime("the characterization needs equal frequencies".into()));
    }
    if gs.dim != 1 || (gs.omega - spec.omega[0]).abs() > 1e-12 * spec.omega[0] || gs.p != spec.p {
        return Err(Error::InvalidArgument("scalar ground-state must match p, omega and N = 1".into()));
    }
    let field = &result.field;
    let grid = *field.grid();
    let xs = grid.points();
    let w = grid.trapezoid_weights();
    let modulus: Vec<f64> =
        (0..grid.nodes).map(|k| field.values().iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt()).collect();
    let mass: f64 = modulus.iter().zip(&w).map(|(v, wk)| wk * v * v).sum();
    let center = modulus.iter().zip(&w).zip(&xs).map(|((v, wk), x)| wk * v * v * x).sum::<f64>() / mass;
    let u0: Vec<f64> = xs.iter().map(|x| gs.eval((x - center).abs())).collect();
    let u0_norm = u0.iter().zip(&w).map(|(v, wk)| wk * v * v).sum::<f64>().sqrt();
    let fitted: Vec<f64> = l2_norms(field).iter().map(|v| v / u0_norm).collect();

    let set = reduction::maximize_f(spec, &MultistartOptions::default())?;
    let factor = set.f_max.powf(-1.0 / (2.0 * spec.p));
    let mut predicted = Vec::new();
    let mut amplitude_error = f64::INFINITY;
    for x in &set.points {
        let cand: Vec<f64> = x.as_slice().iter().map(|v| factor * v).collect();
        let err = fitted.iter().zip(&cand).fold(0.0f64, |a, (f, c)| a.max((f - c).abs()));
        if err < amplitude_error {
            amplitude_error = err;
            predicted = cand;
        }
    }
    let a_norm = numeric::norm(&fitted);
    let peak0 = u0.iter().cloned().fold(0.0, f64::max);
    let profile_error = modulus.iter().zip(&u0).fold(0.0f64, |a, (v, z)| a.max((v / a_norm - z).abs())) / peak0;
    let predicted_level = numeric::dot(&predicted, &predicted) * crate::action::scalar_level(spec.p, 1, spec.omega[0])?;
    let action_relative_error = (result.lambda_g - predicted_level).abs() / predicted_level;
    Ok(CharacterizationReport {
        proportionality_defect: result.proportionality_defect,
        proportional: result.proportionality_defect <= CHARACTERIZATION_TOL,
        amplitudes_match: amplitude_error <= CHARACTERIZATION_TOL,
        profile_matches: profile_error <= CHARACTERIZATION_TOL,
        fitted_amplitudes: fitted,
        predicted_amplitudes: predicted,
        amplitude_error,
        profile_error,
        center,
        action_relative_error,
    })
}

/// Numerical level `λ_G` on fields supported in `support`, on `[−L, L]` with
/// `L = max(20, 20/√min ω)` and the given node count.
pub fn numerical_level(spec: &ProblemSpec, support: Support, nodes: usize) -> Result<f64> {
    let half = (20.0 / spec.min_omega().sqrt()).max(20.0);
    let grid = Grid::symmetric(half, nodes)?;
    let opts = VariationalOptions { support: Some(support), ..VariationalOptions::default() };
    match minimize_with(spec, grid, None, &opts) {
        Ok(r) => Ok(r.lambda_g),
        Err(Error::NoGroundStates(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::solve_scalar;

    fn grid() -> Grid {
        Grid::symmetric(20.0, 4001).unwrap()
    }

    fn random_field(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..m)
            .map(|_| {
                let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                r[0] = 0.0;
                r[n - 1] = 0.0;
                r
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = ProblemSpec::uniform(1.5, 1, 1.0, vec![vec![1.0, -0.7], vec![-0.7, 2.0]])
            .unwrap()
            .with_split(&[(0, 1)], 0.8)
            .unwrap();
        let n = 41;
        let prob = Problem {
            m: 2,
            p: spec.p,
            k: spec.effective_matrix(),
            omega: vec![1.0, 2.5],
            h: 0.1,
            n,
            active: Support::full(2),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = 0.37;
        let eps = 1e-6;
        let mut y = vec![vec![0.0; n]; 2];
        let mut g = vec![vec![0.0; n]; 2];
        for _ in 0..20 {
            let u = random_field(2, n, &mut rng);
            prob.gradient(&u, c, &mut y, &mut g);
            let i = rng.random_range(0..2);
            let k = rng.random_range(1..n - 1);
            let mut up = u.clone();
            let mut dn = u.clone();
            up[i][k] += eps;
            dn[i][k] -= eps;
            let phi = |v: &[Vec<f64>], y: &mut [Vec<f64>]| prob.i_value(v) - c * prob.j_value(v, y);
            let fd = (phi(&up, &mut y) - phi(&dn, &mut y)) / (2.0 * eps);
            let rel = (fd - g[i][k]).abs() / g[i][k].abs().max(1e-3);
            assert!(rel < 1e-5, "fd {fd} vs {}", g[i][k]);
        }
    }

    #[test]
    fn scalar_soliton_recovered() {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![1.0]]).unwrap();
        let r = minimize_constrained(&spec, grid(), None).unwrap();
        assert!(r.converged);
        assert!((r.lambda_g - 16.0 / 3.0).abs() < 1e-3, "{}", r.lambda_g);
        assert!((r.j_value - r.lambda_g).abs() < 1e-8 * r.lambda_g);
        assert!((r.i_value - r.lambda_g).abs() < 1e-6 * r.lambda_g);
        assert!(r.el_residual < 1e-4, "{}", r.el_residual);
        let gs = solve_scalar(1.0, 1, 1.0).unwrap();
        let rep = verify_characterization(&spec, &r, &gs).unwrap();
        assert!(rep.holds(), "{rep:?}");
    }

    #[test]
    fn off_diagonal_pair_is_proportional() {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = minimize_constrained(&spec, grid(), None).unwrap();
        assert!(r.proportionality_defect <= 1e-4, "{}", r.proportionality_defect);
        assert!((r.amplitude_ratios[1] - 1.0).abs() < 1e-4);
        let gs = solve_scalar(1.0, 1, 1.0).unwrap();
        let rep = verify_characterization(&spec, &r, &gs).unwrap();
        assert!(rep.holds(), "{rep:?}");
        for a in &rep.fitted_amplitudes {
            assert!((a - 1.0).abs() < 1e-3);
        }
        assert!(rep.action_relative_error < 2e-3);
    }

    #[test]
    fn first_component_vanishes_when_sum_too_small() {
        let k = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 3.0], vec![1.0, 3.0, 0.0]];
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, k).unwrap();
        let r = minimize_constrained(&spec, grid(), None).unwrap();
        let peaks = r.peaks();
        assert!(peaks[0] <= 1e-4 * peaks[1].max(peaks[2]), "{peaks:?}");
    }

    #[test]
    fn decoupled_minimizer_is_single_component() {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = minimize_constrained(&spec, grid(), None).unwrap();
        assert_eq!(r.support().len(), 1);
        let gs = solve_scalar(1.0, 1, 1.0).unwrap();
        assert!(verify_characterization(&spec, &r, &gs).unwrap().holds());
    }

    #[test]
    fn rejects_nonpositive_form_and_short_interval() {
        let spec = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![-1.0]]).unwrap();
        assert!(matches!(minimize_constrained(&spec, grid(), None), Err(Error::NoGroundStates(_))));
        let ok = ProblemSpec::uniform(1.0, 1, 1.0, vec![vec![1.0]]).unwrap();
        let short = Grid::symmetric(5.0, 401).unwrap();
        assert!(matches!(minimize_constrained(&ok, short, None), Err(Error::InvalidArgument(_))));
    }
}

//! Domain types shared by every solver: the system description, amplitude
//! vectors on the nonnegative orthant, sampled multi-component fields on a 1D
//! grid, and the quadratic / coupling functionals `I`, `J` and the action `S`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude entries at or below this value are treated as zero.
pub const SUPPORT_TOL: f64 = 1e-8;

/// A subset of component indices `{0, .., M-1}` stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Support(u64);

impl Support {
    pub const MAX_COMPONENTS: usize = 64;

    pub fn empty() -> Self {
        Support(0)
    }

    pub fn full(m: usize) -> Self {
        assert!(m <= Self::MAX_COMPONENTS);
        if m == 64 {
            Support(u64::MAX)
        } else {
            Support((1u64 << m) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        Support(1u64 << i)
    }

    pub fn from_bits(bits: u64) -> Self {
        Support(bits)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Support(indices.into_iter().fold(0u64, |acc, i| acc | (1u64 << i)))
    }

    /// Indices whose entry in `x` exceeds `tol`.
    pub fn of_vector(x: &[f64], tol: f64) -> Self {
        Self::from_indices(x.iter().enumerate().filter(|(_, v)| **v > tol).map(|(i, _)| i))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 & (1u64 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_full(self, m: usize) -> bool {
        self == Self::full(m)
    }

    pub fn is_subset_of(self, other: Support) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn indices(self) -> Vec<usize> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }

    /// `'1'`/`'0'` per component, component 1 first.
    pub fn mask_string(self, m: usize) -> String {
        (0..m).map(|i| if self.contains(i) { '1' } else { '0' }).collect()
    }

    pub fn parse_mask(mask: &str) -> Option<Self> {
        let mut bits = 0u64;
        for (i, c) in mask.chars().enumerate() {
            match c {
                '1' => bits |= 1u64 << i,
                '0' => {}
                _ => return None,
            }
        }
        Some(Support(bits))
    }

    /// All nonempty subsets of `{0, .., m-1}` in increasing bit order.
    pub fn all_nonempty(m: usize) -> impl Iterator<Item = Support> {
        assert!(m < 64, "subset enumeration needs m < 64");
        (1u64..(1u64 << m)).map(Support)
    }
}

/// Full description of a coupled system
/// `Δu_i − ω_i u_i + Σ_j k_ij |u_j|^{p+1} |u_i|^{p−1} u_i = 0`, optionally with
/// the couplings on a symmetric pair set `P` multiplied by `beta`.
///
/// Serialized with the keys `M, p, N, omega, K, P, beta`; pairs in `P` are
/// 1-based in the serialized form and 0-based in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(rename = "M")]
    pub m: usize,
    pub p: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub omega: Vec<f64>,
    #[serde(rename = "K")]
    pub coupling: Vec<Vec<f64>>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none", with = "one_based_pairs")]
    pub pairs: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

mod one_based_pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(pairs: &Option<Vec<(usize, usize)>>, s: S) -> Result<S::Ok, S::Error> {
        pairs.as_ref().map(|v| v.iter().map(|&(i, j)| [i + 1, j + 1]).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<(usize, usize)>>, D::Error> {
        let raw: Option<Vec<[usize; 2]>> = Option::deserialize(d)?;
        match raw {
            None => Ok(None),
            Some(v) => v
                .into_iter()
                .map(|[i, j]| {
                    if i == 0 || j == 0 {
                        Err(serde::de::Error::custom("P: pair indices are 1-based"))
                    } else {
                        Ok((i - 1, j - 1))
                    }
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}

impl ProblemSpec {
    /// Builds a spec with no β-split and checks its structural invariants.
    pub fn new(p: f64, dim: usize, omega: Vec<f64>, coupling: Vec<Vec<f64>>) -> Result<Self> {
        let spec = ProblemSpec { m: coupling.len(), p, dim, omega, coupling, pairs: None, beta: None };
        spec.check()?;
        Ok(spec)
    }

    /// Equal frequencies `omega` for every component.
    pub fn uniform(p: f64, dim: usize, omega: f64, coupling: Vec<Vec<f64>>) -> Result<Self> {
        let m = coupling.len();
        Self::new(p, dim, vec![omega; m], coupling)
    }

    /// Attaches a β-split: couplings on `pairs` (0-based, symmetrized) are multiplied by `beta`.
    pub fn with_split(mut self, pairs: &[(usize, usize)], beta: f64) -> Result<Self> {
        let mut all: Vec<(usize, usize)> = Vec::new();
        for &(i, j) in pairs {
            for pair in [(i, j), (j, i)] {
                if !all.contains(&pair) {
                    all.push(pair);
                }
            }
        }
        self.pairs = Some(all);
        self.beta = Some(beta);
        self.check()?;
        Ok(self)
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        let mut s = self.clone();
        s.beta = Some(beta);
        s
    }

    /// Structural invariants only; does not evaluate hypothesis (P1).
    pub fn check(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.m == 0 {
            errs.push("M: at least one component is required".to_string());
        }
        if self.m > Support::MAX_COMPONENTS {
            errs.push(format!("M: at most {} components are supported", Support::MAX_COMPONENTS));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            errs.push(format!("p: exponent must be positive and finite, got {}", self.p));
        }
        if self.dim == 0 {
            errs.push("N: spatial dimension must be at least 1".to_string());
        } else if self.dim >= 3 && self.p.is_finite() && self.p >= 2.0 / (self.dim as f64 - 2.0) {
            errs.push(format!(
                "p: must be subcritical, p < 2/(N-2) = {} for N = {}",
                2.0 / (self.dim as f64 - 2.0),
                self.dim
            ));
        }
        if self.omega.len() != self.m {
            errs.push(format!("omega: expected {} entries, got {}", self.m, self.omega.len()));
        }
        for (i, w) in self.omega.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                errs.push(format!("omega[{}]: frequency must be positive, got {}", i + 1, w));
            }
        }
        if self.coupling.len() != self.m {
            errs.push(format!("K: expected {} rows, got {}", self.m, self.coupling.len()));
        }
        let square = self.coupling.iter().all(|row| row.len() == self.coupling.len());
        if !square {
            errs.push("K: matrix is not square".to_string());
        } else {
            for i in 0..self.coupling.len() {
                for j in 0..self.coupling.len() {
                    let v = self.coupling[i][j];
                    if !v.is_finite() {
                        errs.push(format!("K[{}][{}]: entry is not finite", i + 1, j + 1));
                    } else if j > i && v != self.coupling[j][i] {
                        errs.push(format!(
                            "K: not symmetric, K[{}][{}] = {} but K[{}][{}] = {}",
                            i + 1,
                            j + 1,
                            v,
                            j + 1,
                            i + 1,
                            self.coupling[j][i]
                        ));
                    }
                }
            }
        }
        if let Some(pairs) = &self.pairs {
            if pairs.is_empty() {
                errs.push("P: pair set must be nonempty".to_string());
            }
            for &(i, j) in pairs {
                if i >= self.m || j >= self.m {
                    errs.push(format!("P: pair [{}, {}] out of range", i + 1, j + 1));
                } else if !pairs.contains(&(j, i)) {
                    errs.push(format!("P: pair set not symmetric, missing [{}, {}]", j + 1, i + 1));
                }
            }
        }
        if let Some(b) = self.beta {
            if !b.is_finite() {
                errs.push("beta: must be finite".to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Structural(errs))
        }
    }

    pub fn in_pairs(&self, i: usize, j: usize) -> bool {
        self.pairs.as_ref().is_some_and(|p| p.contains(&(i, j)))
    }

    pub fn beta_value(&self) -> f64 {
        self.beta.unwrap_or(1.0)
    }

    /// Coupling actually entering the equations: `beta * k_ij` on `P`, `k_ij` elsewhere.
    pub fn effective(&self, i: usize, j: usize) -> f64 {
        if self.in_pairs(i, j) {
            self.beta_value() * self.coupling[i][j]
        } else {
            self.coupling[i][j]
        }
    }

    /// Row-major `M x M` effective coupling matrix.
    pub fn effective_matrix(&self) -> Vec<f64> {
        let m = self.m;
        let mut k = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                k[i * m + j] = self.effective(i, j);
            }
        }
        k
    }

    /// Base couplings split into the `P` part and the complement, both row-major.
    pub fn split_matrices(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        let mut kp = vec![0.0; m * m];
        let mut knp = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                if self.in_pairs(i, j) {
                    kp[i * m + j] = self.coupling[i][j];
                } else {
                    knp[i * m + j] = self.coupling[i][j];
                }
            }
        }
        (kp, knp)
    }

    pub fn has_equal_omega(&self) -> bool {
        let w0 = self.omega[0];
        self.omega.iter().all(|w| (w - w0).abs() <= 1e-12 * w0.abs().max(1.0))
    }

    pub fn min_omega(&self) -> f64 {
        self.omega.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Exponent of the frequency scaling law `I(ω) = ω^s I(1)`.
    pub fn scaling_exponent(&self) -> f64 {
        scaling_exponent(self.p, self.dim)
    }

    /// The system restricted to the components in `support`, with effective
    /// couplings baked in when the split would otherwise be lost.
    pub fn restricted(&self, support: Support) -> ProblemSpec {
        let idx = support.indices();
        let idx: Vec<usize> = idx.into_iter().filter(|&i| i < self.m).collect();
        let pos = |g: usize| idx.iter().position(|&x| x == g);
        let coupling = idx.iter().map(|&i| idx.iter().map(|&j| self.coupling[i][j]).collect()).collect();
        let omega = idx.iter().map(|&i| self.omega[i]).collect();
        let pairs = self.pairs.as_ref().and_then(|pairs| {
            let local: Vec<(usize, usize)> = pairs.iter().filter_map(|&(i, j)| Some((pos(i)?, pos(j)?))).collect();
            if local.is_empty() {
                None
            } else {
                Some(local)
            }
        });
        let beta = pairs.as_ref().map(|_| self.beta_value());
        ProblemSpec { m: idx.len(), p: self.p, dim: self.dim, omega, coupling, pairs, beta }
    }

    /// Relabels components: component `i` of the result is component `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> ProblemSpec {
        let coupling = perm.iter().map(|&i| perm.iter().map(|&j| self.coupling[i][j]).collect()).collect();
        let omega = perm.iter().map(|&i| self.omega[i]).collect();
        let inv = |g: usize| perm.iter().position(|&x| x == g).unwrap();
        let pairs = self.pairs.as_ref().map(|p| p.iter().map(|&(i, j)| (inv(i), inv(j))).collect());
        ProblemSpec { m: self.m, p: self.p, dim: self.dim, omega, coupling, pairs, beta: self.beta }
    }
}

pub fn scaling_exponent(p: f64, dim: usize) -> f64 {
    (2.0 - p * (dim as f64 - 2.0)) / (2.0 * p)
}

/// A point of the nonnegative orthant of `R^M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeVector {
    x: Vec<f64>,
}

impl AmplitudeVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("amplitude entry {} is {}, must be >= 0", i + 1, v)));
        }
        Ok(AmplitudeVector { x })
    }

    pub fn uniform_on(m: usize, support: Support) -> Self {
        let n = support.len().max(1) as f64;
        let x = (0..m).map(|i| if support.contains(i) { 1.0 / n.sqrt() } else { 0.0 }).collect();
        AmplitudeVector { x }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn support(&self) -> Support {
        Support::of_vector(&self.x, SUPPORT_TOL)
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| AmplitudeVector { x: self.x.iter().map(|v| v / n).collect() })
    }
}

/// Uniform grid on `[left, right]` with `nodes` points including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub left: f64,
    pub right: f64,
    pub nodes: usize,
}

impl Grid {
    pub fn new(left: f64, right: f64, nodes: usize) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && left < right) {
            return Err(Error::InvalidArgument(format!(
                "grid endpoints must satisfy left < right, got [{left}, {right}]"
            )));
        }
        if nodes < 2 {
            return Err(Error::InvalidArgument("grid needs at least two nodes".into()));
        }
        Ok(Grid { left, right, nodes })
    }

    /// Symmetric interval `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, nodes: usize) -> Result<Self> {
        Self::new(-half_width, half_width, nodes)
    }

    pub fn spacing(&self) -> f64 {
        (self.right - self.left) / (self.nodes - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        self.left + k as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nodes).map(|k| self.x(k)).collect()
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.nodes];
        w[0] = 0.5 * h;
        w[self.nodes - 1] = 0.5 * h;
        w
    }
}

/// `M` real components sampled on a grid with homogeneous Dirichlet boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    grid: Grid,
    values: Vec<Vec<f64>>,
}

impl DiscreteField {
    pub fn new(grid: Grid, values: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in values.iter().enumerate() {
            if row.len() != grid.nodes {
                return Err(Error::DimensionMismatch { expected: grid.nodes, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("component {} has non-finite values", i + 1)));
            }
            if row[0] != 0.0 || row[grid.nodes - 1] != 0.0 {
                return Err(Error::InvalidArgument(format!("component {} violates the Dirichlet condition", i + 1)));
            }
        }
        Ok(DiscreteField { grid, values })
    }

    pub fn zeros(grid: Grid, m: usize) -> Self {
        DiscreteField { grid, values: vec![vec![0.0; grid.nodes]; m] }
    }

    /// Samples `f(component, x)` at the nodes and zeroes the boundary nodes.
    pub fn from_fn(grid: Grid, m: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut values = vec![vec![0.0; grid.nodes]; m];
        for (i, row) in values.iter_mut().enumerate() {
            for k in 1..grid.nodes - 1 {
                row[k] = f(i, grid.x(k));
            }
        }
        DiscreteField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        DiscreteField {
            grid: self.grid,
            values: self.values.iter().map(|r| r.iter().map(|v| c * v).collect()).collect(),
        }
    }

    /// Applies `f` to every interior value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.values {
            let n = row.len();
            for v in &mut row[1..n - 1] {
                *v = f(*v);
            }
        }
        out
    }
}

/// Quadratic part, coupling part and action `S = I/2 − J/(2p+2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionTriple {
    pub i: f64,
    pub j: f64,
    pub s: f64,
}

impl ActionTriple {
    pub fn new(i: f64, j: f64, p: f64) -> Self {
        ActionTriple { i, j, s: 0.5 * i - j / (2.0 * p + 2.0) }
    }

    /// `|I − J| <= tol * max(1, |I|)`: the identity satisfied by every bound-state.
    pub fn is_bound_state_consistent(&self, tol: f64) -> bool {
        (self.i - self.j).abs() <= tol * self.i.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Non-fatal observations, e.g. nonpositive couplings on the split set.
    pub warnings: Vec<String>,
    pub f_max: f64,
    /// Hypothesis (P1) at the reduced level: some amplitude vector has `f > 0`.
    pub p1_holds: bool,
}

/// Checks structural invariants (returned as an error) and evaluates (P1)
/// through the sphere maximum of the reduced coupling form.
pub fn validate_spec(spec: &ProblemSpec) -> Result<ValidationReport> {
    spec.check()?;
    let mut warnings = Vec::new();
    if let Some(pairs) = &spec.pairs {
        for &(i, j) in pairs {
            if i <= j && spec.coupling[i][j] <= 0.0 {
                warnings.push(format!("P: coupling K[{}][{}] = {} is not positive", i + 1, j + 1, spec.coupling[i][j]));
            }
        }
    }
    let set = crate::reduction::maximize_f(spec, &crate::reduction::MultistartOptions::default())?;
    Ok(ValidationReport { warnings, f_max: set.f_max, p1_holds: set.f_max > crate::reduction::POSITIVITY_TOL })
}

fn check_field(spec: &ProblemSpec, u: &DiscreteField) -> Result<()> {
    spec.check()?;
    if u.components() != spec.m {
        return Err(Error::DimensionMismatch { expected: spec.m, got: u.components() });
    }
    if u.grid.nodes < 3 {
        return Err(Error::InvalidArgument("functionals need a grid with at least 3 nodes".into()));
    }
    Ok(())
}

/// Centered first derivative: fourth order in the interior, second order next
/// to and one-sided at the boundary.
pub fn centered_derivative(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    for k in 1..n - 1 {
        d[k] = if k >= 2 && k + 2 < n {
            (u[k - 2] - 8.0 * u[k - 1] + 8.0 * u[k + 1] - u[k + 2]) / (12.0 * h)
        } else {
            (u[k + 1] - u[k - 1]) / (2.0 * h)
        };
    }
    d
}

/// `I(U) = Σ_i ∫ |u_i'|² + ω_i u_i²` by the trapezoid rule.
pub fn evaluate_i(spec: &ProblemSpec, u: &DiscreteField) -> Result<f64> {
    check_field(spec, u)?;
    let h = u.grid.spacing();
    let w = u.grid.trapezoid_weights();
    let mut total = 0.0;
    for (i, row) in u.values.iter().enumerate() {
        let d = centered_derivative(row, h);
        total += row.iter().zip(&d).zip(&w).map(|((v, dv), wk)| wk * (dv * dv + spec.omega[i] * v * v)).sum::<f64>();
    }
    Ok(total)
}

/// `J(U) = Σ_{i,j} k_ij ∫ |u_i|^{p+1} |u_j|^{p+1}` with effective (β-weighted) couplings.
pub fn evaluate_j(spec: &ProblemSpec, u: &DiscreteField) -> Result<f64> {
    check_field(spec, u)?;
    let k = spec.effective_matrix();
    Ok(coupling_integral(spec.m, spec.p, &k, u))
}

/// `(J_P, J_NP)` with base couplings, so that `J = beta * J_P + J_NP`.
pub fn evaluate_j_split(spec: &ProblemSpec, u: &DiscreteField) -> Result<(f64, f64)> {
    check_field(spec, u)?;
    let (kp, knp) = spec.split_matrices();
    Ok((coupling_integral(spec.m, spec.p, &kp, u), coupling_integral(spec.m, spec.p, &knp, u)))
}

pub fn action_triple(spec: &ProblemSpec, u: &DiscreteField) -> Result<ActionTriple> {
    Ok(ActionTriple::new(evaluate_i(spec, u)?, evaluate_j(spec, u)?, spec.p))
}

fn coupling_integral(m: usize, p: f64, k: &[f64], u: &DiscreteField) -> f64 {
    let w = u.grid.trapezoid_weights();
    let mut powered = vec![0.0; m];
    let mut total = 0.0;
    for (node, wk) in w.iter().enumerate() {
        for (i, slot) in powered.iter_mut().enumerate() {
            *slot = crate::numeric::pow(u.values[i][node].abs(), p + 1.0);
        }
        let mut s = 0.0;
        for i in 0..m {
            if powered[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                s += k[i * m + j] * powered[i] * powered[j];
            }
        }
        total += wk * s;
    }
    total
}

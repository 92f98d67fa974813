//! Certified bounds on maximal entanglement.
//!
//! Every explicit decomposition `ρ = Σ p_i τ_i` gives the upper bound
//! `max_i μ(τ_i)` on `μ_ent(ρ)`. On two qubits, Bell fidelity gives a lower
//! bound that survives any decomposition, and the `U ⊗ U*` twirl reduces
//! everything to the isotropic line.
//!
//! [`decomposition_search`] walks over decompositions through POVMs on the
//! support of the target: with `ρ = S S†` and a POVM `{E_i}` on that support,
//! `p_i τ_i = S E_i S†` reconstructs `ρ` exactly. Every iterate is feasible,
//! so the bound it reports is certified no matter how poorly it optimizes.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{
    hermitian_eig, hermitian_eigenvalues, kron, partial_transpose, psd_sqrt, ComplexMatrix, LinalgError,
    Side, C64, RANK_TOL,
};
use crate::maxcorr::{mu, MaxCorrError};
use crate::states::{
    apply_local, bell_vector, ginibre, isotropic_unchecked, state_distance, tensor_bipartite, BipartiteState,
    LocalChannel, RngSeed, StateError,
};

/// Maximum entrywise reconstruction error of a decomposition.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Partial-transpose eigenvalues above `-PPT_TOL` count as nonnegative.
pub const PPT_TOL: f64 = 1e-10;

/// Entrywise distance from the twirled state below which a state is isotropic.
pub const ISOTROPIC_TOL: f64 = 1e-9;

/// Components lighter than this are dropped from search results.
pub const MIN_WEIGHT: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaxEntError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    State(#[from] StateError),

    #[error(transparent)]
    MaxCorr(#[from] MaxCorrError),

    #[error("decomposition does not reconstruct its target (residual {residual:e})")]
    InvalidDecomposition { residual: f64 },

    #[error("expected a {expected:?} system, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{name} = {value} outside [{lo}, {hi}]")]
    Range { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, MaxEntError>;

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(MaxEntError::Range { name, value, lo, hi })
    }
}

fn require_two_qubits(state: &BipartiteState) -> Result<()> {
    if state.dims() == (2, 2) {
        Ok(())
    } else {
        Err(MaxEntError::DimensionMismatch {
            expected: (2, 2),
            found: state.dims(),
        })
    }
}

/// Convex decomposition `Σ p_i τ_i` of a target state.
#[derive(Clone, Debug)]
pub struct Decomposition {
    target: BipartiteState,
    weights: Vec<f64>,
    components: Vec<BipartiteState>,
}

impl Decomposition {
    /// Checks weights, dimensions and reconstruction to [`RECONSTRUCTION_TOL`].
    pub fn new(target: BipartiteState, weights: Vec<f64>, components: Vec<BipartiteState>) -> Result<Self> {
        if weights.len() != components.len() {
            return Err(MaxEntError::InvalidInput(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if components.is_empty() {
            return Err(MaxEntError::InvalidInput("decomposition has no components".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(MaxEntError::InvalidInput(format!("weight {w} is not a probability")));
        }
        if let Some(c) = components.iter().find(|c| c.dims() != target.dims()) {
            return Err(MaxEntError::DimensionMismatch {
                expected: target.dims(),
                found: c.dims(),
            });
        }
        let d = Self {
            target,
            weights,
            components,
        };
        let residual = d.residual();
        if residual > RECONSTRUCTION_TOL {
            return Err(MaxEntError::InvalidDecomposition { residual });
        }
        Ok(d)
    }

    /// `{target}` with weight one.
    pub fn trivial(target: BipartiteState) -> Self {
        Self {
            components: vec![target.clone()],
            target,
            weights: vec![1.0],
        }
    }

    pub fn target(&self) -> &BipartiteState {
        &self.target
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[BipartiteState] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `max |Σ p_i τ_i - target|` entrywise.
    pub fn residual(&self) -> f64 {
        let n = self.target.rho().rows();
        let sum = self
            .weights
            .iter()
            .zip(&self.components)
            .fold(ComplexMatrix::zeros(n, n), |acc, (&p, c)| &acc + &c.rho().scale(p));
        sum.max_abs_diff(self.target.rho())
    }

    /// `μ(τ_i)` for every component, in order.
    pub fn component_mus(&self) -> Result<Vec<f64>> {
        self.components.iter().map(|c| Ok(mu(c)?)).collect()
    }

    /// Pushes the target and every component through a local channel.
    pub fn map_local(&self, ch: &LocalChannel) -> Result<Self> {
        let target = apply_local(&self.target, ch)?;
        let components = self
            .components
            .iter()
            .map(|c| apply_local(c, ch))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(target, self.weights.clone(), components)
    }

    /// Product decomposition of `target ⊗ other.target` (regrouped as `(AA')(BB')`).
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut weights = Vec::with_capacity(self.len() * other.len());
        let mut components = Vec::with_capacity(self.len() * other.len());
        for (&p, r) in self.weights.iter().zip(&self.components) {
            for (&q, s) in other.weights.iter().zip(&other.components) {
                weights.push(p * q);
                components.push(tensor_bipartite(r, s));
            }
        }
        Self::new(tensor_bipartite(&self.target, &other.target), weights, components)
    }

    /// Union of decompositions of `ρ_j`, reweighted into a decomposition of `Σ λ_j ρ_j`.
    pub fn mixture(parts: &[(f64, &Decomposition)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| MaxEntError::InvalidInput("empty mixture".into()))?;
        let dims = first.1.target.dims();
        let n = first.1.target.rho().rows();
        let mut target = ComplexMatrix::zeros(n, n);
        let mut weights = Vec::new();
        let mut components = Vec::new();
        for &(lambda, d) in parts {
            if d.target.dims() != dims {
                return Err(MaxEntError::DimensionMismatch {
                    expected: dims,
                    found: d.target.dims(),
                });
            }
            target = &target + &d.target.rho().scale(lambda);
            weights.extend(d.weights.iter().map(|p| lambda * p));
            components.extend(d.components.iter().cloned());
        }
        let target = BipartiteState::from_matrix(dims.0, dims.1, target)?;
        Self::new(target, weights, components)
    }

    /// Merges components within `tol` of each other and drops zero weights.
    pub fn merge_duplicates(&self, tol: f64) -> Self {
        let mut weights: Vec<f64> = Vec::new();
        let mut components: Vec<BipartiteState> = Vec::new();
        for (&p, c) in self.weights.iter().zip(&self.components) {
            if p == 0.0 {
                continue;
            }
            match components.iter().position(|k| state_distance(k, c) <= tol) {
                Some(i) => weights[i] += p,
                None => {
                    weights.push(p);
                    components.push(c.clone());
                }
            }
        }
        if components.is_empty() {
            return Self::trivial(self.target.clone());
        }
        Self {
            target: self.target.clone(),
            weights,
            components,
        }
    }
}

/// `max_i μ(τ_i)` over components with positive weight.
pub fn mu_ent_upper(d: &Decomposition) -> Result<f64> {
    let residual = d.residual();
    if residual > RECONSTRUCTION_TOL {
        return Err(MaxEntError::InvalidDecomposition { residual });
    }
    let mut best = 0.0f64;
    for (&p, c) in d.weights.iter().zip(&d.components) {
        if p > 0.0 {
            best = best.max(mu(c)?);
        }
    }
    Ok(best)
}

/// `⟨ψ|ρ|ψ⟩` with `ψ = (|00⟩ + |11⟩)/√2`.
pub fn bell_fidelity(state: &BipartiteState) -> Result<f64> {
    require_two_qubits(state)?;
    let r = state.rho();
    Ok(0.5 * (r[(0, 0)] + r[(0, 3)] + r[(3, 0)] + r[(3, 3)]).re)
}

/// `max(0, 2F - 1)`, a lower bound on `μ` of any two-qubit state with Bell fidelity `F`.
pub fn fidelity_mu_lower_bound(state: &BipartiteState) -> Result<f64> {
    Ok((2.0 * bell_fidelity(state)? - 1.0).max(0.0))
}

/// Noise parameter `δ = 4(1 - F)/3` of the isotropic state with the same Bell fidelity.
pub fn twirl_parameter(state: &BipartiteState) -> Result<f64> {
    Ok(4.0 * (1.0 - bell_fidelity(state)?) / 3.0)
}

/// Haar average of `(U ⊗ U*) ρ (U ⊗ U*)†`, in closed form.
pub fn twirl_exact(state: &BipartiteState) -> Result<BipartiteState> {
    Ok(isotropic_unchecked(twirl_parameter(state)?.clamp(0.0, 4.0 / 3.0)))
}

fn strip_phase(u: &ComplexMatrix) -> ComplexMatrix {
    let lead = u
        .to_row_major()
        .into_iter()
        .find(|z| z.norm() > 1e-6)
        .unwrap_or(C64::new(1.0, 0.0));
    u.scale_complex(lead.conj() / lead.norm())
}

/// The 24 single-qubit Clifford unitaries modulo global phase, generated by `H` and `S`.
pub fn single_qubit_cliffords() -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).expect("2x2");
    let mut p = ComplexMatrix::identity(2);
    p[(1, 1)] = C64::new(0.0, 1.0);
    let mut group = vec![ComplexMatrix::identity(2)];
    let mut next = 0;
    while next < group.len() {
        let g = group[next].clone();
        next += 1;
        for gen in [&h, &p] {
            let c = strip_phase(&(gen * &g));
            if !group.iter().any(|u| u.max_abs_diff(&c) < 1e-9) {
                group.push(c);
            }
        }
    }
    group
}

fn clifford_images(state: &BipartiteState) -> Vec<BipartiteState> {
    single_qubit_cliffords()
        .iter()
        .map(|c| {
            let u = kron(c, &c.conj());
            let m = &(&u * state.rho()) * &u.adjoint();
            BipartiteState::from_matrix_trusted(2, 2, m)
        })
        .collect()
}

/// Uniform average over the 24 Clifford conjugations `(C ⊗ C*) ρ (C ⊗ C*)†`.
pub fn twirl_clifford(state: &BipartiteState) -> Result<BipartiteState> {
    require_two_qubits(state)?;
    let images = clifford_images(state);
    let w = 1.0 / images.len() as f64;
    let m = images
        .iter()
        .fold(ComplexMatrix::zeros(4, 4), |acc, s| &acc + &s.rho().scale(w));
    Ok(BipartiteState::from_matrix(2, 2, m)?)
}

/// The Clifford orbit of `σ` as a decomposition of its twirl, duplicates merged.
pub fn clifford_orbit_decomposition(sigma: &BipartiteState) -> Result<Decomposition> {
    let target = twirl_clifford(sigma)?;
    let images = clifford_images(sigma);
    let w = vec![1.0 / images.len() as f64; images.len()];
    Ok(Decomposition::new(target, w, images)?.merge_duplicates(1e-12))
}

fn basis_product(a: usize, b: usize) -> BipartiteState {
    let mut v = vec![C64::new(0.0, 0.0); 4];
    v[2 * a + b] = C64::new(1.0, 0.0);
    BipartiteState::pure(2, 2, &v).expect("basis vector")
}

/// Product-state decomposition of `isotropic(ε)` for `ε ≥ 2/3`.
///
/// Weight `α = 3(1-ε)` goes to the 24 Clifford images of `|00⟩⟨00|` (which
/// average to `isotropic(2/3)`), the rest to the computational basis (which
/// averages to `I/4`). Zero-weight parts are omitted, so `ε = 2/3` gives 24
/// components and `ε = 1` gives 4.
pub fn separable_iso_decomposition(epsilon: f64) -> Result<Decomposition> {
    check_range("epsilon", epsilon, 2.0 / 3.0, 1.0)?;
    let alpha = (3.0 * (1.0 - epsilon)).clamp(0.0, 1.0);
    let mut weights = Vec::new();
    let mut components = Vec::new();
    if alpha > 0.0 {
        for img in clifford_images(&basis_product(0, 0)) {
            weights.push(alpha / 24.0);
            components.push(BipartiteState::from_matrix(2, 2, img.into_matrix())?);
        }
    }
    if alpha < 1.0 {
        for k in 0..4 {
            weights.push((1.0 - alpha) / 4.0);
            components.push(basis_product(k / 2, k % 2));
        }
    }
    Decomposition::new(isotropic_unchecked(epsilon), weights, components)
}

/// Interval known to contain `μ_ent(isotropic(ε))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsotropicBounds {
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    pub separable: bool,
}

pub fn lambda_bounds(epsilon: f64) -> Result<IsotropicBounds> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    Ok(if epsilon >= 2.0 / 3.0 {
        IsotropicBounds {
            epsilon,
            lower: 0.0,
            upper: 0.0,
            separable: true,
        }
    } else {
        IsotropicBounds {
            epsilon,
            lower: (1.0 - 1.5 * epsilon).max(0.0),
            upper: 1.0 - epsilon,
            separable: false,
        }
    })
}

/// Partial-transpose test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PptReport {
    pub min_eigenvalue: f64,
    pub is_ppt: bool,
    /// PPT decides separability (2x2 and 2x3 systems); otherwise only NPT is conclusive.
    pub conclusive: bool,
}

impl PptReport {
    pub fn entangled(&self) -> bool {
        !self.is_ppt
    }
}

pub fn ppt_check(state: &BipartiteState) -> Result<PptReport> {
    let (da, db) = state.dims();
    let pt = partial_transpose(state.rho(), da, db, Side::B)?;
    let min_eigenvalue = hermitian_eigenvalues(&pt)?.last().copied().unwrap_or(0.0);
    let is_ppt = min_eigenvalue >= -PPT_TOL;
    let small = matches!((da.min(db), da.max(db)), (1, _) | (2, 2) | (2, 3));
    Ok(PptReport {
        min_eigenvalue,
        is_ppt,
        conclusive: !is_ppt || small,
    })
}

/// `(σ_y ⊗ σ_y)`, the spin flip used by the concurrence.
fn spin_flip() -> ComplexMatrix {
    let mut y = ComplexMatrix::zeros(2, 2);
    y[(0, 1)] = C64::new(0.0, -1.0);
    y[(1, 0)] = C64::new(0.0, 1.0);
    kron(&y, &y)
}

/// Takagi factorization of a complex symmetric `a = Q diag(σ) Qᵀ`, `σ` descending.
fn takagi(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let r = a.rows();
    // real form [[X, -Y], [-Y, -X]] has eigenpairs (σ, [u; v]) with q = u - i v
    let m = ComplexMatrix::from_fn(2 * r, 2 * r, |i, j| {
        let z = a[(i % r, j % r)];
        let v = match (i < r, j < r) {
            (true, true) => z.re,
            (false, false) => -z.re,
            _ => -z.im,
        };
        C64::new(v, 0.0)
    });
    let eig = hermitian_eig(&m)?;
    let sv = crate::linalg::svd(a);
    let top = sv.sigma.first().copied().unwrap_or(0.0);
    let positive = sv.sigma.iter().filter(|&&x| x > 1e-12 * top.max(1e-300)).count();
    let mut q = ComplexMatrix::zeros(r, r);
    let mut sigma = vec![0.0; r];
    for k in 0..positive {
        sigma[k] = eig.values[k].max(0.0);
        for i in 0..r {
            q[(i, k)] = C64::new(eig.vectors[(i, k)].re, -eig.vectors[(i + r, k)].re);
        }
        let norm = q.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..r {
            q[(i, k)] /= norm;
        }
    }
    // the rest spans conj(ker a)
    for k in positive..r {
        for i in 0..r {
            q[(i, k)] = sv.v[(i, k)].conj();
        }
    }
    Ok((sigma, q))
}

/// Concurrence `max(0, λ₁ - λ₂ - λ₃ - λ₄)` with `λ` the singular values of
/// `⟨x_i| σ_y⊗σ_y |x_j*⟩` over the subnormalized eigenvectors `x_i` of `ρ`.
pub fn concurrence(state: &BipartiteState) -> Result<f64> {
    require_two_qubits(state)?;
    let l = wootters_spectrum(state)?.0;
    Ok((l[0] - l[1..].iter().sum::<f64>()).max(0.0))
}

/// Takagi values and the rotated vectors `y_k` with `⟨y_i|ỹ_j⟩ = λ_i δ_ij`, padded to four.
fn wootters_spectrum(state: &BipartiteState) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let eig = hermitian_eig(state.rho())?;
    let cutoff = RANK_TOL * eig.values[0];
    let r = eig.values.iter().filter(|&&x| x > cutoff).count().max(1);
    let x = ComplexMatrix::from_fn(4, r, |i, j| eig.vectors[(i, j)] * eig.values[j].max(0.0).sqrt());
    let tau = &(&x.adjoint() * &spin_flip()) * &x.conj();
    let tau = (&tau + &tau.transpose()).scale(0.5);
    let (sigma, q) = takagi(&tau)?;
    let y = &x * &q;
    let mut values = sigma;
    let mut vectors: Vec<Vec<C64>> = (0..r).map(|k| y.column(k)).collect();
    values.resize(4, 0.0);
    vectors.resize(4, vec![C64::new(0.0, 0.0); 4]);
    Ok((values, vectors))
}

/// Decomposition of a separable two-qubit state into at most four pure
/// product states, following Wootters' construction. `None` when the
/// concurrence is positive.
pub fn wootters_decomposition(state: &BipartiteState) -> Result<Option<Decomposition>> {
    require_two_qubits(state)?;
    let (l, y) = wootters_spectrum(state)?;
    let (a, b, c) = (l[0], l[1], l[2] + l[3]);
    if a > b + c + 1e-12 * a.max(1e-300) {
        return Ok(None);
    }
    // close the triangle a + b e^{iφ} + c e^{iψ} = 0
    let phi = if a * b > 0.0 {
        ((c * c - a * a - b * b) / (2.0 * a * b)).clamp(-1.0, 1.0).acos()
    } else {
        std::f64::consts::PI
    };
    let rest = -(C64::new(a, 0.0) + C64::from_polar(b, phi));
    let psi = if rest.norm() > 0.0 { rest.arg() } else { 0.0 };
    let phases = [
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, phi / 2.0),
        C64::from_polar(1.0, psi / 2.0),
        C64::from_polar(1.0, psi / 2.0),
    ];
    let signs = [[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, -1.0, -1.0], [1.0, -1.0, 1.0, -1.0], [1.0, -1.0, -1.0, 1.0]];
    let mut weights = Vec::new();
    let mut components = Vec::new();
    for row in signs {
        let z: Vec<C64> = (0..4)
            .map(|i| (0..4).map(|j| y[j][i] * phases[j] * row[j] * 0.5).sum())
            .collect();
        let p: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        if p >= MIN_WEIGHT {
            weights.push(p);
            components.push(BipartiteState::pure(2, 2, &z)?);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Decomposition::new(state.clone(), weights, components).ok())
}

/// `Some(δ)` when the state equals `isotropic(δ)` to [`ISOTROPIC_TOL`].
pub fn detect_isotropic(state: &BipartiteState) -> Option<f64> {
    if state.dims() != (2, 2) {
        return None;
    }
    let delta = twirl_parameter(state).ok()?;
    let twirled = twirl_exact(state).ok()?;
    (state_distance(state, &twirled) < ISOTROPIC_TOL).then_some(delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Number of POVM elements, i.e. the maximal number of components.
    pub k: usize,
    pub restarts: usize,
    pub iters: usize,
    pub seed: RngSeed,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            k: 8,
            restarts: 8,
            iters: 400,
            seed: RngSeed(0),
        }
    }
}

/// How a restart was initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    Trivial,
    /// Pure product decomposition of a separable two-qubit target.
    Wootters,
    /// Product decomposition of a separable isotropic target.
    Clifford,
    /// Clifford orbit of a fidelity-matched state twirling to the target.
    TwirlOrbit,
    Random,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub decomposition: Decomposition,
    /// `mu_ent_upper` of `decomposition`.
    pub upper_bound: f64,
    pub best_restart: usize,
    pub best_start: StartKind,
    /// Best bound reached by each restart.
    pub restart_bounds: Vec<f64>,
}

/// `ρ = S S†` restricted to the support.
struct SupportFrame {
    d_a: usize,
    d_b: usize,
    s: ComplexMatrix,
    s_pinv: ComplexMatrix,
}

impl SupportFrame {
    fn new(target: &BipartiteState) -> Result<Self> {
        let eig = hermitian_eig(target.rho())?;
        let cutoff = RANK_TOL * eig.values[0];
        let r = eig.values.iter().filter(|&&x| x > cutoff).count().max(1);
        let n = eig.values.len();
        let v = &eig.vectors;
        let s = ComplexMatrix::from_fn(n, r, |i, j| v[(i, j)] * eig.values[j].max(0.0).sqrt());
        let s_pinv = ComplexMatrix::from_fn(r, n, |i, j| v[(j, i)].conj() / eig.values[i].sqrt());
        let (d_a, d_b) = target.dims();
        Ok(Self { d_a, d_b, s, s_pinv })
    }

    fn rank(&self) -> usize {
        self.s.cols()
    }

    /// Unnormalized components `S A^{-1/2} B_i† B_i A^{-1/2} S†`; `None` if `Σ B_i† B_i` is singular.
    fn components(&self, b: &[ComplexMatrix]) -> Option<Vec<ComplexMatrix>> {
        let r = self.rank();
        let a = b
            .iter()
            .fold(ComplexMatrix::zeros(r, r), |acc, bi| &acc + &(&bi.adjoint() * bi));
        let eig = hermitian_eig(&a).ok()?;
        let top = eig.values[0];
        if !(top > 0.0) || eig.values[r - 1] <= 1e-12 * top {
            return None;
        }
        let a_isqrt = eig.map(|x| x.powf(-0.5));
        let sa = &self.s * &a_isqrt;
        Some(
            b.iter()
                .map(|bi| {
                    let g = &sa * &bi.adjoint();
                    (&g * &g.adjoint()).hermitian_part()
                })
                .collect(),
        )
    }

    /// Weights and normalized components with weight at least [`MIN_WEIGHT`].
    fn decompose(&self, b: &[ComplexMatrix]) -> Option<Vec<(f64, BipartiteState)>> {
        let parts = self.components(b)?;
        Some(
            parts
                .into_iter()
                .filter_map(|k| {
                    let p = k.trace().re;
                    (p >= MIN_WEIGHT).then(|| (p, BipartiteState::from_matrix_trusted(self.d_a, self.d_b, k.scale(1.0 / p))))
                })
                .collect(),
        )
    }

    /// `μ` of each kept component; `None` for infeasible parameters.
    fn evaluate(&self, b: &[ComplexMatrix]) -> Option<Vec<f64>> {
        let parts = self.decompose(b)?;
        parts.iter().map(|(_, c)| mu(c).ok()).collect()
    }

    /// POVM square roots `B_i = E_i^{1/2}` reproducing a known decomposition of the target.
    fn encode(&self, d: &Decomposition) -> Option<Vec<ComplexMatrix>> {
        d.weights
            .iter()
            .zip(&d.components)
            .filter(|(p, _)| **p > 0.0)
            .map(|(&p, c)| {
                let e = (&(&self.s_pinv * c.rho()) * &self.s_pinv.adjoint()).scale(p);
                psd_sqrt(&e.hermitian_part()).ok()
            })
            .collect()
    }
}

fn soft_max(mus: &[f64], temperature: f64) -> f64 {
    let m = mus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mus.is_empty() {
        return f64::INFINITY;
    }
    m + temperature * mus.iter().map(|x| ((x - m) / temperature).exp()).sum::<f64>().ln()
}

fn hard_max(mus: &[f64]) -> f64 {
    mus.iter().copied().fold(0.0, f64::max)
}

/// Pads to exactly `k` elements by halving the heaviest one; `None` if there are too many.
fn fit_to_k(mut b: Vec<ComplexMatrix>, k: usize) -> Option<Vec<ComplexMatrix>> {
    if b.len() > k || b.is_empty() {
        return None;
    }
    while b.len() < k {
        let (i, _) = b
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.frobenius_norm().total_cmp(&y.1.frobenius_norm()))?;
        let half = b[i].scale(std::f64::consts::FRAC_1_SQRT_2);
        b[i] = half.clone();
        b.push(half);
    }
    Some(b)
}

fn structured_starts(target: &BipartiteState, frame: &SupportFrame, k: usize) -> Vec<(StartKind, Vec<ComplexMatrix>)> {
    let r = frame.rank();
    let identity = ComplexMatrix::identity(r).scale(1.0 / (k as f64).sqrt());
    let mut starts = vec![(StartKind::Trivial, vec![identity; k])];
    if target.dims() == (2, 2) {
        if let Some(b) = wootters_decomposition(target)
            .ok()
            .flatten()
            .and_then(|d| frame.encode(&d))
            .and_then(|b| fit_to_k(b, k))
        {
            starts.push((StartKind::Wootters, b));
        }
    }
    starts.extend(isotropic_start(target, frame, k));
    starts
}

fn isotropic_start(target: &BipartiteState, frame: &SupportFrame, k: usize) -> Option<(StartKind, Vec<ComplexMatrix>)> {

    let delta = detect_isotropic(target)?;
    let seed = if (2.0 / 3.0..=1.0).contains(&delta) {
        separable_iso_decomposition(delta)
            .map(|d| (StartKind::Clifford, d.merge_duplicates(1e-12)))
            .ok()
    } else if delta < 2.0 / 3.0 {
        // (1-δ)ψ + δ |0⟩⟨0| ⊗ I/2 has the target's Bell fidelity
        let psi = bell_vector();
        let bell = ComplexMatrix::outer(&psi, &psi);
        let mut local = ComplexMatrix::zeros(4, 4);
        local[(0, 0)] = C64::new(0.5, 0.0);
        local[(1, 1)] = C64::new(0.5, 0.0);
        let sigma = &bell.scale(1.0 - delta) + &local.scale(delta);
        BipartiteState::from_matrix(2, 2, sigma)
            .ok()
            .and_then(|s| clifford_orbit_decomposition(&s).ok())
            .map(|d| (StartKind::TwirlOrbit, d))
    } else {
        None
    };
    let (kind, d) = seed?;
    frame.encode(&d).and_then(|b| fit_to_k(b, k)).map(|b| (kind, b))
}

struct RestartOutcome {
    bound: f64,
    params: Vec<ComplexMatrix>,
}

fn run_restart(
    frame: &SupportFrame,
    start: Vec<ComplexMatrix>,
    iters: usize,
    rng: &mut impl Rng,
) -> Option<RestartOutcome> {
    const T_START: f64 = 0.05;
    const T_END: f64 = 1e-4;

    let r = frame.rank();
    let k = start.len();
    let mut params = start;
    let mut mus = frame.evaluate(&params)?;
    let mut best = RestartOutcome {
        bound: hard_max(&mus),
        params: params.clone(),
    };
    let mut step = 0.3;
    let noise_scale = 1.0 / (r as f64).sqrt();

    for it in 0..iters {
        let frac = it as f64 / iters.max(2).saturating_sub(1) as f64;
        let temperature = T_START * (T_END / T_START).powf(frac);
        let i = if rng.random_bool(0.5) {
            mus.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map_or(0, |(j, _)| j.min(k - 1))
        } else {
            rng.random_range(0..k)
        };
        let mut candidate = params.clone();
        let norm = params.iter().map(|b| b.frobenius_norm().powi(2)).sum::<f64>().sqrt() / (k as f64).sqrt();
        let kick = ginibre(r, r, rng).scale(step * noise_scale * norm.max(1e-12));
        candidate[i] = &candidate[i] + &kick;

        match frame.evaluate(&candidate) {
            Some(cm) if soft_max(&cm, temperature) < soft_max(&mus, temperature) => {
                params = candidate;
                mus = cm;
                step = (step * 1.3).min(1.0);
                let h = hard_max(&mus);
                if h < best.bound {
                    best = RestartOutcome {
                        bound: h,
                        params: params.clone(),
                    };
                }
            }
            _ => step = (step * 0.93).max(1e-6),
        }
    }
    Some(best)
}

/// Heuristic minimization of `max_i μ(τ_i)` over decompositions with at most `k` components.
///
/// Restart 0 starts from the trivial decomposition, the next restarts from
/// structured decompositions (Wootters' product decomposition for separable
/// two-qubit targets, Clifford constructions for isotropic ones), the rest
/// from random POVMs. Restarts run in parallel with independent RNG streams; the
/// lowest bound wins, ties going to the lowest restart index.
pub fn decomposition_search(target: &BipartiteState, config: &SearchConfig) -> Result<SearchResult> {
    if config.k < 1 {
        return Err(MaxEntError::Range {
            name: "k",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    let frame = SupportFrame::new(target)?;
    let k = config.k;
    let r = frame.rank();
    let starts = structured_starts(target, &frame, k);
    let restarts = config.restarts.max(1);

    let outcomes: Vec<(StartKind, Option<RestartOutcome>)> = (0..restarts)
        .into_par_iter()
        .map(|idx| {
            let mut rng = config.seed.stream(idx as u64);
            let (kind, start) = match starts.get(idx) {
                Some((kind, b)) => (*kind, b.clone()),
                None => (StartKind::Random, (0..k).map(|_| ginibre(r, r, &mut rng)).collect()),
            };
            (kind, run_restart(&frame, start, config.iters, &mut rng))
        })
        .collect();

    let restart_bounds: Vec<f64> = outcomes
        .iter()
        .map(|(_, o)| o.as_ref().map_or(f64::INFINITY, |o| o.bound))
        .collect();

    let mut best: Option<(usize, Decomposition, f64)> = None;
    for (idx, (_, outcome)) in outcomes.iter().enumerate() {
        let Some(o) = outcome else { continue };
        if best.as_ref().is_some_and(|b| o.bound >= b.2) {
            continue;
        }
        if let Some(d) = certify(target, &frame, &o.params) {
            let bound = mu_ent_upper(&d)?;
            if best.as_ref().is_none_or(|b| bound < b.2) {
                best = Some((idx, d, bound));
            }
        }
    }

    let trivial = Decomposition::trivial(target.clone());
    let trivial_bound = mu(target)?;
    let (best_restart, decomposition, upper_bound, best_start) = match best {
        Some((idx, d, bound)) if bound < trivial_bound => (idx, d, bound, outcomes[idx].0),
        _ => (0, trivial, trivial_bound, StartKind::Trivial),
    };
    Ok(SearchResult {
        decomposition,
        upper_bound,
        best_restart,
        best_start,
        restart_bounds,
    })
}

/// Rebuilds the decomposition with fully validated components.
fn certify(target: &BipartiteState, frame: &SupportFrame, params: &[ComplexMatrix]) -> Option<Decomposition> {
    let parts = frame.decompose(params)?;
    let total: f64 = parts.iter().map(|(p, _)| p).sum();
    let mut weights = Vec::with_capacity(parts.len());
    let mut components = Vec::with_capacity(parts.len());
    for (p, c) in parts {
        let (da, db) = c.dims();
        weights.push(p / total);
        components.push(BipartiteState::from_matrix(da, db, c.into_matrix()).ok()?);
    }
    Decomposition::new(target.clone(), weights, components)
        .ok()
        .map(|d| d.merge_duplicates(1e-12))
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiConvexityReport {
    /// Search bound for each input state.
    pub individual: Vec<f64>,
    /// Bound of the merged decomposition of the mixture.
    pub merged: f64,
    pub max_individual: f64,
    pub holds: bool,
}

/// Searches each `ρ_j`, merges the decompositions into one of `Σ λ_j ρ_j`
/// and checks the merged bound against `max_j U(ρ_j)`.
pub fn quasi_convexity_check(
    states: &[BipartiteState],
    weights: &[f64],
    config: &SearchConfig,
) -> Result<QuasiConvexityReport> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(MaxEntError::InvalidInput(format!(
            "{} states with {} weights",
            states.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(MaxEntError::InvalidInput("weights must form a distribution".into()));
    }
    if let Some(s) = states.iter().find(|s| s.dims() != states[0].dims()) {
        return Err(MaxEntError::DimensionMismatch {
            expected: states[0].dims(),
            found: s.dims(),
        });
    }
    let results = states
        .iter()
        .map(|s| decomposition_search(s, config))
        .collect::<Result<Vec<_>>>()?;
    let individual: Vec<f64> = results.iter().map(|r| r.upper_bound).collect();
    let parts: Vec<(f64, &Decomposition)> = weights.iter().copied().zip(results.iter().map(|r| &r.decomposition)).collect();
    let merged_decomposition = Decomposition::mixture(&parts)?;
    let merged = merged_decomposition
        .weights()
        .iter()
        .zip(merged_decomposition.components())
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, c)| mu(c))
        .try_fold(0.0f64, |acc, m| m.map(|m| acc.max(m)))?;
    let max_individual = weights
        .iter()
        .zip(&individual)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, u)| *u)
        .fold(0.0, f64::max);
    Ok(QuasiConvexityReport {
        holds: merged <= max_individual + 1e-8,
        individual,
        merged,
        max_individual,
    })
}

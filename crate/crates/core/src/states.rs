//! Bipartite states, classical joints, local channels and their constructors.
//!
//! Every randomized constructor takes an explicit [`RngSeed`]; identical seeds
//! produce bit-identical matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{
    hermitian_eig, kron, orthonormal_columns, partial_trace, ComplexMatrix, LinalgError, Side, C64,
    RANK_TOL,
};

/// Hermiticity, trace and positivity tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// Normalization tolerance for classical joints.
pub const JOINT_TOL: f64 = 1e-12;

/// Trace-preservation tolerance for Kraus families.
pub const CHANNEL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("invalid state: {}", .0.summary())]
    Invalid(Box<Diagnostics>),

    #[error("{name} = {value} outside [{lo}, {hi}]")]
    Range { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error("state vector has zero norm")]
    ZeroVector,

    #[error("Kraus family is not trace preserving (deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, StateError>;

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(StateError::Range { name, value, lo, hi })
    }
}

/// Explicit seed for randomized operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.0)
    }

    /// Independent generator for sub-task `stream` (restart, trial, ...).
    pub fn stream(self, stream: u64) -> ChaCha20Rng {
        let mut rng = self.rng();
        rng.set_stream(stream);
        rng
    }

    /// Derived seed for sub-task `index`, via the SplitMix64 finalizer.
    pub fn derive(self, index: u64) -> RngSeed {
        let mut z = self.0 ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

/// A single structured validation failure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ValidationFailure {
    DimensionMismatch { expected: usize, found: usize },
    NotHermitian { deviation: f64 },
    NormalizationFailure { trace: f64 },
    NotPositive { min_eigenvalue: f64 },
}

/// Result of [`validate_matrix`]; failures are collected, never thrown.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub hermiticity_deviation: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub marginal_ranks: (usize, usize),
    pub failures: Vec<ValidationFailure>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.failures.is_empty() {
            return "ok".into();
        }
        self.failures.iter().map(|f| format!("{f:?}")).collect::<Vec<_>>().join("; ")
    }
}

fn numerical_rank(m: &ComplexMatrix) -> usize {
    match hermitian_eig(&m.hermitian_part()) {
        Ok(e) => {
            let cutoff = RANK_TOL * e.values[0].max(0.0);
            e.values.iter().filter(|&&x| x > cutoff && x > 0.0).count()
        }
        Err(_) => 0,
    }
}

/// Checks that `m` is a density matrix on `C^{d_a} ⊗ C^{d_b}`.
pub fn validate_matrix(d_a: usize, d_b: usize, m: &ComplexMatrix) -> Diagnostics {
    let n = d_a * d_b;
    if m.rows() != n || m.cols() != n {
        return Diagnostics {
            hermiticity_deviation: f64::NAN,
            trace_deviation: f64::NAN,
            min_eigenvalue: f64::NAN,
            marginal_ranks: (0, 0),
            failures: vec![ValidationFailure::DimensionMismatch {
                expected: n,
                found: if m.rows() != n { m.rows() } else { m.cols() },
            }],
        };
    }
    let mut failures = Vec::new();
    let hermiticity_deviation = m.hermiticity_deviation();
    if hermiticity_deviation > STATE_TOL {
        failures.push(ValidationFailure::NotHermitian {
            deviation: hermiticity_deviation,
        });
    }
    let trace = m.trace();
    let trace_deviation = (trace - C64::new(1.0, 0.0)).norm();
    if trace_deviation > STATE_TOL {
        failures.push(ValidationFailure::NormalizationFailure { trace: trace.re });
    }
    let h = m.hermitian_part();
    let min_eigenvalue = hermitian_eig(&h)
        .map(|e| *e.values.last().unwrap())
        .unwrap_or(f64::NAN);
    if !(min_eigenvalue >= -STATE_TOL) {
        failures.push(ValidationFailure::NotPositive { min_eigenvalue });
    }
    let ra = numerical_rank(&partial_trace(&h, d_a, d_b, Side::B).expect("shape checked"));
    let rb = numerical_rank(&partial_trace(&h, d_a, d_b, Side::A).expect("shape checked"));
    Diagnostics {
        hermiticity_deviation,
        trace_deviation,
        min_eigenvalue,
        marginal_ranks: (ra, rb),
        failures,
    }
}

/// Density matrix on `C^{d_a} ⊗ C^{d_b}`, basis `|i⟩|j⟩` at row `i*d_b + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    d_a: usize,
    d_b: usize,
    rho: ComplexMatrix,
}

impl BipartiteState {
    /// Validates and stores the Hermitian part of `m`.
    pub fn from_matrix(d_a: usize, d_b: usize, m: ComplexMatrix) -> Result<Self> {
        let diag = validate_matrix(d_a, d_b, &m);
        if !diag.is_valid() {
            return Err(StateError::Invalid(Box::new(diag)));
        }
        Ok(Self {
            d_a,
            d_b,
            rho: m.hermitian_part(),
        })
    }

    /// Skips validation; `m` must already be a density matrix.
    pub(crate) fn from_matrix_trusted(d_a: usize, d_b: usize, m: ComplexMatrix) -> Self {
        Self {
            d_a,
            d_b,
            rho: m.hermitian_part(),
        }
    }

    /// Projector onto a (normalized on the fly) pure state vector.
    pub fn pure(d_a: usize, d_b: usize, psi: &[C64]) -> Result<Self> {
        if psi.len() != d_a * d_b {
            return Err(StateError::DimensionMismatch {
                expected: d_a * d_b,
                found: psi.len(),
            });
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(StateError::ZeroVector);
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::from_matrix(d_a, d_b, ComplexMatrix::outer(&v, &v))
    }

    /// `ρ_A ⊗ ρ_B` from two single-side density matrices.
    pub fn product(rho_a: &ComplexMatrix, rho_b: &ComplexMatrix) -> Result<Self> {
        Self::from_matrix(rho_a.rows(), rho_b.rows(), kron(rho_a, rho_b))
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.rho
    }

    /// Reduced state on `side` (the other side traced out).
    pub fn marginal(&self, side: Side) -> ComplexMatrix {
        let traced = match side {
            Side::A => Side::B,
            Side::B => Side::A,
        };
        partial_trace(&self.rho, self.d_a, self.d_b, traced).expect("dimensions are an invariant")
    }

    pub fn validate(&self) -> Diagnostics {
        validate(self)
    }
}

pub fn validate(state: &BipartiteState) -> Diagnostics {
    validate_matrix(state.d_a, state.d_b, &state.rho)
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell_vector() -> [C64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    [C64::new(s, 0.0), z, z, C64::new(s, 0.0)]
}

pub fn bell_state() -> BipartiteState {
    BipartiteState::pure(2, 2, &bell_vector()).expect("Bell vector is a valid state")
}

/// `(1-δ)|ψ⟩⟨ψ| + δ I/4` for any `δ ∈ [0, 4/3]` (all such operators are states).
pub(crate) fn isotropic_unchecked(delta: f64) -> BipartiteState {
    let psi = bell_vector();
    let proj = ComplexMatrix::outer(&psi, &psi);
    let m = &proj.scale(1.0 - delta) + &ComplexMatrix::identity(4).scale(delta / 4.0);
    BipartiteState::from_matrix(2, 2, m).expect("isotropic family is valid on [0, 4/3]")
}

/// Bell state mixed with white noise: `(1-ε)|ψ⟩⟨ψ| + ε I/4`.
pub fn isotropic(epsilon: f64) -> Result<BipartiteState> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    Ok(isotropic_unchecked(epsilon))
}

/// Joint distribution `p(a, b)` stored row-major over rows `a` and columns `b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalJoint {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl ClassicalJoint {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(StateError::InvalidJoint(format!(
                "{} entries for a {rows}x{cols} table",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(StateError::InvalidJoint(format!("entry {bad} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > JOINT_TOL {
            return Err(StateError::InvalidJoint(format!("entries sum to {total}")));
        }
        Ok(Self { rows, cols, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(StateError::InvalidJoint("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Normalizes nonnegative weights into a joint.
    pub fn from_weights(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(StateError::InvalidJoint("weights sum to zero".into()));
        }
        Self::new(rows, cols, weights.iter().map(|w| w / total).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.cols + b]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        (0..self.rows).map(|a| (0..self.cols).map(|b| self.get(a, b)).sum()).collect()
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        (0..self.cols).map(|b| (0..self.rows).map(|a| self.get(a, b)).sum()).collect()
    }
}

/// Binary symmetric joint: `(1-ε)/2` on the diagonal, `ε/2` off it.
pub fn classical_bsc(epsilon: f64) -> Result<ClassicalJoint> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    let d = (1.0 - epsilon) / 2.0;
    let o = epsilon / 2.0;
    ClassicalJoint::new(2, 2, vec![d, o, o, d])
}

/// Diagonal state with `⟨ab|ρ|ab⟩ = p(a, b)`.
pub fn embed_classical(p: &ClassicalJoint) -> BipartiteState {
    let diag: Vec<f64> = p.probs.clone();
    BipartiteState::from_matrix(p.rows, p.cols, ComplexMatrix::from_real_diagonal(&diag))
        .expect("a valid joint embeds to a valid state")
}

/// Outcome distribution of measuring both sides in the computational basis.
pub fn measure_computational(state: &BipartiteState) -> ClassicalJoint {
    let n = state.d_a * state.d_b;
    let w: Vec<f64> = (0..n).map(|k| state.rho[(k, k)].re.max(0.0)).collect();
    ClassicalJoint::new(state.d_a, state.d_b, w.clone())
        .or_else(|_| ClassicalJoint::from_weights(state.d_a, state.d_b, w))
        .expect("density matrix has unit trace")
}

/// `r ⊗ s` regrouped from `A B A' B'` to `(AA')(BB')`.
pub fn tensor_bipartite(r: &BipartiteState, s: &BipartiteState) -> BipartiteState {
    let (da, db) = r.dims();
    let (dap, dbp) = s.dims();
    let big = kron(&r.rho, &s.rho);
    // kron index: (a*db + b)*(dap*dbp) + a'*dbp + b'
    // target index: (a*dap + a')*(db*dbp) + b*dbp + b'
    let n = da * db * dap * dbp;
    let mut perm = vec![0usize; n];
    for a in 0..da {
        for b in 0..db {
            for ap in 0..dap {
                for bp in 0..dbp {
                    let target = (a * dap + ap) * (db * dbp) + b * dbp + bp;
                    let source = (a * db + b) * (dap * dbp) + ap * dbp + bp;
                    perm[target] = source;
                }
            }
        }
    }
    let m = ComplexMatrix::from_fn(n, n, |i, j| big[(perm[i], perm[j])]);
    BipartiteState::from_matrix(da * dap, db * dbp, m).expect("tensor of states is a state")
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// `G G† / tr(G G†)` for a `d x rank` Ginibre matrix `G`.
pub(crate) fn ginibre_density(d: usize, rank: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    let g = ginibre(d, rank, rng);
    let w = &g * &g.adjoint();
    let t = w.trace().re;
    w.scale(1.0 / t).hermitian_part()
}

/// Random mixed state from the induced (Ginibre) measure.
pub fn random_density(d_a: usize, d_b: usize, rank: usize, seed: RngSeed) -> Result<BipartiteState> {
    let n = d_a * d_b;
    if rank < 1 || rank > n {
        return Err(StateError::Range {
            name: "rank",
            value: rank as f64,
            lo: 1.0,
            hi: n as f64,
        });
    }
    let mut rng = seed.rng();
    BipartiteState::from_matrix(d_a, d_b, ginibre_density(n, rank, &mut rng))
}

/// Haar-random pure state.
pub fn random_pure(d_a: usize, d_b: usize, seed: RngSeed) -> BipartiteState {
    let mut rng = seed.rng();
    let g = ginibre(d_a * d_b, 1, &mut rng);
    BipartiteState::pure(d_a, d_b, &g.column(0)).expect("Gaussian vector is nonzero")
}

/// `ρ_A ⊗ ρ_B` with independent full-rank Ginibre factors.
pub fn random_product(d_a: usize, d_b: usize, seed: RngSeed) -> BipartiteState {
    let mut rng = seed.rng();
    let a = ginibre_density(d_a, d_a, &mut rng);
    let b = ginibre_density(d_b, d_b, &mut rng);
    BipartiteState::product(&a, &b).expect("product of states is a state")
}

/// CPTP map acting on one side, as a Kraus family `d_in -> d_out`.
#[derive(Clone, Debug)]
pub struct LocalChannel {
    side: Side,
    d_in: usize,
    d_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl LocalChannel {
    pub fn new(side: Side, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or(StateError::NotTracePreserving { deviation: 1.0 })?;
        let (d_out, d_in) = (first.rows(), first.cols());
        let mut sum = ComplexMatrix::zeros(d_in, d_in);
        for k in &kraus {
            if k.rows() != d_out || k.cols() != d_in {
                return Err(StateError::DimensionMismatch {
                    expected: d_out * d_in,
                    found: k.rows() * k.cols(),
                });
            }
            sum = &sum + &(&k.adjoint() * k);
        }
        let deviation = sum.max_abs_diff(&ComplexMatrix::identity(d_in));
        if deviation > CHANNEL_TOL {
            return Err(StateError::NotTracePreserving { deviation });
        }
        Ok(Self {
            side,
            d_in,
            d_out,
            kraus,
        })
    }

    pub fn identity(side: Side, d: usize) -> Self {
        Self::new(side, vec![ComplexMatrix::identity(d)]).expect("identity is CPTP")
    }

    /// Conjugation by a unitary (or isometry) `u`.
    pub fn unitary(side: Side, u: ComplexMatrix) -> Result<Self> {
        Self::new(side, vec![u])
    }

    /// `ρ ↦ tr(ρ) I/d`, Kraus operators `|i⟩⟨j| / √d`.
    pub fn completely_depolarizing(side: Side, d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let kraus = (0..d * d)
            .map(|idx| {
                let (i, j) = (idx / d, idx % d);
                ComplexMatrix::from_fn(d, d, |r, c| {
                    if r == i && c == j {
                        C64::new(s, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        Self::new(side, kraus).expect("depolarizing family is CPTP")
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Applies the map to a single-side operator.
    pub fn apply_single(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out = &out + &(&(k * m) * &k.adjoint());
        }
        out
    }
}

/// Stinespring-style random channel: QR of a `(d_out*kraus_rank) x d_in`
/// Ginibre matrix, sliced into `kraus_rank` blocks.
pub fn random_channel(side: Side, d_in: usize, d_out: usize, kraus_rank: usize, seed: RngSeed) -> Result<LocalChannel> {
    if kraus_rank < 1 || d_out * kraus_rank < d_in {
        return Err(StateError::Range {
            name: "kraus_rank",
            value: kraus_rank as f64,
            lo: (d_in as f64 / d_out as f64).ceil().max(1.0),
            hi: f64::INFINITY,
        });
    }
    let mut rng = seed.rng();
    let g = ginibre(d_out * kraus_rank, d_in, &mut rng);
    let q = orthonormal_columns(&g)?;
    let kraus = (0..kraus_rank)
        .map(|k| ComplexMatrix::from_fn(d_out, d_in, |i, j| q[(k * d_out + i, j)]))
        .collect();
    LocalChannel::new(side, kraus)
}

/// `Σ_k (K_k ⊗ I) ρ (K_k ⊗ I)†` on side A, `(I ⊗ K_k)` on side B.
pub fn apply_local(state: &BipartiteState, ch: &LocalChannel) -> Result<BipartiteState> {
    let (da, db) = state.dims();
    let (d_side, new_dims) = match ch.side {
        Side::A => (da, (ch.d_out, db)),
        Side::B => (db, (da, ch.d_out)),
    };
    if d_side != ch.d_in {
        return Err(StateError::DimensionMismatch {
            expected: d_side,
            found: ch.d_in,
        });
    }
    let n_out = new_dims.0 * new_dims.1;
    let mut out = ComplexMatrix::zeros(n_out, n_out);
    for k in &ch.kraus {
        let big = match ch.side {
            Side::A => kron(k, &ComplexMatrix::identity(db)),
            Side::B => kron(&ComplexMatrix::identity(da), k),
        };
        out = &out + &(&(&big * &state.rho) * &big.adjoint());
    }
    BipartiteState::from_matrix(new_dims.0, new_dims.1, out.hermitian_part())
}

/// Haar-random `d x d` unitary.
pub fn random_unitary(d: usize, seed: RngSeed) -> ComplexMatrix {
    let mut rng = seed.rng();
    orthonormal_columns(&ginibre(d, d, &mut rng)).expect("square Ginibre matrix")
}

/// Single-side density matrix helper for tests and suites.
pub fn random_single_density(d: usize, rank: usize, seed: RngSeed) -> ComplexMatrix {
    let mut rng = seed.rng();
    ginibre_density(d, rank.clamp(1, d), &mut rng)
}

/// Entrywise `max |ρ_a - ρ_b|`; infinite when dimensions differ.
pub fn state_distance(a: &BipartiteState, b: &BipartiteState) -> f64 {
    if a.dims() != b.dims() {
        return f64::INFINITY;
    }
    a.rho.max_abs_diff(&b.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn validate_examples() {
        let d = validate(&isotropic(0.2).unwrap());
        assert!(d.is_valid());
        assert_eq!(d.marginal_ranks, (2, 2));

        let m = ComplexMatrix::identity(4).scale(0.9 / 4.0);
        let d = validate_matrix(2, 2, &m);
        assert!(matches!(d.failures[..], [ValidationFailure::NormalizationFailure { .. }]));

        let d = validate(&bell_state());
        assert!(d.is_valid());
        assert_eq!(d.marginal_ranks, (2, 2));
        assert!(d.min_eigenvalue.abs() < 1e-12);

        let d = validate_matrix(2, 3, &ComplexMatrix::identity(4));
        assert!(matches!(d.failures[..], [ValidationFailure::DimensionMismatch { .. }]));

        let neg = ComplexMatrix::from_real_diagonal(&[1.2, -0.2, 0.0, 0.0]);
        let d = validate_matrix(2, 2, &neg);
        assert!(matches!(d.failures[..], [ValidationFailure::NotPositive { .. }]));
        assert!(BipartiteState::from_matrix(2, 2, neg).is_err());
    }

    #[test]
    fn isotropic_examples() {
        assert!(state_distance(&isotropic(0.0).unwrap(), &bell_state()) < 1e-15);
        let mixed = isotropic(1.0).unwrap();
        assert!(mixed.rho().max_abs_diff(&ComplexMatrix::identity(4).scale(0.25)) < 1e-15);
        let psi = bell_vector();
        let rho = isotropic(0.2).unwrap();
        let f: C64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| psi[i].conj() * rho.rho()[(i, j)] * psi[j])
            .sum();
        assert!((f.re - 0.85).abs() < 1e-15);
        assert!(matches!(isotropic(1.5), Err(StateError::Range { .. })));
        assert!(isotropic(-0.1).is_err());
    }

    #[test]
    fn bsc_examples() {
        assert_eq!(classical_bsc(0.0).unwrap().probs(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(classical_bsc(0.25).unwrap().probs(), &[0.375, 0.125, 0.125, 0.375]);
        assert_eq!(classical_bsc(0.5).unwrap().probs(), &[0.25; 4]);
        assert!(classical_bsc(2.0).is_err());
    }

    #[test]
    fn joint_validation() {
        assert!(ClassicalJoint::new(2, 2, vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(ClassicalJoint::new(2, 2, vec![0.5, 0.5, 0.1, 0.1]).is_err());
        assert!(ClassicalJoint::new(2, 2, vec![0.5, 0.5]).is_err());
        assert!(ClassicalJoint::from_rows(&[vec![0.5], vec![0.25, 0.25]]).is_err());
        let p = ClassicalJoint::from_rows(&[vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap();
        assert_eq!(p.marginal_a(), vec![0.5, 0.5]);
        assert!((p.marginal_b()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn embed_and_measure() {
        let u = ClassicalJoint::new(2, 2, vec![0.25; 4]).unwrap();
        let s = embed_classical(&u);
        assert!(s.rho().max_abs_diff(&ComplexMatrix::identity(4).scale(0.25)) == 0.0);

        let point = ClassicalJoint::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = embed_classical(&point);
        assert_eq!(s.rho()[(0, 0)], c(1.0));

        let p = ClassicalJoint::new(2, 3, vec![0.1, 0.2, 0.05, 0.3, 0.25, 0.1]).unwrap();
        assert_eq!(measure_computational(&embed_classical(&p)), p);

        let bell = measure_computational(&bell_state());
        for (a, b) in bell.probs().iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }

        let eps = 0.3;
        let m = measure_computational(&isotropic(eps).unwrap());
        let on = (2.0 - eps) / 4.0;
        let off = eps / 4.0;
        for (a, b) in m.probs().iter().zip([on, off, off, on]) {
            assert!((a - b).abs() < 1e-15);
        }

        let pa = ComplexMatrix::from_real_diagonal(&[0.3, 0.7]);
        let pb = ComplexMatrix::from_real_diagonal(&[0.6, 0.4]);
        let m = measure_computational(&BipartiteState::product(&pa, &pb).unwrap());
        for (x, y) in m.probs().iter().zip([0.18, 0.12, 0.42, 0.28]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn tensor_regroups_marginals() {
        let r = random_density(2, 3, 4, RngSeed(1)).unwrap();
        let s = random_density(3, 2, 6, RngSeed(2)).unwrap();
        let t = tensor_bipartite(&r, &s);
        assert_eq!(t.dims(), (6, 6));
        // marginal on AA' is ρ_A ⊗ σ_A'
        let expect_a = kron(&r.marginal(Side::A), &s.marginal(Side::A));
        assert!(t.marginal(Side::A).max_abs_diff(&expect_a) < 1e-12);
        let expect_b = kron(&r.marginal(Side::B), &s.marginal(Side::B));
        assert!(t.marginal(Side::B).max_abs_diff(&expect_b) < 1e-12);
        // entry check against the definition
        let (a, b, ap, bp) = (1, 2, 2, 1);
        let (a2, b2, ap2, bp2) = (0, 1, 1, 0);
        let lhs = t.rho()[((a * 3 + ap) * 6 + b * 2 + bp, (a2 * 3 + ap2) * 6 + b2 * 2 + bp2)];
        let rhs = r.rho()[(a * 3 + b, a2 * 3 + b2)] * s.rho()[(ap * 2 + bp, ap2 * 2 + bp2)];
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn tensor_of_products_is_product() {
        let r = random_product(2, 2, RngSeed(3));
        let s = random_product(2, 3, RngSeed(4));
        let t = tensor_bipartite(&r, &s);
        let prod = kron(&t.marginal(Side::A), &t.marginal(Side::B));
        assert!(t.rho().max_abs_diff(&prod) < 1e-12);
    }

    #[test]
    fn random_density_examples() {
        let full = random_density(2, 2, 4, RngSeed(11)).unwrap();
        assert!(validate(&full).min_eigenvalue > 0.0);
        let pure = random_density(2, 3, 1, RngSeed(12)).unwrap();
        let ev = hermitian_eigenvalues(pure.rho()).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert_eq!(random_density(2, 2, 3, RngSeed(5)), random_density(2, 2, 3, RngSeed(5)));
        assert_ne!(random_density(2, 2, 3, RngSeed(5)), random_density(2, 2, 3, RngSeed(6)));
        assert!(random_density(2, 2, 0, RngSeed(1)).is_err());
        assert!(random_density(2, 2, 5, RngSeed(1)).is_err());
    }

    #[test]
    fn random_pure_marginals_are_distributions() {
        for seed in 0..10 {
            let s = random_pure(2, 3, RngSeed(seed));
            for side in [Side::A, Side::B] {
                let ev = hermitian_eigenvalues(&s.marginal(side)).unwrap();
                assert!(ev.iter().all(|&x| x > -1e-12));
                assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_channel_completeness() {
        for seed in 0..20 {
            let ch = random_channel(Side::A, 3, 2, 3, RngSeed(seed)).unwrap();
            let mut sum = ComplexMatrix::zeros(3, 3);
            for k in ch.kraus() {
                sum = &sum + &(&k.adjoint() * k);
            }
            assert!(sum.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-9);
            let out = ch.apply_single(&ComplexMatrix::identity(3).scale(1.0 / 3.0));
            assert!((out.trace().re - 1.0).abs() < 1e-12);
        }
        let u = random_channel(Side::B, 3, 3, 1, RngSeed(9)).unwrap();
        let k = &u.kraus()[0];
        assert!((k * &k.adjoint()).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        assert!(random_channel(Side::A, 4, 2, 1, RngSeed(0)).is_err());
    }

    #[test]
    fn apply_local_examples() {
        let r = random_density(2, 3, 6, RngSeed(21)).unwrap();
        let same = apply_local(&r, &LocalChannel::identity(Side::B, 3)).unwrap();
        assert!(state_distance(&r, &same) < 1e-15);

        let out = apply_local(&bell_state(), &LocalChannel::completely_depolarizing(Side::A, 2)).unwrap();
        assert!(out.rho().max_abs_diff(&ComplexMatrix::identity(4).scale(0.25)) < 1e-15);

        let ch = random_channel(Side::B, 3, 2, 2, RngSeed(3)).unwrap();
        let out = apply_local(&r, &ch).unwrap();
        assert_eq!(out.dims(), (2, 2));
        assert!((out.rho().trace().re - 1.0).abs() < 1e-10);
        assert_eq!(out.rho().hermiticity_deviation(), 0.0);

        let wrong = LocalChannel::identity(Side::A, 3);
        assert!(matches!(apply_local(&r, &wrong), Err(StateError::DimensionMismatch { .. })));
    }

    #[test]
    fn seed_derivation_is_deterministic() {
        assert_eq!(RngSeed(7).derive(3), RngSeed(7).derive(3));
        assert_ne!(RngSeed(7).derive(3), RngSeed(7).derive(4));
    }
}

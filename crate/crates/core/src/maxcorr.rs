//! Maximal correlation of bipartite states and classical joints.
//!
//! The primary route computes the operator-Schmidt spectrum of the
//! normalized operator `ρ̃ = (I ⊗ ρ_B^{-1/2}) ρ (ρ_A^{-1/2} ⊗ I)`: the top
//! coefficient is 1 and the second one is `μ(ρ)`. [`mu_variational`] is an
//! independent alternating ascent on the constrained bilinear program and
//! exists only as a cross-check and witness generator.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{
    kron, partial_trace, psd_pinv, psd_pinv_sqrt, psd_sqrt, realign, singular_values, svd, ComplexMatrix,
    LinalgError, Side, C64, RANK_TOL,
};
use crate::states::{ginibre, BipartiteState, ClassicalJoint, RngSeed, StateError};

/// `|λ₁ - 1|` above this is reported as a warning.
pub const LAMBDA1_WARN_TOL: f64 = 1e-6;

/// Agreement required between `|det P̃|` and the second singular value.
pub const DETERMINANT_TOL: f64 = 1e-10;

/// Objective change that stops the alternating ascent.
pub const VARIATIONAL_STOP: f64 = 1e-12;

/// Relative gap below which two singular values count as equal.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaxCorrError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    State(#[from] StateError),

    #[error("marginal has no support left after restriction")]
    DegenerateMarginal,

    #[error("no witness: maximal correlation {mu:e} is zero")]
    NoWitness { mu: f64 },

    #[error("restarts must be at least 1")]
    NoRestarts,
}

pub type Result<T> = std::result::Result<T, MaxCorrError>;

/// Local observables `X` on A and `Y` on B with their constraint values.
#[derive(Clone, Debug)]
pub struct ObservablePair {
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
    /// `tr(ρ_A X)`
    pub mean_x: C64,
    /// `tr(ρ_B Y)`
    pub mean_y: C64,
    /// `tr(ρ_A X X†)`
    pub second_moment_x: f64,
    /// `tr(ρ_B Y Y†)`
    pub second_moment_y: f64,
    /// `|tr(ρ X ⊗ Y†)|`
    pub objective: f64,
}

impl ObservablePair {
    pub fn evaluate(state: &BipartiteState, x: ComplexMatrix, y: ComplexMatrix) -> Self {
        let rho_a = state.marginal(Side::A);
        let rho_b = state.marginal(Side::B);
        let mean_x = (&rho_a * &x).trace();
        let mean_y = (&rho_b * &y).trace();
        let second_moment_x = (&(&rho_a * &x) * &x.adjoint()).trace().re;
        let second_moment_y = (&(&rho_b * &y) * &y.adjoint()).trace().re;
        let objective = correlation_objective(state, &x, &y).norm();
        Self {
            x,
            y,
            mean_x,
            mean_y,
            second_moment_x,
            second_moment_y,
            objective,
        }
    }

    /// Largest violation of the zero-mean / unit-second-moment constraints.
    pub fn constraint_violation(&self) -> f64 {
        [
            self.mean_x.norm(),
            self.mean_y.norm(),
            (self.second_moment_x - 1.0).abs(),
            (self.second_moment_y - 1.0).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.x.hermiticity_deviation() <= tol && self.y.hermiticity_deviation() <= tol
    }
}

/// `tr(ρ X ⊗ Y†)`.
pub fn correlation_objective(state: &BipartiteState, x: &ComplexMatrix, y: &ComplexMatrix) -> C64 {
    (&kron(x, &y.adjoint()) * state.rho()).trace()
}

#[derive(Clone, Debug)]
pub struct CorrelationReport {
    pub mu: f64,
    /// Full Schmidt (singular) spectrum, descending.
    pub schmidt: Vec<f64>,
    pub lambda1_deviation: f64,
    pub witness: Option<ObservablePair>,
    pub marginal_ranks: (usize, usize),
    /// `|det P̃|` for classical joints whose support is 2x2.
    pub determinant: Option<f64>,
    pub warnings: Vec<String>,
}

impl CorrelationReport {
    fn from_spectrum(schmidt: Vec<f64>, marginal_ranks: (usize, usize)) -> Self {
        let mu = schmidt.get(1).copied().unwrap_or(0.0);
        let lambda1_deviation = (schmidt.first().copied().unwrap_or(0.0) - 1.0).abs();
        let mut warnings = Vec::new();
        if lambda1_deviation > LAMBDA1_WARN_TOL {
            warnings.push(format!(
                "leading Schmidt coefficient deviates from 1 by {lambda1_deviation:.3e}; marginals may be ill-conditioned"
            ));
        }
        Self {
            mu,
            schmidt,
            lambda1_deviation,
            witness: None,
            marginal_ranks,
            determinant: None,
            warnings,
        }
    }
}

fn marginal_rank(m: &ComplexMatrix) -> usize {
    crate::linalg::psd_rank(m, RANK_TOL).unwrap_or(0)
}

/// `ρ̃ = (I_A ⊗ ρ_B^{-1/2}) ρ (ρ_A^{-1/2} ⊗ I_B)` with pseudo-inverse roots.
pub fn normalized_operator(state: &BipartiteState) -> Result<ComplexMatrix> {
    let (da, db) = state.dims();
    let a = psd_pinv_sqrt(&state.marginal(Side::A), RANK_TOL)?;
    let b = psd_pinv_sqrt(&state.marginal(Side::B), RANK_TOL)?;
    let left = kron(&ComplexMatrix::identity(da), &b);
    let right = kron(&a, &ComplexMatrix::identity(db));
    Ok(&(&left * state.rho()) * &right)
}

/// Maximal correlation from the Schmidt spectrum of the realigned `ρ̃`.
pub fn mu_schmidt(state: &BipartiteState) -> Result<CorrelationReport> {
    let (da, db) = state.dims();
    let r = realign(&normalized_operator(state)?, da, db)?;
    let ranks = (
        marginal_rank(&state.marginal(Side::A)),
        marginal_rank(&state.marginal(Side::B)),
    );
    Ok(CorrelationReport::from_spectrum(singular_values(&r), ranks))
}

/// Shorthand for `mu_schmidt(state)?.mu`.
pub fn mu(state: &BipartiteState) -> Result<f64> {
    Ok(mu_schmidt(state)?.mu)
}

/// `P̃ = P_A^{-1/2} P_AB P_B^{-1/2}` restricted to the marginal supports.
pub fn normalized_joint(p: &ClassicalJoint) -> Result<DMatrix<f64>> {
    let pa = p.marginal_a();
    let pb = p.marginal_b();
    let rows: Vec<usize> = (0..p.rows()).filter(|&a| pa[a] > 0.0).collect();
    let cols: Vec<usize> = (0..p.cols()).filter(|&b| pb[b] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(MaxCorrError::DegenerateMarginal);
    }
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let (a, b) = (rows[i], cols[j]);
        p.get(a, b) / (pa[a] * pb[b]).sqrt()
    }))
}

/// Classical maximal correlation: second singular value of `P̃`.
///
/// For a 2x2 support the determinant identity `μ = |det P̃|` is evaluated
/// too, and a disagreement beyond [`DETERMINANT_TOL`] is reported.
pub fn mu_classical(p: &ClassicalJoint) -> Result<CorrelationReport> {
    let pt = normalized_joint(p)?;
    let mut s: Vec<f64> = pt.clone().singular_values().iter().map(|&x| x.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut report = CorrelationReport::from_spectrum(s, (pt.nrows(), pt.ncols()));
    if pt.nrows() == 2 && pt.ncols() == 2 {
        let det = (pt[(0, 0)] * pt[(1, 1)] - pt[(0, 1)] * pt[(1, 0)]).abs();
        let gap = (det - report.mu).abs();
        if gap > DETERMINANT_TOL {
            report
                .warnings
                .push(format!("|det P̃| = {det} disagrees with second singular value by {gap:.3e}"));
        }
        report.determinant = Some(det);
    }
    Ok(report)
}

/// Shifts `op` to zero mean under `marginal` and scales it to unit second
/// moment. `None` when nothing is left after centering.
fn center_normalize(op: &ComplexMatrix, marginal: &ComplexMatrix) -> Option<ComplexMatrix> {
    let d = op.rows();
    let mean = (marginal * op).trace();
    let centered = op - &ComplexMatrix::identity(d).scale_complex(mean);
    let norm2 = (&(marginal * &centered) * &centered.adjoint()).trace().re;
    if !(norm2 > 1e-28) {
        return None;
    }
    Some(centered.scale(norm2.sqrt().recip()))
}

/// Outcome of the alternating ascent.
#[derive(Clone, Debug)]
pub struct VariationalResult {
    /// Best feasible objective over all restarts.
    pub value: f64,
    pub witness: ObservablePair,
    /// Whether the restart that produced `value` met the stopping rule.
    pub converged: bool,
    pub iterations: usize,
    /// Best value per restart, in restart order.
    pub restart_values: Vec<f64>,
}

struct AscentRun {
    value: f64,
    x: ComplexMatrix,
    y: ComplexMatrix,
    converged: bool,
    iterations: usize,
}

fn ascent_run(
    state: &BipartiteState,
    rho_a: &ComplexMatrix,
    rho_b: &ComplexMatrix,
    pinv_a: &ComplexMatrix,
    pinv_b: &ComplexMatrix,
    max_iters: usize,
    seed: RngSeed,
    restart: u64,
) -> AscentRun {
    let (da, db) = state.dims();
    let rho = state.rho();
    let mut rng = seed.stream(restart);
    let zero_x = ComplexMatrix::zeros(da, da);
    let zero_y = ComplexMatrix::zeros(db, db);
    let Some(mut y) = center_normalize(&ginibre(db, db, &mut rng), rho_b) else {
        return AscentRun {
            value: 0.0,
            x: zero_x,
            y: zero_y,
            converged: true,
            iterations: 0,
        };
    };
    let mut x = zero_x;
    let mut prev = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        // X ∝ ρ_A^+ tr_B((I ⊗ Y†) ρ)†
        let z_a = partial_trace(&(&kron(&ComplexMatrix::identity(da), &y.adjoint()) * rho), da, db, Side::B)
            .expect("dimensions match");
        let Some(nx) = center_normalize(&(pinv_a * &z_a.adjoint()), rho_a) else {
            break;
        };
        x = nx;
        // Y ∝ ρ_B^+ tr_A((X ⊗ I) ρ)
        let z_b = partial_trace(&(&kron(&x, &ComplexMatrix::identity(db)) * rho), da, db, Side::A)
            .expect("dimensions match");
        let Some(ny) = center_normalize(&(pinv_b * &z_b), rho_b) else {
            break;
        };
        y = ny;
        let value = correlation_objective(state, &x, &y).norm();
        if (value - prev).abs() < VARIATIONAL_STOP {
            prev = value;
            converged = true;
            break;
        }
        prev = value;
    }
    if !prev.is_finite() {
        // no feasible X was ever produced: every centered X vanishes on the support
        return AscentRun {
            value: 0.0,
            x: ComplexMatrix::zeros(da, da),
            y,
            converged: true,
            iterations,
        };
    }
    AscentRun {
        value: prev,
        x,
        y,
        converged,
        iterations,
    }
}

/// Alternating maximization of `|tr(ρ X ⊗ Y†)|` under the zero-mean and
/// unit-second-moment constraints.
///
/// Each half-step solves the linear subproblem exactly: with `Y` fixed the
/// optimal `X` is `ρ_A^+ tr_B((I ⊗ Y†) ρ)†`, centered and rescaled in the
/// `ρ_A`-weighted norm; the `Y` step is symmetric. Restarts run in parallel
/// and the best value wins, ties going to the lowest restart index.
pub fn mu_variational(
    state: &BipartiteState,
    restarts: usize,
    max_iters: usize,
    seed: RngSeed,
) -> Result<VariationalResult> {
    if restarts == 0 {
        return Err(MaxCorrError::NoRestarts);
    }
    let rho_a = state.marginal(Side::A);
    let rho_b = state.marginal(Side::B);
    let pinv_a = psd_pinv(&rho_a, RANK_TOL)?;
    let pinv_b = psd_pinv(&rho_b, RANK_TOL)?;
    let runs: Vec<AscentRun> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| ascent_run(state, &rho_a, &rho_b, &pinv_a, &pinv_b, max_iters, seed, r))
        .collect();
    let restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.value > best.value { run } else { best })
        .expect("at least one restart");
    let witness = ObservablePair::evaluate(state, best.x, best.y);
    Ok(VariationalResult {
        value: witness.objective,
        witness,
        converged: best.converged,
        iterations: best.iterations,
        restart_values,
    })
}

/// Witness observables attaining `μ`.
#[derive(Clone, Debug)]
pub struct Witness {
    /// Complex optimizers from the second singular pair of the realigned `ρ̃`.
    pub pair: ObservablePair,
    /// Hermitian optimizers, present when they reach the same objective.
    pub hermitian: Option<ObservablePair>,
    /// Best objective over Hermitian pairs. Equals `mu` when the marginals
    /// and the correlations commute (classical and isotropic states), and can
    /// fall strictly below it otherwise.
    pub hermitian_value: f64,
    pub mu: f64,
    /// How many Schmidt coefficients after the first equal `μ`.
    pub multiplicity: usize,
}

impl Witness {
    /// A degenerate second coefficient makes the witness non-unique.
    pub fn is_degenerate(&self) -> bool {
        self.multiplicity > 1
    }
}

/// `(I - u u†) m (I - v v†)` for unit vectors `u`, `v`.
fn deflate(m: &ComplexMatrix, u: &[C64], v: &[C64]) -> ComplexMatrix {
    let pu = &ComplexMatrix::identity(u.len()) - &ComplexMatrix::outer(u, u);
    let pv = &ComplexMatrix::identity(v.len()) - &ComplexMatrix::outer(v, v);
    &(&pu * m) * &pv
}

fn normalize(v: Vec<C64>) -> Vec<C64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Builds `X`, `Y` from the second singular pair of the realigned `ρ̃`.
///
/// The leading pair is known in closed form (`vec(ρ_A^{1/2})`,
/// `conj vec(ρ_B^{1/2})`) and is projected out before the SVD, so the
/// extracted pair is orthogonal to the identity even when `μ = 1`.
pub fn extract_witness(state: &BipartiteState) -> Result<Witness> {
    let (da, db) = state.dims();
    let report = mu_schmidt(state)?;
    let mu = report.mu;
    if mu <= 1e-12 {
        return Err(MaxCorrError::NoWitness { mu });
    }
    let multiplicity = report.schmidt[1..]
        .iter()
        .filter(|&&s| (s - mu).abs() <= DEGENERACY_TOL * mu.max(1.0))
        .count();

    let rho_a = state.marginal(Side::A);
    let rho_b = state.marginal(Side::B);
    let r = realign(&normalized_operator(state)?, da, db)?;
    let u1 = normalize(psd_sqrt(&rho_a)?.to_row_major());
    let v1 = normalize(psd_sqrt(&rho_b)?.to_row_major().into_iter().map(|z| z.conj()).collect());
    let dec = svd(&deflate(&r, &u1, &v1));

    // value u^T R v with u = conj(U₂), v = V₂; u_(i,i') = X̂(i',i), v_(j,j') = Ŷ'(j',j)
    let x_hat = ComplexMatrix::from_fn(da, da, |ip, i| dec.u[(i * da + ip, 0)].conj());
    let y_hat_t = ComplexMatrix::from_fn(db, db, |jp, j| dec.v[(j * db + jp, 0)]);
    let a_is = psd_pinv_sqrt(&rho_a, RANK_TOL)?;
    let b_is = psd_pinv_sqrt(&rho_b, RANK_TOL)?;
    // X = ρ_A^{-1/2} X̂,  Y† = Ŷ' ρ_B^{-1/2}
    let x = &a_is * &x_hat;
    let y = (&y_hat_t * &b_is).adjoint();
    let x = center_normalize(&x, &rho_a).ok_or(MaxCorrError::NoWitness { mu })?;
    let y = center_normalize(&y, &rho_b).ok_or(MaxCorrError::NoWitness { mu })?;
    let pair = ObservablePair::evaluate(state, x, y);

    let best_hermitian = hermitian_witness(state, &rho_a, &rho_b)?;
    let hermitian_value = best_hermitian.as_ref().map_or(0.0, |h| h.objective);
    let hermitian =
        best_hermitian.filter(|h| (h.objective - mu).abs() <= 1e-8 && h.constraint_violation() <= 1e-8);

    Ok(Witness {
        pair,
        hermitian,
        hermitian_value,
        mu,
        multiplicity,
    })
}

/// Orthonormal (Hilbert–Schmidt) real basis of `d x d` Hermitian matrices.
fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in k..d {
            if k == l {
                basis.push(ComplexMatrix::from_fn(d, d, |i, j| {
                    C64::new(if i == k && j == k { 1.0 } else { 0.0 }, 0.0)
                }));
            } else {
                basis.push(ComplexMatrix::from_fn(d, d, |i, j| {
                    if (i, j) == (k, l) || (i, j) == (l, k) {
                        C64::new(s, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }));
                basis.push(ComplexMatrix::from_fn(d, d, |i, j| {
                    if (i, j) == (k, l) {
                        C64::new(0.0, -s)
                    } else if (i, j) == (l, k) {
                        C64::new(0.0, s)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }));
            }
        }
    }
    basis
}

fn real_psd_pinv_sqrt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(g.clone());
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOL * max;
    let mapped = eig.eigenvalues.map(|x| if x > cutoff { x.powf(-0.5) } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&mapped) * eig.eigenvectors.transpose()
}

/// Best pair restricted to Hermitian `X`, `Y`: the bilinear form
/// `tr(ρ H ⊗ K)` is real on Hermitian operators, so this is a real
/// generalized SVD in the `ρ_A`/`ρ_B`-weighted metrics with the identity
/// direction removed.
fn hermitian_witness(
    state: &BipartiteState,
    rho_a: &ComplexMatrix,
    rho_b: &ComplexMatrix,
) -> Result<Option<ObservablePair>> {
    let (da, db) = state.dims();
    let ha = hermitian_basis(da);
    let hb = hermitian_basis(db);
    let gram = |rho: &ComplexMatrix, basis: &[ComplexMatrix]| {
        DMatrix::from_fn(basis.len(), basis.len(), |p, q| (&(rho * &basis[p]) * &basis[q]).trace().re)
    };
    let ga = gram(rho_a, &ha);
    let gb = gram(rho_b, &hb);
    let cross = DMatrix::from_fn(ha.len(), hb.len(), |p, q| correlation_objective(state, &ha[p], &hb[q]).re);
    let wa = real_psd_pinv_sqrt(&ga);
    let wb = real_psd_pinv_sqrt(&gb);
    let whitened = &wa * &cross * &wb;

    // whitened identity directions
    let id_coeffs = |d: usize, basis: &[ComplexMatrix]| {
        let id = ComplexMatrix::identity(d);
        nalgebra::DVector::from_iterator(basis.len(), basis.iter().map(|h| h.hs_inner(&id).re))
    };
    let sqrt_a = ga.clone().symmetric_eigen();
    let sqrt_a = &sqrt_a.eigenvectors
        * DMatrix::from_diagonal(&sqrt_a.eigenvalues.map(|x| x.max(0.0).sqrt()))
        * sqrt_a.eigenvectors.transpose();
    let sqrt_b = gb.clone().symmetric_eigen();
    let sqrt_b = &sqrt_b.eigenvectors
        * DMatrix::from_diagonal(&sqrt_b.eigenvalues.map(|x| x.max(0.0).sqrt()))
        * sqrt_b.eigenvectors.transpose();
    let ua = (&sqrt_a * id_coeffs(da, &ha)).normalize();
    let ub = (&sqrt_b * id_coeffs(db, &hb)).normalize();
    let pa = DMatrix::identity(ha.len(), ha.len()) - &ua * ua.transpose();
    let pb = DMatrix::identity(hb.len(), hb.len()) - &ub * ub.transpose();
    let deflated = &pa * whitened * &pb;

    let dec = deflated.svd(true, true);
    let Some(k) = dec.singular_values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k) else {
        return Ok(None);
    };
    let u = dec.u.expect("requested").column(k).into_owned();
    let v = dec.v_t.expect("requested").row(k).transpose();
    let cx = &wa * u;
    let cy = &wb * v;
    let combine = |coeffs: &nalgebra::DVector<f64>, basis: &[ComplexMatrix], d: usize| {
        coeffs
            .iter()
            .zip(basis)
            .fold(ComplexMatrix::zeros(d, d), |acc, (&c, h)| &acc + &h.scale(c))
    };
    let x = center_normalize(&combine(&cx, &ha, da), rho_a);
    let y = center_normalize(&combine(&cy, &hb, db), rho_b);
    Ok(match (x, y) {
        (Some(x), Some(y)) => Some(ObservablePair::evaluate(state, x.hermitian_part(), y.hermitian_part())),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{
        bell_state, classical_bsc, embed_classical, isotropic, random_density, random_product, random_pure,
    };

    #[test]
    fn normalized_operator_of_product_is_root_product() {
        let pa = ComplexMatrix::from_real_diagonal(&[0.2, 0.8]);
        let pb = ComplexMatrix::from_real_diagonal(&[0.5, 0.3, 0.2]);
        let s = BipartiteState::product(&pa, &pb).unwrap();
        let expected = kron(
            &ComplexMatrix::from_real_diagonal(&[0.2f64.sqrt(), 0.8f64.sqrt()]),
            &ComplexMatrix::from_real_diagonal(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]),
        );
        assert!(normalized_operator(&s).unwrap().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn normalized_operator_of_bell_is_twice_projector() {
        let b = bell_state();
        let expected = b.rho().scale(2.0);
        assert!(normalized_operator(&b).unwrap().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn leading_coefficient_is_one_on_random_states() {
        for seed in 0..20 {
            let s = random_density(2, 3, 6, RngSeed(seed)).unwrap();
            let r = mu_schmidt(&s).unwrap();
            assert!(r.lambda1_deviation < 1e-8, "seed {seed}: {}", r.lambda1_deviation);
        }
    }

    #[test]
    fn schmidt_examples() {
        let r = mu_schmidt(&isotropic(0.2).unwrap()).unwrap();
        assert!((r.mu - 0.8).abs() < 1e-8);
        assert_eq!(r.marginal_ranks, (2, 2));
        assert!(r.warnings.is_empty());
        assert!(mu(&random_product(2, 3, RngSeed(4))).unwrap().abs() < 1e-8);
        assert!((mu(&random_pure(2, 2, RngSeed(4))).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn classical_examples() {
        let r = mu_classical(&classical_bsc(0.25).unwrap()).unwrap();
        assert!((r.mu - 0.5).abs() < 1e-12);
        assert!((r.determinant.unwrap() - 0.5).abs() < 1e-12);

        let p = ClassicalJoint::from_rows(&[vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap();
        let r = mu_classical(&p).unwrap();
        // |p00 p11 - p01 p10| / sqrt(pa0 pa1 pb0 pb1) = 0.10 / sqrt(0.5*0.5*0.6*0.4)
        let expected = 0.10 / 0.06f64.sqrt();
        assert!((r.mu - expected).abs() < 1e-12);
        assert!((expected - 0.408248).abs() < 1e-6);

        let qa = [0.2, 0.3, 0.5];
        let qb = [0.6, 0.4];
        let prod: Vec<f64> = qa.iter().flat_map(|a| qb.iter().map(move |b| a * b)).collect();
        let r = mu_classical(&ClassicalJoint::new(3, 2, prod).unwrap()).unwrap();
        assert!(r.mu < 1e-12);
        assert!(r.determinant.is_none());
    }

    #[test]
    fn classical_support_restriction() {
        let p = ClassicalJoint::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = mu_classical(&p).unwrap();
        assert_eq!(r.mu, 0.0);
        assert_eq!(r.marginal_ranks, (1, 1));
        let p = ClassicalJoint::new(3, 2, vec![0.3, 0.1, 0.0, 0.0, 0.2, 0.4]).unwrap();
        assert_eq!(mu_classical(&p).unwrap().marginal_ranks, (2, 2));
    }

    #[test]
    fn variational_examples() {
        let v = mu_variational(&isotropic(0.4).unwrap(), 8, 2000, RngSeed(1)).unwrap();
        assert!((v.value - 0.6).abs() < 1e-6, "{}", v.value);
        assert!(v.witness.constraint_violation() < 1e-8);

        let v = mu_variational(&random_product(2, 2, RngSeed(3)), 4, 200, RngSeed(1)).unwrap();
        assert!(v.value.abs() < 1e-8);

        let s = random_density(2, 2, 4, RngSeed(42)).unwrap();
        let v = mu_variational(&s, 8, 5000, RngSeed(42)).unwrap();
        let m = mu(&s).unwrap();
        assert!((v.value - m).abs() < 1e-6, "{} vs {m}", v.value);
        assert!(v.value <= m + 1e-6);

        assert!(matches!(
            mu_variational(&s, 0, 10, RngSeed(0)),
            Err(MaxCorrError::NoRestarts)
        ));
    }

    #[test]
    fn variational_is_deterministic() {
        let s = random_density(3, 2, 5, RngSeed(8)).unwrap();
        let a = mu_variational(&s, 4, 300, RngSeed(5)).unwrap();
        let b = mu_variational(&s, 4, 300, RngSeed(5)).unwrap();
        assert_eq!(a.restart_values, b.restart_values);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn bell_witness_reaches_one() {
        let w = extract_witness(&bell_state()).unwrap();
        assert!((w.pair.objective - 1.0).abs() < 1e-8);
        assert!(w.pair.constraint_violation() < 1e-8);
        assert_eq!(w.multiplicity, 3);
        assert!(w.is_degenerate());
        let h = w.hermitian.expect("Bell state admits Hermitian optimizers");
        assert!(h.is_hermitian(1e-12));

        // Z ⊗ Z: zero means, unit second moments, correlation 1
        let z = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let zz = ObservablePair::evaluate(&bell_state(), z.clone(), z);
        assert!((zz.objective - 1.0).abs() < 1e-14);
        assert!(zz.constraint_violation() < 1e-14);
    }

    #[test]
    fn isotropic_witness() {
        let w = extract_witness(&isotropic(0.5).unwrap()).unwrap();
        assert!((w.pair.objective - 0.5).abs() < 1e-8);
        assert!(w.pair.constraint_violation() < 1e-8);
    }

    #[test]
    fn classical_witness_is_diagonal() {
        let s = embed_classical(&classical_bsc(0.1).unwrap());
        let w = extract_witness(&s).unwrap();
        assert!((w.pair.objective - 0.8).abs() < 1e-8);
        for m in [&w.pair.x, &w.pair.y] {
            assert!(m[(0, 1)].norm() < 1e-10 && m[(1, 0)].norm() < 1e-10);
        }
        assert!(!w.is_degenerate());
    }

    #[test]
    fn witness_on_random_states() {
        for seed in 0..10 {
            let s = random_density(2, 3, 3, RngSeed(100 + seed)).unwrap();
            let w = extract_witness(&s).unwrap();
            assert!((w.pair.objective - w.mu).abs() < 1e-8, "seed {seed}");
            assert!(w.pair.constraint_violation() < 1e-8);
            assert!(w.hermitian_value <= w.mu + 1e-9);
            if let Some(h) = &w.hermitian {
                assert!((h.objective - w.mu).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn hermitian_restriction_can_lose() {
        // generic full-rank two-qubit state: the best Hermitian pair is strictly
        // worse than the complex optimum (independently confirmed by a hill climb)
        let s = random_density(2, 2, 4, RngSeed(0)).unwrap();
        let w = extract_witness(&s).unwrap();
        assert!(w.hermitian.is_none());
        assert!(w.hermitian_value < w.mu - 1e-3);
        assert!((w.pair.objective - w.mu).abs() < 1e-8);
    }

    #[test]
    fn product_state_has_no_witness() {
        assert!(matches!(
            extract_witness(&random_product(2, 2, RngSeed(1))),
            Err(MaxCorrError::NoWitness { .. })
        ));
    }
}

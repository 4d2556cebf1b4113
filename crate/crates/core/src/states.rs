//! Density matrices, entropies in bits, the relative entropy of coherence,
//! Werner states and measurement records.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};
use crate::hermitian::{c, tensor, trace_product, HermitianOperator, C64};

/// Eigenvalues of a density matrix may dip this far below zero.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues at or below this contribute `0 log 0 = 0` to entropies.
pub const ENTROPY_FLOOR: f64 = 1e-12;
/// Eigenvalues of the second argument of a relative entropy at or below this
/// are treated as outside its support.
pub const SUPPORT_FLOOR: f64 = 1e-14;
/// Weight on a null direction of the second argument that still counts as zero.
pub const SUPPORT_WEIGHT_TOL: f64 = 1e-10;

/// Positive semidefinite, unit-trace Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let trace = op.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(CoreError::InvalidState { reason: format!("trace {trace} differs from 1") });
        }
        let min = op.eigh().min_eigenvalue();
        if min < -PSD_TOL {
            return Err(CoreError::InvalidState { reason: format!("negative eigenvalue {min:e}") });
        }
        Ok(Self { op })
    }

    /// Normalizes a positive semidefinite operator to unit trace.
    pub fn from_unnormalized(op: &HermitianOperator) -> Result<Self> {
        let t = op.trace();
        if !(t > 0.0) {
            return Err(CoreError::InvalidState { reason: format!("trace {t} is not positive") });
        }
        Self::new(op.scale(1.0 / t))
    }

    /// `|v><v|` for a unit vector.
    pub fn pure(v: &[C64]) -> Result<Self> {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        Self::from_unnormalized(&HermitianOperator::projector(v)).and_then(|rho| {
            if (norm - 1.0).abs() > 1e-9 {
                Err(CoreError::InvalidState { reason: format!("state vector has squared norm {norm}") })
            } else {
                Ok(rho)
            }
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { op: HermitianOperator::identity(dim).scale(1.0 / dim as f64) }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(probs))
    }

    /// `(|01> - |10>) / sqrt 2`.
    pub fn psi_minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { op: HermitianOperator::projector(&[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]) }
    }

    /// `(|01> + |10>) / sqrt 2`.
    pub fn psi_plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { op: HermitianOperator::projector(&[c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]) }
    }

    pub fn basis_state(dim: usize, i: usize) -> Self {
        Self { op: HermitianOperator::basis_projector(dim, i) }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.op, &self.op).unwrap_or(f64::NAN)
    }

    /// `tr(rho A)`.
    pub fn expectation(&self, a: &HermitianOperator) -> Result<f64> {
        trace_product(&self.op, a)
    }

    /// Convex combination `sum_k w_k rho_k` with weights summing to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim = parts.first().map(|(_, r)| r.dim()).ok_or(CoreError::EmptyOperator)?;
        let mut acc = HermitianOperator::zeros(dim);
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(CoreError::OutOfRange { name: "mixture weight", value: *w, domain: "[0, inf)" });
            }
            acc = acc.add(&rho.op.scale(*w))?;
        }
        Self::new(acc)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { op: tensor(&self.op, &other.op) }
    }
}

#[inline]
fn xlog2x(x: f64) -> f64 {
    if x <= ENTROPY_FLOOR {
        0.0
    } else {
        x * x.log2()
    }
}

/// Shannon entropy in bits with the `0 log 0 = 0` convention.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// Von Neumann entropy `-tr rho log rho` in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(rho.op.eigh().eigenvalues())
}

/// Off-diagonal part removed in the computational basis.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix { op: HermitianOperator::from_real_diagonal(&rho.op.real_diagonal()) }
}

/// `tr[rho log rho] - tr[rho log sigma]` in bits for positive semidefinite operators
/// that need not have unit trace.
pub fn relative_entropy_operators(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    rho.check_dim(sigma)?;
    let rs = rho.eigh();
    let ss = sigma.eigh();
    let first: f64 = rs.eigenvalues().iter().map(|&r| xlog2x(r)).sum();

    // tr[rho log sigma] = sum_l <s_l|rho|s_l> log s_l
    let weights = ss.diagonal_in_eigenbasis(rho);
    let mut second = 0.0;
    for (l, (&s, &w)) in ss.eigenvalues().iter().zip(&weights).enumerate() {
        if s <= SUPPORT_FLOOR {
            if w > SUPPORT_WEIGHT_TOL {
                return Err(CoreError::SupportViolation { direction: l, weight: w });
            }
        } else {
            second += w * s.log2();
        }
    }
    Ok(first - second)
}

/// Quantum relative entropy `S(rho || sigma)` in bits.
pub fn rel_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    relative_entropy_operators(&rho.op, &sigma.op)
}

/// Relative entropy of coherence, evaluated as `S(rho_diag) - S(rho)`.
pub fn rec(rho: &DensityMatrix) -> f64 {
    let diag = shannon_entropy(&rho.op.real_diagonal());
    (diag - von_neumann_entropy(rho)).max(0.0)
}

/// Relative entropy of coherence, evaluated as `S(rho || rho_diag)`.
pub fn rec_via_relative_entropy(rho: &DensityMatrix) -> Result<f64> {
    rel_entropy(rho, &dephase(rho))
}

fn check_unit_interval(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(CoreError::OutOfRange { name, value: p, domain: "[0, 1]" })
    }
}

/// Werner state `p Psi^- + (1 - p) I/4`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    check_unit_interval("p", p)?;
    let op = DensityMatrix::psi_minus().op.scale(p).add(&HermitianOperator::identity(4).scale((1.0 - p) / 4.0))?;
    Ok(DensityMatrix { op })
}

/// Analytic relative entropy of coherence of the Werner state.
pub fn werner_rec_closed_form(p: f64) -> Result<f64> {
    check_unit_interval("p", p)?;
    let lo = (1.0 - p) / 4.0;
    let hi = (1.0 + p) / 4.0;
    let top = (1.0 + 3.0 * p) / 4.0;
    let diag_entropy = -2.0 * xlog2x(lo) - 2.0 * xlog2x(hi);
    let state_entropy = -xlog2x(top) - 3.0 * xlog2x(lo);
    Ok(diag_entropy - state_entropy)
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.op.check_dim(&sigma.op)?;
    // singular values of sqrt(rho) sqrt(sigma) avoid square roots of noisy near-zero eigenvalues
    let sqrt_rho = rho.op.eigh().map(|w| w.max(0.0).sqrt());
    let sqrt_sigma = sigma.op.eigh().map(|w| w.max(0.0).sqrt());
    let prod = sqrt_rho.matrix() * sqrt_sigma.matrix();
    let root_trace: f64 = prod.singular_values().iter().sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// Trace distance `||rho - sigma||_1 / 2`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let diff = rho.op.sub(&sigma.op)?;
    Ok(0.5 * diff.eigh().eigenvalues().iter().map(|w| w.abs()).sum::<f64>())
}

/// `G G^dagger / tr(G G^dagger)` with `G` a `dim x rank` complex Ginibre matrix.
pub fn random_density_with<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(CoreError::EmptyOperator);
    }
    if rank == 0 || rank > dim {
        return Err(CoreError::OutOfRange { name: "rank", value: rank as f64, domain: "[1, dim]" });
    }
    let g = DMatrix::from_fn(dim, rank, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let gg = HermitianOperator::symmetrized(&g * g.adjoint());
    DensityMatrix::from_unnormalized(&gg)
}

/// Seeded variant of [`random_density_with`].
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(dim, rank, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Basis probabilities `p`, extra observables `o`, and their expectations `q`.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    dim: usize,
    basis_probs: Vec<f64>,
    observables: Vec<HermitianOperator>,
    expectations: Vec<f64>,
}

/// Slack on `|q_j| <= ||o_j||` absorbing rounding in computed expectations.
const EXPECTATION_SLACK: f64 = 1e-12;
/// Allowed deviation of the basis probabilities from summing to one.
pub const PROB_SUM_TOL: f64 = 1e-9;

impl MeasurementRecord {
    pub fn new(basis_probs: Vec<f64>, observables: Vec<HermitianOperator>, expectations: Vec<f64>) -> Result<Self> {
        let dim = basis_probs.len();
        if dim == 0 {
            return Err(CoreError::InvalidRecord { reason: "no basis probabilities".into() });
        }
        if let Some((i, &p)) = basis_probs.iter().enumerate().find(|(_, &p)| !(p >= 0.0)) {
            return Err(CoreError::InvalidRecord { reason: format!("basis probability {i} = {p} is negative") });
        }
        let sum: f64 = basis_probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(CoreError::InvalidRecord { reason: format!("basis probabilities sum to {sum}") });
        }
        if observables.len() != expectations.len() {
            return Err(CoreError::InvalidRecord {
                reason: format!("{} observables but {} expectations", observables.len(), expectations.len()),
            });
        }
        for (index, (o, &q)) in observables.iter().zip(&expectations).enumerate() {
            if o.dim() != dim {
                return Err(CoreError::DimensionMismatch { expected: dim, found: o.dim() });
            }
            let norm = o.spectral_norm();
            if !(q.abs() <= norm + EXPECTATION_SLACK) {
                return Err(CoreError::InfeasibleExpectation { index, value: q, norm });
            }
        }
        Ok(Self { dim, basis_probs, observables, expectations })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_probs(&self) -> &[f64] {
        &self.basis_probs
    }

    pub fn observables(&self) -> &[HermitianOperator] {
        &self.observables
    }

    pub fn expectations(&self) -> &[f64] {
        &self.expectations
    }

    /// Largest constraint violation of `rho` against this record, basis included.
    pub fn max_residual(&self, rho: &HermitianOperator) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (&d, &p) in rho.real_diagonal().iter().zip(&self.basis_probs) {
            worst = worst.max((d - p).abs());
        }
        for (o, &q) in self.observables.iter().zip(&self.expectations) {
            worst = worst.max((trace_product(rho, o)? - q).abs());
        }
        Ok(worst)
    }
}

/// Noise-free record generated by a known state: `p = diag(rho)`, `q_j = tr(rho o_j)`.
pub fn record_from_state(rho: &DensityMatrix, observables: &[HermitianOperator]) -> Result<MeasurementRecord> {
    let mut probs = rho.op.real_diagonal();
    for p in &mut probs {
        // diagonal of a PSD matrix; clip rounding below zero
        *p = p.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let expectations = observables.iter().map(|o| rho.expectation(o)).collect::<Result<Vec<_>>>()?;
    MeasurementRecord::new(probs, observables.to_vec(), expectations)
}

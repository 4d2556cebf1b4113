//! Brute-force reference values for small systems (`d <= 8`).
//!
//! The tight bound `alpha = min { C_r(rho) : diag(rho) = p, tr(rho o) = q }` and the
//! relaxed primal `min { S(rho || p.b) : tr(rho o) = q }` are minimized directly over
//! states `rho = L L^dagger / tr(L L^dagger)`, with an augmented-Lagrangian penalty on
//! the constraint residuals, escalating penalty weights and several random starts.
//! Nothing here goes through the dual solver.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dual::{beta_bound, SolverConfig, SolverStatus};
use crate::error::{CoreError, Result};
use crate::hermitian::{c, trace_product_complex, HermitianOperator, PauliString, C64};
use crate::optim::{lbfgs, LbfgsOptions};
use crate::pool::map_indices;
use crate::seeds::derive_seed;
use crate::states::{random_density_with, record_from_state, DensityMatrix, MeasurementRecord};

/// Largest dimension the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub restarts: usize,
    /// Strictly increasing penalty weights, one augmented-Lagrangian stage each.
    pub penalty_schedule: Vec<f64>,
    /// Inner L-BFGS stopping tolerance on the scaled gradient.
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    /// Largest constraint residual accepted in the final state.
    pub residual_tol: f64,
    /// Residual below which remaining penalty stages are skipped.
    pub early_stop_residual: f64,
    /// Floor applied to zero reference probabilities in the relaxed objective.
    pub prob_floor: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            penalty_schedule: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7],
            inner_tol: 1e-7,
            max_inner_iters: 400,
            residual_tol: 1e-5,
            early_stop_residual: 1e-9,
            prob_floor: 1e-12,
            seed: 0x0A1F_A0C1,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(CoreError::InvalidConfig { reason });
        if self.restarts == 0 {
            return bad("restarts must be positive".into());
        }
        if self.penalty_schedule.is_empty() {
            return bad("penalty schedule is empty".into());
        }
        if self.penalty_schedule.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return bad("penalty weights must be positive".into());
        }
        if self.penalty_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return bad("penalty schedule must be strictly increasing".into());
        }
        if !(self.inner_tol > 0.0 && self.residual_tol > 0.0 && self.prob_floor > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }
}

/// Which constrained minimization to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleObjective {
    /// `C_r(rho)` with diagonal and observable constraints.
    Coherence,
    /// `S(rho || p.b)` with observable constraints only.
    RelaxedReference,
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub value: f64,
    pub max_residual: f64,
    pub state: DensityMatrix,
    /// Restarts that reached the residual tolerance.
    pub feasible_restarts: usize,
}

struct Problem {
    dim: usize,
    objective: OracleObjective,
    /// log2 of the floored reference probabilities (relaxed objective only).
    log_ref: Vec<f64>,
    constraints: Vec<DMatrix<C64>>,
    targets: Vec<f64>,
}

const LOG_FLOOR: f64 = 1e-300;

#[inline]
fn xlog2x(x: f64) -> f64 {
    if x <= 1e-300 {
        0.0
    } else {
        x * x.log2()
    }
}

impl Problem {
    fn new(record: &MeasurementRecord, objective: OracleObjective, prob_floor: f64) -> Self {
        let dim = record.dim();
        let mut constraints = Vec::new();
        let mut targets = Vec::new();
        if objective == OracleObjective::Coherence {
            for (i, &p) in record.basis_probs().iter().enumerate() {
                constraints.push(HermitianOperator::basis_projector(dim, i).into_matrix());
                targets.push(p);
            }
        }
        for (o, &q) in record.observables().iter().zip(record.expectations()) {
            constraints.push(o.matrix().clone());
            targets.push(q);
        }
        let floored: Vec<f64> = record.basis_probs().iter().map(|&p| p.max(prob_floor)).collect();
        let total: f64 = floored.iter().sum();
        let log_ref = floored.iter().map(|p| (p / total).log2()).collect();
        Self { dim, objective, log_ref, constraints, targets }
    }

    fn unpack(&self, x: &[f64]) -> DMatrix<C64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |i, j| c(x[2 * (i * d + j)], x[2 * (i * d + j) + 1]))
    }

    fn state(&self, x: &[f64]) -> HermitianOperator {
        let l = self.unpack(x);
        let a = HermitianOperator::symmetrized(&l * l.adjoint());
        a.scale(1.0 / a.trace())
    }

    fn residuals(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        self.constraints.iter().zip(&self.targets).map(|(a, t)| trace_product_complex(rho, a).re - t).collect()
    }

    /// Objective value and its gradient with respect to `rho` (up to multiples of I).
    fn objective(&self, rho: &HermitianOperator) -> (f64, DMatrix<C64>) {
        let spec = rho.eigh();
        let entropy_term: f64 = spec.eigenvalues().iter().map(|&w| xlog2x(w)).sum();
        let log_rho = spec.map(|w| w.max(LOG_FLOOR).log2()).into_matrix();
        let diag = rho.real_diagonal();
        match self.objective {
            OracleObjective::Coherence => {
                let diag_term: f64 = diag.iter().map(|&p| xlog2x(p)).sum();
                let mut grad = log_rho;
                for (i, &p) in diag.iter().enumerate() {
                    grad[(i, i)] -= c(p.max(LOG_FLOOR).log2(), 0.0);
                }
                (entropy_term - diag_term, grad)
            }
            OracleObjective::RelaxedReference => {
                let cross: f64 = diag.iter().zip(&self.log_ref).map(|(p, l)| p * l).sum();
                let mut grad = log_rho;
                for (i, l) in self.log_ref.iter().enumerate() {
                    grad[(i, i)] -= c(*l, 0.0);
                }
                (entropy_term - cross, grad)
            }
        }
    }

    /// Augmented Lagrangian and its gradient with respect to the packed factor.
    fn augmented(&self, x: &[f64], grad: &mut [f64], mult: &[f64], weight: f64) -> f64 {
        let d = self.dim;
        let l = self.unpack(x);
        let a = &l * l.adjoint();
        let t: f64 = a.diagonal().iter().map(|z| z.re).sum();
        if !(t > 0.0) {
            return f64::NAN;
        }
        let rho = HermitianOperator::symmetrized(a / c(t, 0.0));
        let (value, mut g) = self.objective(&rho);
        let res = self.residuals(rho.matrix());
        let mut total = value;
        for ((r, m), op) in res.iter().zip(mult).zip(&self.constraints) {
            total += m * r + 0.5 * weight * r * r;
            g += op * c(m + weight * r, 0.0);
        }
        // d/dA of F(A / tr A) = (G - tr(rho G) I) / tr A
        let shift = trace_product_complex(rho.matrix(), &g).re;
        for i in 0..d {
            g[(i, i)] -= c(shift, 0.0);
        }
        let m = g * &l * c(2.0 / t, 0.0);
        for i in 0..d {
            for j in 0..d {
                let z = m[(i, j)];
                grad[2 * (i * d + j)] = z.re;
                grad[2 * (i * d + j) + 1] = z.im;
            }
        }
        total
    }
}

struct RestartOutcome {
    value: f64,
    max_residual: f64,
    state: HermitianOperator,
}

fn run_restart(problem: &Problem, config: &OracleConfig, seed: u64) -> RestartOutcome {
    let d = problem.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..2 * d * d).map(|_| rng.sample(StandardNormal)).collect();
    let mut mult = vec![0.0; problem.constraints.len()];
    let opts = LbfgsOptions { memory: 12, max_iters: config.max_inner_iters, grad_tol: config.inner_tol };
    let mut max_residual = f64::INFINITY;
    for &weight in &config.penalty_schedule {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let m = mult.clone();
        let min = lbfgs(|x, g| problem.augmented(x, g, &m, weight), x, &opts);
        x = min.x;
        let rho = problem.state(&x);
        let res = problem.residuals(rho.matrix());
        max_residual = res.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
        for (m, r) in mult.iter_mut().zip(&res) {
            *m += weight * r;
        }
        if max_residual <= config.early_stop_residual {
            break;
        }
    }
    let state = problem.state(&x);
    let value = problem.objective(&state).0;
    RestartOutcome { value, max_residual, state }
}

/// Multi-start constrained minimization of the chosen objective.
pub fn minimize_direct(
    record: &MeasurementRecord,
    objective: OracleObjective,
    config: &OracleConfig,
) -> Result<OracleSolution> {
    config.validate()?;
    if record.dim() > MAX_ORACLE_DIM {
        return Err(CoreError::OutOfRange { name: "oracle dimension", value: record.dim() as f64, domain: "[1, 8]" });
    }
    let problem = Problem::new(record, objective, config.prob_floor);
    let mut best: Option<RestartOutcome> = None;
    let mut best_infeasible = f64::INFINITY;
    let mut feasible = 0;
    for k in 0..config.restarts {
        let out = run_restart(&problem, config, derive_seed(config.seed, k as u64));
        if out.max_residual <= config.residual_tol && out.value.is_finite() {
            feasible += 1;
            if best.as_ref().is_none_or(|b| out.value < b.value) {
                best = Some(out);
            }
        } else {
            best_infeasible = best_infeasible.min(out.max_residual);
        }
    }
    match best {
        Some(b) => Ok(OracleSolution {
            value: b.value,
            max_residual: b.max_residual,
            state: DensityMatrix::from_unnormalized(&b.state)?,
            feasible_restarts: feasible,
        }),
        None => Err(CoreError::OracleFailure { residual: best_infeasible, tolerance: config.residual_tol }),
    }
}

/// Direct estimate of the tight bound `alpha`.
pub fn alpha_direct(record: &MeasurementRecord, config: &OracleConfig) -> Result<OracleSolution> {
    minimize_direct(record, OracleObjective::Coherence, config)
}

/// Direct minimization of the relaxed primal whose optimum is `beta`.
pub fn relaxed_direct(record: &MeasurementRecord, config: &OracleConfig) -> Result<OracleSolution> {
    minimize_direct(record, OracleObjective::RelaxedReference, config)
}

fn qubits_of(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(CoreError::OutOfRange { name: "dim", value: dim as f64, domain: "powers of two >= 2" });
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Pauli strings that are neither the identity nor diagonal.
pub fn off_diagonal_paulis(n_qubits: usize) -> Vec<PauliString> {
    PauliString::all(n_qubits).into_iter().filter(|p| !p.is_diagonal()).collect()
}

/// Random full-rank state and `n_extra` distinct off-diagonal Pauli observables
/// drawn without replacement. Returns the generating state alongside its record.
pub fn random_instance_with_state(
    dim: usize,
    n_extra: usize,
    seed: u64,
) -> Result<(DensityMatrix, Vec<PauliString>, MeasurementRecord)> {
    let n_qubits = qubits_of(dim)?;
    let pool = off_diagonal_paulis(n_qubits);
    if n_extra > pool.len() {
        return Err(CoreError::OutOfRange { name: "n_extra", value: n_extra as f64, domain: "at most 4^n - 2^n" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = random_density_with(dim, dim, &mut rng)?;
    let mut chosen: Vec<usize> = sample(&mut rng, pool.len(), n_extra).into_vec();
    chosen.sort_unstable();
    let paulis: Vec<PauliString> = chosen.into_iter().map(|i| pool[i].clone()).collect();
    let ops: Vec<HermitianOperator> = paulis.iter().map(|p| p.operator()).collect();
    let record = record_from_state(&rho, &ops)?;
    Ok((rho, paulis, record))
}

pub fn random_instance(dim: usize, n_extra: usize, seed: u64) -> Result<MeasurementRecord> {
    if n_extra == 0 {
        return Err(CoreError::OutOfRange { name: "n_extra", value: 0.0, domain: "at least 1" });
    }
    Ok(random_instance_with_state(dim, n_extra, seed)?.2)
}

/// Random full-rank state measured on a fixed observable list.
pub fn fixed_instance_with_state(
    dim: usize,
    paulis: &[PauliString],
    seed: u64,
) -> Result<(DensityMatrix, MeasurementRecord)> {
    let n_qubits = qubits_of(dim)?;
    if let Some(p) = paulis.iter().find(|p| p.n_qubits() != n_qubits) {
        return Err(CoreError::DimensionMismatch { expected: n_qubits, found: p.n_qubits() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = random_density_with(dim, dim, &mut rng)?;
    let ops: Vec<HermitianOperator> = paulis.iter().map(|p| p.operator()).collect();
    let record = record_from_state(&rho, &ops)?;
    Ok((rho, record))
}

/// Observables used for each scatter instance.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableChoice {
    Random { n_extra: usize },
    Fixed(Vec<PauliString>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterPoint {
    pub alpha: f64,
    pub beta: f64,
    pub instance_seed: u64,
}

impl ScatterPoint {
    pub fn gap(&self) -> f64 {
        self.alpha - self.beta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterFailure {
    pub index: usize,
    pub instance_seed: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterSummary {
    pub n_points: usize,
    pub n_failed: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub min_gap: f64,
    /// Points with `alpha < beta - slack`.
    pub violations: usize,
}

#[derive(Clone, Debug)]
pub struct ScatterReport {
    pub points: Vec<ScatterPoint>,
    pub failures: Vec<ScatterFailure>,
    pub summary: ScatterSummary,
}

/// Allowed amount by which `beta` may exceed `alpha` before counting a violation.
pub const DOMINANCE_SLACK: f64 = 1e-4;

/// One `(alpha, beta)` pair for the instance seeded by `instance_seed`.
pub fn scatter_point(
    dim: usize,
    choice: &ObservableChoice,
    instance_seed: u64,
    oracle: &OracleConfig,
    solver: &SolverConfig,
) -> Result<ScatterPoint> {
    let record = match choice {
        ObservableChoice::Random { n_extra } => random_instance(dim, *n_extra, instance_seed)?,
        ObservableChoice::Fixed(paulis) => fixed_instance_with_state(dim, paulis, instance_seed)?.1,
    };
    let beta = beta_bound(&record, solver)?;
    if beta.status == SolverStatus::Diverged {
        return Err(CoreError::InvalidRecord { reason: "dual ascent diverged on a feasible instance".into() });
    }
    let oracle = OracleConfig { seed: derive_seed(oracle.seed, instance_seed), ..oracle.clone() };
    let alpha = alpha_direct(&record, &oracle)?;
    Ok(ScatterPoint { alpha: alpha.value, beta: beta.beta, instance_seed })
}

/// `n_points` instances with seeds derived from `seed`; oracle failures are excluded and listed.
pub fn scatter_alpha_beta(
    n_points: usize,
    dim: usize,
    choice: &ObservableChoice,
    seed: u64,
    oracle: &OracleConfig,
    solver: &SolverConfig,
) -> Result<ScatterReport> {
    oracle.validate()?;
    solver.validate()?;
    qubits_of(dim)?;
    if dim > MAX_ORACLE_DIM {
        return Err(CoreError::OutOfRange { name: "oracle dimension", value: dim as f64, domain: "[1, 8]" });
    }
    let job = |i: usize| {
        let s = derive_seed(seed, i as u64);
        (i, s, scatter_point(dim, choice, s, oracle, solver))
    };
    let results = map_indices(n_points, job);

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (index, instance_seed, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(e) => {
                log::warn!("scatter instance {index} (seed {instance_seed}) excluded: {e}");
                failures.push(ScatterFailure { index, instance_seed, reason: e.to_string() });
            }
        }
    }
    let summary = summarize(&points, failures.len());
    Ok(ScatterReport { points, failures, summary })
}

fn summarize(points: &[ScatterPoint], n_failed: usize) -> ScatterSummary {
    let gaps: Vec<f64> = points.iter().map(|p| p.gap()).collect();
    let n = gaps.len();
    ScatterSummary {
        n_points: n,
        n_failed,
        mean_gap: if n == 0 { f64::NAN } else { gaps.iter().sum::<f64>() / n as f64 },
        max_gap: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
        violations: gaps.iter().filter(|&&g| g < -DOMINANCE_SLACK).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::rec;
    use approx::assert_abs_diff_eq;

    fn pauli(s: &str) -> HermitianOperator {
        s.parse::<PauliString>().unwrap().operator()
    }

    fn quick() -> OracleConfig {
        OracleConfig { restarts: 4, ..OracleConfig::default() }
    }

    #[test]
    fn alpha_of_maximally_mixed_is_zero() {
        let r = record_from_state(&DensityMatrix::maximally_mixed(4), &[pauli("XX")]).unwrap();
        let sol = alpha_direct(&r, &quick()).unwrap();
        assert_abs_diff_eq!(sol.value, 0.0, epsilon = 1e-5);
        assert!(sol.max_residual <= 1e-5);
    }

    #[test]
    fn alpha_of_singlet_is_one() {
        let r = record_from_state(&DensityMatrix::psi_minus(), &[pauli("XX"), pauli("YY")]).unwrap();
        let sol = alpha_direct(&r, &OracleConfig::default()).unwrap();
        assert_abs_diff_eq!(sol.value, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn alpha_dominates_beta_and_is_witnessed() {
        for seed in 0..5 {
            let (rho, _, r) = random_instance_with_state(4, 1, seed).unwrap();
            let alpha = alpha_direct(&r, &quick()).unwrap().value;
            let beta = beta_bound(&r, &SolverConfig::default()).unwrap().beta;
            assert!(alpha >= beta - 1e-4, "alpha {alpha} < beta {beta}");
            assert!(alpha <= rec(&rho) + 1e-4, "alpha {alpha} > rec {}", rec(&rho));
        }
    }

    #[test]
    fn relaxed_direct_matches_dual_on_random_instance() {
        let r = random_instance(4, 2, 99).unwrap();
        let direct = relaxed_direct(&r, &quick()).unwrap().value;
        let beta = beta_bound(&r, &SolverConfig::default()).unwrap().beta;
        assert_abs_diff_eq!(direct, beta, epsilon = 1e-4);
    }

    #[test]
    fn more_restarts_never_worse() {
        let r = random_instance(4, 1, 5).unwrap();
        let a = alpha_direct(&r, &quick()).unwrap().value;
        let b = alpha_direct(&r, &OracleConfig { restarts: 8, ..quick() }).unwrap().value;
        assert!(b <= a + 1e-4);
    }

    #[test]
    fn random_instance_properties() {
        let a = random_instance(4, 1, 17).unwrap();
        let b = random_instance(4, 1, 17).unwrap();
        assert_eq!(a.basis_probs(), b.basis_probs());
        assert_eq!(a.expectations(), b.expectations());
        assert_abs_diff_eq!(a.basis_probs().iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        for n_extra in 1..4 {
            let r = random_instance(8, n_extra, 3).unwrap();
            let prob = crate::dual::build_problem(&r, &SolverConfig::default()).unwrap();
            assert_eq!(prob.n_multipliers(), n_extra + 1);
        }
        let (_, paulis, _) = random_instance_with_state(8, 5, 1).unwrap();
        assert!(paulis.iter().all(|p| !p.is_diagonal()));
        assert!(paulis.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn random_instance_errors() {
        assert!(random_instance(4, 13, 0).is_err());
        assert!(random_instance(4, 12, 0).is_ok());
        assert!(random_instance(4, 0, 0).is_err());
        assert!(random_instance(6, 1, 0).is_err());
    }

    #[test]
    fn oracle_rejects_large_dims_and_bad_schedules() {
        let r = random_instance(16, 1, 0).unwrap();
        assert!(alpha_direct(&r, &quick()).is_err());
        let small = random_instance(4, 1, 0).unwrap();
        let cfg = OracleConfig { penalty_schedule: vec![10.0, 5.0], ..quick() };
        assert!(matches!(alpha_direct(&small, &cfg), Err(CoreError::InvalidConfig { .. })));
    }

    #[test]
    fn scatter_is_reproducible() {
        let choice = ObservableChoice::Fixed(vec!["XX".parse().unwrap()]);
        let a = scatter_alpha_beta(2, 4, &choice, 7, &quick(), &SolverConfig::default()).unwrap();
        let b = scatter_alpha_beta(2, 4, &choice, 7, &quick(), &SolverConfig::default()).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.summary.violations, 0);
        assert!(a.failures.is_empty());
    }
}

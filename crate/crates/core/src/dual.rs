//! Lower bound `beta` on the relative entropy of coherence via gradient ascent
//! on the concave Lagrange dual
//!
//! ```text
//! f(lambda) = -(log e / e) tr[2^(log(p.b) - lambda.o')] - lambda.q'
//! ```
//!
//! where `o' = [o, I]`, `q' = [q, 1]` and all logarithms are base 2. The
//! maximizer also yields the primal optimum `rho* = 2^(log(p.b) - lambda.o') / e`.

use std::f64::consts::{E, LN_2, LOG2_E};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::hermitian::{trace_product, HermitianOperator};
use crate::states::MeasurementRecord;

/// Exponent eigenvalues above this (in bits) are treated as overflow.
pub const DEFAULT_EXPONENT_CAP: f64 = 700.0 * LN_2;

/// Initial multipliers for the ascent.
#[derive(Clone, Debug, PartialEq)]
pub enum InitPolicy {
    Zeros,
    /// Independent uniform draws from `[-scale, scale]`.
    Random {
        seed: u64,
        scale: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub learning_rate: f64,
    /// Stop once the Euclidean norm of the gradient is at most this.
    pub tolerance: f64,
    pub max_iters: u64,
    /// Zero basis probabilities are raised to this before taking the logarithm.
    pub prob_floor: f64,
    /// `||lambda||` beyond this signals an unbounded dual (infeasible data).
    pub divergence_bound: f64,
    pub exponent_cap: f64,
    /// Backtracking (Armijo) line search instead of the fixed step.
    pub line_search: bool,
    pub init: InitPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            tolerance: 1e-5,
            max_iters: 1_000_000,
            prob_floor: 1e-12,
            divergence_bound: 1e6,
            exponent_cap: DEFAULT_EXPONENT_CAP,
            line_search: false,
            init: InitPolicy::Zeros,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("tolerance", self.tolerance),
            ("prob_floor", self.prob_floor),
            ("divergence_bound", self.divergence_bound),
            ("exponent_cap", self.exponent_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CoreError::InvalidConfig {
                    reason: format!("{name} must be positive and finite, got {v}"),
                });
            }
        }
        if self.max_iters == 0 {
            return Err(CoreError::InvalidConfig { reason: "max_iters must be positive".into() });
        }
        if let InitPolicy::Random { scale, .. } = self.init {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(CoreError::InvalidConfig {
                    reason: format!("random init scale must be positive, got {scale}"),
                });
            }
        }
        Ok(())
    }
}

/// Dual problem data: `log(p.b)`, the augmented observables `o' = [o, I]`
/// and expectations `q' = [q, 1]`.
#[derive(Clone, Debug)]
pub struct DualProblem {
    reference: Vec<f64>,
    log_ref: HermitianOperator,
    aug_observables: Vec<HermitianOperator>,
    aug_expectations: Vec<f64>,
    exponent_cap: f64,
}

/// Objective, gradient and `2^H` evaluated at one multiplier vector.
#[derive(Clone, Debug)]
pub struct DualPoint {
    pub value: f64,
    pub gradient: Vec<f64>,
    exp_exponent: HermitianOperator,
}

impl DualPoint {
    pub fn grad_norm(&self) -> f64 {
        norm(&self.gradient)
    }

    /// `rho*(lambda) = 2^H / e`.
    pub fn primal(&self) -> HermitianOperator {
        self.exp_exponent.scale(1.0 / E)
    }
}

impl DualProblem {
    pub fn dim(&self) -> usize {
        self.log_ref.dim()
    }

    /// `|lambda|`, one more than the number of extra observables.
    pub fn n_multipliers(&self) -> usize {
        self.aug_observables.len()
    }

    /// Floored, renormalized basis probabilities.
    pub fn reference_probs(&self) -> &[f64] {
        &self.reference
    }

    /// `p.b` as a diagonal operator.
    pub fn reference_state(&self) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&self.reference)
    }

    pub fn log_ref(&self) -> &HermitianOperator {
        &self.log_ref
    }

    pub fn aug_observables(&self) -> &[HermitianOperator] {
        &self.aug_observables
    }

    pub fn aug_expectations(&self) -> &[f64] {
        &self.aug_expectations
    }

    fn check_len(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n_multipliers() {
            return Err(CoreError::DimensionMismatch { expected: self.n_multipliers(), found: lambda.len() });
        }
        Ok(())
    }

    /// `H(lambda) = log(p.b) - lambda.o'`.
    pub fn exponent(&self, lambda: &[f64]) -> Result<HermitianOperator> {
        self.check_len(lambda)?;
        let neg: Vec<f64> = lambda.iter().map(|l| -l).collect();
        self.log_ref.add_combination(&neg, &self.aug_observables)
    }

    pub fn evaluate(&self, lambda: &[f64]) -> Result<DualPoint> {
        let h = self.exponent(lambda)?;
        let spec = h.eigh();
        let max_eigenvalue = spec.max_eigenvalue();
        if !(max_eigenvalue <= self.exponent_cap) {
            return Err(CoreError::ExponentOverflow { max_eigenvalue, cap: self.exponent_cap });
        }
        let trace: f64 = spec.eigenvalues().iter().map(|&w| w.exp2()).sum();
        let exp_exponent = spec.map(f64::exp2);
        let dot: f64 = lambda.iter().zip(&self.aug_expectations).map(|(l, q)| l * q).sum();
        let value = -(LOG2_E / E) * trace - dot;
        let gradient = self
            .aug_observables
            .iter()
            .zip(&self.aug_expectations)
            .map(|(o, q)| Ok(trace_product(&exp_exponent, o)? / E - q))
            .collect::<Result<Vec<_>>>()?;
        Ok(DualPoint { value, gradient, exp_exponent })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Floors and renormalizes `p`, takes its logarithm and augments `o` with the identity.
pub fn build_problem(record: &MeasurementRecord, config: &SolverConfig) -> Result<DualProblem> {
    config.validate()?;
    let dim = record.dim();
    let floored: Vec<f64> = record.basis_probs().iter().map(|&p| p.max(config.prob_floor)).collect();
    let total: f64 = floored.iter().sum();
    let reference: Vec<f64> = floored.iter().map(|p| p / total).collect();
    let logs: Vec<f64> = reference.iter().map(|p| p.log2()).collect();

    let mut aug_observables = Vec::with_capacity(record.observables().len() + 1);
    for o in record.observables() {
        if o.dim() != dim {
            return Err(CoreError::DimensionMismatch { expected: dim, found: o.dim() });
        }
        aug_observables.push(o.clone());
    }
    aug_observables.push(HermitianOperator::identity(dim));
    let mut aug_expectations = record.expectations().to_vec();
    aug_expectations.push(1.0);

    Ok(DualProblem {
        reference,
        log_ref: HermitianOperator::from_real_diagonal(&logs),
        aug_observables,
        aug_expectations,
        exponent_cap: config.exponent_cap,
    })
}

pub fn objective(prob: &DualProblem, lambda: &[f64]) -> Result<f64> {
    Ok(prob.evaluate(lambda)?.value)
}

pub fn gradient(prob: &DualProblem, lambda: &[f64]) -> Result<Vec<f64>> {
    Ok(prob.evaluate(lambda)?.gradient)
}

/// Primal candidate `2^(log(p.b) - log(e) I - lambda.o')`; unit trace only at the optimum.
pub fn primal(prob: &DualProblem, lambda: &[f64]) -> Result<HermitianOperator> {
    Ok(prob.evaluate(lambda)?.primal())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIters,
    Diverged,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Converged => "Converged",
            SolverStatus::MaxIters => "MaxIters",
            SolverStatus::Diverged => "Diverged",
        }
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub multipliers: Vec<f64>,
    /// Dual objective at `multipliers`; a valid lower bound whatever the status.
    pub beta: f64,
    /// Number of ascent updates performed.
    pub iterations: u64,
    pub grad_norm: f64,
    /// Final gradient, i.e. `tr(rho* o'_j) - q'_j`.
    pub residuals: Vec<f64>,
    pub primal: HermitianOperator,
    pub status: SolverStatus,
    /// Updates that decreased the objective by more than 1e-9.
    pub ascent_violations: u64,
}

const ASCENT_SLACK: f64 = 1e-9;
const ARMIJO_C: f64 = 1e-4;

fn initial_multipliers(n: usize, config: &SolverConfig) -> Vec<f64> {
    match config.init {
        InitPolicy::Zeros => vec![0.0; n],
        InitPolicy::Random { seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random_range(-scale..=scale)).collect()
        }
    }
}

fn finish(lambda: Vec<f64>, point: DualPoint, iterations: u64, status: SolverStatus, violations: u64) -> SolverResult {
    SolverResult {
        beta: point.value,
        grad_norm: point.grad_norm(),
        primal: point.primal(),
        residuals: point.gradient,
        multipliers: lambda,
        iterations,
        status,
        ascent_violations: violations,
    }
}

/// Gradient ascent `lambda <- lambda + eta grad f(lambda)` until `||grad f|| <= tolerance`.
///
/// `init` overrides the configured initial policy. Overflow of the matrix
/// exponential or `||lambda||` beyond the divergence bound ends the run with
/// [`SolverStatus::Diverged`] and the last finite iterate.
pub fn solve(prob: &DualProblem, config: &SolverConfig, init: Option<&[f64]>) -> Result<SolverResult> {
    config.validate()?;
    let mut lambda = match init {
        Some(l) => l.to_vec(),
        None => initial_multipliers(prob.n_multipliers(), config),
    };
    prob.check_len(&lambda)?;

    let mut point = match prob.evaluate(&lambda) {
        Ok(p) => p,
        Err(CoreError::ExponentOverflow { .. }) => {
            // no finite iterate to report; evaluate at zero as the fallback witness
            let zero = vec![0.0; lambda.len()];
            let p = prob.evaluate(&zero)?;
            return Ok(finish(zero, p, 0, SolverStatus::Diverged, 0));
        }
        Err(e) => return Err(e),
    };
    if point.grad_norm() <= config.tolerance {
        return Ok(finish(lambda, point, 0, SolverStatus::Converged, 0));
    }

    let mut best: Option<(Vec<f64>, DualPoint)> = None;
    let mut violations = 0u64;
    let mut step = config.learning_rate;
    let mut k = 0u64;

    loop {
        if k >= config.max_iters {
            let (l, p) = match best {
                Some((l, p)) if p.value > point.value => (l, p),
                _ => (lambda, point),
            };
            return Ok(finish(l, p, k, SolverStatus::MaxIters, violations));
        }

        let next = if config.line_search {
            line_search_step(prob, &lambda, &point, &mut step)
        } else {
            let cand: Vec<f64> =
                lambda.iter().zip(&point.gradient).map(|(l, g)| l + config.learning_rate * g).collect();
            prob.evaluate(&cand).map(|p| (cand, p))
        };
        k += 1;

        let (cand, cand_point) = match next {
            Ok(v) => v,
            Err(CoreError::ExponentOverflow { max_eigenvalue, .. }) => {
                debug!("dual ascent: exponent overflow ({max_eigenvalue:e}) at iteration {k}");
                return Ok(finish(lambda, point, k, SolverStatus::Diverged, violations));
            }
            Err(e) => return Err(e),
        };

        if cand_point.value < point.value - ASCENT_SLACK {
            violations += 1;
            debug!(
                "dual ascent: objective decreased by {:e} at iteration {k}; step size may be too large",
                point.value - cand_point.value
            );
            if best.as_ref().is_none_or(|(_, b)| point.value > b.value) {
                best = Some((lambda.clone(), point.clone()));
            }
        }

        if norm(&cand) > config.divergence_bound {
            debug!("dual ascent: ||lambda|| exceeded {} at iteration {k}", config.divergence_bound);
            return Ok(finish(cand, cand_point, k, SolverStatus::Diverged, violations));
        }

        lambda = cand;
        point = cand_point;
        if point.grad_norm() <= config.tolerance {
            return Ok(finish(lambda, point, k, SolverStatus::Converged, violations));
        }
    }
}

/// Armijo backtracking starting from twice the previous accepted step.
fn line_search_step(
    prob: &DualProblem,
    lambda: &[f64],
    point: &DualPoint,
    step: &mut f64,
) -> Result<(Vec<f64>, DualPoint)> {
    let g2: f64 = point.gradient.iter().map(|g| g * g).sum();
    let mut t = *step * 2.0;
    for _ in 0..60 {
        let cand: Vec<f64> = lambda.iter().zip(&point.gradient).map(|(l, g)| l + t * g).collect();
        match prob.evaluate(&cand) {
            Ok(p) if p.value >= point.value + ARMIJO_C * t * g2 => {
                *step = t;
                return Ok((cand, p));
            }
            Ok(_) | Err(CoreError::ExponentOverflow { .. }) => t *= 0.5,
            Err(e) => return Err(e),
        }
    }
    // no sufficient increase even for a vanishing step; take the smallest one
    let cand: Vec<f64> = lambda.iter().zip(&point.gradient).map(|(l, g)| l + t * g).collect();
    *step = t;
    prob.evaluate(&cand).map(|p| (cand, p))
}

/// Builds the dual problem from a record and maximizes it from the configured start.
pub fn beta_bound(record: &MeasurementRecord, config: &SolverConfig) -> Result<SolverResult> {
    let prob = build_problem(record, config)?;
    solve(&prob, config, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::PauliString;
    use crate::states::{rec, record_from_state, relative_entropy_operators, werner, DensityMatrix};
    use approx::assert_abs_diff_eq;

    fn pauli(s: &str) -> HermitianOperator {
        s.parse::<PauliString>().unwrap().operator()
    }

    fn uniform_d2() -> DualProblem {
        let rec = MeasurementRecord::new(vec![0.5, 0.5], vec![], vec![]).unwrap();
        build_problem(&rec, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn build_problem_examples() {
        let prob = uniform_d2();
        assert_eq!(prob.n_multipliers(), 1);
        assert_eq!(prob.aug_expectations(), &[1.0]);
        assert!(prob.aug_observables()[0].distance(&HermitianOperator::identity(2)) == 0.0);
        assert!(prob.log_ref().distance(&HermitianOperator::identity(2).scale(-1.0)) < 1e-15);
        assert!(prob.log_ref().is_diagonal());

        let rec = MeasurementRecord::new(vec![0.0, 0.5, 0.5, 0.0], vec![], vec![]).unwrap();
        let prob = build_problem(&rec, &SolverConfig::default()).unwrap();
        let r = prob.reference_probs();
        let total = 1.0 + 2e-12;
        assert_abs_diff_eq!(r[0] / (1e-12 / total), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], 0.5 / total, epsilon = 1e-15);
        assert_abs_diff_eq!(r.iter().sum::<f64>(), 1.0, epsilon = 1e-15);

        let rec = record_from_state(&DensityMatrix::maximally_mixed(4), &[pauli("XX"), pauli("YY")]).unwrap();
        let prob = build_problem(&rec, &SolverConfig::default()).unwrap();
        assert_eq!(prob.n_multipliers(), 3);
        assert_eq!(*prob.aug_expectations().last().unwrap(), 1.0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let rec = MeasurementRecord::new(vec![0.5, 0.5], vec![], vec![]).unwrap();
        let cfg = SolverConfig { learning_rate: 0.0, ..SolverConfig::default() };
        assert!(matches!(build_problem(&rec, &cfg), Err(CoreError::InvalidConfig { .. })));
    }

    #[test]
    fn objective_examples() {
        let prob = uniform_d2();
        assert_abs_diff_eq!(objective(&prob, &[0.0]).unwrap(), -LOG2_E / E, epsilon = 1e-15);
        assert_abs_diff_eq!(-LOG2_E / E, -0.53074, epsilon = 5e-6);
        assert_abs_diff_eq!(objective(&prob, &[-LOG2_E]).unwrap(), 0.0, epsilon = 1e-14);
        assert!(matches!(objective(&prob, &[0.0, 1.0]), Err(CoreError::DimensionMismatch { .. })));
    }

    #[test]
    fn gradient_examples() {
        let prob = uniform_d2();
        assert_abs_diff_eq!(gradient(&prob, &[-LOG2_E]).unwrap()[0], 0.0, epsilon = 1e-14);
        let g = gradient(&prob, &[0.0]).unwrap()[0];
        assert_abs_diff_eq!(g, 1.0 / E - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g, -0.63212, epsilon = 5e-6);
    }

    #[test]
    fn primal_examples() {
        let prob = uniform_d2();
        let rho = primal(&prob, &[-LOG2_E]).unwrap();
        assert!(rho.distance(&HermitianOperator::identity(2).scale(0.5)) < 1e-14);

        // 2^(-log2 e) = 1/e
        let rec = record_from_state(&werner(0.6).unwrap(), &[pauli("XX")]).unwrap();
        let prob = build_problem(&rec, &SolverConfig::default()).unwrap();
        let lambda = [0.3, -0.7];
        let direct =
            prob.exponent(&lambda).unwrap().add(&HermitianOperator::identity(4).scale(-LOG2_E)).unwrap().exp2();
        assert!(direct.distance(&primal(&prob, &lambda).unwrap()) < 1e-13);
    }

    #[test]
    fn overflow_is_reported() {
        let prob = uniform_d2();
        assert!(matches!(objective(&prob, &[-1000.0]), Err(CoreError::ExponentOverflow { .. })));
    }

    #[test]
    fn solve_uniform_analytic_optimum() {
        let prob = uniform_d2();
        let cfg = SolverConfig { tolerance: 1e-9, ..SolverConfig::default() };
        let res = solve(&prob, &cfg, None).unwrap();
        assert_eq!(res.status, SolverStatus::Converged);
        assert_abs_diff_eq!(res.beta, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.multipliers[0], -LOG2_E, epsilon = 1e-8);
        assert_eq!(res.ascent_violations, 0);
    }

    #[test]
    fn solve_werner_primal_feasibility() {
        let rec = record_from_state(&werner(0.6).unwrap(), &[pauli("XX")]).unwrap();
        let res = beta_bound(&rec, &SolverConfig::default()).unwrap();
        assert_eq!(res.status, SolverStatus::Converged);
        let xx = trace_product(&res.primal, &pauli("XX")).unwrap();
        assert_abs_diff_eq!(xx, -0.6, epsilon = 1e-4);
        assert_abs_diff_eq!(res.primal.trace(), 1.0, epsilon = 1e-5);
        assert!(res.beta <= rec_of(0.6) + 1e-4);
        let gap = res.beta
            - relative_entropy_operators(&res.primal, &HermitianOperator::from_real_diagonal(rec.basis_probs()))
                .unwrap();
        assert!(gap.abs() <= 1e-4, "duality gap {gap}");
    }

    fn rec_of(p: f64) -> f64 {
        rec(&werner(p).unwrap())
    }

    #[test]
    fn incoherent_target_gives_zero() {
        let rec = record_from_state(&werner(0.0).unwrap(), &[pauli("XX")]).unwrap();
        let res = beta_bound(&rec, &SolverConfig::default()).unwrap();
        assert_eq!(res.status, SolverStatus::Converged);
        assert_abs_diff_eq!(res.beta, 0.0, epsilon = 1e-4);
    }

    #[test]
    fn pure_werner_bound_does_not_exceed_one() {
        let rec = record_from_state(&werner(1.0).unwrap(), &[pauli("XX")]).unwrap();
        let res = beta_bound(&rec, &SolverConfig::default()).unwrap();
        assert!(res.beta <= 1.0 + 1e-6, "beta {}", res.beta);
        assert!(res.beta > 0.0);
    }

    #[test]
    fn infeasible_data_diverges() {
        // each |q| <= 1 passes validation, but XX = YY = ZZ = 1 lies outside the
        // tetrahedron of two-qubit correlations
        let rec =
            MeasurementRecord::new(vec![0.25; 4], vec![pauli("XX"), pauli("YY"), pauli("ZZ")], vec![1.0, 1.0, 1.0])
                .unwrap();
        let cfg = SolverConfig { max_iters: 200_000, divergence_bound: 50.0, ..SolverConfig::default() };
        let res = beta_bound(&rec, &cfg).unwrap();
        assert_eq!(res.status, SolverStatus::Diverged);
    }

    #[test]
    fn max_iters_is_reported() {
        let rec = record_from_state(&werner(0.6).unwrap(), &[pauli("XX")]).unwrap();
        let cfg = SolverConfig { max_iters: 3, ..SolverConfig::default() };
        let res = beta_bound(&rec, &cfg).unwrap();
        assert_eq!(res.status, SolverStatus::MaxIters);
        assert_eq!(res.iterations, 3);
        assert!(res.grad_norm > cfg.tolerance);
    }

    #[test]
    fn line_search_reaches_same_optimum() {
        let rec = record_from_state(&werner(0.4).unwrap(), &[pauli("XX"), pauli("YY")]).unwrap();
        let fixed = beta_bound(&rec, &SolverConfig::default()).unwrap();
        let ls = beta_bound(&rec, &SolverConfig { line_search: true, ..SolverConfig::default() }).unwrap();
        assert_eq!(ls.status, SolverStatus::Converged);
        assert_abs_diff_eq!(fixed.beta, ls.beta, epsilon = 1e-8);
        assert!(ls.iterations < fixed.iterations);
    }

    #[test]
    fn random_init_is_deterministic() {
        let rec = record_from_state(&werner(0.4).unwrap(), &[pauli("XX")]).unwrap();
        let cfg = SolverConfig { init: InitPolicy::Random { seed: 5, scale: 0.5 }, ..SolverConfig::default() };
        let a = beta_bound(&rec, &cfg).unwrap();
        let b = beta_bound(&rec, &cfg).unwrap();
        assert_eq!(a.multipliers, b.multipliers);
        assert_eq!(a.iterations, b.iterations);
        let zero = beta_bound(&rec, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(a.beta, zero.beta, epsilon = 1e-8);
    }
}

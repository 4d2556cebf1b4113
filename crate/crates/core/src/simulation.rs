//! Monte-Carlo repetitions of the Werner-state coherence experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dual::{build_problem, solve, SolverConfig, SolverStatus};
use crate::error::{CoreError, Result};
use crate::experiment::{
    estimate_expectations, exact_record, measure_all, mixed_state, pauli_expectations, pauli_expectations_from_counts,
    qst_linear_inversion, transmittances, CountRecord, Setting,
};
use crate::pool::map_indices;
use crate::seeds::derive_seed_path;
use crate::states::{rec, werner_rec_closed_form, DensityMatrix};

/// The eight mixing parameters of the reference experiment.
pub const REFERENCE_P_VALUES: [f64; 8] = [0.0, 0.1, 0.2, 1.0 / 3.0, 0.4, 0.6, 0.8, 1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct WernerScenario {
    pub p_values: Vec<f64>,
    /// Each set must contain `ZZ`, which supplies the basis probabilities.
    pub observable_sets: Vec<Vec<Setting>>,
    /// Mean number of detected pairs per setting.
    pub shots: u64,
    pub repetitions: usize,
    pub seed: u64,
    /// Use exact probabilities instead of sampled counts.
    pub noiseless: bool,
    /// Start each noisy solve from the noiseless optimum of its cell.
    pub warm_start: bool,
    pub solver: SolverConfig,
}

impl Default for WernerScenario {
    fn default() -> Self {
        Self {
            p_values: REFERENCE_P_VALUES.to_vec(),
            observable_sets: vec![vec![Setting::ZZ, Setting::XX], vec![Setting::ZZ, Setting::XX, Setting::YY]],
            shots: 100_000,
            repetitions: 1000,
            seed: 0x5EED_3E57,
            noiseless: false,
            warm_start: true,
            solver: SolverConfig { line_search: true, ..SolverConfig::default() },
        }
    }
}

impl WernerScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(CoreError::InvalidConfig { reason });
        if self.p_values.is_empty() {
            return bad("no p values".into());
        }
        if let Some(p) = self.p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("p = {p} outside [0, 1]"));
        }
        if self.observable_sets.is_empty() {
            return bad("no observable sets".into());
        }
        for set in &self.observable_sets {
            if !set.contains(&Setting::ZZ) {
                return bad(format!("observable set {} lacks ZZ", set_label(set)));
            }
            for (i, s) in set.iter().enumerate() {
                if set[..i].contains(s) {
                    return bad(format!("observable set {} repeats {s}", set_label(set)));
                }
            }
        }
        if !self.noiseless && (self.shots == 0 || self.repetitions == 0) {
            return bad("shots and repetitions must be positive".into());
        }
        self.solver.validate()
    }
}

/// `{ZZ,XX,YY}`-style label.
pub fn set_label(set: &[Setting]) -> String {
    let names: Vec<String> = set.iter().map(|s| s.label()).collect();
    format!("{{{}}}", names.join(","))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRow {
    pub p: f64,
    pub obs_set: String,
    pub beta_mean: f64,
    pub beta_std: f64,
    pub rec_qst_mean: f64,
    pub rec_qst_std: f64,
    pub rec_ideal: f64,
    pub beta_noiseless: f64,
    /// Repetitions whose solve diverged; excluded from the mean.
    pub diverged: usize,
    /// Repetitions stopped by the iteration cap; included with their best iterate.
    pub max_iters: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

struct Repetition {
    /// `(beta, status)` per observable set.
    betas: Vec<(f64, SolverStatus)>,
    rec_qst: f64,
}

fn one_repetition(rho: &DensityMatrix, sc: &WernerScenario, warm: &[Vec<f64>], seed: u64) -> Result<Repetition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tomo = Setting::tomography();
    let counts = measure_all(rho, &tomo, sc.shots, &mut rng)?;
    let pick = |s: &Setting| -> CountRecord {
        counts.iter().find(|c| c.setting == *s).expect("tomography covers all settings").clone()
    };
    let mut betas = Vec::with_capacity(sc.observable_sets.len());
    for (set, init) in sc.observable_sets.iter().zip(warm) {
        let records: Vec<CountRecord> = set.iter().map(pick).collect();
        let record = estimate_expectations(&records)?;
        let prob = build_problem(&record, &sc.solver)?;
        let res = solve(&prob, &sc.solver, sc.warm_start.then_some(init.as_slice()))?;
        betas.push((res.beta, res.status));
    }
    let rho_hat = qst_linear_inversion(&pauli_expectations_from_counts(&counts)?)?;
    Ok(Repetition { betas, rec_qst: rec(&rho_hat) })
}

/// One row per `(p, observable set)`, in scenario order.
pub fn simulate_werner(sc: &WernerScenario) -> Result<Vec<SimulationRow>> {
    sc.validate()?;
    let mut rows = Vec::new();
    for (pi, &p) in sc.p_values.iter().enumerate() {
        let rho = mixed_state(&transmittances(p)?)?;
        let rec_ideal = werner_rec_closed_form(p)?;
        let mut noiseless = Vec::new();
        for set in &sc.observable_sets {
            let res = crate::dual::beta_bound(&exact_record(&rho, set)?, &sc.solver)?;
            noiseless.push(res);
        }
        if sc.noiseless {
            let rec_qst = rec(&qst_linear_inversion(&pauli_expectations(&rho)?)?);
            for (set, res) in sc.observable_sets.iter().zip(&noiseless) {
                rows.push(SimulationRow {
                    p,
                    obs_set: set_label(set),
                    beta_mean: res.beta,
                    beta_std: 0.0,
                    rec_qst_mean: rec_qst,
                    rec_qst_std: 0.0,
                    rec_ideal,
                    beta_noiseless: res.beta,
                    diverged: usize::from(res.status == SolverStatus::Diverged),
                    max_iters: usize::from(res.status == SolverStatus::MaxIters),
                });
            }
            continue;
        }
        let warm: Vec<Vec<f64>> = noiseless.iter().map(|r| r.multipliers.clone()).collect();
        let reps = map_indices(sc.repetitions, |r| {
            one_repetition(&rho, sc, &warm, derive_seed_path(sc.seed, &[pi as u64, r as u64]))
        });
        let reps: Vec<Repetition> = reps.into_iter().collect::<Result<_>>()?;
        let qst: Vec<f64> = reps.iter().map(|r| r.rec_qst).collect();
        let (rec_qst_mean, rec_qst_std) = mean_std(&qst);
        for (k, set) in sc.observable_sets.iter().enumerate() {
            let mut kept = Vec::with_capacity(reps.len());
            let (mut diverged, mut max_iters) = (0, 0);
            for (beta, status) in reps.iter().map(|r| r.betas[k]) {
                match status {
                    SolverStatus::Diverged => diverged += 1,
                    SolverStatus::MaxIters => {
                        max_iters += 1;
                        kept.push(beta);
                    }
                    SolverStatus::Converged => kept.push(beta),
                }
            }
            if diverged > 0 {
                log::warn!("p = {p}, {}: {diverged} diverged repetitions excluded", set_label(set));
            }
            let (beta_mean, beta_std) = mean_std(&kept);
            rows.push(SimulationRow {
                p,
                obs_set: set_label(set),
                beta_mean,
                beta_std,
                rec_qst_mean,
                rec_qst_std,
                rec_ideal,
                beta_noiseless: noiseless[k].beta,
                diverged,
                max_iters,
            });
        }
    }
    Ok(rows)
}

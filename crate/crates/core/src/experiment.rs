//! Digital model of the two-photon Werner-state experiment: wave plates, attenuator
//! mixing, Poissonian coincidence counting, expectation extraction and linear-inversion
//! tomography. The polarization qubit uses `|H> = |0>` and `|V> = |1>`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{CoreError, Result};
use crate::hermitian::{c, HermitianOperator, Pauli, PauliString, C64};
use crate::states::{record_from_state, DensityMatrix, MeasurementRecord};

/// Half-wave plate at angle `theta` from vertical.
pub fn hwp(theta: f64) -> DMatrix<C64> {
    let (s, co) = (2.0 * theta).sin_cos();
    DMatrix::from_row_slice(2, 2, &[c(-co, 0.0), c(-s, 0.0), c(-s, 0.0), c(co, 0.0)])
}

/// Quarter-wave plate at angle `zeta` from vertical.
pub fn qwp(zeta: f64) -> DMatrix<C64> {
    let (s, co) = (2.0 * zeta).sin_cos();
    DMatrix::from_row_slice(2, 2, &[c(1.0, co), c(0.0, s), c(0.0, s), c(1.0, -co)]) * c(FRAC_1_SQRT_2, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlateKind {
    Half,
    Quarter,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavePlate {
    pub kind: PlateKind,
    pub angle: f64,
}

impl WavePlate {
    pub fn half(theta: f64) -> Self {
        Self { kind: PlateKind::Half, angle: theta }
    }

    pub fn quarter(zeta: f64) -> Self {
        Self { kind: PlateKind::Quarter, angle: zeta }
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        match self.kind {
            PlateKind::Half => hwp(self.angle),
            PlateKind::Quarter => qwp(self.angle),
        }
    }
}

/// `max |U^dagger U - I|` over entries.
pub fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n)).iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttenuatorBank {
    eta: [f64; 4],
}

impl AttenuatorBank {
    pub fn new(eta: [f64; 4]) -> Result<Self> {
        for &e in &eta {
            if !(0.0..=1.0).contains(&e) {
                return Err(CoreError::OutOfRange { name: "transmittance", value: e, domain: "[0, 1]" });
            }
        }
        Ok(Self { eta })
    }

    pub fn etas(&self) -> [f64; 4] {
        self.eta
    }
}

/// Attenuator settings that turn the source state into `werner(p)`.
pub fn transmittances(p: f64) -> Result<AttenuatorBank> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CoreError::OutOfRange { name: "p", value: p, domain: "[0, 1]" });
    }
    let d = 2.0 + 2.0 * p;
    AttenuatorBank::new([(1.0 - p) / d, (1.0 + 3.0 * p) / d, (1.0 - p) / 2.0, (1.0 + p) / 2.0])
}

/// Normalized output of the preparation stage for the given attenuators.
pub fn mixed_state(bank: &AttenuatorBank) -> Result<DensityMatrix> {
    let [e1, e2, e3, e4] = bank.eta;
    let n = (e1 + e2) * (e3 + e4);
    if n <= 0.0 {
        return Err(CoreError::DegenerateAttenuators);
    }
    let hh = DensityMatrix::basis_state(4, 0);
    let vv = DensityMatrix::basis_state(4, 3);
    let psi_m = DensityMatrix::psi_minus();
    let psi_p = DensityMatrix::psi_plus();
    let w_pop = (e1 + e2) * e3 / (2.0 * n);
    DensityMatrix::mixture(&[(e2 * e4 / n, &psi_m), (e1 * e4 / n, &psi_p), (w_pop, &hh), (w_pop, &vv)])
}

/// Wave-plate angles `(zeta, theta)` whose combined action `HWP(theta) QWP(zeta)`
/// rotates the eigenbasis of `pauli` onto `{|H>, |V>}` (so `U pauli U^dagger = Z`).
pub fn analyzer_angles(pauli: Pauli) -> Result<(f64, f64)> {
    match pauli {
        Pauli::Z => Ok((0.0, 0.0)),
        Pauli::X => Ok((FRAC_PI_4, FRAC_PI_8)),
        Pauli::Y => Ok((-FRAC_PI_4, 0.0)),
        Pauli::I => Err(CoreError::InvalidPauli { label: "I is not a measurement setting".into() }),
    }
}

/// Single-qubit analyzer unitary for `pauli`.
pub fn analyzer(pauli: Pauli) -> Result<DMatrix<C64>> {
    let (zeta, theta) = analyzer_angles(pauli)?;
    Ok(hwp(theta) * qwp(zeta))
}

/// Local two-qubit measurement setting such as `XX` or `ZY`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Setting {
    pub first: Pauli,
    pub second: Pauli,
}

/// Outcome order `HH, HV, VH, VV`; parity sign of each outcome.
pub const PARITY: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

impl Setting {
    pub fn new(first: Pauli, second: Pauli) -> Result<Self> {
        analyzer_angles(first)?;
        analyzer_angles(second)?;
        Ok(Self { first, second })
    }

    pub const ZZ: Setting = Setting { first: Pauli::Z, second: Pauli::Z };
    pub const XX: Setting = Setting { first: Pauli::X, second: Pauli::X };
    pub const YY: Setting = Setting { first: Pauli::Y, second: Pauli::Y };

    /// The nine settings of two-qubit tomography, in `XX, XY, ..., ZZ` order.
    pub fn tomography() -> Vec<Setting> {
        let axes = [Pauli::X, Pauli::Y, Pauli::Z];
        axes.iter().flat_map(|&a| axes.iter().map(move |&b| Setting { first: a, second: b })).collect()
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.first.symbol(), self.second.symbol())
    }

    pub fn pauli_string(&self) -> PauliString {
        PauliString::new(vec![self.first, self.second]).expect("two factors")
    }

    /// `U1 (x) U2` applied before detection in the H/V basis.
    pub fn rotation(&self) -> DMatrix<C64> {
        let a = analyzer(self.first).expect("validated");
        let b = analyzer(self.second).expect("validated");
        a.kronecker(&b)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Setting {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let p: PauliString = s.parse()?;
        match p.factors() {
            [a, b] => Setting::new(*a, *b),
            _ => Err(CoreError::InvalidPauli { label: s.to_string() }),
        }
    }
}

/// Detection probabilities of the four outcomes under `setting`.
pub fn outcome_probabilities(rho: &DensityMatrix, setting: Setting) -> Result<[f64; 4]> {
    if rho.dim() != 4 {
        return Err(CoreError::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let u = setting.rotation();
    let rotated = &u * rho.operator().matrix() * u.adjoint();
    let mut probs = [0.0; 4];
    for (k, p) in probs.iter_mut().enumerate() {
        *p = rotated[(k, k)].re.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRecord {
    pub setting: Setting,
    pub counts: [u64; 4],
}

impl CountRecord {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Result<[f64; 4]> {
        let total = self.total();
        if total == 0 {
            return Err(CoreError::EmptyCounts { setting: self.setting.label() });
        }
        Ok(self.counts.map(|n| n as f64 / total as f64))
    }

    /// Parity estimate of the setting's correlator.
    pub fn correlator(&self) -> Result<f64> {
        Ok(parity_expectation(&self.frequencies()?))
    }

    /// Estimates of `sigma_first (x) I` and `I (x) sigma_second`.
    pub fn marginals(&self) -> Result<(f64, f64)> {
        let f = self.frequencies()?;
        Ok((f[0] + f[1] - f[2] - f[3], f[0] - f[1] + f[2] - f[3]))
    }
}

pub fn parity_expectation(probs: &[f64; 4]) -> f64 {
    probs.iter().zip(PARITY).map(|(p, s)| p * s).sum()
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Independent Poisson counts with means `shots * prob` for each outcome.
pub fn measure_counts_with<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    setting: Setting,
    shots: u64,
    rng: &mut R,
) -> Result<CountRecord> {
    if shots == 0 {
        return Err(CoreError::OutOfRange { name: "shots", value: 0.0, domain: ">= 1" });
    }
    let probs = outcome_probabilities(rho, setting)?;
    let counts = probs.map(|p| poisson(shots as f64 * p, rng));
    Ok(CountRecord { setting, counts })
}

pub fn measure_counts(rho: &DensityMatrix, setting: Setting, shots: u64, seed: u64) -> Result<CountRecord> {
    measure_counts_with(rho, setting, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Builds a measurement record from coincidence data. The `ZZ` record supplies the
/// basis probabilities; every other record contributes its correlator.
pub fn estimate_expectations(records: &[CountRecord]) -> Result<MeasurementRecord> {
    let zz = records.iter().find(|r| r.setting == Setting::ZZ).ok_or_else(|| CoreError::InvalidRecord {
        reason: "a ZZ record is required for the basis probabilities".into(),
    })?;
    let basis_probs = zz.frequencies()?.to_vec();
    let mut observables = Vec::new();
    let mut expectations = Vec::new();
    for r in records.iter().filter(|r| r.setting != Setting::ZZ) {
        observables.push(r.setting.pauli_string().operator());
        expectations.push(r.correlator()?);
    }
    MeasurementRecord::new(basis_probs, observables, expectations)
}

/// The record an infinite number of shots would produce for `settings`.
pub fn exact_record(rho: &DensityMatrix, settings: &[Setting]) -> Result<MeasurementRecord> {
    let ops: Vec<HermitianOperator> =
        settings.iter().filter(|s| **s != Setting::ZZ).map(|s| s.pauli_string().operator()).collect();
    record_from_state(rho, &ops)
}

/// All 16 two-qubit Pauli expectations of `rho` in `PauliString::all(2)` order.
pub fn pauli_expectations(rho: &DensityMatrix) -> Result<[f64; 16]> {
    let mut out = [0.0; 16];
    for (v, p) in out.iter_mut().zip(PauliString::all(2)) {
        *v = rho.expectation(&p.operator())?;
    }
    Ok(out)
}

fn pauli_index(a: Pauli, b: Pauli) -> usize {
    let idx = |p: Pauli| Pauli::ALL.iter().position(|&q| q == p).expect("listed");
    4 * idx(a) + idx(b)
}

/// Pauli expectations from the nine tomography settings. Single-qubit terms are
/// averaged over the three settings that measure them.
pub fn pauli_expectations_from_counts(records: &[CountRecord]) -> Result<[f64; 16]> {
    let mut sums = [0.0; 16];
    let mut hits = [0u32; 16];
    for r in records {
        let (m1, m2) = r.marginals()?;
        let (a, b) = (r.setting.first, r.setting.second);
        for (k, v) in
            [(pauli_index(a, b), r.correlator()?), (pauli_index(a, Pauli::I), m1), (pauli_index(Pauli::I, b), m2)]
        {
            sums[k] += v;
            hits[k] += 1;
        }
    }
    let mut out = [0.0; 16];
    out[0] = 1.0;
    for k in 1..16 {
        if hits[k] == 0 {
            let label = PauliString::all(2)[k].label();
            return Err(CoreError::InvalidRecord { reason: format!("no setting measures {label}") });
        }
        out[k] = sums[k] / hits[k] as f64;
    }
    Ok(out)
}

/// `(1/4) sum_k t_k P_k`, then eigenvalues clipped at zero and renormalized.
pub fn qst_linear_inversion(expectations: &[f64; 16]) -> Result<DensityMatrix> {
    let terms: Vec<HermitianOperator> = PauliString::all(2).iter().map(|p| p.operator()).collect();
    let coeffs: Vec<f64> = expectations.iter().map(|t| t / 4.0).collect();
    let raw = HermitianOperator::zeros(4).add_combination(&coeffs, &terms)?;
    let spec = raw.eigh();
    if spec.min_eigenvalue() >= 0.0 {
        return DensityMatrix::from_unnormalized(&raw);
    }
    DensityMatrix::from_unnormalized(&spec.map(|w| w.max(0.0)))
}

/// Counts for every setting in `settings`, drawn in order from one stream.
pub fn measure_all<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    settings: &[Setting],
    shots: u64,
    rng: &mut R,
) -> Result<Vec<CountRecord>> {
    settings.iter().map(|&s| measure_counts_with(rho, s, shots, rng)).collect()
}

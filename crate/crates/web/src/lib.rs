//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Results are returned as flat `Float64Array`s; the page documents the layouts.

use cohest_core::experiment::Setting;
use cohest_core::{
    mixed_state, rec, simulate_werner, transmittances as bank_for, werner_rec_closed_form, SolverConfig, WernerScenario,
};
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn sets(with_yy: bool) -> Vec<Vec<Setting>> {
    let mut v = vec![vec![Setting::ZZ, Setting::XX]];
    if with_yy {
        v.push(vec![Setting::ZZ, Setting::XX, Setting::YY]);
    }
    v
}

fn solver() -> SolverConfig {
    SolverConfig { line_search: true, ..SolverConfig::default() }
}

/// Noiseless bounds on `points` evenly spaced p values in `[0, 1]`.
///
/// Layout per point: `p, beta{ZZ,XX}, beta{ZZ,XX,YY}, closed-form REC`.
#[wasm_bindgen]
pub fn werner_curves(points: usize) -> Result<Vec<f64>, JsError> {
    if points < 2 {
        return Err(JsError::new("need at least two points"));
    }
    let p_values: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let sc = WernerScenario {
        p_values: p_values.clone(),
        observable_sets: sets(true),
        noiseless: true,
        solver: solver(),
        ..WernerScenario::default()
    };
    let rows = simulate_werner(&sc).map_err(js)?;
    let mut out = Vec::with_capacity(4 * points);
    for (p, pair) in p_values.iter().zip(rows.chunks(2)) {
        out.extend([*p, pair[0].beta_mean, pair[1].beta_mean, werner_rec_closed_form(*p).map_err(js)?]);
    }
    Ok(out)
}

/// Monte-Carlo repetitions of the experiment at one p.
///
/// Layout: for `{ZZ,XX}` then `{ZZ,XX,YY}`: `beta_mean, beta_std, beta_noiseless`;
/// then `rec_qst_mean, rec_qst_std, rec_ideal`.
#[wasm_bindgen]
pub fn simulate_point(p: f64, shots: u32, repetitions: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    if repetitions == 0 || repetitions > 5000 {
        return Err(JsError::new("repetitions must lie in [1, 5000]"));
    }
    let sc = WernerScenario {
        p_values: vec![p],
        observable_sets: sets(true),
        shots: u64::from(shots),
        repetitions: repetitions as usize,
        seed: u64::from(seed),
        solver: solver(),
        ..WernerScenario::default()
    };
    let rows = simulate_werner(&sc).map_err(js)?;
    let mut out = Vec::with_capacity(9);
    for r in &rows {
        out.extend([r.beta_mean, r.beta_std, r.beta_noiseless]);
    }
    out.extend([rows[0].rec_qst_mean, rows[0].rec_qst_std, rows[0].rec_ideal]);
    Ok(out)
}

/// Attenuator settings for `p` and the resulting mixture.
///
/// Layout: `eta1..eta4`, weights of `Psi-, Psi+, HH, VV`, REC of the prepared state.
#[wasm_bindgen]
pub fn transmittances(p: f64) -> Result<Vec<f64>, JsError> {
    let bank = bank_for(p).map_err(js)?;
    let [e1, e2, e3, e4] = bank.etas();
    let n = (e1 + e2) * (e3 + e4);
    let pop = (e1 + e2) * e3 / (2.0 * n);
    let state = mixed_state(&bank).map_err(js)?;
    Ok(vec![e1, e2, e3, e4, e2 * e4 / n, e1 * e4 / n, pop, pop, rec(&state)])
}

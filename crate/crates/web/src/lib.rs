//! Browser bindings. Every export returns a JSON string; the plain-Rust
//! functions underneath are what the tests call.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sqverify::graph::VerificationGraph;
use sqverify::lh::{
    assemble_ensemble, estimate_energy, exact_acceptance, lh_gap, tfim_chain, EnergyPromise,
};
use sqverify::mbqc::ProtocolParams;
use sqverify::rng::{run_shots, SeedStream};
use sqverify::state::{Purity, QuantumState};
use sqverify::{Error, Result};

/// Largest shot count a single call will run.
pub const MAX_SHOTS: u64 = 200_000;

#[derive(Debug, Serialize)]
pub struct GapCurve {
    pub q: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub gap: Vec<f64>,
    /// `None` when `q*` falls outside `[0, 1]` or is undefined.
    pub q_star: Option<f64>,
    pub delta: Option<f64>,
}

pub fn gap_curve(epsilon: f64, a: f64, b: f64, points: usize) -> Result<GapCurve> {
    let points = points.clamp(2, 1001);
    let base = ProtocolParams::new(0.0, epsilon, a, b, 4)?;
    let mut curve = GapCurve {
        q: Vec::with_capacity(points),
        alpha: Vec::with_capacity(points),
        beta1: Vec::with_capacity(points),
        beta2: Vec::with_capacity(points),
        gap: Vec::with_capacity(points),
        q_star: None,
        delta: None,
    };
    for i in 0..points {
        let p = base.with_q(i as f64 / (points - 1) as f64)?;
        curve.q.push(p.q);
        curve.alpha.push(p.alpha());
        curve.beta1.push(p.beta1());
        curve.beta2.push(p.beta2());
        curve.gap.push(p.gap_at_q());
    }
    if let Ok(q) = base.optimal_q() {
        if q <= 1.0 {
            curve.q_star = Some(q);
            curve.delta = Some(base.with_q(q)?.gap_at_q());
        }
    }
    Ok(curve)
}

#[derive(Debug, Serialize)]
pub struct NoisePoint {
    pub noise: f64,
    pub exact: f64,
    pub sampled: f64,
    pub std_error: f64,
}

fn preset(name: &str) -> Result<VerificationGraph> {
    match name {
        "path4" => VerificationGraph::path(4),
        "cycle4" => VerificationGraph::cycle(4),
        "grid2x3" => VerificationGraph::grid(2, 3),
        "witness-grid" => VerificationGraph::witness_grid(2, 2),
        "star5" => VerificationGraph::star(5),
        other => Err(Error::InvalidParams(format!(
            "unknown graph preset {other:?}"
        ))),
    }
}

fn check_shots(shots: u64) -> Result<()> {
    match shots {
        0 => Err(Error::ZeroShots),
        s if s > MAX_SHOTS => Err(Error::InvalidParams(format!("at most {MAX_SHOTS} shots"))),
        _ => Ok(()),
    }
}

/// Stabilizer-test pass probability of an honest state mixed with white
/// noise, at `steps` evenly spaced weights in `[0, max_noise]`.
pub fn stab_noise_curve(
    graph: &str,
    max_noise: f64,
    steps: usize,
    shots: u64,
    seed: u64,
) -> Result<Vec<NoisePoint>> {
    check_shots(shots)?;
    if !(0.0..=1.0).contains(&max_noise) {
        return Err(Error::InvalidParams(
            "noise weight must lie in [0, 1]".into(),
        ));
    }
    let g = preset(graph)?;
    let stream = SeedStream::new(seed);
    let honest = if g.v2().is_empty() {
        g.graph_state()?
    } else {
        let w = QuantumState::random(g.v2().len(), Purity::Pure, &mut stream.split(0).rng(0))?;
        g.honest_state(&w)?
    };
    let white = QuantumState::maximally_mixed(g.total_vertices())?;
    let steps = steps.clamp(2, 21);
    (0..steps)
        .map(|i| {
            let noise = max_noise * i as f64 / (steps - 1) as f64;
            let rho = honest.mix(&white, noise)?;
            let exact = g.exact_pass_probability(&rho)?;
            let passes = run_shots(stream.split(1 + i as u64), shots, false, |_, rng| {
                g.run_stabilizer_test(&rho, rng).map(|r| r.passed)
            })
            .into_iter()
            .collect::<Result<Vec<bool>>>()?;
            let sampled = passes.iter().filter(|&&p| p).count() as f64 / shots as f64;
            Ok(NoisePoint {
                noise,
                exact,
                sampled,
                std_error: (sampled * (1.0 - sampled) / shots as f64).sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct TfimReport {
    pub n: usize,
    pub total_weight: f64,
    pub ground_energy: f64,
    pub first_excited: f64,
    pub state_energy: f64,
    pub acceptance: f64,
    pub gap_bound: f64,
    pub energy_mc: f64,
    pub energy_se: f64,
    pub acceptance_mc: f64,
}

/// Local-Hamiltonian check on an open transverse-field Ising chain, with
/// the ground state mixed with white noise of weight `noise`.
pub fn tfim_report(
    n: usize,
    coupling: f64,
    field: f64,
    noise: f64,
    shots: u64,
    seed: u64,
) -> Result<TfimReport> {
    check_shots(shots)?;
    if !(2..=8).contains(&n) {
        return Err(Error::InvalidParams("chain length must be 2..=8".into()));
    }
    let h = tfim_chain(n, coupling, field)?;
    let ensemble = assemble_ensemble(&h)?;
    let (values, vectors) = h.spectrum()?;
    let ground = QuantumState::from_unnormalized(n, vectors.column(0).into_owned())?;
    let state = ground.mix(&QuantumState::maximally_mixed(n)?, noise)?;
    let promise = EnergyPromise::from_spectrum(&h)?;
    let est = estimate_energy(&state, &ensemble, shots, SeedStream::new(seed), false)?;
    Ok(TfimReport {
        n,
        total_weight: ensemble.total_weight(),
        ground_energy: values[0],
        first_excited: promise.e_b,
        state_energy: h.expectation(&state)?,
        acceptance: exact_acceptance(&state, &ensemble)?,
        gap_bound: lh_gap(&ensemble, &promise)?,
        energy_mc: est.energy,
        energy_se: est.std_error,
        acceptance_mc: 1.0 - est.mean_r,
    })
}

fn to_json<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = gapCurve)]
pub fn gap_curve_js(
    epsilon: f64,
    a: f64,
    b: f64,
    points: usize,
) -> std::result::Result<String, JsError> {
    to_json(gap_curve(epsilon, a, b, points))
}

#[wasm_bindgen(js_name = stabNoiseCurve)]
pub fn stab_noise_curve_js(
    graph: &str,
    max_noise: f64,
    steps: usize,
    shots: u32,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_json(stab_noise_curve(
        graph,
        max_noise,
        steps,
        shots as u64,
        seed as u64,
    ))
}

#[wasm_bindgen(js_name = tfimReport)]
pub fn tfim_report_js(
    n: usize,
    coupling: f64,
    field: f64,
    noise: f64,
    shots: u32,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_json(tfim_report(
        n,
        coupling,
        field,
        noise,
        shots as u64,
        seed as u64,
    ))
}

//! Experiment orchestration: loads instances, runs exact oracles first and
//! Monte Carlo second, and emits fixed-schema report rows.
//!
//! CSV output starts with the line `#schema=1` followed by a header row.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VerificationGraph;
use crate::lh::{
    assemble_ensemble, estimate_energy, exact_acceptance, ground_energy_exact, lh_gap, verify_once,
    EnergyPromise, LocalHamiltonian, PromiseOrigin,
};
use crate::linalg::CMatrix;
use crate::mbqc::{
    arthur_verify, compile, gap_lower_bound, optimal_cheat, ProtocolParams, VerifierCircuit,
};
use crate::rng::{run_shots, SeedStream};
use crate::state::{Purity, QuantumState};

pub const SCHEMA_LINE: &str = "#schema=1";

/// Sampled rates must land within this many binomial standard deviations
/// of the exact value.
pub const SIGMA_BOUND: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Mbqc,
    Lh,
    StabOnly,
    Energy,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Mbqc => "mbqc",
            Protocol::Lh => "lh",
            Protocol::StabOnly => "stab-only",
            Protocol::Energy => "energy",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!(
                "unknown format {other:?} (csv or json)"
            ))),
        }
    }
}

/// Where the state under test comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum StateChoice {
    /// Honest state built from this witness file.
    Witness(PathBuf),
    /// A state file used as received.
    Received(PathBuf),
    /// Honest state with a random pure witness drawn from the seed.
    RandomWitness,
    /// Ground state of the Hamiltonian (local-Hamiltonian runs only).
    Ground,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub id: String,
    pub protocol: Protocol,
    pub graph: Option<VerificationGraph>,
    pub circuit: Option<VerifierCircuit>,
    pub hamiltonian: Option<LocalHamiltonian>,
    pub state: StateChoice,
    /// Branch probability `q`, `ε`, `a`, `b`, `|x|` for the MBQC protocol.
    pub params: Option<ProtocolParams>,
    pub promise: Option<EnergyPromise>,
    /// Weight of the maximally mixed state mixed into the state under test.
    pub noise: f64,
    pub shots: u64,
    pub seed: u64,
    pub parallel: bool,
}

impl ExperimentSpec {
    pub fn new(id: impl Into<String>, protocol: Protocol, shots: u64, seed: u64) -> Self {
        ExperimentSpec {
            id: id.into(),
            protocol,
            graph: None,
            circuit: None,
            hamiltonian: None,
            state: StateChoice::RandomWitness,
            params: None,
            promise: None,
            noise: 0.0,
            shots,
            seed,
            parallel: true,
        }
    }
}

/// One line of a report. Every Monte Carlo rate carries its standard error
/// and the shot count; `checks` lists each bound check as `name=pass|fail`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub protocol: String,
    pub x_size: Option<u64>,
    pub q: Option<f64>,
    pub epsilon: Option<f64>,
    pub noise: Option<f64>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub p_pass_exact: Option<f64>,
    pub p_pass_mc: Option<f64>,
    pub p_pass_se: Option<f64>,
    pub p_acc_exact: Option<f64>,
    pub p_acc_mc: Option<f64>,
    pub p_acc_se: Option<f64>,
    pub lambda_max: Option<f64>,
    pub alpha: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub q_star: Option<f64>,
    pub delta: Option<f64>,
    pub gap_bound: Option<f64>,
    pub distance: Option<f64>,
    pub distance_bound: Option<f64>,
    pub total_weight: Option<f64>,
    pub energy_exact: Option<f64>,
    pub energy_mc: Option<f64>,
    pub energy_se: Option<f64>,
    pub checks: String,
    pub passed: bool,
    pub note: String,
}

impl ReportRow {
    fn new(experiment: &str, protocol: &str) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            protocol: protocol.to_string(),
            passed: true,
            ..ReportRow::default()
        }
    }

    fn check(&mut self, name: &str, ok: bool) {
        if !self.checks.is_empty() {
            self.checks.push(';');
        }
        self.checks.push_str(name);
        self.checks.push_str(if ok { "=pass" } else { "=fail" });
        self.passed &= ok;
    }

    fn note(&mut self, text: &str) {
        if !self.note.is_empty() {
            self.note.push(';');
        }
        self.note.push_str(text);
    }

    fn set_params(&mut self, p: &ProtocolParams) {
        self.q = Some(p.q);
        self.epsilon = Some(p.epsilon);
        self.alpha = Some(p.alpha());
        self.beta1 = Some(p.beta1());
        self.beta2 = Some(p.beta2());
        self.q_star = p.optimal_q().ok();
        if p.x_size > 0 {
            self.x_size = Some(p.x_size);
        }
    }
}

pub fn all_passed(rows: &[ReportRow]) -> bool {
    rows.iter().all(|r| r.passed)
}

/// Binomial standard error of a sampled rate.
pub fn rate_std_error(rate: f64, shots: u64) -> f64 {
    (rate * (1.0 - rate) / shots as f64).sqrt()
}

/// `|sampled - exact| <= 4 sqrt(p(1-p)/n)` with `p` the exact value.
pub fn within_sigma(sampled: f64, exact: f64, shots: u64) -> bool {
    let p = exact.clamp(0.0, 1.0);
    (sampled - exact).abs() <= SIGMA_BOUND * rate_std_error(p, shots) + 1e-12
}

fn sample_rate<F>(stream: SeedStream, shots: u64, parallel: bool, f: F) -> Result<f64>
where
    F: Fn(&mut crate::rng::ShotRng) -> Result<bool> + Sync + Send,
{
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let hits = run_shots(stream, shots, parallel, |_, rng| f(rng))
        .into_iter()
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    Ok(hits as f64 / shots as f64)
}

fn check_noise(noise: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidParams(format!(
            "noise weight {noise} outside [0,1]"
        )));
    }
    Ok(())
}

fn add_noise(state: QuantumState, noise: f64) -> Result<QuantumState> {
    check_noise(noise)?;
    if noise == 0.0 {
        return Ok(state);
    }
    let mixed = QuantumState::maximally_mixed(state.n())?;
    state.mix(&mixed, noise)
}

fn load_state(path: &Path) -> Result<QuantumState> {
    crate::error::read_json(path)
}

fn random_witness(n: usize, seed: SeedStream) -> Result<QuantumState> {
    QuantumState::random(n, Purity::Pure, &mut seed.split(0).rng(0))
}

/// Stabilizer-test experiment on one state.
#[allow(clippy::too_many_arguments)]
pub fn stab_report(
    id: &str,
    graph: &VerificationGraph,
    state: &QuantumState,
    honest: bool,
    noise: f64,
    shots: u64,
    seed: u64,
    parallel: bool,
) -> Result<ReportRow> {
    let state = add_noise(state.clone(), noise)?;
    let mut row = ReportRow::new(id, "stab-only");
    row.noise = Some(noise);
    row.shots = Some(shots);
    row.seed = Some(seed);

    let exact = graph.exact_pass_probability(&state)?;
    row.p_pass_exact = Some(exact);
    let bound = if graph.total_vertices() <= crate::graph::MAX_ENUMERATION_RESOURCE {
        Some(graph.closest_honest_state_bound(&state)?)
    } else {
        None
    };

    let stream = SeedStream::new(seed).split(1);
    let rate = sample_rate(stream, shots, parallel, |rng| {
        Ok(graph.run_stabilizer_test(&state, rng)?.passed)
    })?;
    row.p_pass_mc = Some(rate);
    row.p_pass_se = Some(rate_std_error(rate, shots));

    if honest && noise == 0.0 {
        row.check("honest_pass_exact", (exact - 1.0).abs() <= 1e-10);
        row.check("honest_pass_sampled", rate == 1.0);
    }
    row.check("mc_4sigma", within_sigma(rate, exact, shots));
    if let Some(b) = bound {
        row.distance = Some(b.distance);
        row.distance_bound = Some(b.bound);
        row.check("distance_le_sqrt_2eps", b.holds(1e-9));
    }
    Ok(row)
}

/// Full test-or-compute protocol on one circuit.
#[allow(clippy::too_many_arguments)]
pub fn mbqc_report(
    id: &str,
    circuit: &VerifierCircuit,
    witness: &QuantumState,
    received: Option<&QuantumState>,
    params: &ProtocolParams,
    noise: f64,
    shots: u64,
    seed: u64,
    parallel: bool,
) -> Result<ReportRow> {
    let pattern = compile(circuit)?;
    let honest = received.is_none() && noise == 0.0;
    let base = match received {
        Some(s) => s.clone(),
        None => pattern.honest_prover_state(witness)?,
    };
    let state = add_noise(base, noise)?;
    let mut row = ReportRow::new(id, "mbqc");
    row.set_params(params);
    row.noise = Some(noise);
    row.shots = Some(shots);
    row.seed = Some(seed);

    let q = params.q;
    let p_circuit = circuit.acceptance_probability(witness)?;
    let circuit_max = circuit.max_acceptance()?;
    row.p_pass_exact = Some(pattern.graph().exact_pass_probability(&state)?);
    row.delta = params.protocol_gap().ok();
    if params.x_size > 0 {
        row.gap_bound = Some(gap_lower_bound(params.x_size));
    }
    let operator_fits = pattern.total_vertices() <= crate::mbqc::MAX_OPERATOR_QUBITS;
    if operator_fits {
        let a = pattern.acceptance_operator(q)?;
        row.p_acc_exact = Some(state.expectation_operator(&a)?);
        row.lambda_max = Some(optimal_cheat(&a)?.lambda_max);
    } else if honest {
        row.p_acc_exact = Some(q * p_circuit + (1.0 - q));
    }
    row.note(&format!("circuit_accept={p_circuit}"));
    row.note(&format!("circuit_max={circuit_max}"));
    row.note(&format!("vertices={}", pattern.total_vertices()));

    let stream = SeedStream::new(seed).split(1);
    let rate = sample_rate(stream, shots, parallel, |rng| {
        Ok(arthur_verify(&pattern, params, &state, rng)?.accepted)
    })?;
    row.p_acc_mc = Some(rate);
    row.p_acc_se = Some(rate_std_error(rate, shots));

    if let Some(exact) = row.p_acc_exact {
        row.check("mc_4sigma", within_sigma(rate, exact, shots));
        if honest {
            row.check(
                "honest_acceptance",
                (exact - (q * p_circuit + 1.0 - q)).abs() <= 1e-10,
            );
            if p_circuit >= params.a - 1e-12 {
                row.check("completeness_alpha", exact >= params.alpha() - 1e-10);
            }
        }
    }
    if let Some(lambda) = row.lambda_max {
        if circuit_max <= params.b + 1e-12 {
            let bound = params.beta1().max(params.beta2());
            row.check("soundness_beta", lambda <= bound + 1e-9);
        }
    }
    Ok(row)
}

fn lh_state(h: &LocalHamiltonian, choice: &StateChoice, seed: u64) -> Result<(QuantumState, bool)> {
    match choice {
        StateChoice::Received(p) | StateChoice::Witness(p) => {
            let s = load_state(p)?;
            if s.n() != h.n() {
                return Err(Error::SizeMismatch {
                    expected: h.n(),
                    found: s.n(),
                });
            }
            Ok((s, false))
        }
        StateChoice::Ground => Ok((ground_energy_exact(h)?.1, true)),
        StateChoice::RandomWitness => Ok((random_witness(h.n(), SeedStream::new(seed))?, false)),
    }
}

/// Local-Hamiltonian verification on one state.
#[allow(clippy::too_many_arguments)]
pub fn lh_report(
    id: &str,
    h: &LocalHamiltonian,
    state: &QuantumState,
    promise: Option<EnergyPromise>,
    noise: f64,
    shots: u64,
    seed: u64,
    parallel: bool,
) -> Result<ReportRow> {
    let state = add_noise(state.clone(), noise)?;
    let ensemble = assemble_ensemble(h)?;
    let w = ensemble.total_weight();
    let mut row = ReportRow::new(id, "lh");
    row.noise = Some(noise);
    row.shots = Some(shots);
    row.seed = Some(seed);
    row.total_weight = Some(w);

    let energy = h.expectation(&state)?;
    let exact = exact_acceptance(&state, &ensemble)?;
    row.energy_exact = Some(energy);
    row.p_acc_exact = Some(exact);
    let promise = match promise {
        Some(p) => p,
        None => EnergyPromise::from_spectrum(h)?,
    };
    row.note(match promise.origin {
        PromiseOrigin::Oracle => "promise=oracle",
        PromiseOrigin::User => "promise=user",
    });
    row.note(&format!("e_a={};e_b={}", promise.e_a, promise.e_b));
    row.gap_bound = Some(lh_gap(&ensemble, &promise)?);
    let (spectrum, _) = h.spectrum()?;

    let stream = SeedStream::new(seed).split(1);
    let rate = sample_rate(stream, shots, parallel, |rng| {
        verify_once(&state, &ensemble, rng)
    })?;
    row.p_acc_mc = Some(rate);
    row.p_acc_se = Some(rate_std_error(rate, shots));

    row.check("mc_4sigma", within_sigma(rate, exact, shots));
    row.check(
        "affine_acceptance",
        (exact - (1.0 - ensemble.r_probability_at(energy))).abs() <= 1e-10,
    );
    if energy <= promise.e_a + 1e-12 {
        row.check("yes_bound", exact >= 0.5 - promise.e_a / (2.0 * w) - 1e-10);
    }
    if spectrum[0] >= promise.e_b - 1e-12 {
        row.check("no_bound", exact <= 0.5 - promise.e_b / (2.0 * w) + 1e-10);
    }
    Ok(row)
}

/// Energy estimation from single-qubit Pauli measurements.
pub fn energy_report(
    id: &str,
    h: &LocalHamiltonian,
    state: &QuantumState,
    noise: f64,
    shots: u64,
    seed: u64,
    parallel: bool,
) -> Result<ReportRow> {
    let state = add_noise(state.clone(), noise)?;
    let ensemble = assemble_ensemble(h)?;
    let mut row = ReportRow::new(id, "energy");
    row.noise = Some(noise);
    row.shots = Some(shots);
    row.seed = Some(seed);
    row.total_weight = Some(ensemble.total_weight());
    let exact = h.expectation(&state)?;
    row.energy_exact = Some(exact);
    let est = estimate_energy(
        &state,
        &ensemble,
        shots,
        SeedStream::new(seed).split(1),
        parallel,
    )?;
    row.energy_mc = Some(est.energy);
    row.energy_se = Some(est.std_error);
    row.check(
        "energy_4se",
        (est.energy - exact).abs() <= SIGMA_BOUND * est.std_error + 1e-12,
    );
    Ok(row)
}

/// Closed-form gap analysis for `|x|` in `x_min..=x_max` with
/// `ε = 1/(2|x|²)` and `q = q*`.
pub fn gap_report(x_min: u64, x_max: u64, a: f64, b: f64) -> Result<Vec<ReportRow>> {
    if x_min == 0 || x_max < x_min {
        return Err(Error::InvalidParams(format!(
            "empty |x| range {x_min}..={x_max}"
        )));
    }
    let mut rows = Vec::new();
    for x in x_min..=x_max {
        let epsilon = 1.0 / (2.0 * (x as f64).powi(2));
        let base = ProtocolParams::new(0.0, epsilon, a, b, x)?;
        let params = base.with_q(base.optimal_q()?)?;
        let mut row = ReportRow::new(&format!("gap-x{x}"), "gap");
        row.set_params(&params);
        let delta = params.protocol_gap()?;
        let bound = gap_lower_bound(x);
        row.delta = Some(delta);
        row.gap_bound = Some(bound);
        row.check(
            "equalized",
            (params.delta1() - params.delta2()).abs() <= 1e-12,
        );
        row.check(
            "delta_matches_min",
            (params.gap_at_q() - delta).abs() <= 1e-12,
        );
        row.check("delta_ge_bound", delta >= bound);
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub qs: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Each `|x|` contributes `ε = 1/(2|x|²)`.
    pub x_sizes: Vec<u64>,
    pub noises: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub circuit: VerifierCircuit,
    /// Shots per grid point; zero skips sampling.
    pub shots: u64,
    pub seed: u64,
    pub parallel: bool,
}

/// Cross-product evaluation of the protocol quantities, followed by summary
/// rows: the interpolated crossing of `Δ₁` and `Δ₂` in `q`, monotonicity of
/// the pass probability in the noise weight, and affinity of the acceptance
/// in `q`.
pub fn sweep(grid: &SweepGrid) -> Result<Vec<ReportRow>> {
    let mut eps: Vec<(f64, u64)> = grid.epsilons.iter().map(|&e| (e, 0)).collect();
    eps.extend(
        grid.x_sizes
            .iter()
            .map(|&x| (1.0 / (2.0 * (x as f64).powi(2)), x)),
    );
    if grid.qs.is_empty() || eps.is_empty() || grid.noises.is_empty() {
        return Err(Error::InvalidParams("sweep grid is empty".into()));
    }
    for &n in &grid.noises {
        check_noise(n)?;
    }
    let mut qs = grid.qs.clone();
    qs.sort_by(f64::total_cmp);
    let mut noises = grid.noises.clone();
    noises.sort_by(f64::total_cmp);

    // exact quantities first
    let pattern = compile(&grid.circuit)?;
    if pattern.total_vertices() > crate::mbqc::MAX_OPERATOR_QUBITS {
        return Err(Error::TooManyQubits {
            what: "sweep acceptance operator",
            n: pattern.total_vertices(),
            max: crate::mbqc::MAX_OPERATOR_QUBITS,
        });
    }
    let stream = SeedStream::new(grid.seed);
    let witness = random_witness(grid.circuit.n_witness(), stream)?;
    let honest = pattern.honest_prover_state(&witness)?;
    let e_op = pattern.circuit_accept_operator()?;
    let pass_op = pattern.graph().pass_operator()?;
    let states: Vec<QuantumState> = noises
        .iter()
        .map(|&w| add_noise(honest.clone(), w))
        .collect::<Result<_>>()?;
    let p_pass: Vec<f64> = states
        .iter()
        .map(|s| s.expectation_operator(&pass_op))
        .collect::<Result<_>>()?;
    let p_comp: Vec<f64> = states
        .iter()
        .map(|s| s.expectation_operator(&e_op))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut point = 0u64;
    for (ei, &(epsilon, x)) in eps.iter().enumerate() {
        for (qi, &q) in qs.iter().enumerate() {
            let params = ProtocolParams::new(q, epsilon, grid.a, grid.b, x)?;
            let a_op: CMatrix = e_op.scale(q) + pass_op.scale(1.0 - q);
            let lambda = optimal_cheat(&a_op)?.lambda_max;
            for (ni, &noise) in noises.iter().enumerate() {
                let mut row = ReportRow::new(&format!("sweep-e{ei}-q{qi}-n{ni}"), "sweep");
                row.set_params(&params);
                row.noise = Some(noise);
                row.delta = Some(params.gap_at_q());
                if x > 0 {
                    row.gap_bound = Some(gap_lower_bound(x));
                }
                row.p_pass_exact = Some(p_pass[ni]);
                let exact = q * p_comp[ni] + (1.0 - q) * p_pass[ni];
                row.p_acc_exact = Some(exact);
                row.lambda_max = Some(lambda);
                if grid.shots > 0 {
                    let s = stream.split(1000 + point);
                    let state = &states[ni];
                    let rate = sample_rate(s, grid.shots, grid.parallel, |rng| {
                        Ok(arthur_verify(&pattern, &params, state, rng)?.accepted)
                    })?;
                    row.shots = Some(grid.shots);
                    row.seed = Some(grid.seed);
                    row.p_acc_mc = Some(rate);
                    row.p_acc_se = Some(rate_std_error(rate, grid.shots));
                    row.check("mc_4sigma", within_sigma(rate, exact, grid.shots));
                }
                point += 1;
                rows.push(row);
            }
        }
    }

    for (ei, &(epsilon, x)) in eps.iter().enumerate() {
        let mut row = ReportRow::new(&format!("sweep-e{ei}-crossing"), "sweep-summary");
        let base = ProtocolParams::new(0.0, epsilon, grid.a, grid.b, x)?;
        row.set_params(&base);
        row.q = None;
        row.alpha = None;
        row.beta1 = None;
        row.beta2 = None;
        let diff = |q: f64| -> Result<f64> {
            let p = base.with_q(q)?;
            Ok(p.delta1() - p.delta2())
        };
        let mut crossing = None;
        for pair in qs.windows(2) {
            let (d0, d1) = (diff(pair[0])?, diff(pair[1])?);
            if d0 == 0.0 {
                crossing = Some(pair[0]);
                break;
            }
            if d0 * d1 <= 0.0 && d0 != d1 {
                crossing = Some(pair[0] + (pair[1] - pair[0]) * d0 / (d0 - d1));
                break;
            }
        }
        match (crossing, base.optimal_q().ok()) {
            (Some(c), Some(star)) => {
                row.q = Some(c);
                row.check("crossing_at_q_star", (c - star).abs() <= 1e-9);
            }
            _ => row.note("no crossing inside the q grid"),
        }
        rows.push(row);
    }

    let mut mono = ReportRow::new("sweep-noise-monotone", "sweep-summary");
    let decreasing = p_pass.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    mono.check("p_pass_nonincreasing_in_noise", decreasing);
    rows.push(mono);

    let mut affine = ReportRow::new("sweep-q-affine", "sweep-summary");
    let mut ok = true;
    for ni in 0..noises.len() {
        let f = |q: f64| q * p_comp[ni] + (1.0 - q) * p_pass[ni];
        for w in qs.windows(3) {
            let interp = f(w[0]) + (f(w[2]) - f(w[0])) * (w[1] - w[0]) / (w[2] - w[0]);
            if (interp - f(w[1])).abs() > 1e-10 {
                ok = false;
            }
        }
    }
    affine.check("acceptance_affine_in_q", ok);
    rows.push(affine);
    Ok(rows)
}

/// Runs one experiment spec.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ReportRow>> {
    if spec.shots == 0 {
        return Err(Error::ZeroShots);
    }
    let stream = SeedStream::new(spec.seed);
    let need = |what: &str| Error::InvalidParams(format!("{} requires {what}", spec.protocol));
    match spec.protocol {
        Protocol::StabOnly => {
            let graph = spec.graph.as_ref().ok_or_else(|| need("a graph"))?;
            let (state, honest) = match &spec.state {
                StateChoice::Received(p) => (load_state(p)?, false),
                StateChoice::Witness(p) => (graph.honest_state(&load_state(p)?)?, true),
                StateChoice::RandomWitness => {
                    let w = random_witness(graph.v2().len(), stream)?;
                    (graph.honest_state(&w)?, true)
                }
                StateChoice::Ground => return Err(need("a witness or state, not a ground state")),
            };
            Ok(vec![stab_report(
                &spec.id,
                graph,
                &state,
                honest,
                spec.noise,
                spec.shots,
                spec.seed,
                spec.parallel,
            )?])
        }
        Protocol::Mbqc => {
            let circuit = spec.circuit.as_ref().ok_or_else(|| need("a circuit"))?;
            let params = spec.params.ok_or_else(|| need("protocol parameters"))?;
            let (witness, received) = match &spec.state {
                StateChoice::Witness(p) => (load_state(p)?, None),
                StateChoice::Received(p) => (
                    random_witness(circuit.n_witness(), stream)?,
                    Some(load_state(p)?),
                ),
                StateChoice::RandomWitness => (random_witness(circuit.n_witness(), stream)?, None),
                StateChoice::Ground => return Err(need("a witness or state, not a ground state")),
            };
            Ok(vec![mbqc_report(
                &spec.id,
                circuit,
                &witness,
                received.as_ref(),
                &params,
                spec.noise,
                spec.shots,
                spec.seed,
                spec.parallel,
            )?])
        }
        Protocol::Lh | Protocol::Energy => {
            let h = spec
                .hamiltonian
                .as_ref()
                .ok_or_else(|| need("a Hamiltonian"))?;
            let (state, _) = lh_state(h, &spec.state, spec.seed)?;
            let row = if spec.protocol == Protocol::Lh {
                lh_report(
                    &spec.id,
                    h,
                    &state,
                    spec.promise,
                    spec.noise,
                    spec.shots,
                    spec.seed,
                    spec.parallel,
                )?
            } else {
                energy_report(
                    &spec.id,
                    h,
                    &state,
                    spec.noise,
                    spec.shots,
                    spec.seed,
                    spec.parallel,
                )?
            };
            Ok(vec![row])
        }
    }
}

/// Writes rows as `#schema=1` CSV or as a JSON array.
pub fn write_report<W: Write>(rows: &[ReportRow], format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{SCHEMA_LINE}")?;
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                w.write_record(csv_header())?;
            }
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn report_to_string(rows: &[ReportRow], format: Format) -> Result<String> {
    let mut buf = Vec::new();
    write_report(rows, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("reports are UTF-8"))
}

/// Column names, in order.
pub fn csv_header() -> Vec<&'static str> {
    vec![
        "experiment",
        "protocol",
        "x_size",
        "q",
        "epsilon",
        "noise",
        "shots",
        "seed",
        "p_pass_exact",
        "p_pass_mc",
        "p_pass_se",
        "p_acc_exact",
        "p_acc_mc",
        "p_acc_se",
        "lambda_max",
        "alpha",
        "beta1",
        "beta2",
        "q_star",
        "delta",
        "gap_bound",
        "distance",
        "distance_bound",
        "total_weight",
        "energy_exact",
        "energy_mc",
        "energy_se",
        "checks",
        "passed",
        "note",
    ]
}

/// Parses a CSV report written by [`write_report`].
pub fn read_csv_report(text: &str) -> Result<Vec<ReportRow>> {
    let body = text
        .strip_prefix(SCHEMA_LINE)
        .ok_or_else(|| Error::Parse(format!("report does not start with {SCHEMA_LINE}")))?;
    let mut reader = csv::Reader::from_reader(body.trim_start_matches(['\r', '\n']).as_bytes());
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lh::toy_zz;

    #[test]
    fn honest_grid_passes_exactly() {
        let mut spec = ExperimentSpec::new("grid", Protocol::StabOnly, 10_000, 3);
        spec.graph = Some(VerificationGraph::grid(2, 2).unwrap());
        let rows = run(&spec).unwrap();
        assert_eq!(rows[0].p_pass_exact, Some(1.0));
        assert_eq!(rows[0].p_pass_mc, Some(1.0));
        assert!(rows[0].passed, "{}", rows[0].checks);
    }

    #[test]
    fn lh_on_zz_with_ground_witness() {
        let h = toy_zz().unwrap();
        let state = QuantumState::basis_state("01").unwrap();
        let row = lh_report("zz", &h, &state, None, 0.0, 5000, 1, true).unwrap();
        assert_eq!(row.p_acc_exact, Some(1.0));
        assert_eq!(row.p_acc_mc, Some(1.0));
        assert!(row.note.contains("promise=oracle"));
        assert!(row.passed, "{}", row.checks);
    }

    #[test]
    fn gap_report_rows_hold() {
        let rows = gap_report(4, 100, 2.0 / 3.0, 1.0 / 3.0).unwrap();
        assert_eq!(rows.len(), 97);
        assert!(all_passed(&rows));
        assert!((rows[0].delta.unwrap() - 1.0 / 172.0).abs() < 1e-12);
        assert!(gap_report(5, 4, 0.6, 0.3).is_err());
    }

    #[test]
    fn csv_round_trip_and_schema() {
        let rows = gap_report(4, 6, 2.0 / 3.0, 1.0 / 3.0).unwrap();
        let text = report_to_string(&rows, Format::Csv).unwrap();
        assert!(text.starts_with("#schema=1\nexperiment,protocol,"));
        let header = text.lines().nth(1).unwrap();
        assert_eq!(header, csv_header().join(","));
        assert_eq!(read_csv_report(&text).unwrap(), rows);
        let json = report_to_string(&rows, Format::Json).unwrap();
        let back: Vec<ReportRow> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn sweep_crossing_and_monotonicity() {
        let grid = SweepGrid {
            qs: (0..=10).map(|i| i as f64 / 10.0).collect(),
            epsilons: vec![0.05, 0.1],
            x_sizes: vec![4],
            noises: vec![0.0, 0.1, 0.3],
            a: 2.0 / 3.0,
            b: 1.0 / 3.0,
            circuit: VerifierCircuit::soundness_toy(),
            shots: 0,
            seed: 5,
            parallel: true,
        };
        let rows = sweep(&grid).unwrap();
        assert!(all_passed(&rows));
        let crossing = rows
            .iter()
            .find(|r| r.experiment == "sweep-e2-crossing")
            .unwrap();
        assert!((crossing.q.unwrap() - 3.0 / 43.0).abs() < 1e-9);
        let mut empty = grid.clone();
        empty.qs.clear();
        assert!(sweep(&empty).is_err());
    }
}

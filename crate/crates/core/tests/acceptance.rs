//! End-to-end acceptance suite. Runs without the libtest harness so that the
//! per-criterion summary is always printed; exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqverify::graph::VerificationGraph;
use sqverify::harness::{report_to_string, run, ExperimentSpec, Format, Protocol, StateChoice};
use sqverify::lh::{
    assemble_ensemble, estimate_energy, exact_acceptance, heisenberg_chain, lh_gap, tfim_chain,
    toy_x_plus_zz, toy_zz, EnergyPromise, LocalHamiltonian,
};
use sqverify::linalg::{max_abs_diff, CMatrix};
use sqverify::mbqc::{
    arthur_verify, branch_fidelity, compile, gap_lower_bound, optimal_cheat, Gate,
    MeasurementPattern, ProtocolParams, VerifierCircuit,
};
use sqverify::rng::{run_shots, SeedStream};
use sqverify::state::{Purity, QuantumState};

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Outcome {
            ok,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> sqverify::Result<Outcome>;

fn sigma(p: f64, shots: u64) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / shots as f64).sqrt()
}

fn preset_graphs() -> sqverify::Result<Vec<(&'static str, VerificationGraph)>> {
    Ok(vec![
        ("path-4", VerificationGraph::path(4)?),
        ("cycle-4", VerificationGraph::cycle(4)?),
        ("grid-2x3", VerificationGraph::grid(2, 3)?),
        ("witness-grid", VerificationGraph::witness_grid(2, 2)?),
        ("star-5", VerificationGraph::star(5)?),
    ])
}

fn honest_completeness() -> sqverify::Result<Outcome> {
    let start = Instant::now();
    let shots = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, graph) in preset_graphs()? {
        let witness = QuantumState::random(graph.v2().len().max(1), Purity::Pure, &mut rng)?;
        let state = if graph.v2().is_empty() {
            graph.graph_state()?
        } else {
            graph.honest_state(&witness)?
        };
        let exact = graph.exact_pass_probability(&state)?;
        let passes = run_shots(SeedStream::new(rng.random()), shots, true, |_, r| {
            graph.run_stabilizer_test(&state, r).map(|rec| rec.passed)
        })
        .into_iter()
        .collect::<sqverify::Result<Vec<bool>>>()?;
        let count = passes.iter().filter(|&&p| p).count() as u64;
        ok &= (exact - 1.0).abs() <= 1e-10 && count == shots;
        notes.push(format!("{name} {count}/{shots}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    Ok(Outcome::new(
        ok,
        format!("{} in {secs:.2}s", notes.join(", ")),
    ))
}

fn stabilizer_identity() -> sqverify::Result<Outcome> {
    let mut worst = 0.0f64;
    for (_, graph) in preset_graphs()? {
        let n = graph.total_vertices();
        let dim = 1usize << n;
        let mut product = CMatrix::identity(dim, dim);
        for &j in graph.v1() {
            let g = graph.stabilizer_generator(j)?.to_dense()?;
            product *= (CMatrix::identity(dim, dim) + g).scale(0.5);
        }
        let big_n = graph.v1().len();
        let mut sum = CMatrix::zeros(dim, dim);
        for index in 0..(1u64 << big_n) {
            let bits: Vec<bool> = (0..big_n).map(|i| index >> i & 1 == 1).collect();
            sum += graph.stabilizer_product(&bits)?.to_dense()?;
        }
        let sum = sum.scale(1.0 / (1u64 << big_n) as f64);
        worst = worst.max(max_abs_diff(&product, &sum));
    }
    Ok(Outcome::new(
        worst <= 1e-12,
        format!("max entry deviation {worst:.1e} over 5 graphs"),
    ))
}

fn trace_distance_bound() -> sqverify::Result<Outcome> {
    let graphs = [
        VerificationGraph::path(4)?,
        VerificationGraph::cycle(4)?,
        VerificationGraph::star(5)?,
        VerificationGraph::witness_grid(1, 3)?,
        VerificationGraph::witness_grid(2, 1)?,
        VerificationGraph::new(
            vec![2, 3, 4],
            vec![0, 1],
            vec![(0, 2), (1, 4), (2, 3), (3, 4)],
            vec![0, 1, 2, 3, 4],
        )?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst_slack = f64::INFINITY;
    let mut informative = 0;
    for i in 0..200 {
        let graph = &graphs[i % graphs.len()];
        let n = graph.total_vertices();
        let k = graph.v2().len();
        let base = if k == 0 {
            graph.graph_state()?
        } else {
            let purity = if rng.random() {
                Purity::Pure
            } else {
                Purity::Mixed
            };
            graph.honest_state(&QuantumState::random(k, purity, &mut rng)?)?
        };
        let purity = if rng.random() {
            Purity::Pure
        } else {
            Purity::Mixed
        };
        let noise = QuantumState::random(n, purity, &mut rng)?;
        let weight = match i % 4 {
            0 => rng.random_range(0.0..0.02),
            1 => rng.random_range(0.0..0.2),
            2 => rng.random_range(0.0..1.0),
            _ => 1.0,
        };
        let rho = base.mix(&noise, weight)?;
        let bound = graph.closest_honest_state_bound(&rho)?;
        worst_slack = worst_slack.min(bound.bound + 1e-9 - bound.distance);
        if bound.bound < 1.0 {
            informative += 1;
        }
    }
    Ok(Outcome::new(
        worst_slack >= 0.0,
        format!("200 states ({informative} with sqrt(2eps) < 1), min slack {worst_slack:.2e}"),
    ))
}

fn gap_formulas() -> sqverify::Result<Outcome> {
    let mut ok = true;
    let mut worst_ratio = f64::INFINITY;
    for x in 4..=1000u64 {
        let p = ProtocolParams::standard(x)?;
        let q = p.optimal_q()?;
        let at = p.with_q(q)?;
        ok &= (at.delta1() - at.delta2()).abs() <= 1e-12;
        let gap = p.protocol_gap()?;
        ok &= (gap - at.gap_at_q()).abs() <= 1e-12;
        ok &= gap >= gap_lower_bound(x);
        worst_ratio = worst_ratio.min(gap / gap_lower_bound(x));
    }
    let p4 = ProtocolParams::standard(4)?;
    let (q4, d4) = (p4.optimal_q()?, p4.protocol_gap()?);
    ok &= (q4 - 3.0 / 43.0).abs() <= 1e-12 && (d4 - 1.0 / 172.0).abs() <= 1e-12;
    Ok(Outcome::new(
        ok,
        format!(
            "|x|=4: q*={q4:.12} delta={d4:.12}; min delta/bound over 4..=1000 = {worst_ratio:.4}"
        ),
    ))
}

fn soundness_oracle() -> sqverify::Result<Outcome> {
    let circuit = VerifierCircuit::soundness_toy();
    let b = circuit.max_acceptance()?;
    let pattern = compile(&circuit)?;
    let epsilons = [0.3, 0.2, 0.1, 0.05, 0.02];
    let mut ok = (b - 0.5).abs() <= 1e-12 && pattern.graph().v1().len() == 4;
    let mut notes = Vec::new();
    for &eps in &epsilons {
        let base = ProtocolParams::new(0.0, eps, 1.0, 0.5, 4)?;
        let q = base.optimal_q()?.min(1.0);
        let lambda = optimal_cheat(&pattern.acceptance_operator(q)?)?.lambda_max;
        let bound = epsilons
            .iter()
            .map(|&e| {
                let p = base.with_epsilon(e)?.with_q(q)?;
                Ok(p.beta1().max(p.beta2()))
            })
            .collect::<sqverify::Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        ok &= lambda <= bound + 1e-9;
        notes.push(format!("q={q:.4}: {lambda:.4}<={bound:.4}"));
    }
    Ok(Outcome::new(ok, format!("b={b:.3}; {}", notes.join(", "))))
}

fn random_circuit(rng: &mut ChaCha8Rng) -> sqverify::Result<(VerifierCircuit, MeasurementPattern)> {
    loop {
        let n = rng.random_range(1..=2usize);
        let n_witness = rng.random_range(1..=n);
        let mut gates = Vec::new();
        for _ in 0..rng.random_range(1..=4) {
            if n == 2 && rng.random_bool(0.3) {
                gates.push(Gate::cz(0, 1));
            } else {
                let theta = if rng.random_bool(0.3) {
                    rng.random_range(0..8) as f64 * PI / 4.0
                } else {
                    rng.random_range(-PI..PI)
                };
                gates.push(Gate::j(rng.random_range(0..n), theta));
            }
        }
        let circuit =
            VerifierCircuit::new(n_witness, n - n_witness, gates, rng.random_range(0..n))?
                .with_accept_value(rng.random_range(0..=1))?;
        match compile(&circuit) {
            Ok(p) if p.total_vertices() <= 9 => return Ok((circuit, p)),
            _ => continue,
        }
    }
}

fn mbqc_equivalence() -> sqverify::Result<Outcome> {
    let shots = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst_fid = 1.0f64;
    let mut worst_z = 0.0f64;
    let mut ok = true;
    for _ in 0..50 {
        let (circuit, pattern) = random_circuit(&mut rng)?;
        let witness = QuantumState::random(circuit.n_witness(), Purity::Pure, &mut rng)?;
        let (fid, total) = branch_fidelity(&circuit, &pattern, &witness)?;
        worst_fid = worst_fid.min(fid);
        ok &= fid >= 1.0 - 1e-9 && (total - 1.0).abs() <= 1e-9;
        let honest = pattern.honest_prover_state(&witness)?;
        let exact = circuit.acceptance_probability(&witness)?;
        let accepted = run_shots(SeedStream::new(rng.random()), shots, true, |_, r| {
            pattern.execute(&honest, r).map(|(a, _)| a)
        })
        .into_iter()
        .collect::<sqverify::Result<Vec<bool>>>()?;
        let rate = accepted.iter().filter(|&&a| a).count() as f64 / shots as f64;
        let s = sigma(exact, shots);
        let dev = (rate - exact).abs();
        ok &= dev <= 4.0 * s + 1e-12;
        if s > 0.0 {
            worst_z = worst_z.max(dev / s);
        }
    }

    let toy = VerifierCircuit::perfect_toy();
    let pattern = compile(&toy)?;
    let minus = QuantumState::from_amplitudes(
        1,
        vec![
            sqverify::linalg::c(1.0 / 2f64.sqrt(), 0.0),
            sqverify::linalg::c(-1.0 / 2f64.sqrt(), 0.0),
        ],
    )?;
    let honest = pattern.honest_prover_state(&minus)?;
    let params = ProtocolParams::new(0.5, 0.05, 1.0, 0.5, 4)?;
    let rounds = run_shots(SeedStream::new(7), shots, true, |_, r| {
        arthur_verify(&pattern, &params, &honest, r).map(|round| round.accepted)
    })
    .into_iter()
    .collect::<sqverify::Result<Vec<bool>>>()?;
    let perfect = rounds.iter().all(|&a| a);
    ok &= perfect && (params.alpha() - 1.0).abs() <= 1e-15;
    ok &= (pattern.exact_acceptance(&honest, params.q)? - 1.0).abs() <= 1e-12;
    Ok(Outcome::new(
        ok,
        format!(
            "50 circuits: min branch fidelity {:.12}, max |z| {worst_z:.2}; perfect toy {} accepts",
            worst_fid,
            rounds.iter().filter(|&&a| a).count()
        ),
    ))
}

fn hamiltonians() -> sqverify::Result<Vec<(&'static str, LocalHamiltonian)>> {
    Ok(vec![
        ("ZZ", toy_zz()?),
        ("X+ZZ", toy_x_plus_zz()?),
        ("TFIM-4", tfim_chain(4, 1.0, 1.0)?),
        ("Heisenberg-4", heisenberg_chain(4, 1.0)?),
    ])
}

fn lh_estimator() -> sqverify::Result<Outcome> {
    let shots = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, h) in hamiltonians()? {
        let ens = assemble_ensemble(&h)?;
        let w = ens.total_weight();
        let dense = h.dense()?;
        ok &= max_abs_diff(&ens.reconstruct()?, &dense) <= 1e-10;

        for i in 0..20 {
            let purity = if i % 2 == 0 {
                Purity::Pure
            } else {
                Purity::Mixed
            };
            let state = QuantumState::random(h.n(), purity, &mut rng)?;
            let energy = state.expectation_operator(&dense)?;
            let expected = 1.0 - (energy + w) / (2.0 * w);
            ok &= (exact_acceptance(&state, &ens)? - expected).abs() <= 1e-10;
        }

        let (values, vectors) = h.spectrum()?;
        let ground = QuantumState::from_unnormalized(h.n(), vectors.column(0).into_owned())?;
        let est = estimate_energy(&ground, &ens, shots, SeedStream::new(rng.random()), true)?;
        ok &= (est.energy - values[0]).abs() <= 4.0 * est.std_error;

        let promise = EnergyPromise::from_spectrum(&h)?;
        let gap = lh_gap(&ens, &promise)?;
        let excited_index = values
            .iter()
            .position(|&v| v > promise.e_a + 1e-9)
            .unwrap_or(0);
        let excited =
            QuantumState::from_unnormalized(h.n(), vectors.column(excited_index).into_owned())?;
        let p_yes = exact_acceptance(&ground, &ens)?;
        let p_no = exact_acceptance(&excited, &ens)?;
        ok &= p_yes - p_no >= gap - 1e-10;
        let stream = SeedStream::new(rng.random());
        let yes_mc = 1.0 - estimate_energy(&ground, &ens, shots, stream.split(0), true)?.mean_r;
        let no_mc = 1.0 - estimate_energy(&excited, &ens, shots, stream.split(1), true)?.mean_r;
        let s = (sigma(p_yes, shots).powi(2) + sigma(p_no, shots).powi(2)).sqrt();
        ok &= yes_mc - no_mc >= gap - 4.0 * s;
        notes.push(format!(
            "{name}: E={:.4}±{:.4} (exact {:.4}), gap {:.4}>={gap:.4}",
            est.energy,
            est.std_error,
            values[0],
            p_yes - p_no
        ));

        if name == "X+ZZ" {
            ok &= (p_yes - (0.5 + 2f64.sqrt() / 4.0)).abs() <= 1e-10;
        }
    }
    Ok(Outcome::new(ok, notes.join("; ")))
}

fn lh_imperfect_completeness() -> sqverify::Result<Outcome> {
    let h = toy_x_plus_zz()?;
    let ens = assemble_ensemble(&h)?;
    let (_, vectors) = h.spectrum()?;
    let ground = QuantumState::from_unnormalized(2, vectors.column(0).into_owned())?;
    let p = exact_acceptance(&ground, &ens)?;
    Ok(Outcome::new(
        p < 1.0,
        format!("ground-state acceptance {p:.12} < 1"),
    ))
}

fn reproducibility() -> sqverify::Result<Outcome> {
    let specs = {
        let mut stab = ExperimentSpec::new("stab", Protocol::StabOnly, 5_000, 42);
        stab.graph = Some(VerificationGraph::witness_grid(2, 2)?);
        stab.noise = 0.1;
        let mut mbqc = ExperimentSpec::new("mbqc", Protocol::Mbqc, 5_000, 42);
        mbqc.circuit = Some(VerifierCircuit::soundness_toy());
        mbqc.params = Some(ProtocolParams::new(0.5, 0.05, 1.0, 0.5, 4)?);
        let mut lh = ExperimentSpec::new("lh", Protocol::Lh, 5_000, 42);
        lh.hamiltonian = Some(tfim_chain(4, 1.0, 1.0)?);
        lh.state = StateChoice::Ground;
        lh.noise = 0.05;
        vec![stab, mbqc, lh]
    };
    let render = |parallel: bool| -> sqverify::Result<String> {
        let mut rows = Vec::new();
        for spec in &specs {
            let mut spec = spec.clone();
            spec.parallel = parallel;
            rows.extend(run(&spec)?);
        }
        report_to_string(&rows, Format::Csv)
    };
    let first = render(true)?;
    let second = render(true)?;
    let serial = render(false)?;
    Ok(Outcome::new(
        first == second && first == serial,
        format!(
            "{} bytes; parallel runs and serial run identical",
            first.len()
        ),
    ))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("honest completeness", honest_completeness),
        ("stabilizer identity", stabilizer_identity),
        ("trace-distance bound", trace_distance_bound),
        ("gap formulas", gap_formulas),
        ("soundness oracle", soundness_oracle),
        ("MBQC equivalence", mbqc_equivalence),
        ("LH estimator", lh_estimator),
        ("LH imperfect completeness", lh_imperfect_completeness),
        ("reproducibility", reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let tag = if outcome.ok { "PASS" } else { "FAIL" };
        println!(
            "criterion {} [{tag}] {name} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.ok {
            failures += 1;
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}

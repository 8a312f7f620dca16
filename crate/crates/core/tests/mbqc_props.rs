use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqverify::linalg::{eigvalsh, hermitian_deviation};
use sqverify::mbqc::{
    arthur_verify, branch_fidelity, compile, optimal_cheat, Gate, MeasurementPattern,
    ProtocolParams, VerifierCircuit,
};
use sqverify::rng::{run_shots, SeedStream};
use sqverify::state::{Purity, QuantumState};

fn sample_circuits() -> Vec<VerifierCircuit> {
    vec![
        VerifierCircuit::soundness_toy(),
        VerifierCircuit::perfect_toy(),
        VerifierCircuit::new(1, 0, [Gate::rz(0, 0.7), Gate::h(0)].concat(), 0).unwrap(),
        VerifierCircuit::new(
            2,
            0,
            vec![Gate::j(0, 0.3), Gate::cz(0, 1), Gate::j(1, -1.1)],
            1,
        )
        .unwrap(),
        VerifierCircuit::new(
            1,
            1,
            vec![Gate::cz(0, 1), Gate::j(0, PI / 4.0), Gate::j(1, 2.0)],
            0,
        )
        .unwrap()
        .with_accept_value(0)
        .unwrap(),
        VerifierCircuit::new(
            2,
            1,
            vec![Gate::cz(0, 2), Gate::j(2, 0.5), Gate::cz(1, 2)],
            2,
        )
        .unwrap(),
    ]
}

#[test]
fn patterns_reproduce_circuits_for_many_witnesses() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for circuit in sample_circuits() {
        let pattern = compile(&circuit).unwrap();
        for i in 0..20 {
            let purity = if i % 4 == 3 {
                Purity::Mixed
            } else {
                Purity::Pure
            };
            let w = QuantumState::random(circuit.n_witness(), purity, &mut rng).unwrap();
            let (worst, total) = branch_fidelity(&circuit, &pattern, &w).unwrap();
            assert!(worst >= 1.0 - 1e-9, "fidelity {worst} for {circuit:?}");
            assert!((total - 1.0).abs() <= 1e-9);
            let honest = pattern.honest_prover_state(&w).unwrap();
            let exact = pattern.exact_acceptance(&honest, 1.0).unwrap();
            assert!((exact - circuit.acceptance_probability(&w).unwrap()).abs() <= 1e-9);
        }
    }
}

fn monte_carlo_acceptance(
    pattern: &MeasurementPattern,
    params: &ProtocolParams,
    rho: &QuantumState,
    seed: u64,
) -> f64 {
    let shots = 100_000;
    let accepted = run_shots(SeedStream::new(seed), shots, true, |_, r| {
        arthur_verify(pattern, params, rho, r).unwrap().accepted
    });
    accepted.iter().filter(|&&a| a).count() as f64 / shots as f64
}

#[test]
fn arthur_verify_matches_trace_formula() {
    let shots = 100_000.0;
    let circuit = VerifierCircuit::soundness_toy();
    let pattern = compile(&circuit).unwrap();
    let params = ProtocolParams::new(0.4, 0.05, 1.0, 0.5, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = pattern.total_vertices();
    let w = QuantumState::random(1, Purity::Pure, &mut rng).unwrap();
    let states = [
        QuantumState::random(n, Purity::Mixed, &mut rng).unwrap(),
        QuantumState::random(n, Purity::Pure, &mut rng).unwrap(),
        pattern
            .honest_prover_state(&w)
            .unwrap()
            .mix(
                &QuantumState::random(n, Purity::Pure, &mut rng).unwrap(),
                0.3,
            )
            .unwrap(),
    ];
    for (i, rho) in states.iter().enumerate() {
        let exact = pattern.exact_acceptance(rho, params.q).unwrap();
        let rate = monte_carlo_acceptance(&pattern, &params, rho, 100 + i as u64);
        let sigma = (exact * (1.0 - exact) / shots).sqrt();
        assert!(
            (rate - exact).abs() <= 4.0 * sigma,
            "state {i}: rate {rate} exact {exact}"
        );
    }
}

#[test]
fn near_graph_states_obey_the_circuit_branch_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let circuits = [
        VerifierCircuit::soundness_toy(),
        VerifierCircuit::new(1, 1, vec![Gate::cz(0, 1), Gate::j(1, 0.4)], 1).unwrap(),
    ];
    for circuit in circuits {
        let b = circuit.max_acceptance().unwrap();
        let pattern = compile(&circuit).unwrap();
        let e = pattern.acceptance_operator(1.0).unwrap();
        let graph = pattern.graph();
        let n = pattern.total_vertices();
        for i in 0..60 {
            let purity = if i % 2 == 0 {
                Purity::Pure
            } else {
                Purity::Mixed
            };
            let w = QuantumState::random(1, purity, &mut rng).unwrap();
            let noise = QuantumState::random(n, Purity::Pure, &mut rng).unwrap();
            let t = [0.0, 0.01, 0.05, 0.2, 0.6][i % 5];
            let rho = pattern
                .honest_prover_state(&w)
                .unwrap()
                .mix(&noise, t)
                .unwrap();
            let eps = (1.0 - graph.exact_pass_probability(&rho).unwrap()).max(0.0);
            let accept = rho.expectation_operator(&e).unwrap();
            assert!(
                accept <= b + (2.0 * eps).sqrt() + 1e-9,
                "accept {accept} b {b} eps {eps}"
            );
        }
    }
}

#[test]
fn acceptance_operator_is_an_effect_and_convex_in_q() {
    let pattern = compile(&VerifierCircuit::soundness_toy()).unwrap();
    let mut lambdas = Vec::new();
    for i in 0..=10 {
        let q = i as f64 / 10.0;
        let a = pattern.acceptance_operator(q).unwrap();
        assert!(hermitian_deviation(&a) <= 1e-12);
        let values = eigvalsh(&a);
        assert!(values.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        lambdas.push(optimal_cheat(&a).unwrap().lambda_max);
    }
    for i in 1..10 {
        assert!(lambdas[i] <= 0.5 * (lambdas[i - 1] + lambdas[i + 1]) + 1e-12);
    }
    assert!((lambdas[0] - 1.0).abs() <= 1e-12);
    // without the stabilizer test a non-graph state fools the computation branch
    assert!((lambdas[10] - 1.0).abs() <= 1e-12);
    assert!(lambdas[5] < 1.0 - 1e-3);
}

#[test]
fn perfect_completeness_survives_compilation() {
    let circuit = VerifierCircuit::perfect_toy();
    let pattern = compile(&circuit).unwrap();
    let minus = QuantumState::from_amplitudes(
        1,
        vec![
            sqverify::linalg::c(1.0 / 2f64.sqrt(), 0.0),
            sqverify::linalg::c(-1.0 / 2f64.sqrt(), 0.0),
        ],
    )
    .unwrap();
    assert!((circuit.max_acceptance().unwrap() - 1.0).abs() <= 1e-12);
    let honest = pattern.honest_prover_state(&minus).unwrap();
    for q in [0.0, 0.25, 0.7, 1.0] {
        assert!((pattern.exact_acceptance(&honest, q).unwrap() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn pattern_json_round_trip() {
    let pattern = compile(&VerifierCircuit::soundness_toy()).unwrap();
    let text = pattern.to_json();
    let back: MeasurementPattern = serde_json::from_str(&text).unwrap();
    assert_eq!(back.order(), pattern.order());
    assert_eq!(back.to_json(), text);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn optimal_q_equalizes_the_two_gaps(eps in 1e-4f64..0.45, b in 0.0f64..0.6, slack in 0.01f64..1.0) {
        let a = b + slack * (1.0 - b);
        prop_assume!(a > b);
        let base = ProtocolParams::new(0.0, eps, a, b, 4).unwrap();
        let q = base.optimal_q();
        prop_assume!(matches!(q, Ok(q) if q <= 1.0));
        let q = q.unwrap();
        let at = base.with_q(q).unwrap();
        prop_assert!((at.delta1() - at.delta2()).abs() <= 1e-12);
        prop_assert!((at.alpha() - at.beta1() - (at.alpha() - at.beta2())).abs() <= 1e-12);
        if let Ok(gap) = base.protocol_gap() {
            prop_assert!((gap - at.gap_at_q()).abs() <= 1e-12);
            for i in 0..=20 {
                let other = base.with_q(i as f64 / 20.0).unwrap();
                prop_assert!(other.gap_at_q() <= gap + 1e-12);
            }
        }
    }

    #[test]
    fn standard_gap_beats_the_polynomial_bound(x in 4u64..=1000) {
        let p = ProtocolParams::standard(x).unwrap();
        prop_assert!(p.protocol_gap().unwrap() >= sqverify::mbqc::gap_lower_bound(x));
    }
}

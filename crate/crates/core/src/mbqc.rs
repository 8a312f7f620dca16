//! Verifier circuits over `{J(θ), CZ}`, their compilation to one-way
//! measurement patterns, and the combined test-or-compute protocol.
//!
//! `J(θ) = H·R_z(θ)` with `R_z(θ) = diag(1, e^{iθ})`. One `J` step entangles
//! the current vertex `i` of a logical qubit with a fresh vertex `o` and
//! measures `i` in the X–Y plane at angle `-θ`; outcome `s` leaves
//! `X^s J(θ)|ψ>` on `o`. Pauli byproducts are tracked as sets of earlier
//! outcomes and folded into later angles as `(-1)^s φ + tπ`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VerificationGraph;
use crate::linalg::{c, kron, permute_qubits, CMatrix};
use crate::state::{
    fidelity, hadamard, phase_gate, top_eigenpair, Gate2, MeasurementBasis, Outcome, QuantumState,
};

pub const MAX_LOGICAL_QUBITS: usize = 3;
pub const MAX_PATTERN_VERTICES: usize = 12;
/// Dense acceptance operators are built up to this many qubits.
pub const MAX_OPERATOR_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "g")]
pub enum Gate {
    J { q: usize, theta: f64 },
    CZ { q: [usize; 2] },
}

impl Gate {
    pub fn j(q: usize, theta: f64) -> Self {
        Gate::J { q, theta }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Gate::CZ { q: [a, b] }
    }

    /// `H = J(0)`.
    pub fn h(q: usize) -> Vec<Gate> {
        vec![Gate::j(q, 0.0)]
    }

    /// `R_z(θ) = J(0)·J(θ)`, i.e. `J(θ)` applied first.
    pub fn rz(q: usize, theta: f64) -> Vec<Gate> {
        vec![Gate::j(q, theta), Gate::j(q, 0.0)]
    }
}

pub fn j_matrix(theta: f64) -> Gate2 {
    hadamard() * phase_gate(theta)
}

fn default_accept_value() -> u8 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitFile {
    pub n_witness: usize,
    #[serde(default)]
    pub m_ancilla: usize,
    pub gates: Vec<Gate>,
    pub accept_qubit: usize,
    #[serde(default = "default_accept_value")]
    pub accept_value: u8,
}

/// Logical qubits `0..n_witness` carry the witness, the remaining
/// `m_ancilla` start in `|+>`. Acceptance is a computational-basis readout
/// of `accept_qubit` equal to `accept_value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitFile", into = "CircuitFile")]
pub struct VerifierCircuit {
    n_witness: usize,
    m_ancilla: usize,
    gates: Vec<Gate>,
    accept_qubit: usize,
    accept_value: u8,
}

impl TryFrom<CircuitFile> for VerifierCircuit {
    type Error = Error;

    fn try_from(f: CircuitFile) -> Result<Self> {
        let circuit = VerifierCircuit {
            n_witness: f.n_witness,
            m_ancilla: f.m_ancilla,
            gates: f.gates,
            accept_qubit: f.accept_qubit,
            accept_value: f.accept_value,
        };
        circuit.validate()?;
        Ok(circuit)
    }
}

impl From<VerifierCircuit> for CircuitFile {
    fn from(c: VerifierCircuit) -> Self {
        CircuitFile {
            n_witness: c.n_witness,
            m_ancilla: c.m_ancilla,
            gates: c.gates,
            accept_qubit: c.accept_qubit,
            accept_value: c.accept_value,
        }
    }
}

impl VerifierCircuit {
    pub fn new(
        n_witness: usize,
        m_ancilla: usize,
        gates: Vec<Gate>,
        accept_qubit: usize,
    ) -> Result<Self> {
        VerifierCircuit::try_from(CircuitFile {
            n_witness,
            m_ancilla,
            gates,
            accept_qubit,
            accept_value: 1,
        })
    }

    pub fn with_accept_value(mut self, value: u8) -> Result<Self> {
        self.accept_value = value;
        self.validate()?;
        Ok(self)
    }

    /// One witness qubit, one ancilla; every witness is accepted with
    /// probability exactly 1/2. Compiles onto four resource vertices.
    pub fn soundness_toy() -> Self {
        let gates = vec![
            Gate::j(0, 0.0),
            Gate::j(0, 0.0),
            Gate::cz(0, 1),
            Gate::j(1, PI / 2.0),
        ];
        VerifierCircuit::new(1, 1, gates, 1).expect("valid preset")
    }

    /// `H` on one witness qubit, accepting on outcome 1: the witness `|->`
    /// is accepted with certainty.
    pub fn perfect_toy() -> Self {
        VerifierCircuit::new(1, 0, Gate::h(0), 0).expect("valid preset")
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_logical();
        if self.n_witness == 0 {
            return Err(Error::InvalidCircuit(
                "at least one witness qubit is required".into(),
            ));
        }
        if n > MAX_LOGICAL_QUBITS {
            return Err(Error::TooManyQubits {
                what: "verifier circuit",
                n,
                max: MAX_LOGICAL_QUBITS,
            });
        }
        for (k, gate) in self.gates.iter().enumerate() {
            match *gate {
                Gate::J { q, theta } => {
                    if q >= n {
                        return Err(Error::InvalidCircuit(format!(
                            "gate {k}: qubit {q} out of range for {n} qubits"
                        )));
                    }
                    if !theta.is_finite() {
                        return Err(Error::InvalidCircuit(format!(
                            "gate {k}: angle is not finite"
                        )));
                    }
                }
                Gate::CZ { q: [a, b] } => {
                    if a >= n || b >= n {
                        return Err(Error::InvalidCircuit(format!(
                            "gate {k}: qubits {a},{b} out of range for {n} qubits"
                        )));
                    }
                    if a == b {
                        return Err(Error::InvalidCircuit(format!(
                            "gate {k}: CZ on a single qubit"
                        )));
                    }
                }
            }
        }
        if self.accept_qubit >= n {
            return Err(Error::InvalidCircuit(format!(
                "accept qubit {} out of range for {n} qubits",
                self.accept_qubit
            )));
        }
        if self.accept_value > 1 {
            return Err(Error::InvalidCircuit("accept value must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::error::read_json(path.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serializes")
    }

    pub fn n_logical(&self) -> usize {
        self.n_witness + self.m_ancilla
    }

    pub fn n_witness(&self) -> usize {
        self.n_witness
    }

    pub fn m_ancilla(&self) -> usize {
        self.m_ancilla
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn accept_qubit(&self) -> usize {
        self.accept_qubit
    }

    pub fn accept_value(&self) -> u8 {
        self.accept_value
    }

    fn check_witness(&self, witness: &QuantumState) -> Result<()> {
        if witness.n() != self.n_witness {
            return Err(Error::SizeMismatch {
                expected: self.n_witness,
                found: witness.n(),
            });
        }
        Ok(())
    }

    /// `witness ⊗ |+>^m`.
    pub fn input_state(&self, witness: &QuantumState) -> Result<QuantumState> {
        self.check_witness(witness)?;
        if self.m_ancilla == 0 {
            return Ok(witness.clone());
        }
        witness.tensor(&QuantumState::plus_state(self.m_ancilla)?)
    }

    /// Applies the gate list to a state on the logical register.
    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.n() != self.n_logical() {
            return Err(Error::SizeMismatch {
                expected: self.n_logical(),
                found: state.n(),
            });
        }
        let mut s = state.clone();
        for gate in &self.gates {
            s = match *gate {
                Gate::J { q, theta } => s.apply_single_qubit_gate(q, &j_matrix(theta))?,
                Gate::CZ { q: [a, b] } => s.apply_cz(a, b)?,
            };
        }
        Ok(s)
    }

    pub fn output_state(&self, witness: &QuantumState) -> Result<QuantumState> {
        self.apply(&self.input_state(witness)?)
    }

    /// Dense unitary on the logical register.
    pub fn unitary(&self) -> Result<CMatrix> {
        let n = self.n_logical();
        let dim = 1usize << n;
        let mut u = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let bits: String = (0..n)
                .map(|q| {
                    if (col >> (n - 1 - q)) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            let out = self.apply(&QuantumState::basis_state(&bits)?)?;
            let amps = out
                .amplitudes()
                .expect("unitary evolution keeps pure states");
            u.set_column(col, amps);
        }
        Ok(u)
    }

    fn accept_outcome(&self) -> Outcome {
        Outcome::from_bit(self.accept_value)
    }

    pub fn acceptance_probability(&self, witness: &QuantumState) -> Result<f64> {
        self.output_state(witness)?.outcome_probability(
            self.accept_qubit,
            &MeasurementBasis::Z,
            self.accept_outcome(),
        )
    }

    /// Operator `E` on the witness register with `Tr(E ξ)` the acceptance
    /// probability for witness `ξ`.
    pub fn witness_acceptance_operator(&self) -> Result<CMatrix> {
        let k = self.n_witness;
        let wdim = 1usize << k;
        let outputs: Vec<_> = (0..wdim)
            .map(|i| {
                let bits: String = (0..k)
                    .map(|q| {
                        if (i >> (k - 1 - q)) & 1 == 1 {
                            '1'
                        } else {
                            '0'
                        }
                    })
                    .collect();
                let s = self.output_state(&QuantumState::basis_state(&bits)?)?;
                Ok(s.amplitudes().expect("pure").clone())
            })
            .collect::<Result<_>>()?;
        let n = self.n_logical();
        let shift = n - 1 - self.accept_qubit;
        let want = self.accept_value as usize;
        Ok(CMatrix::from_fn(wdim, wdim, |i, j| {
            (0..1usize << n)
                .filter(|idx| (idx >> shift) & 1 == want)
                .map(|idx| outputs[i][idx].conj() * outputs[j][idx])
                .sum()
        }))
    }

    /// Largest acceptance probability over all witnesses.
    pub fn max_acceptance(&self) -> Result<f64> {
        Ok(top_eigenpair(&self.witness_acceptance_operator()?).0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternFile {
    pub graph: VerificationGraph,
    pub order: Vec<usize>,
    pub angle: BTreeMap<usize, f64>,
    pub s_deps: BTreeMap<usize, Vec<usize>>,
    pub t_deps: BTreeMap<usize, Vec<usize>>,
    pub output_vertices: Vec<usize>,
    /// Per logical qubit, outcomes whose parity gives the final `X` byproduct.
    pub output_x: Vec<Vec<usize>>,
    /// Same for the final `Z` byproduct.
    pub output_z: Vec<Vec<usize>>,
    pub accept_qubit: usize,
    pub accept_value: u8,
}

/// A compiled one-way computation. Vertices in `order` are measured in the
/// X–Y plane; `output_vertices[l]` ends up holding logical qubit `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatternFile", into = "PatternFile")]
pub struct MeasurementPattern {
    file: PatternFile,
}

impl TryFrom<PatternFile> for MeasurementPattern {
    type Error = Error;

    fn try_from(f: PatternFile) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidCircuit(format!("pattern: {msg}")));
        let total = f.graph.total_vertices();
        if total > MAX_PATTERN_VERTICES {
            return Err(Error::TooManyQubits {
                what: "measurement pattern",
                n: total,
                max: MAX_PATTERN_VERTICES,
            });
        }
        let sequence: Vec<usize> = f.order.iter().chain(&f.output_vertices).copied().collect();
        if sequence != f.graph.arrival_order() {
            return bad(
                "measurement order followed by outputs must equal the arrival order".into(),
            );
        }
        let mut position = vec![usize::MAX; total];
        for (i, &v) in f.order.iter().enumerate() {
            position[v] = i;
        }
        for &v in &f.order {
            match f.angle.get(&v) {
                Some(a) if a.is_finite() => {}
                _ => return bad(format!("vertex {v} has no finite angle")),
            }
            for deps in [&f.s_deps, &f.t_deps] {
                for &d in deps.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                    if d >= total || position[d] >= position[v] {
                        return bad(format!(
                            "vertex {v} depends on {d}, which is not measured earlier"
                        ));
                    }
                }
            }
        }
        let n_out = f.output_vertices.len();
        if f.output_x.len() != n_out || f.output_z.len() != n_out {
            return bad("one byproduct set per output is required".into());
        }
        for &d in f.output_x.iter().chain(&f.output_z).flatten() {
            if d >= total || position[d] == usize::MAX {
                return bad(format!("byproduct refers to unmeasured vertex {d}"));
            }
        }
        if f.accept_qubit >= n_out || f.accept_value > 1 {
            return bad("accept qubit or value out of range".into());
        }
        Ok(MeasurementPattern { file: f })
    }
}

impl From<MeasurementPattern> for PatternFile {
    fn from(p: MeasurementPattern) -> Self {
        p.file
    }
}

/// One adaptive measurement: vertex, angle actually used, outcome bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub vertex: usize,
    pub angle: f64,
    pub bit: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternTranscript {
    pub measurements: Vec<MeasurementRecord>,
    pub accept_vertex: usize,
    pub raw_bit: u8,
    /// Readout after removing the `X` byproduct.
    pub corrected_bit: u8,
    pub accepted: bool,
}

/// One outcome branch of a pattern with its corrected logical output.
#[derive(Clone, Debug)]
pub struct PatternBranch {
    pub bits: Vec<(usize, u8)>,
    pub probability: f64,
    pub output: QuantumState,
}

fn parity(deps: &[usize], bits: &[u8]) -> u8 {
    deps.iter().fold(0, |acc, &d| acc ^ bits[d])
}

fn pauli_x() -> Gate2 {
    Gate2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

fn pauli_z() -> Gate2 {
    Gate2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

fn to_dynamic(g: &Gate2) -> CMatrix {
    CMatrix::from_fn(2, 2, |r, col| g[(r, col)])
}

impl MeasurementPattern {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::error::read_json(path.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pattern serializes")
    }

    pub fn graph(&self) -> &VerificationGraph {
        &self.file.graph
    }

    pub fn order(&self) -> &[usize] {
        &self.file.order
    }

    pub fn angle(&self, v: usize) -> Option<f64> {
        self.file.angle.get(&v).copied()
    }

    pub fn s_deps(&self, v: usize) -> &[usize] {
        self.file.s_deps.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn t_deps(&self, v: usize) -> &[usize] {
        self.file.t_deps.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn output_vertices(&self) -> &[usize] {
        &self.file.output_vertices
    }

    pub fn output_byproducts(&self, logical: usize) -> (&[usize], &[usize]) {
        (&self.file.output_x[logical], &self.file.output_z[logical])
    }

    pub fn accept_vertex(&self) -> usize {
        self.file.output_vertices[self.file.accept_qubit]
    }

    pub fn total_vertices(&self) -> usize {
        self.file.graph.total_vertices()
    }

    /// `(-1)^s φ + tπ` given the outcome bits seen so far (indexed by vertex).
    pub fn adapted_angle(&self, v: usize, bits: &[u8]) -> f64 {
        let phi = self.file.angle[&v];
        let s = parity(self.s_deps(v), bits);
        let t = parity(self.t_deps(v), bits);
        let signed = if s == 1 { -phi } else { phi };
        signed + f64::from(t) * PI
    }

    fn check_state(&self, state: &QuantumState) -> Result<()> {
        if state.n() != self.total_vertices() {
            return Err(Error::SizeMismatch {
                expected: self.total_vertices(),
                found: state.n(),
            });
        }
        Ok(())
    }

    fn corrected_accept(&self, raw: u8, bits: &[u8]) -> u8 {
        raw ^ parity(&self.file.output_x[self.file.accept_qubit], bits)
    }

    /// `W (|G> ⊗ witness)`, the state an honest prover sends.
    pub fn honest_prover_state(&self, witness: &QuantumState) -> Result<QuantumState> {
        self.file.graph.honest_state(witness)
    }

    /// Runs the pattern once on `state` (qubit index = vertex id), measuring
    /// one vertex at a time and discarding it, then reads out the accept
    /// vertex in the computational basis.
    pub fn execute<R: Rng + ?Sized>(
        &self,
        state: &QuantumState,
        rng: &mut R,
    ) -> Result<(bool, PatternTranscript)> {
        self.check_state(state)?;
        let mut bits = vec![0u8; self.total_vertices()];
        let mut live: Vec<usize> = (0..self.total_vertices()).collect();
        let mut owned: Option<QuantumState> = None;
        let mut measurements = Vec::with_capacity(self.file.order.len());
        for &v in &self.file.order {
            let angle = self.adapted_angle(v, &bits);
            let pos = live.iter().position(|&u| u == v).expect("vertex is live");
            let current = owned.as_ref().unwrap_or(state);
            let (outcome, post) =
                current.measure_and_discard(pos, &MeasurementBasis::xy_plane(angle), rng)?;
            live.remove(pos);
            owned = Some(post);
            bits[v] = outcome.bit();
            measurements.push(MeasurementRecord {
                vertex: v,
                angle,
                bit: outcome.bit(),
            });
        }
        let accept_vertex = self.accept_vertex();
        let pos = live
            .iter()
            .position(|&u| u == accept_vertex)
            .expect("output is live");
        let current = owned.as_ref().unwrap_or(state);
        let (outcome, _) = current.measure_and_discard(pos, &MeasurementBasis::Z, rng)?;
        let raw_bit = outcome.bit();
        let corrected_bit = self.corrected_accept(raw_bit, &bits);
        let accepted = corrected_bit == self.file.accept_value;
        Ok((
            accepted,
            PatternTranscript {
                measurements,
                accept_vertex,
                raw_bit,
                corrected_bit,
                accepted,
            },
        ))
    }

    /// Every nonzero-probability outcome branch of the measured vertices,
    /// with byproducts undone so that `output` is the logical register
    /// (logical qubit `l` at position `l`).
    pub fn branches(&self, state: &QuantumState) -> Result<Vec<PatternBranch>> {
        self.check_state(state)?;
        let mut out = Vec::new();
        let mut bits = vec![0u8; self.total_vertices()];
        let live: Vec<usize> = (0..self.total_vertices()).collect();
        self.branch_rec(0, state, live, &mut bits, 1.0, &mut out)?;
        Ok(out)
    }

    fn branch_rec(
        &self,
        depth: usize,
        state: &QuantumState,
        live: Vec<usize>,
        bits: &mut Vec<u8>,
        probability: f64,
        out: &mut Vec<PatternBranch>,
    ) -> Result<()> {
        if depth == self.file.order.len() {
            let mut s = state.clone();
            for (l, &v) in self.file.output_vertices.iter().enumerate() {
                let pos = live.iter().position(|&u| u == v).expect("output is live");
                if parity(&self.file.output_x[l], bits) == 1 {
                    s = s.apply_single_qubit_gate(pos, &pauli_x())?;
                }
                if parity(&self.file.output_z[l], bits) == 1 {
                    s = s.apply_single_qubit_gate(pos, &pauli_z())?;
                }
            }
            let order: Vec<usize> = self
                .file
                .output_vertices
                .iter()
                .map(|v| live.iter().position(|u| u == v).expect("output is live"))
                .collect();
            out.push(PatternBranch {
                bits: self.file.order.iter().map(|&v| (v, bits[v])).collect(),
                probability,
                output: s.reorder(&order)?,
            });
            return Ok(());
        }
        let v = self.file.order[depth];
        let basis = MeasurementBasis::xy_plane(self.adapted_angle(v, bits));
        let pos = live.iter().position(|&u| u == v).expect("vertex is live");
        let mut rest = live.clone();
        rest.remove(pos);
        for outcome in [Outcome::Plus, Outcome::Minus] {
            match state.project_and_discard(pos, &basis, outcome) {
                Ok((p, post)) => {
                    bits[v] = outcome.bit();
                    self.branch_rec(depth + 1, &post, rest.clone(), bits, probability * p, out)?;
                }
                Err(Error::ZeroProbabilityBranch) => {}
                Err(e) => return Err(e),
            }
        }
        bits[v] = 0;
        Ok(())
    }

    /// Dense POVM element `E` of the computation branch over all vertices:
    /// `Tr(E ρ)` is the probability that [`execute`](Self::execute) accepts.
    pub fn circuit_accept_operator(&self) -> Result<CMatrix> {
        let total = self.total_vertices();
        if total > MAX_OPERATOR_QUBITS {
            return Err(Error::TooManyQubits {
                what: "acceptance operator",
                n: total,
                max: MAX_OPERATOR_QUBITS,
            });
        }
        let mut bits = vec![0u8; total];
        let in_sequence = self.accept_rec(0, &mut bits);
        // qubit i of `in_sequence` is vertex (order ++ outputs)[i]
        let sequence: Vec<usize> = self
            .file
            .order
            .iter()
            .chain(&self.file.output_vertices)
            .copied()
            .collect();
        let mut position = vec![0usize; total];
        for (i, &v) in sequence.iter().enumerate() {
            position[v] = i;
        }
        Ok(permute_qubits(&in_sequence, &position))
    }

    fn accept_rec(&self, depth: usize, bits: &mut Vec<u8>) -> CMatrix {
        if depth == self.file.order.len() {
            let want = self.corrected_accept(self.file.accept_value, bits) as usize;
            let mut op = CMatrix::identity(1, 1);
            for (l, _) in self.file.output_vertices.iter().enumerate() {
                let factor = if l == self.file.accept_qubit {
                    let mut p = CMatrix::zeros(2, 2);
                    p[(want, want)] = c(1.0, 0.0);
                    p
                } else {
                    CMatrix::identity(2, 2)
                };
                op = kron(&op, &factor);
            }
            return op;
        }
        let v = self.file.order[depth];
        let rot =
            to_dynamic(&MeasurementBasis::xy_plane(self.adapted_angle(v, bits)).rotation_to_z());
        let mut acc: Option<CMatrix> = None;
        for bit in 0..2u8 {
            let row = rot.row(bit as usize).into_owned();
            let proj = row.adjoint() * &row;
            bits[v] = bit;
            let term = kron(&proj, &self.accept_rec(depth + 1, bits));
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        bits[v] = 0;
        acc.expect("two outcomes")
    }

    /// `A(q) = q·E + (1 − q)·(I + W(|+><+| ⊗ I)W)/2`, so that
    /// `Tr(A ρ)` is the acceptance probability of [`arthur_verify`].
    pub fn acceptance_operator(&self, q: f64) -> Result<CMatrix> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParams(format!("q = {q} outside [0,1]")));
        }
        let e = self.circuit_accept_operator()?;
        let pass = self.file.graph.pass_operator()?;
        Ok(e.scale(q) + pass.scale(1.0 - q))
    }

    /// Exact acceptance of [`arthur_verify`] on `rho`.
    pub fn exact_acceptance(&self, rho: &QuantumState, q: f64) -> Result<f64> {
        rho.expectation_operator(&self.acceptance_operator(q)?)
    }
}

/// Compiles a circuit. Witness qubit `l` enters on vertex `l` of the
/// witness region; ancillas and all intermediate vertices form the
/// resource region. Vertices are measured in creation order of their
/// successors, which is also the arrival order.
pub fn compile(circuit: &VerifierCircuit) -> Result<MeasurementPattern> {
    let n = circuit.n_logical();
    let nw = circuit.n_witness();
    let mut b = Builder {
        current: (0..n).collect(),
        next: n,
        edges: BTreeSet::new(),
        xs: vec![BTreeSet::new(); n],
        zs: vec![BTreeSet::new(); n],
        order: Vec::new(),
        angle: BTreeMap::new(),
        s_deps: BTreeMap::new(),
        t_deps: BTreeMap::new(),
    };
    let in_witness = |v: usize| v < nw;
    for gate in circuit.gates() {
        match *gate {
            Gate::J { q, theta } => b.j(q, theta),
            Gate::CZ { q: [x, y] } => {
                if in_witness(b.current[x]) && in_witness(b.current[y]) {
                    // witness vertices may not be joined directly; move one out
                    b.j(y, 0.0);
                    b.j(y, 0.0);
                }
                b.toggle(b.current[x], b.current[y]);
                let (bx, by) = (b.xs[x].clone(), b.xs[y].clone());
                b.zs[x] = &b.zs[x] ^ &by;
                b.zs[y] = &b.zs[y] ^ &bx;
            }
        }
    }
    for l in 0..n {
        if in_witness(b.current[l]) {
            b.j(l, 0.0);
            b.j(l, 0.0);
        }
    }
    let total = b.next;
    if total > MAX_PATTERN_VERTICES {
        return Err(Error::TooManyQubits {
            what: "compiled pattern",
            n: total,
            max: MAX_PATTERN_VERTICES,
        });
    }
    let outputs = b.current.clone();
    let arrival: Vec<usize> = b.order.iter().chain(&outputs).copied().collect();
    let graph = VerificationGraph::new(
        (nw..total).collect(),
        (0..nw).collect(),
        b.edges.iter().copied().collect(),
        arrival,
    )?;
    MeasurementPattern::try_from(PatternFile {
        graph,
        order: b.order,
        angle: b.angle,
        s_deps: b.s_deps,
        t_deps: b.t_deps,
        output_vertices: outputs,
        output_x: b.xs.iter().map(|s| s.iter().copied().collect()).collect(),
        output_z: b.zs.iter().map(|s| s.iter().copied().collect()).collect(),
        accept_qubit: circuit.accept_qubit(),
        accept_value: circuit.accept_value(),
    })
}

struct Builder {
    current: Vec<usize>,
    next: usize,
    edges: BTreeSet<(usize, usize)>,
    xs: Vec<BTreeSet<usize>>,
    zs: Vec<BTreeSet<usize>>,
    order: Vec<usize>,
    angle: BTreeMap<usize, f64>,
    s_deps: BTreeMap<usize, Vec<usize>>,
    t_deps: BTreeMap<usize, Vec<usize>>,
}

impl Builder {
    fn toggle(&mut self, a: usize, b: usize) {
        let e = (a.min(b), a.max(b));
        if !self.edges.remove(&e) {
            self.edges.insert(e);
        }
    }

    fn j(&mut self, l: usize, theta: f64) {
        let i = self.current[l];
        let o = self.next;
        self.next += 1;
        self.toggle(i, o);
        self.order.push(i);
        self.angle.insert(i, -theta);
        self.s_deps.insert(i, self.xs[l].iter().copied().collect());
        self.t_deps.insert(i, self.zs[l].iter().copied().collect());
        self.zs[l] = std::mem::replace(&mut self.xs[l], BTreeSet::from([i]));
        self.current[l] = o;
    }
}

/// Executes `pattern` once; see [`MeasurementPattern::execute`].
pub fn execute_pattern<R: Rng + ?Sized>(
    pattern: &MeasurementPattern,
    state: &QuantumState,
    rng: &mut R,
) -> Result<(bool, PatternTranscript)> {
    pattern.execute(state, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Computation,
    StabilizerTest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArthurRound {
    pub branch: Branch,
    pub accepted: bool,
}

/// One round of the verifier: with probability `q` run the pattern,
/// otherwise run the stabilizer test on the resource region.
pub fn arthur_verify<R: Rng + ?Sized>(
    pattern: &MeasurementPattern,
    params: &ProtocolParams,
    received: &QuantumState,
    rng: &mut R,
) -> Result<ArthurRound> {
    if rng.random::<f64>() < params.q {
        let (accepted, _) = pattern.execute(received, rng)?;
        Ok(ArthurRound {
            branch: Branch::Computation,
            accepted,
        })
    } else {
        let record = pattern.graph().run_stabilizer_test(received, rng)?;
        Ok(ArthurRound {
            branch: Branch::StabilizerTest,
            accepted: record.passed,
        })
    }
}

#[derive(Clone, Debug)]
pub struct CheatResult {
    pub lambda_max: f64,
    pub state: QuantumState,
}

/// Top eigenpair of an acceptance operator: the best any prover can do.
pub fn optimal_cheat(a: &CMatrix) -> Result<CheatResult> {
    let dim = a.nrows();
    if !dim.is_power_of_two() || a.ncols() != dim {
        return Err(Error::InvalidState(format!(
            "operator of shape {dim}x{}",
            a.ncols()
        )));
    }
    let (lambda, v) = top_eigenpair(a);
    let n = dim.trailing_zeros() as usize;
    Ok(CheatResult {
        lambda_max: lambda.clamp(0.0, 1.0),
        state: QuantumState::from_unnormalized(n, v)?,
    })
}

/// Fidelity of every pattern branch with the direct circuit output.
/// Returns the smallest fidelity and the total branch probability.
pub fn branch_fidelity(
    circuit: &VerifierCircuit,
    pattern: &MeasurementPattern,
    witness: &QuantumState,
) -> Result<(f64, f64)> {
    let expected = circuit.output_state(witness)?;
    let honest = pattern.honest_prover_state(witness)?;
    let mut worst = 1.0f64;
    let mut total = 0.0;
    for branch in pattern.branches(&honest)? {
        worst = worst.min(fidelity(&branch.output, &expected)?);
        total += branch.probability;
    }
    Ok((worst, total))
}

/// Parameters of the combined protocol: branch probability `q`, analysis
/// parameter `ε`, circuit completeness `a` and soundness `b`, and the
/// instance length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub q: f64,
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub x_size: u64,
}

pub const DEFAULT_A: f64 = 2.0 / 3.0;
pub const DEFAULT_B: f64 = 1.0 / 3.0;

/// `1/(48 |x|²)`.
pub fn gap_lower_bound(x_size: u64) -> f64 {
    1.0 / (48.0 * (x_size as f64).powi(2))
}

impl ProtocolParams {
    pub fn new(q: f64, epsilon: f64, a: f64, b: f64, x_size: u64) -> Result<Self> {
        let p = ProtocolParams {
            q,
            epsilon,
            a,
            b,
            x_size,
        };
        p.validate()?;
        Ok(p)
    }

    /// `a = 2/3`, `b = 1/3`, `ε = 1/(2|x|²)` and `q = q*`.
    pub fn standard(x_size: u64) -> Result<Self> {
        if x_size == 0 {
            return Err(Error::InvalidParams("|x| must be positive".into()));
        }
        let epsilon = 1.0 / (2.0 * (x_size as f64).powi(2));
        let p = ProtocolParams::new(0.0, epsilon, DEFAULT_A, DEFAULT_B, x_size)?;
        p.with_q(p.optimal_q()?)
    }

    pub fn with_q(self, q: f64) -> Result<Self> {
        ProtocolParams::new(q, self.epsilon, self.a, self.b, self.x_size)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        ProtocolParams::new(self.q, epsilon, self.a, self.b, self.x_size)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidParams(format!(
                "q = {} outside [0,1]",
                self.q
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon = {} outside (0,1)",
                self.epsilon
            )));
        }
        if !(0.0 <= self.b && self.b < self.a && self.a <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "need 0 <= b < a <= 1 (a = {}, b = {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    fn root(&self) -> f64 {
        (2.0 * self.epsilon).sqrt()
    }

    /// Honest acceptance `q a + (1 − q)`.
    pub fn alpha(&self) -> f64 {
        self.q * self.a + (1.0 - self.q)
    }

    /// Cheating bound for states passing the test with probability above
    /// `1 − ε`: `q (b + √(2ε)) + (1 − q)`.
    pub fn beta1(&self) -> f64 {
        self.q * (self.b + self.root()) + (1.0 - self.q)
    }

    /// Cheating bound for the remaining states: `q + (1 − q)(1 − ε)`.
    pub fn beta2(&self) -> f64 {
        self.q + (1.0 - self.q) * (1.0 - self.epsilon)
    }

    pub fn delta1(&self) -> f64 {
        self.alpha() - self.beta1()
    }

    pub fn delta2(&self) -> f64 {
        self.alpha() - self.beta2()
    }

    /// Worst-case gap `min(Δ₁, Δ₂)` at the current `q`.
    pub fn gap_at_q(&self) -> f64 {
        self.delta1().min(self.delta2())
    }

    fn denominator(&self) -> Result<f64> {
        let d = 1.0 + self.epsilon - self.b - self.root();
        if d <= 0.0 {
            return Err(Error::DegenerateDenominator(self.b + self.root()));
        }
        Ok(d)
    }

    /// `q* = ε / (1 + ε − b − √(2ε))`, where `Δ₁ = Δ₂`.
    pub fn optimal_q(&self) -> Result<f64> {
        Ok(self.epsilon / self.denominator()?)
    }

    /// `Δ(q*) = ε (a − b − √(2ε)) / (1 + ε − b − √(2ε))`.
    pub fn protocol_gap(&self) -> Result<f64> {
        let numerator = self.a - self.b - self.root();
        if numerator <= 0.0 {
            return Err(Error::NegativeGap(numerator));
        }
        Ok(self.epsilon * numerator / self.denominator()?)
    }
}

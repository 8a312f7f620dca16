//! Verification graphs, graph states and the stabilizer test.
//!
//! A [`VerificationGraph`] splits its vertices into a resource region `v1`
//! (prepared in `|+>`) and a witness region `v2`. Vertex ids are qubit
//! indices: the vertices of a graph are exactly `0..v1.len() + v2.len()`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::pauli::{Pauli, PauliString};
use crate::state::{hadamard, MeasurementBasis, QuantumState, MAX_QUBITS};

/// Largest resource size for which the pass probability is computed by
/// summing over all `2^N` stabilizer products.
pub const MAX_ENUMERATION_RESOURCE: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub arrival_order: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_witness_edges: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct VerificationGraph {
    v1: Vec<usize>,
    v2: Vec<usize>,
    edges: Vec<(usize, usize)>,
    arrival_order: Vec<usize>,
    allow_witness_edges: bool,
    neighbors: Vec<Vec<usize>>,
    resource: Vec<bool>,
}

impl TryFrom<GraphFile> for VerificationGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        VerificationGraph::build(
            f.v1,
            f.v2,
            f.edges.into_iter().map(|[a, b]| (a, b)).collect(),
            f.arrival_order,
            f.allow_witness_edges,
        )
    }
}

impl From<VerificationGraph> for GraphFile {
    fn from(g: VerificationGraph) -> Self {
        GraphFile {
            v1: g.v1,
            v2: g.v2,
            edges: g.edges.into_iter().map(|(a, b)| [a, b]).collect(),
            arrival_order: g.arrival_order,
            allow_witness_edges: g.allow_witness_edges,
        }
    }
}

impl VerificationGraph {
    pub fn new(
        v1: Vec<usize>,
        v2: Vec<usize>,
        edges: Vec<(usize, usize)>,
        arrival_order: Vec<usize>,
    ) -> Result<Self> {
        VerificationGraph::build(v1, v2, edges, arrival_order, false)
    }

    /// Like [`new`](Self::new) but permits edges inside the witness region.
    pub fn with_witness_edges(
        v1: Vec<usize>,
        v2: Vec<usize>,
        edges: Vec<(usize, usize)>,
        arrival_order: Vec<usize>,
    ) -> Result<Self> {
        VerificationGraph::build(v1, v2, edges, arrival_order, true)
    }

    /// Graph with every vertex in the resource region, arriving in id order.
    pub fn resource_only(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        VerificationGraph::new(
            (0..vertices).collect(),
            Vec::new(),
            edges,
            (0..vertices).collect(),
        )
    }

    fn build(
        v1: Vec<usize>,
        v2: Vec<usize>,
        edges: Vec<(usize, usize)>,
        arrival_order: Vec<usize>,
        allow_witness_edges: bool,
    ) -> Result<Self> {
        let total = v1.len() + v2.len();
        let mut region = vec![None; total];
        for (&v, is_resource) in v1
            .iter()
            .map(|v| (v, true))
            .chain(v2.iter().map(|v| (v, false)))
        {
            if v >= total {
                return Err(Error::InvalidGraph(format!(
                    "vertex {v} out of range; ids must be 0..{total}"
                )));
            }
            if region[v].replace(is_resource).is_some() {
                return Err(Error::InvalidGraph(format!("vertex {v} listed twice")));
            }
        }
        let resource: Vec<bool> = region.into_iter().map(|r| r.unwrap_or(false)).collect();

        let mut neighbors = vec![Vec::new(); total];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a >= total || b >= total {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) uses unknown vertex"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            if neighbors[a].contains(&b) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            if !allow_witness_edges && !resource[a] && !resource[b] {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) lies inside the witness region"
                )));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
            normalized.push((a, b));
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        if arrival_order.len() != total {
            return Err(Error::InvalidGraph(format!(
                "arrival order has {} entries, graph has {total} vertices",
                arrival_order.len()
            )));
        }
        let mut seen = vec![false; total];
        for &v in &arrival_order {
            if v >= total || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidGraph(format!(
                    "arrival order is not a permutation (entry {v})"
                )));
            }
        }

        Ok(VerificationGraph {
            v1,
            v2,
            edges: normalized,
            arrival_order,
            allow_witness_edges,
            neighbors,
            resource,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::error::read_json(path.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn total_vertices(&self) -> usize {
        self.resource.len()
    }

    /// `N = |V1|`.
    pub fn resource_size(&self) -> usize {
        self.v1.len()
    }

    pub fn v1(&self) -> &[usize] {
        &self.v1
    }

    pub fn v2(&self) -> &[usize] {
        &self.v2
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn arrival_order(&self) -> &[usize] {
        &self.arrival_order
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn is_resource(&self, v: usize) -> bool {
        self.resource.get(v).copied().unwrap_or(false)
    }

    pub fn allows_witness_edges(&self) -> bool {
        self.allow_witness_edges
    }

    /// `E1`: edges with both ends in the resource region.
    pub fn resource_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| self.resource[a] && self.resource[b])
            .collect()
    }

    /// `E_conn`: edges between the two regions.
    pub fn connecting_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| self.resource[a] != self.resource[b])
            .collect()
    }

    fn check_total(&self, what: &'static str) -> Result<()> {
        if self.total_vertices() > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                what,
                n: self.total_vertices(),
                max: MAX_QUBITS,
            });
        }
        Ok(())
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

    /// `|G>` on the resource region alone, qubit `i` being vertex `v1[i]`.
    pub fn graph_state(&self) -> Result<QuantumState> {
        if self.v1.len() > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                what: "graph state",
                n: self.v1.len(),
                max: MAX_QUBITS,
            });
        }
        let local: BTreeMap<usize, usize> =
            self.v1.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut state = QuantumState::plus_state(self.v1.len())?;
        for (a, b) in self.resource_edges() {
            state = state.apply_cz(local[&a], local[&b])?;
        }
        Ok(state)
    }

    /// `W = prod_{e in E} CZ_e` applied to a state on all vertices.
    pub fn apply_entangler(&self, state: &QuantumState) -> Result<QuantumState> {
        self.check_state(state)?;
        let mut s = state.clone();
        for &(a, b) in &self.edges {
            s = s.apply_cz(a, b)?;
        }
        Ok(s)
    }

    /// `W (|+><+|^{V1} ⊗ witness) W`, witness qubit `i` sitting on `v2[i]`.
    pub fn honest_state(&self, witness: &QuantumState) -> Result<QuantumState> {
        self.check_total("honest state")?;
        if witness.n() != self.v2.len() {
            return Err(Error::SizeMismatch {
                expected: self.v2.len(),
                found: witness.n(),
            });
        }
        let product = QuantumState::plus_state(self.v1.len())?.tensor(witness)?;
        // product qubit i holds vertex (v1 ++ v2)[i]; move it to qubit = vertex id
        let placed: Vec<usize> = self.v1.iter().chain(self.v2.iter()).copied().collect();
        let mut order = vec![0usize; placed.len()];
        for (i, &v) in placed.iter().enumerate() {
            order[v] = i;
        }
        self.apply_entangler(&product.reorder(&order)?)
    }

    /// `g_j = X_j ⊗_{i ~ j} Z_i` on all vertices.
    pub fn stabilizer_generator(&self, j: usize) -> Result<PauliString> {
        if !self.is_resource(j) {
            return Err(Error::NotInResource(j));
        }
        let n = self.total_vertices();
        let mut letters = vec![Pauli::I; n];
        letters[j] = Pauli::X;
        for &i in &self.neighbors[j] {
            letters[i] = Pauli::Z;
        }
        PauliString::from_letters(&letters)
    }

    /// `s_k = prod_{j in V1} g_j^{k_j}`, `k_bits[i]` selecting `g_{v1[i]}`.
    pub fn stabilizer_product(&self, k_bits: &[bool]) -> Result<PauliString> {
        if k_bits.len() != self.v1.len() {
            return Err(Error::SizeMismatch {
                expected: self.v1.len(),
                found: k_bits.len(),
            });
        }
        let mut s = PauliString::identity(self.total_vertices());
        for (&j, _) in self.v1.iter().zip(k_bits).filter(|(_, &k)| k) {
            s = s.multiply(&self.stabilizer_generator(j)?)?;
        }
        Ok(s)
    }

    fn k_bits(&self, index: u64) -> Vec<bool> {
        (0..self.v1.len()).map(|i| index >> i & 1 == 1).collect()
    }

    /// `2^-N sum_k Tr((I + s_k)/2 rho)` by direct summation.
    pub fn pass_probability_by_enumeration(&self, rho: &QuantumState) -> Result<f64> {
        self.check_state(rho)?;
        let n = self.v1.len();
        if n > MAX_ENUMERATION_RESOURCE {
            return Err(Error::TooManyQubits {
                what: "stabilizer enumeration",
                n,
                max: MAX_ENUMERATION_RESOURCE,
            });
        }
        let mut total = 0.0;
        for index in 0..(1u64 << n) {
            let s = self.stabilizer_product(&self.k_bits(index))?;
            total += 0.5 * (1.0 + rho.expectation(&s)?);
        }
        Ok(total / (1u64 << n) as f64)
    }

    /// `(1 + Tr[W (|+><+|^{V1} ⊗ I) W rho]) / 2`.
    pub fn pass_probability_closed_form(&self, rho: &QuantumState) -> Result<f64> {
        Ok(0.5 * (1.0 + self.graph_overlap(rho)?))
    }

    /// `Tr[W (|+><+|^{V1} ⊗ I) W rho] = Tr(prod_j (I + g_j)/2 rho)`.
    pub fn graph_overlap(&self, rho: &QuantumState) -> Result<f64> {
        let cond = self.conditional_witness(rho)?;
        Ok(crate::linalg::trace(&cond).re)
    }

    /// `<+|^{V1} W rho W |+>^{V1}` as an unnormalized operator on `v2`.
    fn conditional_witness(&self, rho: &QuantumState) -> Result<CMatrix> {
        let mut sigma = self.apply_entangler(rho)?;
        for &v in &self.v1 {
            sigma = sigma.apply_single_qubit_gate(v, &hadamard())?;
        }
        // now <+|^{V1} is <0|^{V1}: keep the block with every V1 bit clear
        let n = self.total_vertices();
        let dw = 1usize << self.v2.len();
        let index = |cfg: usize| {
            let mut idx = 0usize;
            for (i, &v) in self.v2.iter().enumerate() {
                if cfg >> (self.v2.len() - 1 - i) & 1 == 1 {
                    idx |= 1 << (n - 1 - v);
                }
            }
            idx
        };
        let idx: Vec<usize> = (0..dw).map(index).collect();
        Ok(match sigma.amplitudes() {
            Some(v) => CMatrix::from_fn(dw, dw, |a, b| v[idx[a]] * v[idx[b]].conj()),
            None => {
                let m = sigma.density_matrix();
                CMatrix::from_fn(dw, dw, |a, b| m[(idx[a], idx[b])])
            }
        })
    }

    /// Exact pass probability of the stabilizer test; enumerates the
    /// stabilizer products when the resource is small enough.
    pub fn exact_pass_probability(&self, rho: &QuantumState) -> Result<f64> {
        if self.v1.len() <= MAX_ENUMERATION_RESOURCE {
            self.pass_probability_by_enumeration(rho)
        } else {
            self.pass_probability_closed_form(rho)
        }
    }

    /// Dense `W (|+><+|^{V1} ⊗ I_{V2}) W`.
    pub fn graph_projector(&self) -> Result<CMatrix> {
        self.check_total("graph projector")?;
        let n = self.total_vertices();
        let dim = 1usize << n;
        let mut v2_mask = 0usize;
        let mut cz_masks = Vec::new();
        for &v in &self.v2 {
            v2_mask |= 1 << (n - 1 - v);
        }
        for &(a, b) in &self.edges {
            cz_masks.push((1usize << (n - 1 - a)) | (1usize << (n - 1 - b)));
        }
        let sign = |i: usize| {
            let flips = cz_masks.iter().filter(|&&m| i & m == m).count();
            if flips % 2 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        let signs: Vec<f64> = (0..dim).map(sign).collect();
        let w = 1.0 / (1u64 << self.v1.len()) as f64;
        Ok(CMatrix::from_fn(dim, dim, |r, col| {
            if (r ^ col) & v2_mask == 0 {
                c(w * signs[r] * signs[col], 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    /// Dense operator whose expectation is the pass probability:
    /// `(I + W (|+><+|^{V1} ⊗ I) W) / 2`.
    pub fn pass_operator(&self) -> Result<CMatrix> {
        let proj = self.graph_projector()?;
        let dim = proj.nrows();
        Ok((CMatrix::identity(dim, dim) + proj).scale(0.5))
    }

    /// One round of the stabilizer test, measuring qubits one at a time in
    /// arrival order. Identity positions are measured in `Z` and discarded.
    pub fn run_stabilizer_test<R: Rng + ?Sized>(
        &self,
        state: &QuantumState,
        rng: &mut R,
    ) -> Result<StabilizerTestRecord> {
        self.check_state(state)?;
        let k_bits: Vec<bool> = (0..self.v1.len()).map(|_| rng.random()).collect();
        self.run_stabilizer_test_with(state, &k_bits, rng)
    }

    /// The stabilizer test for a fixed choice of `k`.
    pub fn run_stabilizer_test_with<R: Rng + ?Sized>(
        &self,
        state: &QuantumState,
        k_bits: &[bool],
        rng: &mut R,
    ) -> Result<StabilizerTestRecord> {
        self.check_state(state)?;
        let s = self.stabilizer_product(k_bits)?;
        let product_sign = match s.sign() {
            Some(sign) if sign > 0.0 => 1,
            Some(_) => -1,
            None => unreachable!("products of commuting generators are Hermitian"),
        };
        let bases: BTreeMap<usize, TestBasis> = (0..self.total_vertices())
            .map(|v| (v, TestBasis::from(s.letter(v))))
            .collect();

        let mut current = state.clone();
        // qubit positions of the vertices still held
        let mut live: Vec<usize> = (0..self.total_vertices()).collect();
        let mut outcomes = BTreeMap::new();
        let mut parity = product_sign;
        for &v in &self.arrival_order {
            let basis = bases[&v];
            let pos = live
                .iter()
                .position(|&u| u == v)
                .expect("vertex not yet measured");
            let (outcome, post) = current.measure_and_discard(pos, &basis.observable(), rng)?;
            live.remove(pos);
            current = post;
            outcomes.insert(v, outcome.sign());
            if basis != TestBasis::Skip {
                parity *= outcome.sign();
            }
        }
        Ok(StabilizerTestRecord {
            k_bits: k_bits.to_vec(),
            per_qubit_bases: bases,
            outcomes,
            product_sign,
            passed: parity == 1,
        })
    }

    /// Builds the closest honest state `W(|+><+|^{V1} ⊗ w*)W` for `rho` and
    /// measures how far `rho` is from it.
    pub fn closest_honest_state_bound(&self, rho: &QuantumState) -> Result<HonestStateBound> {
        self.check_state(rho)?;
        let p_pass = self.exact_pass_probability(rho)?;
        let epsilon = (1.0 - p_pass).max(0.0);
        let cond = self.conditional_witness(rho)?;
        let overlap = crate::linalg::trace(&cond).re;
        let k = self.v2.len();
        let witness = if overlap > 1e-12 {
            let w = cond.scale(1.0 / overlap);
            QuantumState::from_density(k, (&w + w.adjoint()).scale(0.5))?
        } else {
            QuantumState::maximally_mixed(k)?
        };
        let honest = self.honest_state(&witness)?;
        let fidelity = crate::state::fidelity(&honest, rho)?;
        let distance = crate::state::trace_distance(&honest, rho)?;
        Ok(HonestStateBound {
            p_pass,
            epsilon,
            bound: (2.0 * epsilon).sqrt(),
            graph_overlap: overlap,
            fidelity_sq: fidelity * fidelity,
            distance,
            witness,
        })
    }

    pub fn path(n: usize) -> Result<Self> {
        VerificationGraph::resource_only(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    pub fn cycle(n: usize) -> Result<Self> {
        VerificationGraph::resource_only(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }

    /// Star with vertex 0 at the center and `n - 1` leaves.
    pub fn star(n: usize) -> Result<Self> {
        VerificationGraph::resource_only(n, (1..n).map(|i| (0, i)).collect())
    }

    /// `rows x cols` square lattice, vertex `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        VerificationGraph::resource_only(rows * cols, grid_edges(rows, cols, 0))
    }

    /// Witness vertices `0..rows` (one per row) each attached to the first
    /// column of a `rows x cols` resource lattice, like the layout in which
    /// inputs enter a cluster from the left.
    pub fn witness_grid(rows: usize, cols: usize) -> Result<Self> {
        let total = rows + rows * cols;
        let v2: Vec<usize> = (0..rows).collect();
        let v1: Vec<usize> = (rows..total).collect();
        let mut edges = grid_edges(rows, cols, rows);
        for r in 0..rows {
            edges.push((r, rows + r * cols));
        }
        VerificationGraph::new(v1, v2, edges, (0..total).collect())
    }
}

fn grid_edges(rows: usize, cols: usize, offset: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for col in 0..cols {
            let v = offset + r * cols + col;
            if col + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    edges
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestBasis {
    X,
    Y,
    Z,
    Skip,
}

impl From<Pauli> for TestBasis {
    fn from(p: Pauli) -> Self {
        match p {
            Pauli::I => TestBasis::Skip,
            Pauli::X => TestBasis::X,
            Pauli::Y => TestBasis::Y,
            Pauli::Z => TestBasis::Z,
        }
    }
}

impl TestBasis {
    /// Skipped qubits are still consumed with a `Z` measurement.
    pub fn observable(self) -> MeasurementBasis {
        match self {
            TestBasis::X => MeasurementBasis::X,
            TestBasis::Y => MeasurementBasis::Y,
            TestBasis::Z | TestBasis::Skip => MeasurementBasis::Z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerTestRecord {
    pub k_bits: Vec<bool>,
    pub per_qubit_bases: BTreeMap<usize, TestBasis>,
    pub outcomes: BTreeMap<usize, i8>,
    pub product_sign: i8,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct HonestStateBound {
    pub p_pass: f64,
    /// `1 - p_pass`.
    pub epsilon: f64,
    /// `sqrt(2 epsilon)`.
    pub bound: f64,
    /// `Tr[W(|+><+| ⊗ I)W rho] = 1 - 2 epsilon`.
    pub graph_overlap: f64,
    pub fidelity_sq: f64,
    /// Trace distance from `rho` to the constructed honest state.
    pub distance: f64,
    pub witness: QuantumState,
}

impl HonestStateBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.distance <= self.bound + tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, trace};
    use crate::rng::SeedStream;
    use crate::state::Purity;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    /// Dense `(I + g)/2` products, built without any closed form.
    fn projector_product(g: &VerificationGraph) -> CMatrix {
        let dim = 1usize << g.total_vertices();
        let id = CMatrix::identity(dim, dim);
        let mut acc = id.clone();
        for &j in g.v1() {
            let gj = g.stabilizer_generator(j).unwrap().to_dense().unwrap();
            acc *= (&id + gj).scale(0.5);
        }
        acc
    }

    #[test]
    fn graph_state_examples() {
        let single = VerificationGraph::resource_only(1, vec![]).unwrap();
        let s = single.graph_state().unwrap();
        let plus = QuantumState::plus_state(1).unwrap();
        assert!((crate::state::fidelity(&s, &plus).unwrap() - 1.0).abs() < 1e-15);

        let edge = VerificationGraph::path(2).unwrap();
        let s = edge.graph_state().unwrap();
        let amps: Vec<f64> = s.amplitudes().unwrap().iter().map(|z| z.re).collect();
        assert_eq!(amps, vec![0.5, 0.5, 0.5, -0.5]);

        let square = VerificationGraph::cycle(4).unwrap();
        let s = square.graph_state().unwrap();
        for j in 0..4 {
            let gj = square.stabilizer_generator(j).unwrap();
            assert!((s.expectation(&gj).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generators_stabilize_graph_states_up_to_eight_vertices() {
        let graphs = [
            VerificationGraph::path(8).unwrap(),
            VerificationGraph::cycle(7).unwrap(),
            VerificationGraph::grid(2, 4).unwrap(),
            VerificationGraph::star(6).unwrap(),
        ];
        for g in &graphs {
            let s = g.graph_state().unwrap();
            for &j in g.v1() {
                let gj = g.stabilizer_generator(j).unwrap();
                assert!((s.expectation(&gj).unwrap() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn generator_examples() {
        let path = VerificationGraph::path(3).unwrap();
        assert_eq!(path.stabilizer_generator(1).unwrap(), p("ZXZ"));
        let isolated = VerificationGraph::resource_only(2, vec![]).unwrap();
        assert_eq!(isolated.stabilizer_generator(1).unwrap(), p("IX"));
        // resource vertex 1 attached to witness vertex 0
        let g = VerificationGraph::new(vec![1], vec![0], vec![(0, 1)], vec![0, 1]).unwrap();
        assert_eq!(g.stabilizer_generator(1).unwrap(), p("ZX"));
        assert!(matches!(
            g.stabilizer_generator(0),
            Err(Error::NotInResource(0))
        ));
    }

    #[test]
    fn generators_commute_on_a_path() {
        let g = VerificationGraph::path(5).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let ga = g.stabilizer_generator(a).unwrap();
                let gb = g.stabilizer_generator(b).unwrap();
                assert!(ga.commutes(&gb).unwrap());
                let (da, db) = (ga.to_dense().unwrap(), gb.to_dense().unwrap());
                assert!(max_abs_diff(&(&da * &db), &(&db * &da)) < 1e-15);
            }
        }
    }

    #[test]
    fn product_examples() {
        let edge = VerificationGraph::path(2).unwrap();
        assert!(edge
            .stabilizer_product(&[false, false])
            .unwrap()
            .is_identity());
        let s = edge.stabilizer_product(&[true, true]).unwrap();
        let dense = edge.stabilizer_generator(0).unwrap().to_dense().unwrap()
            * edge.stabilizer_generator(1).unwrap().to_dense().unwrap();
        assert!(max_abs_diff(&s.to_dense().unwrap(), &dense) < 1e-15);
        assert_eq!(s, p("YY"));
        assert!(edge.stabilizer_product(&[true]).is_err());
    }

    #[test]
    fn random_products_on_a_grid() {
        let g = VerificationGraph::grid(3, 2).unwrap();
        let state = g.graph_state().unwrap();
        let mut rng = SeedStream::new(1).rng(0);
        for _ in 0..20 {
            let k: Vec<bool> = (0..6).map(|_| rng.random()).collect();
            let s = g.stabilizer_product(&k).unwrap();
            assert!(s.is_hermitian());
            assert!(s.multiply(&s).unwrap() == PauliString::identity(6));
            for &j in g.v1() {
                assert!(s.commutes(&g.stabilizer_generator(j).unwrap()).unwrap());
            }
            assert!((state.expectation(&s).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_identity_holds() {
        for g in [
            VerificationGraph::path(4).unwrap(),
            VerificationGraph::cycle(3).unwrap(),
            VerificationGraph::witness_grid(1, 2).unwrap(),
        ] {
            let n = g.resource_size();
            let dim = 1usize << g.total_vertices();
            let mut avg = CMatrix::zeros(dim, dim);
            for index in 0..(1u64 << n) {
                avg += g
                    .stabilizer_product(&g.k_bits(index))
                    .unwrap()
                    .to_dense()
                    .unwrap();
            }
            avg = avg.scale(1.0 / (1u64 << n) as f64);
            let prod = projector_product(&g);
            assert!(max_abs_diff(&avg, &prod) < 1e-12);
            assert!(max_abs_diff(&g.graph_projector().unwrap(), &prod) < 1e-12);
        }
    }

    #[test]
    fn pass_probability_examples() {
        let single = VerificationGraph::resource_only(1, vec![]).unwrap();
        let zero = QuantumState::zero_state(1).unwrap();
        assert!((single.exact_pass_probability(&zero).unwrap() - 0.75).abs() < 1e-12);
        assert!((single.pass_probability_closed_form(&zero).unwrap() - 0.75).abs() < 1e-12);

        let edge = VerificationGraph::path(2).unwrap();
        let mixed = QuantumState::maximally_mixed(2).unwrap();
        assert!((edge.exact_pass_probability(&mixed).unwrap() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn honest_states_always_pass() {
        let mut rng = SeedStream::new(2).rng(0);
        let g = VerificationGraph::witness_grid(2, 2).unwrap();
        for purity in [Purity::Pure, Purity::Mixed] {
            let w = QuantumState::random(2, purity, &mut rng).unwrap();
            let honest = g.honest_state(&w).unwrap();
            assert!((g.exact_pass_probability(&honest).unwrap() - 1.0).abs() < 1e-10);
            assert!((g.pass_probability_closed_form(&honest).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn enumeration_and_closed_form_agree_on_random_states() {
        let mut rng = SeedStream::new(3).rng(0);
        let g = VerificationGraph::witness_grid(1, 3).unwrap();
        for purity in [Purity::Pure, Purity::Mixed] {
            for _ in 0..5 {
                let rho = QuantumState::random(4, purity, &mut rng).unwrap();
                let a = g.pass_probability_by_enumeration(&rho).unwrap();
                let b = g.pass_probability_closed_form(&rho).unwrap();
                let dense = trace(&(g.pass_operator().unwrap() * rho.density_matrix())).re;
                assert!((a - b).abs() < 1e-10);
                assert!((a - dense).abs() < 1e-10);
                assert!((0.0..=1.0).contains(&a));
            }
        }
    }

    #[test]
    fn sampled_test_matches_exact() {
        let single = VerificationGraph::resource_only(1, vec![]).unwrap();
        let zero = QuantumState::zero_state(1).unwrap();
        let stream = SeedStream::new(4);
        let shots = 100_000u64;
        let passes = (0..shots)
            .filter(|&i| {
                single
                    .run_stabilizer_test(&zero, &mut stream.rng(i))
                    .unwrap()
                    .passed
            })
            .count() as f64;
        let rate = passes / shots as f64;
        let sigma = (0.75f64 * 0.25 / shots as f64).sqrt();
        assert!((rate - 0.75).abs() < 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn identity_product_always_passes() {
        let g = VerificationGraph::cycle(4).unwrap();
        let mut rng = SeedStream::new(5).rng(0);
        let state = QuantumState::random(4, Purity::Pure, &mut rng).unwrap();
        let rec = g
            .run_stabilizer_test_with(&state, &[false; 4], &mut rng)
            .unwrap();
        assert!(rec.passed);
        assert!(rec.per_qubit_bases.values().all(|&b| b == TestBasis::Skip));
        assert_eq!(rec.outcomes.len(), 4);
    }

    #[test]
    fn record_invariant() {
        let g = VerificationGraph::witness_grid(1, 2).unwrap();
        let mut rng = SeedStream::new(6).rng(0);
        let state = QuantumState::random(3, Purity::Mixed, &mut rng).unwrap();
        for _ in 0..200 {
            let rec = g.run_stabilizer_test(&state, &mut rng).unwrap();
            let prod: i8 = rec
                .outcomes
                .iter()
                .filter(|(v, _)| rec.per_qubit_bases[v] != TestBasis::Skip)
                .map(|(_, &o)| o)
                .product();
            assert_eq!(rec.passed, rec.product_sign * prod == 1);
        }
    }

    #[test]
    fn closest_honest_state_examples() {
        let g = VerificationGraph::witness_grid(1, 2).unwrap();
        let w = QuantumState::plus_state(1).unwrap();
        let honest = g.honest_state(&w).unwrap();
        let b = g.closest_honest_state_bound(&honest).unwrap();
        assert!(b.epsilon < 1e-12);
        assert!(b.distance < 1e-6);

        let noisy = honest
            .mix(&QuantumState::maximally_mixed(3).unwrap(), 0.1)
            .unwrap();
        let b = g.closest_honest_state_bound(&noisy).unwrap();
        assert!(b.epsilon > 0.0);
        assert!((b.graph_overlap - (1.0 - 2.0 * b.epsilon)).abs() < 1e-12);
        assert!((b.fidelity_sq - b.graph_overlap).abs() < 1e-9);
        assert!(b.holds(1e-9), "{} > {}", b.distance, b.bound);
    }

    #[test]
    fn validation_errors() {
        assert!(VerificationGraph::resource_only(2, vec![(0, 0)]).is_err());
        assert!(VerificationGraph::resource_only(2, vec![(0, 1), (1, 0)]).is_err());
        assert!(VerificationGraph::resource_only(2, vec![(0, 2)]).is_err());
        assert!(VerificationGraph::new(vec![0, 1], vec![1], vec![], vec![0, 1, 2]).is_err());
        assert!(VerificationGraph::new(vec![0], vec![1], vec![], vec![0, 0]).is_err());
        let witness_edge = || (vec![0], vec![1, 2], vec![(1, 2)], vec![0, 1, 2]);
        let (a, b, e, o) = witness_edge();
        assert!(VerificationGraph::new(a, b, e, o).is_err());
        let (a, b, e, o) = witness_edge();
        assert!(VerificationGraph::with_witness_edges(a, b, e, o).is_ok());
    }

    #[test]
    fn graph_file_round_trip() {
        let g = VerificationGraph::witness_grid(2, 2).unwrap();
        let text = g.to_json();
        let back: VerificationGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(g, back);
        let raw = r#"{"v1":[0,1],"v2":[2],"edges":[[0,1],[1,2]],"arrival_order":[2,0,1]}"#;
        let parsed: VerificationGraph = serde_json::from_str(raw).unwrap();
        assert_eq!(parsed.connecting_edges(), vec![(1, 2)]);
        assert_eq!(parsed.resource_edges(), vec![(0, 1)]);
    }
}

//! Local-Hamiltonian verification with single-qubit Pauli measurements.
//!
//! `H = Σ_S d_S S` is rewritten as `H'' = Σ_S π_S P_S` with
//! `π_S = |d_S| / W`, `W = Σ|d_S|` and `P_S = (I + sign(d_S) S)/2`. A round
//! samples `S` from `π`, measures every qubit in the basis named by `S`, and
//! accepts when `r = (1 + sign(d_S) Π x_i)/2` is zero. `E[r] = (⟨H⟩ + W)/(2W)`.

use std::borrow::Cow;
use std::collections::HashMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, hermitian_deviation, kron, permute_qubits, CMatrix, CVector};
use crate::pauli::{
    decompose, Pauli, PauliString, WeightedPauliTerm, COEFF_DROP_TOL, HERMITIAN_TOL,
    MAX_DECOMPOSE_SUPPORT, MAX_PAULI_QUBITS,
};
use crate::rng::{run_shots, SeedStream};
use crate::state::{MeasurementBasis, QuantumState, MAX_QUBITS};

/// Dense diagonalization is done up to this many qubits.
pub const MAX_DIAGONALIZE_QUBITS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub enum TermOperator {
    /// Hermitian matrix on the support, support qubit 0 most significant.
    Matrix(CMatrix),
    /// Pauli strings over the support (string position `i` is `support[i]`).
    Pauli(Vec<WeightedPauliTerm>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianTerm {
    pub support: Vec<usize>,
    pub operator: TermOperator,
}

impl HamiltonianTerm {
    pub fn matrix(support: Vec<usize>, m: CMatrix) -> Self {
        HamiltonianTerm {
            support,
            operator: TermOperator::Matrix(m),
        }
    }

    pub fn pauli(support: Vec<usize>, terms: Vec<WeightedPauliTerm>) -> Self {
        HamiltonianTerm {
            support,
            operator: TermOperator::Pauli(terms),
        }
    }

    /// A single weighted string given in letters, e.g. `("ZZ", [0, 1], 1.0)`.
    pub fn string(letters: &str, support: Vec<usize>, coeff: f64) -> Result<Self> {
        let string: PauliString = letters.parse()?;
        Ok(HamiltonianTerm::pauli(
            support,
            vec![WeightedPauliTerm::new(string, coeff)?],
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliEntryFile {
    pub string: String,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermFile {
    pub support: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli: Option<Vec<PauliEntryFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianFile {
    pub n: usize,
    pub k: usize,
    pub terms: Vec<TermFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HamiltonianFile", into = "HamiltonianFile")]
pub struct LocalHamiltonian {
    n: usize,
    k: usize,
    terms: Vec<HamiltonianTerm>,
}

impl TryFrom<HamiltonianFile> for LocalHamiltonian {
    type Error = Error;

    fn try_from(f: HamiltonianFile) -> Result<Self> {
        let terms = f
            .terms
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let ctx = |e: Error| Error::InvalidHamiltonian(format!("term {i}: {e}"));
                match (t.pauli, t.matrix) {
                    (Some(list), None) => {
                        let entries = list
                            .iter()
                            .map(|p| {
                                let s: PauliString = p.string.parse()?;
                                WeightedPauliTerm::new(s, p.coeff)
                            })
                            .collect::<Result<Vec<_>>>()
                            .map_err(ctx)?;
                        Ok(HamiltonianTerm::pauli(t.support, entries))
                    }
                    (None, Some(rows)) => {
                        let dim = rows.len();
                        if rows.iter().any(|r| r.len() != dim) {
                            return Err(ctx(Error::Parse("matrix is not square".into())));
                        }
                        let m = CMatrix::from_fn(dim, dim, |r, col| {
                            let [re, im] = rows[r][col];
                            c(re, im)
                        });
                        Ok(HamiltonianTerm::matrix(t.support, m))
                    }
                    _ => Err(ctx(Error::Parse(
                        "exactly one of \"pauli\" or \"matrix\" is required".into(),
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        LocalHamiltonian::new(f.n, f.k, terms)
    }
}

impl From<LocalHamiltonian> for HamiltonianFile {
    fn from(h: LocalHamiltonian) -> Self {
        let terms = h
            .terms
            .into_iter()
            .map(|t| match t.operator {
                TermOperator::Pauli(list) => TermFile {
                    support: t.support,
                    pauli: Some(
                        list.iter()
                            .map(|p| PauliEntryFile {
                                string: p.string.to_string(),
                                coeff: p.coeff,
                            })
                            .collect(),
                    ),
                    matrix: None,
                },
                TermOperator::Matrix(m) => TermFile {
                    support: t.support,
                    pauli: None,
                    matrix: Some(
                        (0..m.nrows())
                            .map(|r| {
                                (0..m.ncols())
                                    .map(|col| [m[(r, col)].re, m[(r, col)].im])
                                    .collect()
                            })
                            .collect(),
                    ),
                },
            })
            .collect();
        HamiltonianFile {
            n: h.n,
            k: h.k,
            terms,
        }
    }
}

/// `local` acting on `support`, identity elsewhere, as a dense `2^n` matrix.
fn embed_operator(local: &CMatrix, support: &[usize], n: usize) -> CMatrix {
    let rest: Vec<usize> = (0..n).filter(|q| !support.contains(q)).collect();
    let full = kron(local, &CMatrix::identity(1 << rest.len(), 1 << rest.len()));
    let sequence: Vec<usize> = support.iter().chain(&rest).copied().collect();
    let mut order = vec![0usize; n];
    for (i, &q) in sequence.iter().enumerate() {
        order[q] = i;
    }
    permute_qubits(&full, &order)
}

impl LocalHamiltonian {
    pub fn new(n: usize, k: usize, terms: Vec<HamiltonianTerm>) -> Result<Self> {
        let bad =
            |i: usize, msg: String| Err(Error::InvalidHamiltonian(format!("term {i}: {msg}")));
        if n == 0 || n > MAX_PAULI_QUBITS {
            return Err(Error::InvalidHamiltonian(format!(
                "qubit count {n} outside 1..={MAX_PAULI_QUBITS}"
            )));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.support.is_empty() {
                return bad(i, "empty support".into());
            }
            if t.support.len() > k {
                return bad(
                    i,
                    format!("support of size {} exceeds k = {k}", t.support.len()),
                );
            }
            for (j, &q) in t.support.iter().enumerate() {
                if q >= n {
                    return bad(i, format!("qubit {q} out of range for {n} qubits"));
                }
                if t.support[..j].contains(&q) {
                    return bad(i, format!("qubit {q} repeated in support"));
                }
            }
            match &t.operator {
                TermOperator::Matrix(m) => {
                    let size = t.support.len();
                    if size > MAX_DECOMPOSE_SUPPORT {
                        return bad(
                            i,
                            format!("matrix terms act on at most {MAX_DECOMPOSE_SUPPORT} qubits, got {size}"),
                        );
                    }
                    let dim = 1usize << size;
                    if m.nrows() != dim || m.ncols() != dim {
                        return bad(
                            i,
                            format!(
                                "matrix must be {dim}x{dim}, got {}x{}",
                                m.nrows(),
                                m.ncols()
                            ),
                        );
                    }
                    let deviation = hermitian_deviation(m);
                    if deviation > HERMITIAN_TOL {
                        return bad(
                            i,
                            format!("matrix is not Hermitian (deviation {deviation:.3e})"),
                        );
                    }
                }
                TermOperator::Pauli(list) => {
                    for p in list {
                        if p.string.n() != t.support.len() {
                            return bad(
                                i,
                                format!(
                                    "string {} does not match support size {}",
                                    p.string,
                                    t.support.len()
                                ),
                            );
                        }
                        if !p.coeff.is_finite() {
                            return bad(i, "non-finite coefficient".into());
                        }
                    }
                }
            }
        }
        Ok(LocalHamiltonian { n, k, terms })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::error::read_json(path.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("Hamiltonian serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    /// Every term expanded into Pauli strings on all `n` qubits, unmerged.
    pub fn pauli_terms(&self) -> Result<Vec<WeightedPauliTerm>> {
        let mut out = Vec::new();
        for t in &self.terms {
            match &t.operator {
                TermOperator::Matrix(m) => {
                    let local: Vec<usize> = (0..t.support.len()).collect();
                    for p in decompose(m, &local, t.support.len())? {
                        out.push(WeightedPauliTerm {
                            string: p.string.embed(&t.support, self.n)?,
                            coeff: p.coeff,
                        });
                    }
                }
                TermOperator::Pauli(list) => {
                    for p in list {
                        out.push(WeightedPauliTerm {
                            string: p.string.embed(&t.support, self.n)?,
                            coeff: p.coeff,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Dense `H`, built from the terms as given (no Pauli decomposition).
    pub fn dense(&self) -> Result<CMatrix> {
        if self.n > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                what: "dense Hamiltonian",
                n: self.n,
                max: MAX_QUBITS,
            });
        }
        let dim = 1usize << self.n;
        let mut h = CMatrix::zeros(dim, dim);
        for t in &self.terms {
            match &t.operator {
                TermOperator::Matrix(m) => h += embed_operator(m, &t.support, self.n),
                TermOperator::Pauli(list) => {
                    for p in list {
                        h += p
                            .string
                            .embed(&t.support, self.n)?
                            .to_dense()?
                            .scale(p.coeff);
                    }
                }
            }
        }
        Ok(h)
    }

    /// `c·H`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| HamiltonianTerm {
                support: t.support.clone(),
                operator: match &t.operator {
                    TermOperator::Matrix(m) => TermOperator::Matrix(m.scale(factor)),
                    TermOperator::Pauli(list) => TermOperator::Pauli(
                        list.iter()
                            .map(|p| WeightedPauliTerm {
                                string: p.string,
                                coeff: p.coeff * factor,
                            })
                            .collect(),
                    ),
                },
            })
            .collect();
        LocalHamiltonian {
            n: self.n,
            k: self.k,
            terms,
        }
    }

    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        state.expectation_operator(&self.dense()?)
    }

    /// Ascending spectrum and eigenvectors by dense diagonalization.
    pub fn spectrum(&self) -> Result<(Vec<f64>, CMatrix)> {
        if self.n > MAX_DIAGONALIZE_QUBITS {
            return Err(Error::TooManyQubits {
                what: "exact diagonalization",
                n: self.n,
                max: MAX_DIAGONALIZE_QUBITS,
            });
        }
        Ok(eigh(&self.dense()?))
    }
}

/// Lowest eigenvalue and a matching eigenvector.
pub fn ground_energy_exact(h: &LocalHamiltonian) -> Result<(f64, QuantumState)> {
    let (values, vectors) = h.spectrum()?;
    let ground: CVector = vectors.column(0).into_owned();
    Ok((values[0], QuantumState::from_unnormalized(h.n(), ground)?))
}

/// Transverse-field Ising chain `-J Σ Z_i Z_{i+1} - h Σ X_i`, open ends.
pub fn tfim_chain(n: usize, coupling: f64, field: f64) -> Result<LocalHamiltonian> {
    let mut terms = Vec::new();
    for i in 0..n.saturating_sub(1) {
        terms.push(HamiltonianTerm::string("ZZ", vec![i, i + 1], -coupling)?);
    }
    for i in 0..n {
        terms.push(HamiltonianTerm::string("X", vec![i], -field)?);
    }
    LocalHamiltonian::new(n, 2, terms)
}

/// Heisenberg chain `J Σ (XX + YY + ZZ)` on neighbouring pairs, open ends.
/// Terms are stored as 4x4 matrices so that loading exercises decomposition.
pub fn heisenberg_chain(n: usize, coupling: f64) -> Result<LocalHamiltonian> {
    let bond = ["XX", "YY", "ZZ"]
        .iter()
        .try_fold(CMatrix::zeros(4, 4), |acc, s| {
            let p: PauliString = s.parse()?;
            Ok::<_, Error>(acc + p.to_dense()?.scale(coupling))
        })?;
    let terms = (0..n.saturating_sub(1))
        .map(|i| HamiltonianTerm::matrix(vec![i, i + 1], bond.clone()))
        .collect();
    LocalHamiltonian::new(n, 2, terms)
}

/// `Z_0 Z_1`.
pub fn toy_zz() -> Result<LocalHamiltonian> {
    LocalHamiltonian::new(2, 2, vec![HamiltonianTerm::string("ZZ", vec![0, 1], 1.0)?])
}

/// `X_0 + Z_0 Z_1`, ground energy `-√2`.
pub fn toy_x_plus_zz() -> Result<LocalHamiltonian> {
    LocalHamiltonian::new(
        2,
        2,
        vec![
            HamiltonianTerm::string("X", vec![0], 1.0)?,
            HamiltonianTerm::string("ZZ", vec![0, 1], 1.0)?,
        ],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEntry {
    pub string: PauliString,
    pub d: f64,
}

impl EnsembleEntry {
    pub fn sign(&self) -> f64 {
        if self.d < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Merged Pauli coefficients of a Hamiltonian with their sampling
/// distribution `π`.
#[derive(Clone, Debug)]
pub struct PauliEnsemble {
    n: usize,
    entries: Vec<EnsembleEntry>,
    total_weight: f64,
    pi: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

/// Merges equal strings across terms, keeping first-appearance order and
/// dropping coefficients below `1e-12`.
pub fn assemble_ensemble(h: &LocalHamiltonian) -> Result<PauliEnsemble> {
    PauliEnsemble::from_terms(h.n(), &h.pauli_terms()?)
}

impl PauliEnsemble {
    pub fn from_terms(n: usize, terms: &[WeightedPauliTerm]) -> Result<Self> {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut merged: Vec<EnsembleEntry> = Vec::new();
        for t in terms {
            if t.string.n() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    found: t.string.n(),
                });
            }
            let term = WeightedPauliTerm::new(t.string, t.coeff)?;
            let key = (term.string.x_bits(), term.string.z_bits());
            match index.get(&key) {
                Some(&i) => merged[i].d += term.coeff,
                None => {
                    index.insert(key, merged.len());
                    merged.push(EnsembleEntry {
                        string: term.string,
                        d: term.coeff,
                    });
                }
            }
        }
        let entries: Vec<EnsembleEntry> = merged
            .into_iter()
            .filter(|e| e.d.abs() >= COEFF_DROP_TOL)
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let total_weight: f64 = entries.iter().map(|e| e.d.abs()).sum();
        let pi: Vec<f64> = entries.iter().map(|e| e.d.abs() / total_weight).collect();
        let sampler = WeightedIndex::new(&pi).map_err(|_| Error::EmptyEnsemble)?;
        Ok(PauliEnsemble {
            n,
            entries,
            total_weight,
            pi,
            sampler,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `W = Σ |d_S|`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Dense `Σ d_S S`.
    pub fn reconstruct(&self) -> Result<CMatrix> {
        let terms: Vec<WeightedPauliTerm> = self
            .entries
            .iter()
            .map(|e| WeightedPauliTerm {
                string: e.string,
                coeff: e.d,
            })
            .collect();
        crate::pauli::reconstruct(&terms, self.n)
    }

    /// Dense `H'' = Σ π_S (I + sign(d_S) S)/2`.
    pub fn shifted_operator(&self) -> Result<CMatrix> {
        let dim = 1usize << self.n;
        let id = CMatrix::identity(dim, dim);
        let mut out = CMatrix::zeros(dim, dim);
        for (e, &p) in self.entries.iter().zip(&self.pi) {
            let s = e.string.to_dense()?;
            out += (&id + s.scale(e.sign())).scale(0.5 * p);
        }
        Ok(out)
    }

    /// Index of an entry drawn from `π`.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    pub fn sample_term<R: Rng + ?Sized>(&self, rng: &mut R) -> &EnsembleEntry {
        &self.entries[self.sample_index(rng)]
    }

    /// `Σ π_S ⟨P_S⟩ = ⟨H''⟩`, by direct Pauli expectations.
    pub fn expected_r(&self, state: &QuantumState) -> Result<f64> {
        let mut total = 0.0;
        for (e, &p) in self.entries.iter().zip(&self.pi) {
            let s = state.expectation(&e.string)?;
            total += p * 0.5 * (1.0 + e.sign() * s);
        }
        Ok(total)
    }

    /// `(e + W) / (2W)`: the probability of `r = 1` at energy `e`.
    pub fn r_probability_at(&self, energy: f64) -> f64 {
        (energy + self.total_weight) / (2.0 * self.total_weight)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermMeasurement {
    /// `±1` per qubit, in qubit order; identity positions are `Z` outcomes
    /// that do not enter the product.
    pub outcomes: Vec<i8>,
    pub r: u8,
}

/// Measures every qubit in the basis named by `entry` (qubits outside its
/// support in `Z`), one at a time from qubit 0, and forms `r`.
pub fn measure_term<R: Rng + ?Sized>(
    state: &QuantumState,
    entry: &EnsembleEntry,
    rng: &mut R,
) -> Result<TermMeasurement> {
    let n = entry.string.n();
    if state.n() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: state.n(),
        });
    }
    let mut product: i8 = 1;
    let mut outcomes = Vec::with_capacity(n);
    let mut owned: Option<QuantumState> = None;
    for q in 0..n {
        let letter = entry.string.letter(q);
        let basis = match letter {
            Pauli::X => MeasurementBasis::X,
            Pauli::Y => MeasurementBasis::Y,
            Pauli::Z | Pauli::I => MeasurementBasis::Z,
        };
        let current = owned.as_ref().unwrap_or(state);
        // earlier qubits are gone, so the next one is always at position 0
        let (outcome, post) = current.measure_and_discard(0, &basis, rng)?;
        owned = Some(post);
        outcomes.push(outcome.sign());
        if letter != Pauli::I {
            product *= outcome.sign();
        }
    }
    let signed = entry.sign() * f64::from(product);
    let r = if signed > 0.0 { 1 } else { 0 };
    Ok(TermMeasurement { outcomes, r })
}

/// One verification round: sample a term, measure, accept iff `r = 0`.
pub fn verify_once<R: Rng + ?Sized>(
    state: &QuantumState,
    ensemble: &PauliEnsemble,
    rng: &mut R,
) -> Result<bool> {
    let entry = *ensemble.sample_term(rng);
    Ok(measure_term(state, &entry, rng)?.r == 0)
}

/// `1 - ⟨H''⟩`.
pub fn exact_acceptance(state: &QuantumState, ensemble: &PauliEnsemble) -> Result<f64> {
    Ok(1.0 - ensemble.expected_r(state)?)
}

/// Supplies the state for each shot. The prover may send a different state
/// every round; a plain [`QuantumState`] sends the same one each time.
pub trait StateSource: Sync {
    fn prepare(&self, shot: u64) -> Result<Cow<'_, QuantumState>>;
}

impl StateSource for QuantumState {
    fn prepare(&self, _shot: u64) -> Result<Cow<'_, QuantumState>> {
        Ok(Cow::Borrowed(self))
    }
}

/// Adapter for closures `shot -> state`.
pub struct FnSource<F>(pub F);

impl<F> StateSource for FnSource<F>
where
    F: Fn(u64) -> Result<QuantumState> + Sync,
{
    fn prepare(&self, shot: u64) -> Result<Cow<'_, QuantumState>> {
        Ok(Cow::Owned((self.0)(shot)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub energy: f64,
    pub std_error: f64,
    pub mean_r: f64,
    pub shots: u64,
}

/// Runs `shots` rounds with fresh states and inverts `E[r] = (⟨H⟩+W)/(2W)`.
/// Shot `i` draws from stream `i` of `seed`.
pub fn estimate_energy(
    source: &dyn StateSource,
    ensemble: &PauliEnsemble,
    shots: u64,
    seed: SeedStream,
    parallel: bool,
) -> Result<EnergyEstimate> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let rs = run_shots(seed, shots, parallel, |shot, rng| {
        let state = source.prepare(shot)?;
        let entry = *ensemble.sample_term(rng);
        Ok(measure_term(&state, &entry, rng)?.r)
    });
    let rs = rs.into_iter().collect::<Result<Vec<u8>>>()?;
    let count = rs.iter().filter(|&&r| r == 1).count() as f64;
    let n = shots as f64;
    let mean = count / n;
    let var = if shots > 1 {
        (count * (1.0 - mean).powi(2) + (n - count) * mean.powi(2)) / (n - 1.0)
    } else {
        0.0
    };
    let w = ensemble.total_weight();
    Ok(EnergyEstimate {
        energy: 2.0 * w * mean - w,
        std_error: 2.0 * w * (var / n).sqrt(),
        mean_r: mean,
        shots,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromiseOrigin {
    User,
    /// Derived from the exact spectrum.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyPromise {
    pub e_a: f64,
    pub e_b: f64,
    pub origin: PromiseOrigin,
}

impl EnergyPromise {
    pub fn new(e_a: f64, e_b: f64) -> Result<Self> {
        if !e_a.is_finite() || !e_b.is_finite() || e_b <= e_a {
            return Err(Error::InvalidPromise { e_a, e_b });
        }
        Ok(EnergyPromise {
            e_a,
            e_b,
            origin: PromiseOrigin::User,
        })
    }

    /// `E_a` = ground energy, `E_b` = next distinct level.
    pub fn from_spectrum(h: &LocalHamiltonian) -> Result<Self> {
        let (values, _) = h.spectrum()?;
        let e_a = values[0];
        let e_b = values
            .iter()
            .copied()
            .find(|&v| v > e_a + 1e-9)
            .ok_or_else(|| Error::InvalidHamiltonian("spectrum has a single level".into()))?;
        Ok(EnergyPromise {
            e_a,
            e_b,
            origin: PromiseOrigin::Oracle,
        })
    }

    /// Parses `"Ea,Eb"`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!(
                "promise {s:?} is not of the form Ea,Eb"
            )));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("promise value {t:?} is not a number")))
        };
        EnergyPromise::new(num(parts[0])?, num(parts[1])?)
    }
}

/// `(E_b - E_a) / (2W)`.
pub fn lh_gap(ensemble: &PauliEnsemble, promise: &EnergyPromise) -> Result<f64> {
    // also rejects NaN endpoints
    if promise.e_b.partial_cmp(&promise.e_a) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidPromise {
            e_a: promise.e_a,
            e_b: promise.e_b,
        });
    }
    Ok((promise.e_b - promise.e_a) / (2.0 * ensemble.total_weight()))
}

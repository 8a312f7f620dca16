//! Dense pure states and density matrices on up to [`MAX_QUBITS`] qubits.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh, eigvalsh, hermitian_deviation, outer, sqrt_psd, trace, trace_norm_hermitian, CMatrix,
    CVector, EIGEN_CLAMP,
};
use crate::pauli::PauliString;

pub const MAX_QUBITS: usize = 12;
pub const STATE_TOL: f64 = 1e-10;

pub type Gate2 = Matrix2<Complex64>;

pub fn hadamard() -> Gate2 {
    let h = c(FRAC_1_SQRT_2, 0.0);
    Gate2::new(h, h, h, -h)
}

/// `diag(1, e^{i theta})`.
pub fn phase_gate(theta: f64) -> Gate2 {
    Gate2::new(
        c(1.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        Complex64::from_polar(1.0, theta),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// `0` for `+1`, `1` for `-1`.
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

/// A two-outcome single-qubit observable.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementBasis {
    X,
    Y,
    Z,
    /// Traceless Hermitian involution.
    Custom(Gate2),
}

impl MeasurementBasis {
    /// `cos(angle) X + sin(angle) Y`, whose `+1` eigenvector is
    /// `(|0> + e^{i angle}|1>)/sqrt(2)`.
    pub fn xy_plane(angle: f64) -> Self {
        let (s, co) = angle.sin_cos();
        MeasurementBasis::Custom(Gate2::new(c(0.0, 0.0), c(co, -s), c(co, s), c(0.0, 0.0)))
    }

    pub fn custom(m: Gate2) -> Result<Self> {
        let herm = (m - m.adjoint())
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        if herm > STATE_TOL {
            return Err(Error::InvalidBasis(format!(
                "observable is not Hermitian (deviation {herm:.3e})"
            )));
        }
        let sq = (m * m - Gate2::identity())
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        if sq > STATE_TOL {
            return Err(Error::InvalidBasis(format!(
                "observable does not square to identity (deviation {sq:.3e})"
            )));
        }
        if (m[(0, 0)] + m[(1, 1)]).norm() > STATE_TOL {
            return Err(Error::InvalidBasis(
                "observable is proportional to identity".into(),
            ));
        }
        Ok(MeasurementBasis::Custom(m))
    }

    pub fn observable(&self) -> Gate2 {
        let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        match self {
            MeasurementBasis::X => Gate2::new(o, l, l, o),
            MeasurementBasis::Y => Gate2::new(o, -i, i, o),
            MeasurementBasis::Z => Gate2::new(l, o, o, -l),
            MeasurementBasis::Custom(m) => *m,
        }
    }

    /// Unitary `V` with `V M V† = Z`; its rows are `<e+|` and `<e-|`.
    pub fn rotation_to_z(&self) -> Gate2 {
        let r = c(FRAC_1_SQRT_2, 0.0);
        let ri = c(0.0, FRAC_1_SQRT_2);
        match self {
            MeasurementBasis::Z => Gate2::identity(),
            MeasurementBasis::X => hadamard(),
            MeasurementBasis::Y => Gate2::new(r, -ri, r, ri),
            MeasurementBasis::Custom(m) => {
                let proj = (Gate2::identity() + m).scale(0.5);
                let col0 = proj.column(0).into_owned();
                let col1 = proj.column(1).into_owned();
                let v = if col0.norm() >= col1.norm() {
                    col0
                } else {
                    col1
                };
                let v = v / c(v.norm(), 0.0);
                let (a, b) = (v[0], v[1]);
                // e- = (-conj(b), conj(a)), rows hold the conjugates
                Gate2::new(a.conj(), b.conj(), -b, a)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Pure(CVector),
    Mixed(CMatrix),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purity {
    Pure,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateFile", into = "StateFile")]
pub struct QuantumState {
    n: usize,
    repr: Repr,
}

/// JSON fixture layout: `{n, kind, data: [[re, im], ...]}`, density
/// matrices flattened row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub n: usize,
    pub kind: Purity,
    pub data: Vec<[f64; 2]>,
}

impl TryFrom<StateFile> for QuantumState {
    type Error = Error;

    fn try_from(f: StateFile) -> Result<Self> {
        check_qubits(f.n)?;
        let dim = 1usize << f.n;
        let values: Vec<Complex64> = f.data.iter().map(|&[re, im]| c(re, im)).collect();
        match f.kind {
            Purity::Pure => QuantumState::from_amplitudes(f.n, values),
            Purity::Mixed => {
                if values.len() != dim * dim {
                    return Err(Error::SizeMismatch {
                        expected: dim * dim,
                        found: values.len(),
                    });
                }
                QuantumState::from_density(f.n, CMatrix::from_row_slice(dim, dim, &values))
            }
        }
    }
}

impl From<QuantumState> for StateFile {
    fn from(s: QuantumState) -> Self {
        match &s.repr {
            Repr::Pure(v) => StateFile {
                n: s.n,
                kind: Purity::Pure,
                data: v.iter().map(|z| [z.re, z.im]).collect(),
            },
            Repr::Mixed(m) => StateFile {
                n: s.n,
                kind: Purity::Mixed,
                data: m.transpose().iter().map(|z| [z.re, z.im]).collect(),
            },
        }
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            what: "state",
            n,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

#[inline]
fn qubit_bit(n: usize, qubit: usize) -> usize {
    1usize << (n - 1 - qubit)
}

impl QuantumState {
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        if amplitudes.len() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let v = CVector::from_vec(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(QuantumState {
            n,
            repr: Repr::Pure(v),
        })
    }

    /// Normalizes `v` first.
    pub fn from_unnormalized(n: usize, v: CVector) -> Result<Self> {
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        QuantumState::from_amplitudes(n, (v / c(norm, 0.0)).iter().copied().collect())
    }

    pub fn from_density(n: usize, rho: CMatrix) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                found: rho.nrows(),
            });
        }
        let deviation = hermitian_deviation(&rho);
        if deviation > STATE_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = trace(&rho);
        if (tr - c(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = eigvalsh(&rho)[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(QuantumState {
            n,
            repr: Repr::Mixed(rho),
        })
    }

    pub fn plus_state(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        let amp = c((dim as f64).sqrt().recip(), 0.0);
        QuantumState::from_amplitudes(n, vec![amp; dim])
    }

    pub fn zero_state(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut v = vec![c(0.0, 0.0); 1 << n];
        v[0] = c(1.0, 0.0);
        QuantumState::from_amplitudes(n, v)
    }

    /// Computational basis state; character `i` of `bits` is qubit `i`.
    pub fn basis_state(bits: &str) -> Result<Self> {
        let n = bits.len();
        check_qubits(n)?;
        let mut index = 0usize;
        for ch in bits.chars() {
            index = index << 1
                | match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::Parse(format!("bad bit {ch:?} in {bits:?}"))),
                };
        }
        let mut v = vec![c(0.0, 0.0); 1 << n];
        v[index] = c(1.0, 0.0);
        QuantumState::from_amplitudes(n, v)
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        Ok(QuantumState {
            n,
            repr: Repr::Mixed(CMatrix::identity(dim, dim).scale(1.0 / dim as f64)),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.repr {
            Repr::Pure(v) => outer(v),
            Repr::Mixed(m) => m.clone(),
        }
    }

    pub fn to_mixed(&self) -> QuantumState {
        QuantumState {
            n: self.n,
            repr: Repr::Mixed(self.density_matrix()),
        }
    }

    /// Norm of a pure state or trace of a density matrix.
    pub fn total_weight(&self) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v.norm_squared(),
            Repr::Mixed(m) => trace(m).re,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            Repr::Mixed(m) => m.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n {
            return Err(Error::InvalidIndex {
                index: qubit,
                n: self.n,
            });
        }
        Ok(())
    }

    pub fn apply_single_qubit_gate(&self, qubit: usize, u: &Gate2) -> Result<Self> {
        self.check_qubit(qubit)?;
        let deviation = (u.adjoint() * u - Gate2::identity())
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        if deviation > STATE_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(self.apply_gate_unchecked(qubit, u))
    }

    fn apply_gate_unchecked(&self, qubit: usize, u: &Gate2) -> Self {
        let bit = qubit_bit(self.n, qubit);
        let dim = self.dim();
        let repr = match &self.repr {
            Repr::Pure(v) => {
                let mut out = v.clone();
                for i0 in (0..dim).filter(|i| i & bit == 0) {
                    let i1 = i0 | bit;
                    let (a, b) = (v[i0], v[i1]);
                    out[i0] = u[(0, 0)] * a + u[(0, 1)] * b;
                    out[i1] = u[(1, 0)] * a + u[(1, 1)] * b;
                }
                Repr::Pure(out)
            }
            Repr::Mixed(m) => {
                let mut left = m.clone();
                for col in 0..dim {
                    for r0 in (0..dim).filter(|i| i & bit == 0) {
                        let r1 = r0 | bit;
                        let (a, b) = (m[(r0, col)], m[(r1, col)]);
                        left[(r0, col)] = u[(0, 0)] * a + u[(0, 1)] * b;
                        left[(r1, col)] = u[(1, 0)] * a + u[(1, 1)] * b;
                    }
                }
                let mut out = left.clone();
                for row in 0..dim {
                    for c0 in (0..dim).filter(|i| i & bit == 0) {
                        let c1 = c0 | bit;
                        let (a, b) = (left[(row, c0)], left[(row, c1)]);
                        out[(row, c0)] = a * u[(0, 0)].conj() + b * u[(0, 1)].conj();
                        out[(row, c1)] = a * u[(1, 0)].conj() + b * u[(1, 1)].conj();
                    }
                }
                Repr::Mixed(out)
            }
        };
        QuantumState { n: self.n, repr }
    }

    pub fn apply_cz(&self, a: usize, b: usize) -> Result<Self> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::InvalidSupport(format!("CZ on a single qubit {a}")));
        }
        let mask = qubit_bit(self.n, a) | qubit_bit(self.n, b);
        let sign = |i: usize| if i & mask == mask { -1.0 } else { 1.0 };
        let repr = match &self.repr {
            Repr::Pure(v) => Repr::Pure(CVector::from_fn(v.len(), |i, _| v[i] * sign(i))),
            Repr::Mixed(m) => Repr::Mixed(CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
                m[(i, j)] * (sign(i) * sign(j))
            })),
        };
        Ok(QuantumState { n: self.n, repr })
    }

    fn check_pauli(&self, p: &PauliString) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: p.n(),
            });
        }
        Ok(())
    }

    /// `S|psi>` or `S rho S†`.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<Self> {
        self.check_pauli(p)?;
        let a = p.basis_action();
        let repr = match &self.repr {
            Repr::Pure(v) => {
                let mut out = CVector::zeros(v.len());
                for b in 0..v.len() {
                    out[b ^ a.flip] = a.coeff(b) * v[b];
                }
                Repr::Pure(out)
            }
            Repr::Mixed(m) => {
                let dim = m.nrows();
                let mut out = CMatrix::zeros(dim, dim);
                for r in 0..dim {
                    for col in 0..dim {
                        out[(r ^ a.flip, col ^ a.flip)] =
                            a.coeff(r) * a.coeff(col).conj() * m[(r, col)];
                    }
                }
                Repr::Mixed(out)
            }
        };
        Ok(QuantumState { n: self.n, repr })
    }

    /// Applies a full `2^n x 2^n` unitary.
    pub fn apply_unitary(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        let repr = match &self.repr {
            Repr::Pure(v) => Repr::Pure(u * v),
            Repr::Mixed(m) => Repr::Mixed(u * m * u.adjoint()),
        };
        Ok(QuantumState { n: self.n, repr })
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &QuantumState) -> Result<Self> {
        let n = self.n + other.n;
        check_qubits(n)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Pure(a), Repr::Pure(b)) => Repr::Pure(a.kronecker(b)),
            _ => Repr::Mixed(self.density_matrix().kronecker(&other.density_matrix())),
        };
        Ok(QuantumState { n, repr })
    }

    /// Reorders qubits: new qubit `i` is old qubit `order[i]`.
    pub fn reorder(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: order.len(),
            });
        }
        let mut seen = vec![false; self.n];
        for &q in order {
            self.check_qubit(q)?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::InvalidSupport(format!("qubit {q} repeated")));
            }
        }
        let n = self.n;
        // new basis index -> old basis index
        let map = |new: usize| {
            let mut old = 0usize;
            for (i, &q) in order.iter().enumerate() {
                if new & qubit_bit(n, i) != 0 {
                    old |= qubit_bit(n, q);
                }
            }
            old
        };
        let idx: Vec<usize> = (0..self.dim()).map(map).collect();
        let repr = match &self.repr {
            Repr::Pure(v) => Repr::Pure(CVector::from_fn(v.len(), |i, _| v[idx[i]])),
            Repr::Mixed(m) => Repr::Mixed(CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
                m[(idx[i], idx[j])]
            })),
        };
        Ok(QuantumState { n, repr })
    }

    /// `(1 - weight) self + weight other`.
    pub fn mix(&self, other: &QuantumState, weight: f64) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidState(format!(
                "mixing weight {weight} outside [0,1]"
            )));
        }
        let rho = self.density_matrix().scale(1.0 - weight) + other.density_matrix().scale(weight);
        Ok(QuantumState {
            n: self.n,
            repr: Repr::Mixed(rho),
        })
    }

    fn z_weight(&self, bit: usize, value: usize) -> f64 {
        let probs = self.probabilities();
        probs
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & bit != 0) as usize == value)
            .map(|(_, p)| p)
            .sum()
    }

    /// Projects onto `bit == value` and renormalizes by `p`.
    fn z_project(&self, bit: usize, value: usize, p: f64) -> Self {
        let keep = |i: usize| (i & bit != 0) as usize == value;
        let repr = match &self.repr {
            Repr::Pure(v) => {
                let s = c(p.sqrt().recip(), 0.0);
                Repr::Pure(CVector::from_fn(v.len(), |i, _| {
                    if keep(i) {
                        v[i] * s
                    } else {
                        c(0.0, 0.0)
                    }
                }))
            }
            Repr::Mixed(m) => Repr::Mixed(CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
                if keep(i) && keep(j) {
                    m[(i, j)] / p
                } else {
                    c(0.0, 0.0)
                }
            })),
        };
        QuantumState { n: self.n, repr }
    }

    /// Born probability of `outcome` when measuring `basis` on `qubit`.
    pub fn outcome_probability(
        &self,
        qubit: usize,
        basis: &MeasurementBasis,
        outcome: Outcome,
    ) -> Result<f64> {
        self.check_qubit(qubit)?;
        let rotated = self.apply_gate_unchecked(qubit, &basis.rotation_to_z());
        let w = rotated.z_weight(qubit_bit(self.n, qubit), outcome.bit() as usize);
        Ok(w.clamp(0.0, 1.0))
    }

    /// Post-measurement state for a chosen outcome, with its probability.
    pub fn measure_with_outcome(
        &self,
        qubit: usize,
        basis: &MeasurementBasis,
        outcome: Outcome,
    ) -> Result<(f64, Self)> {
        self.check_qubit(qubit)?;
        let v = basis.rotation_to_z();
        let rotated = self.apply_gate_unchecked(qubit, &v);
        let bit = qubit_bit(self.n, qubit);
        let p = rotated.z_weight(bit, outcome.bit() as usize);
        if p <= 1e-15 {
            return Err(Error::ZeroProbabilityBranch);
        }
        let post = rotated
            .z_project(bit, outcome.bit() as usize, p)
            .apply_gate_unchecked(qubit, &v.adjoint());
        Ok((p.min(1.0), post))
    }

    /// Samples a projective measurement of `basis` on `qubit`.
    pub fn measure_single_qubit<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        basis: &MeasurementBasis,
        rng: &mut R,
    ) -> Result<(Outcome, Self)> {
        self.check_qubit(qubit)?;
        let v = basis.rotation_to_z();
        let rotated = self.apply_gate_unchecked(qubit, &v);
        let bit = qubit_bit(self.n, qubit);
        let p_plus = rotated.z_weight(bit, 0);
        let outcome = if rng.random::<f64>() < p_plus {
            Outcome::Plus
        } else {
            Outcome::Minus
        };
        let p = if outcome == Outcome::Plus {
            p_plus
        } else {
            rotated.z_weight(bit, 1)
        };
        let post = rotated
            .z_project(bit, outcome.bit() as usize, p)
            .apply_gate_unchecked(qubit, &v.adjoint());
        Ok((outcome, post))
    }

    /// Measures `qubit` and removes it; the remaining qubits keep their order.
    /// Same outcome statistics as [`measure_single_qubit`](Self::measure_single_qubit).
    pub fn measure_and_discard<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        basis: &MeasurementBasis,
        rng: &mut R,
    ) -> Result<(Outcome, Self)> {
        self.check_qubit(qubit)?;
        let (outcome, _, post) = self.collapse(qubit, basis, |p_plus| {
            if rng.random::<f64>() < p_plus {
                Outcome::Plus
            } else {
                Outcome::Minus
            }
        });
        Ok((outcome, post))
    }

    /// Projects `qubit` onto a chosen outcome and removes it. Returns the
    /// outcome probability and the renormalized remainder.
    pub fn project_and_discard(
        &self,
        qubit: usize,
        basis: &MeasurementBasis,
        outcome: Outcome,
    ) -> Result<(f64, Self)> {
        self.check_qubit(qubit)?;
        let (_, p, post) = self.collapse(qubit, basis, |_| outcome);
        if p <= 1e-15 {
            return Err(Error::ZeroProbabilityBranch);
        }
        Ok((p.min(1.0), post))
    }

    fn collapse(
        &self,
        qubit: usize,
        basis: &MeasurementBasis,
        choose: impl FnOnce(f64) -> Outcome,
    ) -> (Outcome, f64, Self) {
        let v = basis.rotation_to_z();
        let shift = self.n - 1 - qubit;
        let low = (1usize << shift) - 1;
        let half = self.dim() / 2;
        let full = |r: usize| ((r >> shift) << (shift + 1)) | (r & low);
        match &self.repr {
            Repr::Pure(amps) => {
                let mut plus = Vec::with_capacity(half);
                let mut minus = Vec::with_capacity(half);
                let mut p_plus = 0.0;
                for r in 0..half {
                    let i0 = full(r);
                    let (a, b) = (amps[i0], amps[i0 | (1 << shift)]);
                    let up = v[(0, 0)] * a + v[(0, 1)] * b;
                    p_plus += up.norm_sqr();
                    plus.push(up);
                    minus.push(v[(1, 0)] * a + v[(1, 1)] * b);
                }
                let outcome = choose(p_plus);
                let (kept, p) = match outcome {
                    Outcome::Plus => (plus, p_plus),
                    Outcome::Minus => (minus, 1.0 - p_plus),
                };
                let scale = c(p.max(1e-300).sqrt().recip(), 0.0);
                let kept = CVector::from_iterator(half, kept.into_iter().map(|z| z * scale));
                let post = QuantumState {
                    n: self.n - 1,
                    repr: Repr::Pure(kept),
                };
                (outcome, p, post)
            }
            Repr::Mixed(_) => {
                let rotated = self.apply_gate_unchecked(qubit, &v);
                let bit = 1usize << shift;
                let p_plus = rotated.z_weight(bit, 0);
                let outcome = choose(p_plus);
                let (offset, p) = match outcome {
                    Outcome::Plus => (0, p_plus),
                    Outcome::Minus => (bit, 1.0 - p_plus),
                };
                let Repr::Mixed(m) = &rotated.repr else {
                    unreachable!("gates keep the representation")
                };
                let norm = p.max(1e-300);
                let block = CMatrix::from_fn(half, half, |r, col| {
                    m[(full(r) | offset, full(col) | offset)] / norm
                });
                let post = QuantumState {
                    n: self.n - 1,
                    repr: Repr::Mixed(block),
                };
                (outcome, p, post)
            }
        }
    }

    /// `Tr(p rho)` for a Hermitian Pauli string.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        self.check_pauli(p)?;
        if !p.is_hermitian() {
            return Err(Error::NotHermitian { deviation: 2.0 });
        }
        let a = p.basis_action();
        let value: Complex64 = match &self.repr {
            Repr::Pure(v) => (0..v.len())
                .map(|b| v[b ^ a.flip].conj() * a.coeff(b) * v[b])
                .sum(),
            Repr::Mixed(m) => (0..m.nrows())
                .map(|r| a.coeff(r) * m[(r, r ^ a.flip)])
                .sum(),
        };
        Ok(value.re)
    }

    /// `Tr(op rho)` for a dense Hermitian operator on all qubits.
    pub fn expectation_operator(&self, op: &CMatrix) -> Result<f64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                found: op.nrows(),
            });
        }
        let value = match &self.repr {
            Repr::Pure(v) => v.dotc(&(op * v)),
            Repr::Mixed(m) => trace(&(op * m)),
        };
        Ok(value.re)
    }

    /// Reduced state on `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        for &q in keep {
            self.check_qubit(q)?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::InvalidSupport(format!("qubit {q} repeated")));
            }
        }
        let traced: Vec<usize> = (0..self.n).filter(|&q| !seen[q]).collect();
        let compose = |kept_cfg: usize, env_cfg: usize| {
            let mut idx = 0usize;
            for (i, &q) in keep.iter().enumerate() {
                if kept_cfg & qubit_bit(keep.len(), i) != 0 {
                    idx |= qubit_bit(self.n, q);
                }
            }
            for (i, &q) in traced.iter().enumerate() {
                if env_cfg & qubit_bit(traced.len(), i) != 0 {
                    idx |= qubit_bit(self.n, q);
                }
            }
            idx
        };
        let dk = 1usize << keep.len();
        let de = 1usize << traced.len();
        let table: Vec<Vec<usize>> = (0..dk)
            .map(|a| (0..de).map(|e| compose(a, e)).collect())
            .collect();
        let rho = match &self.repr {
            Repr::Pure(v) => CMatrix::from_fn(dk, dk, |a, b| {
                (0..de)
                    .map(|e| v[table[a][e]] * v[table[b][e]].conj())
                    .sum()
            }),
            Repr::Mixed(m) => CMatrix::from_fn(dk, dk, |a, b| {
                (0..de).map(|e| m[(table[a][e], table[b][e])]).sum()
            }),
        };
        Ok(QuantumState {
            n: keep.len(),
            repr: Repr::Mixed(rho),
        })
    }

    /// Haar-random pure state, or a full-rank Ginibre-random mixed state.
    pub fn random<R: Rng + ?Sized>(n: usize, purity: Purity, rng: &mut R) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        let mut gauss = || c(rng.sample(StandardNormal), rng.sample(StandardNormal));
        match purity {
            Purity::Pure => {
                let v = CVector::from_fn(dim, |_, _| gauss());
                QuantumState::from_unnormalized(n, v)
            }
            Purity::Mixed => {
                let g = CMatrix::from_fn(dim, dim, |_, _| gauss());
                let rho = &g * g.adjoint();
                let tr = trace(&rho).re;
                let rho = rho.scale(1.0 / tr);
                let rho = (&rho + rho.adjoint()).scale(0.5);
                Ok(QuantumState {
                    n,
                    repr: Repr::Mixed(rho),
                })
            }
        }
    }
}

fn check_same_dim(a: &QuantumState, b: &QuantumState) -> Result<()> {
    if a.n != b.n {
        return Err(Error::SizeMismatch {
            expected: a.n,
            found: b.n,
        });
    }
    Ok(())
}

/// `F(a, b) = Tr sqrt(sqrt(a) b sqrt(a))` (the square-root convention).
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    check_same_dim(a, b)?;
    let f = match (&a.repr, &b.repr) {
        (Repr::Pure(x), Repr::Pure(y)) => x.dotc(y).norm(),
        (Repr::Pure(x), Repr::Mixed(m)) | (Repr::Mixed(m), Repr::Pure(x)) => {
            x.dotc(&(m * x)).re.max(0.0).sqrt()
        }
        (Repr::Mixed(ma), Repr::Mixed(mb)) => {
            let s = sqrt_psd(ma);
            let inner = &s * mb * &s;
            eigvalsh(&inner)
                .iter()
                .map(|&v| if v < EIGEN_CLAMP { 0.0 } else { v.sqrt() })
                .sum()
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `1/2 ||a - b||_1`.
pub fn trace_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    check_same_dim(a, b)?;
    let d = match (&a.repr, &b.repr) {
        (Repr::Pure(x), Repr::Pure(y)) => (1.0 - x.dotc(y).norm_sqr()).max(0.0).sqrt(),
        _ => 0.5 * trace_norm_hermitian(&(a.density_matrix() - b.density_matrix())),
    };
    Ok(d.clamp(0.0, 1.0))
}

/// Leading eigenpair of a Hermitian operator.
pub fn top_eigenpair(op: &CMatrix) -> (f64, CVector) {
    let (vals, vecs) = eigh(op);
    let last = vals.len() - 1;
    (vals[last], vecs.column(last).into_owned())
}

//! Signed Pauli strings in symplectic form and Pauli-basis decomposition.
//!
//! Qubit 0 is the most significant tensor factor everywhere in this crate:
//! in a `2^n` dimensional vector, qubit `q` is bit `n - 1 - q` of the basis
//! index. A string is stored as `i^phase * P_0 ⊗ P_1 ⊗ ... ⊗ P_{n-1}` where
//! each `P_q` is the Hermitian Pauli selected by `(x_q, z_q)`, so `Y` is the
//! usual Hermitian matrix and a string is Hermitian iff `phase` is even.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_deviation, CMatrix};

pub const MAX_PAULI_QUBITS: usize = 64;
pub const MAX_DENSE_QUBITS: usize = 12;
pub const MAX_DECOMPOSE_SUPPORT: usize = 6;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const COEFF_DROP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Z => (false, true),
            Pauli::Y => (true, true),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn matrix(self) -> CMatrix {
        let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        match self {
            Pauli::I => CMatrix::from_row_slice(2, 2, &[l, o, o, l]),
            Pauli::X => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Pauli::Z => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        }
    }
}

/// `i^k` for `k` taken mod 4.
pub fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// Exponent of `i` picked up when multiplying single-qubit Paulis
/// `(x1,z1) * (x2,z2)` in the Hermitian-Y convention.
fn product_phase(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    let (x2, z2) = (x2 as i32, z2 as i32);
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 - x2,
        (true, false) => z2 * (2 * x2 - 1),
        (false, true) => x2 * (1 - 2 * z2),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_PAULI_QUBITS, "at most {MAX_PAULI_QUBITS} qubits");
        PauliString {
            n,
            x: 0,
            z: 0,
            phase: 0,
        }
    }

    /// Builds a string from raw masks (bit `q` belongs to qubit `q`).
    pub fn new(n: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        if n > MAX_PAULI_QUBITS {
            return Err(Error::TooManyQubits {
                what: "Pauli string",
                n,
                max: MAX_PAULI_QUBITS,
            });
        }
        let valid = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if (x | z) & !valid != 0 {
            return Err(Error::InvalidSupport(format!(
                "mask has bits beyond {n} qubits"
            )));
        }
        Ok(PauliString {
            n,
            x,
            z,
            phase: phase % 4,
        })
    }

    pub fn single(n: usize, qubit: usize, letter: Pauli) -> Result<Self> {
        if qubit >= n {
            return Err(Error::InvalidIndex { index: qubit, n });
        }
        let mut p = PauliString::identity(n);
        p.set(qubit, letter);
        Ok(p)
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self> {
        let mut p = PauliString::new(letters.len(), 0, 0, 0)?;
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        Ok(p)
    }

    fn set(&mut self, qubit: usize, letter: Pauli) {
        let (xb, zb) = letter.bits();
        let bit = 1u64 << qubit;
        self.x = if xb { self.x | bit } else { self.x & !bit };
        self.z = if zb { self.z | bit } else { self.z & !bit };
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Power of `i` in front of the tensor product.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    /// `+1.0` or `-1.0` for Hermitian strings.
    pub fn sign(&self) -> Option<f64> {
        match self.phase {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    pub fn negated(self) -> Self {
        let phase = (self.phase + 2) % 4;
        self.with_phase(phase)
    }

    /// The same letters with phase `+1`.
    pub fn unsigned(self) -> Self {
        self.with_phase(0)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&q| (self.x | self.z) >> q & 1 == 1)
            .collect()
    }

    fn check_size(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// Symbolic product `self * other` with exact phase.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_size(other)?;
        let mut exponent = self.phase as i32 + other.phase as i32;
        let touched = (self.x | self.z) & (other.x | other.z);
        for q in 0..self.n {
            if touched >> q & 1 == 1 {
                exponent += product_phase(
                    self.x >> q & 1 == 1,
                    self.z >> q & 1 == 1,
                    other.x >> q & 1 == 1,
                    other.z >> q & 1 == 1,
                );
            }
        }
        Ok(PauliString {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: exponent.rem_euclid(4) as u8,
        })
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_size(other)?;
        let form = (self.x & other.z) ^ (self.z & other.x);
        Ok(form.count_ones().is_multiple_of(2))
    }

    /// Action on the computational basis: `S|b> = coeff(b) |b ^ flip>` with
    /// `coeff(b) = base * (-1)^popcount(b & sign_mask)`. Masks are in
    /// basis-index bit order.
    pub fn basis_action(&self) -> BasisAction {
        let mut flip = 0usize;
        let mut sign_mask = 0usize;
        for q in 0..self.n {
            let bit = 1usize << (self.n - 1 - q);
            if self.x >> q & 1 == 1 {
                flip |= bit;
            }
            if self.z >> q & 1 == 1 {
                sign_mask |= bit;
            }
        }
        let ycount = (self.x & self.z).count_ones() as u8;
        BasisAction {
            flip,
            sign_mask,
            base: i_pow(self.phase + ycount % 4),
        }
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits {
                what: "dense Pauli matrix",
                n: self.n,
                max: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << self.n;
        let action = self.basis_action();
        let mut m = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            m[(col ^ action.flip, col)] = action.coeff(col);
        }
        Ok(m)
    }

    /// Places a string defined on `support.len()` local qubits into `n`
    /// qubits, local qubit `i` landing on `support[i]`.
    pub fn embed(&self, support: &[usize], n: usize) -> Result<PauliString> {
        if support.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: support.len(),
            });
        }
        let mut out = PauliString::new(n, 0, 0, self.phase)?;
        for (i, &q) in support.iter().enumerate() {
            if q >= n {
                return Err(Error::InvalidIndex { index: q, n });
            }
            out.set(q, self.letter(i));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BasisAction {
    pub flip: usize,
    pub sign_mask: usize,
    pub base: Complex64,
}

impl BasisAction {
    pub fn coeff(&self, basis: usize) -> Complex64 {
        if (basis & self.sign_mask).count_ones() % 2 == 1 {
            -self.base
        } else {
            self.base
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Optional sign (`+`, `-`, `i`, `+i`, `-i`) followed by `I/X/Y/Z` letters.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (1, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else {
            (0, s)
        };
        let letters = rest
            .chars()
            .map(|ch| {
                Pauli::from_char(ch)
                    .ok_or_else(|| Error::Parse(format!("bad Pauli letter {ch:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_letters(&letters)?.with_phase(phase))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A real multiple of a phase-`+1` Pauli string.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPauliTerm {
    pub string: PauliString,
    pub coeff: f64,
}

impl WeightedPauliTerm {
    /// A Hermitian string with phase `-1` has its sign moved into the coefficient.
    pub fn new(string: PauliString, coeff: f64) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(Error::Parse(format!("non-finite coefficient {coeff}")));
        }
        let sign = string
            .sign()
            .ok_or_else(|| Error::Parse(format!("{string} is not Hermitian")))?;
        Ok(WeightedPauliTerm {
            string: string.unsigned(),
            coeff: coeff * sign,
        })
    }
}

/// Pauli-basis coefficients `c_S = Tr(S h) / 2^k` of a Hermitian matrix on
/// the qubits `support`, each term embedded into `n` qubits.
pub fn decompose(h: &CMatrix, support: &[usize], n: usize) -> Result<Vec<WeightedPauliTerm>> {
    let k = support.len();
    if k > MAX_DECOMPOSE_SUPPORT {
        return Err(Error::TooManyQubits {
            what: "decomposition support",
            n: k,
            max: MAX_DECOMPOSE_SUPPORT,
        });
    }
    let dim = 1usize << k;
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::SizeMismatch {
            expected: dim,
            found: h.nrows(),
        });
    }
    for (i, &q) in support.iter().enumerate() {
        if q >= n {
            return Err(Error::InvalidIndex { index: q, n });
        }
        if support[..i].contains(&q) {
            return Err(Error::InvalidSupport(format!("qubit {q} repeated")));
        }
    }
    let deviation = hermitian_deviation(h);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }

    let mut terms = Vec::new();
    let norm = dim as f64;
    for x in 0..(1u64 << k) {
        for z in 0..(1u64 << k) {
            let local = PauliString::new(k, x, z, 0)?;
            let action = local.basis_action();
            // Tr(S h) = sum_b <b ^ flip| S |b> h[b, b ^ flip]
            let tr: Complex64 = (0..dim)
                .map(|b| action.coeff(b) * h[(b, b ^ action.flip)])
                .sum();
            let coeff = tr.re / norm;
            if coeff.abs() >= COEFF_DROP_TOL {
                terms.push(WeightedPauliTerm {
                    string: local.embed(support, n)?,
                    coeff,
                });
            }
        }
    }
    Ok(terms)
}

/// Dense `sum_S c_S S`.
pub fn reconstruct(terms: &[WeightedPauliTerm], n: usize) -> Result<CMatrix> {
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for t in terms {
        if t.string.n() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: t.string.n(),
            });
        }
        m += t.string.to_dense()?.scale(t.coeff);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, kron, max_abs_diff};
    use proptest::prelude::*;

    /// Independent route: Kronecker product of 2x2 letter matrices.
    fn kron_oracle(p: &PauliString) -> CMatrix {
        let mut m = CMatrix::identity(1, 1);
        for l in p.letters() {
            m = kron(&m, &l.matrix());
        }
        m * i_pow(p.phase())
    }

    fn all_strings(n: usize) -> Vec<PauliString> {
        let mut v = Vec::new();
        for x in 0..(1u64 << n) {
            for z in 0..(1u64 << n) {
                v.push(PauliString::new(n, x, z, 0).unwrap());
            }
        }
        v
    }

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        assert_eq!(p("X").multiply(&p("Z")).unwrap(), p("-iY"));
    }

    #[test]
    fn identity_is_neutral() {
        let id = PauliString::identity(4);
        for s in ["XYZI", "-ZZXY", "IIII"] {
            assert_eq!(p(s).multiply(&id).unwrap(), p(s));
            assert_eq!(id.multiply(&p(s)).unwrap(), p(s));
        }
    }

    #[test]
    fn products_match_dense_exhaustively() {
        for n in 1..=3 {
            let strings = all_strings(n);
            for a in &strings {
                for b in &strings {
                    let sym = a.multiply(b).unwrap().to_dense().unwrap();
                    let dense = kron_oracle(a) * kron_oracle(b);
                    assert!(max_abs_diff(&sym, &dense) < 1e-14, "{a} * {b}");
                }
            }
        }
    }

    #[test]
    fn commutation_matches_dense_exhaustively() {
        for n in 1..=3 {
            let strings = all_strings(n);
            for a in &strings {
                for b in &strings {
                    let (da, db) = (kron_oracle(a), kron_oracle(b));
                    let comm = &da * &db - &db * &da;
                    let commute = comm.iter().all(|z| z.norm() < 1e-14);
                    assert_eq!(a.commutes(b).unwrap(), commute, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn commutes_examples() {
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XX").commutes(&p("ZZ")).unwrap());
        assert!(p("XI")
            .commutes(&p("XZ").multiply(&p("ZZ")).unwrap())
            .is_ok());
    }

    #[test]
    fn size_mismatch_is_an_error() {
        assert!(matches!(
            p("X").multiply(&p("XX")),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn dense_examples() {
        let y = p("Y").to_dense().unwrap();
        assert_eq!(y, Pauli::Y.matrix());
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        assert_eq!(y[(1, 0)], c(0.0, 1.0));
        assert_eq!(p("II").to_dense().unwrap(), identity(4));
        let zx = kron(&Pauli::Z.matrix(), &Pauli::X.matrix());
        assert_eq!(p("-ZX").to_dense().unwrap(), -zx);
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        // X on qubit 0 of two qubits maps |00> to |10> (index 2)
        let m = p("XI").to_dense().unwrap();
        assert_eq!(m[(2, 0)], c(1.0, 0.0));
    }

    #[test]
    fn dense_cap() {
        let big = PauliString::identity(13);
        assert!(matches!(big.to_dense(), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn parse_and_display() {
        let s = p("-XIZY");
        assert_eq!(s.n(), 4);
        assert_eq!(s.sign(), Some(-1.0));
        assert_eq!(s.letters(), vec![Pauli::X, Pauli::I, Pauli::Z, Pauli::Y]);
        assert_eq!(s.to_string(), "-XIZY");
        assert_eq!(p("+ZZ").to_string(), "ZZ");
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn decompose_zz() {
        let zz = p("ZZ").to_dense().unwrap();
        let terms = decompose(&zz, &[0, 1], 2).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].string, p("ZZ"));
        assert!((terms[0].coeff - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decompose_projector_one() {
        let mut h = CMatrix::zeros(2, 2);
        h[(1, 1)] = c(1.0, 0.0);
        let terms = decompose(&h, &[0], 1).unwrap();
        assert_eq!(terms.len(), 2);
        let get = |s: &str| terms.iter().find(|t| t.string == p(s)).unwrap().coeff;
        assert!((get("I") - 0.5).abs() < 1e-15);
        assert!((get("Z") + 0.5).abs() < 1e-15);
    }

    #[test]
    fn decompose_embeds_into_support() {
        let xz = p("XZ").to_dense().unwrap();
        let terms = decompose(&xz, &[3, 1], 4).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].string, p("IZIX"));
    }

    #[test]
    fn decompose_rejects_bad_input() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            decompose(&h, &[0], 1),
            Err(Error::NotHermitian { .. })
        ));
        let big = CMatrix::identity(128, 128);
        assert!(matches!(
            decompose(&big, &[0, 1, 2, 3, 4, 5, 6], 7),
            Err(Error::TooManyQubits { .. })
        ));
        let id = CMatrix::identity(4, 4);
        assert!(decompose(&id, &[1, 1], 2).is_err());
    }

    #[test]
    fn weighted_term_folds_sign() {
        let t = WeightedPauliTerm::new(p("-ZX"), 2.0).unwrap();
        assert_eq!(t.string, p("ZX"));
        assert_eq!(t.coeff, -2.0);
        assert!(WeightedPauliTerm::new(p("iZ"), 1.0).is_err());
    }

    fn random_hermitian(entries: &[(f64, f64)], dim: usize) -> CMatrix {
        let a = CMatrix::from_fn(dim, dim, |i, j| {
            let (re, im) = entries[i * dim + j];
            c(re, im)
        });
        (&a + a.adjoint()).scale(0.5)
    }

    proptest! {
        #[test]
        fn decompose_round_trips(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
            let h = random_hermitian(&entries, 4);
            let terms = decompose(&h, &[0, 1], 2).unwrap();
            for t in &terms {
                prop_assert_eq!(t.string.phase(), 0);
            }
            let back = reconstruct(&terms, 2).unwrap();
            prop_assert!(max_abs_diff(&back, &h) < 1e-12);
        }

        #[test]
        fn products_of_hermitian_commuting_strings_are_hermitian(
            x1 in 0u64..64, z1 in 0u64..64, x2 in 0u64..64, z2 in 0u64..64
        ) {
            let a = PauliString::new(6, x1, z1, 0).unwrap();
            let b = PauliString::new(6, x2, z2, 0).unwrap();
            let prod = a.multiply(&b).unwrap();
            prop_assert_eq!(prod.is_hermitian(), a.commutes(&b).unwrap());
            prop_assert!(prod.multiply(&prod).unwrap().is_identity());
        }
    }
}

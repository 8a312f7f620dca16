//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues below this are treated as zero when taking PSD square roots.
pub const EIGEN_CLAMP: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Kronecker product with `a` as the more significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest absolute entry of `m - m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry of `u† u - I`.
pub fn unitary_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let p = u.adjoint() * u;
    let id = identity(u.nrows());
    (p - id).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    // symmetrize first so round-off in the input cannot leak into the solver
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, k| {
        eig.eigenvectors[(r, order[k])]
    });
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

/// Square root of a positive semidefinite matrix; eigenvalues under
/// [`EIGEN_CLAMP`] are set to zero.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let roots = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| {
            if v < EIGEN_CLAMP {
                c(0.0, 0.0)
            } else {
                c(v.sqrt(), 0.0)
            }
        }),
    );
    &vecs * CMatrix::from_diagonal(&roots) * vecs.adjoint()
}

/// Schatten-1 norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|v| v.abs()).sum()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Relabels the qubits of an operator: qubit `i` of the result is qubit
/// `order[i]` of `m`. Qubit 0 is the most significant tensor factor.
pub fn permute_qubits(m: &CMatrix, order: &[usize]) -> CMatrix {
    let n = order.len();
    let dim = 1usize << n;
    assert_eq!(m.nrows(), dim);
    let table: Vec<usize> = (0..dim)
        .map(|idx| {
            order.iter().enumerate().fold(0usize, |old, (i, &o)| {
                if (idx >> (n - 1 - i)) & 1 == 1 {
                    old | 1 << (n - 1 - o)
                } else {
                    old
                }
            })
        })
        .collect();
    CMatrix::from_fn(dim, dim, |a, b| m[(table[a], table[b])])
}

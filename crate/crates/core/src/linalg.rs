//! Small dense linear-algebra helpers. Storage is nalgebra; Hermitian
//! eigendecompositions go through faer.

use faer::{c64, Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigenvalues in descending order with matching eigenvector columns.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let a = Mat::<c64>::from_fn(n, n, |r, c| {
        let z = m[(r, c)];
        c64::new(z.re, z.im)
    });
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .expect("self-adjoint eigendecomposition failed to converge");
    let (s, u) = (eig.S().column_vector(), eig.U());
    let raw: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    assert!(raw.iter().all(|v| v.is_finite()), "eigendecomposition produced non-finite values");
    let order = descending_order(&raw);
    let values = order.iter().map(|&i| raw[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| {
        let z = u[(r, order[c])];
        C64::new(z.re, z.im)
    });
    (values, vectors)
}

/// Real symmetric variant of [`hermitian_eigh`].
pub fn symmetric_eigh(m: &RMatrix) -> (Vec<f64>, RMatrix) {
    let n = m.nrows();
    let a = Mat::<f64>::from_fn(n, n, |r, c| m[(r, c)]);
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .expect("self-adjoint eigendecomposition failed to converge");
    let (s, u) = (eig.S().column_vector(), eig.U());
    let raw: Vec<f64> = (0..n).map(|i| s[i]).collect();
    assert!(raw.iter().all(|v| v.is_finite()), "eigendecomposition produced non-finite values");
    let order = descending_order(&raw);
    let values = order.iter().map(|&i| raw[i]).collect();
    let vectors = RMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);
    (values, vectors)
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// `exp(i * angle * T)` for the real symmetric tridiagonal `T` with zero
/// diagonal and the given off-diagonal.
pub fn exp_i_tridiagonal(off_diagonal: &[f64], angle: f64) -> CMatrix {
    let n = off_diagonal.len() + 1;
    let mut t = RMatrix::zeros(n, n);
    for (k, &v) in off_diagonal.iter().enumerate() {
        t[(k, k + 1)] = v;
        t[(k + 1, k)] = v;
    }
    let (values, vectors) = symmetric_eigh(&t);
    let vc = vectors.map(C64::from);
    let mut left = vc.clone();
    for (k, &lam) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, angle * lam);
        left.column_mut(k).apply(|z| *z *= phase);
    }
    cmul(&left, &vc.transpose())
}

/// Complex product through four real products, which use the fast real kernel.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMatrix::from_fn(re.nrows(), re.ncols(), |r, c| C64::new(re[(r, c)], im[(r, c)]))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Sum of `w_k |v_k><v_k|` over the columns of `vectors`.
pub fn weighted_outer(vectors: &CMatrix, weights: &[f64]) -> CMatrix {
    let mut scaled = vectors.clone();
    for (k, &w) in weights.iter().enumerate() {
        scaled.column_mut(k).apply(|z| *z *= w);
    }
    cmul(&scaled, &vectors.adjoint())
}

/// Multiplies a vector by a global phase so that its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (k, z) in v.iter().enumerate() {
        // small slack keeps the choice stable between nearly equal entries
        if z.norm() > best_norm * (1.0 + 1e-9) {
            best = k;
            best_norm = z.norm();
        }
    }
    if best_norm > 0.0 {
        let phase = v[best].conj() / best_norm;
        v.apply(|z| *z *= phase);
    }
}

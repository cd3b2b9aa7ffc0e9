//! Thin dense-matrix helpers over `faer`.

use faer::{c64, Mat, MatRef, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

#[inline]
pub fn re(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn hermitian_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    m.singular_values().map_err(|_| Error::Decomposition)
}

/// Spectral (operator 2-) norm.
pub fn op_norm(m: MatRef<'_, c64>) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Schatten p-norm; `p = 1` is the trace norm.
pub fn schatten_norm(m: MatRef<'_, c64>, p: f64) -> Result<f64> {
    let sv = singular_values(m)?;
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Inverse via partially pivoted LU; the caller guarantees invertibility.
pub fn inverse(m: MatRef<'_, c64>) -> CMat {
    faer::linalg::solvers::DenseSolveCore::inverse(&m.partial_piv_lu())
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn eigvalsh(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Decomposition)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns).
pub fn eigh(m: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Decomposition)?;
    let vals = evd.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b - b * a
}

pub fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn scaled(m: MatRef<'_, c64>, s: f64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

pub fn diag_real(d: &[f64]) -> CMat {
    let n = d.len();
    let mut m = Mat::zeros(n, n);
    for (i, &x) in d.iter().enumerate() {
        m[(i, i)] = re(x);
    }
    m
}

pub fn diag_complex(d: &[c64]) -> CMat {
    let n = d.len();
    let mut m = Mat::zeros(n, n);
    for (i, &x) in d.iter().enumerate() {
        m[(i, i)] = x;
    }
    m
}

/// Assemble `[[a, b], [c, d]]`.
pub fn block2(
    a: MatRef<'_, c64>,
    b: MatRef<'_, c64>,
    c: MatRef<'_, c64>,
    d: MatRef<'_, c64>,
) -> CMat {
    let (n1, m1) = (a.nrows(), a.ncols());
    let (n2, m2) = (d.nrows(), d.ncols());
    assert_eq!(b.nrows(), n1);
    assert_eq!(b.ncols(), m2);
    assert_eq!(c.nrows(), n2);
    assert_eq!(c.ncols(), m1);
    let mut out = Mat::zeros(n1 + n2, m1 + m2);
    out.as_mut().submatrix_mut(0, 0, n1, m1).copy_from(a);
    out.as_mut().submatrix_mut(0, m1, n1, m2).copy_from(b);
    out.as_mut().submatrix_mut(n1, 0, n2, m1).copy_from(c);
    out.as_mut().submatrix_mut(n1, m1, n2, m2).copy_from(d);
    out
}

pub fn direct_sum(a: MatRef<'_, c64>, d: MatRef<'_, c64>) -> CMat {
    block2(
        a,
        Mat::<c64>::zeros(a.nrows(), d.ncols()).as_ref(),
        Mat::<c64>::zeros(d.nrows(), a.ncols()).as_ref(),
        d,
    )
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn unitarity_defect(u: MatRef<'_, c64>) -> f64 {
    let g = u.adjoint() * u;
    max_abs_diff(g.as_ref(), Mat::<c64>::identity(u.ncols(), u.ncols()).as_ref())
}

/// Matrix of i.i.d. standard complex Gaussians (unit variance per entry).
pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        c64::new(a * s, b * s)
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_gaussian(rng, n, n);
    let h = &g + g.adjoint();
    scaled(h.as_ref(), 0.5)
}

/// Stream `index` of the ChaCha generator seeded by `seed`; independent draws
/// of a randomized suite use distinct streams.
pub fn draw_rng(seed: u64, index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Haar-ish random unitary: the polar part of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_gaussian(rng, n, n);
    let svd = g.svd().expect("svd of a Gaussian matrix");
    svd.U() * svd.V().adjoint()
}

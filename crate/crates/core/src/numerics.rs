//! Dense complex kernels shared by the beamforming schemes.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`.
//! Eigenvector and singular-vector outputs carry a fixed phase convention
//! (first significant entry real and positive) so that repeated runs give
//! identical precoders.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// `v^H` as a `1 x n` matrix.
pub fn adjoint_row(v: &CVec) -> CMat {
    CMat::from_fn(1, v.len(), |_, j| v[j].conj())
}

const PHASE_EPS: f64 = 1e-12;

/// Rotates `v` so its first significant entry is real and positive.
pub fn fix_phase(v: &mut CVec) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|z| z.norm() > PHASE_EPS * max).copied() {
        let rot = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= rot);
    }
}

fn fix_column_phases(m: &mut CMat) {
    for j in 0..m.ncols() {
        let mut col = m.column(j).into_owned();
        fix_phase(&mut col);
        m.set_column(j, &col);
    }
}

/// Forces exact Hermitian symmetry.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let eig = hermitize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_column_phases(&mut vectors);
    (values, vectors)
}

/// Singular value decomposition with singular values sorted descending.
///
/// Returns `(sigma, left, right)` with `a = left * diag(sigma) * right^H`
/// restricted to the first `min(rows, cols)` components. Column phases of
/// `right` are fixed and `left` is rotated consistently.
pub fn svd_sorted(a: &CMat) -> (Vec<f64>, CMat, CMat) {
    let k = a.nrows().min(a.ncols());
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut left = CMat::zeros(a.nrows(), k);
    let mut right = CMat::zeros(a.ncols(), k);
    for (dst, &src) in order.iter().enumerate() {
        let mut r = v_t.row(src).adjoint();
        let before = r.clone();
        fix_phase(&mut r);
        // same rotation on the paired left vector keeps a = U S V^H
        let rot = rotation_between(&before, &r);
        right.set_column(dst, &r);
        left.set_column(dst, &u.column(src).map(|z| z * rot));
    }
    (sigma, left, right)
}

fn rotation_between(from: &CVec, to: &CVec) -> Complex64 {
    let (idx, _) = from
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap_or((0, &Complex64::new(1.0, 0.0)));
    if from[idx].norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        to[idx] / from[idx]
    }
}

/// Unit vector `u` maximizing `||u^H a||`.
pub fn dominant_left_singular_vector(a: &CMat) -> Result<CVec> {
    if a.nrows() == 0 || a.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::ZeroInput);
    }
    let (_, vectors) = hermitian_eigen(&(a * a.adjoint()));
    Ok(vectors.column(0).into_owned())
}

/// First `d` right singular vectors of `a` as the columns of an `ncols x d` matrix.
pub fn dominant_right_singular_vectors(a: &CMat, d: usize) -> CMat {
    let (_, vectors) = hermitian_eigen(&(a.adjoint() * a));
    vectors.columns(0, d.min(a.ncols())).into_owned()
}

/// `d` eigenvectors with the smallest eigenvalues, ascending.
pub fn min_eigenvectors(a: &CMat, d: usize) -> CMat {
    let (_, vectors) = hermitian_eigen(a);
    let n = vectors.ncols();
    let mut out = CMat::zeros(a.nrows(), d);
    for j in 0..d {
        out.set_column(j, &vectors.column(n - 1 - j));
    }
    out
}

/// Cholesky factorization of a Hermitian positive definite matrix.
///
/// On failure a diagonal jitter of `1e-12 * trace / n` is added once.
pub fn cholesky(r: &CMat) -> Result<Cholesky<Complex64, Dyn>> {
    let r = hermitize(r);
    if let Some(c) = Cholesky::new(r.clone()).filter(positive_pivots) {
        return Ok(c);
    }
    let n = r.nrows().max(1);
    let trace: f64 = (0..r.nrows()).map(|i| r[(i, i)].re).sum();
    let jitter = 1e-12 * trace.abs().max(f64::MIN_POSITIVE) / n as f64;
    let mut shifted = r;
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += Complex64::new(jitter, 0.0);
    }
    Cholesky::new(shifted).filter(positive_pivots).ok_or(Error::Singular)
}

// the complex square root never fails, so indefinite input shows up as
// non-real pivots rather than as a failed factorization
fn positive_pivots(c: &Cholesky<Complex64, Dyn>) -> bool {
    let l = c.l_dirty();
    (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-9 * d.re
    })
}

/// Solves `r x = b` for Hermitian positive definite `r`.
pub fn hpd_solve(r: &CMat, b: &CMat) -> Result<CMat> {
    Ok(cholesky(r)?.solve(b))
}

/// Natural log-determinant of a Hermitian positive definite matrix.
pub fn ln_det_hpd(r: &CMat) -> Result<f64> {
    let c = cholesky(r)?;
    let l = c.l_dirty();
    Ok((0..r.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// `r^{-1/2}` for Hermitian positive definite `r`.
pub fn inv_sqrt_hpd(r: &CMat) -> Result<CMat> {
    let (values, q) = hermitian_eigen(r);
    let max = values.first().copied().unwrap_or(0.0);
    if values.iter().any(|&l| l <= 1e-14 * max.abs()) || max <= 0.0 {
        return Err(Error::Singular);
    }
    let scaled = CMat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] / values[j].sqrt());
    Ok(&scaled * q.adjoint())
}

/// Single-user waterfilling outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    pub powers: Vec<f64>,
    pub water_level: f64,
}

impl WaterfillResult {
    pub fn active_count(&self) -> usize {
        self.powers.iter().filter(|&&p| p > 0.0).count()
    }
}

/// Maximizes `sum log2(1 + g_i p_i)` subject to `sum p_i <= budget`.
///
/// Nonpositive gains are treated as unusable channels and get zero power.
pub fn waterfill(gains: &[f64], budget: f64) -> Result<WaterfillResult> {
    if gains.is_empty() {
        return Err(Error::EmptyInput("waterfill gains"));
    }
    if !(budget > 0.0) {
        return Err(Error::InvalidConfig(format!("waterfill budget {budget} must be positive")));
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::ZeroInput);
    }
    order.sort_by(|&i, &j| gains[j].total_cmp(&gains[i]).then(i.cmp(&j)));

    // largest active set whose weakest member still sits below the water level
    let mut inv_sum = 0.0;
    let mut level = 0.0;
    let mut active = 0;
    for (k, &i) in order.iter().enumerate() {
        let inv = 1.0 / gains[i];
        let candidate = (budget + inv_sum + inv) / (k + 1) as f64;
        if candidate > inv {
            inv_sum += inv;
            level = candidate;
            active = k + 1;
        } else {
            break;
        }
    }
    let mut powers = vec![0.0; gains.len()];
    for &i in &order[..active] {
        powers[i] = level - 1.0 / gains[i];
    }
    Ok(WaterfillResult {
        powers,
        water_level: level,
    })
}

/// Post-combining SINR of combiner row `w` (1 x M) for a stream arriving
/// along `h` (unit transmit power) under interference-plus-noise `r`.
pub fn combiner_sinr(w: &CMat, h: &CVec, r: &CMat) -> f64 {
    let signal = (w * h)[(0, 0)].norm_sqr();
    let noise = (w * r * w.adjoint())[(0, 0)].re;
    signal / noise
}

/// Linear MMSE (IRC) combiner.
///
/// Row `k` is proportional to `h_k^H r^{-1}` where `h_k` is column `k` of
/// `h_eff`, normalized to unit norm. Passing the covariance with or without
/// the stream's own contribution gives the same direction.
pub fn mmse_combiner(h_eff: &CMat, interference_plus_noise_cov: &CMat) -> Result<CMat> {
    let m = h_eff.nrows();
    if interference_plus_noise_cov.nrows() != m || interference_plus_noise_cov.ncols() != m {
        return Err(Error::InvalidConfig(format!(
            "covariance is {}x{}, expected {m}x{m}",
            interference_plus_noise_cov.nrows(),
            interference_plus_noise_cov.ncols()
        )));
    }
    let solved = hpd_solve(interference_plus_noise_cov, h_eff)?;
    let mut w = solved.adjoint();
    normalize_rows(&mut w);
    Ok(w)
}

/// Scales each row to unit Euclidean norm; zero rows are left untouched.
pub fn normalize_rows(w: &mut CMat) {
    for i in 0..w.nrows() {
        let n = w.row(i).norm();
        if n > 0.0 {
            w.row_mut(i).unscale_mut(n);
        }
    }
}

/// Scales each column to unit Euclidean norm; zero columns are left untouched.
pub fn normalize_columns(v: &mut CMat) {
    for j in 0..v.ncols() {
        let n = v.column(j).norm();
        if n > 0.0 {
            v.column_mut(j).unscale_mut(n);
        }
    }
}

/// `scale * I_n` as a complex matrix.
pub fn scaled_identity(n: usize, scale: f64) -> CMat {
    CMat::from_diagonal_element(n, n, Complex64::new(scale, 0.0))
}

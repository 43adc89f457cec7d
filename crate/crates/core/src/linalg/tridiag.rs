//! Sturm-sequence counting and bisection for symmetric tridiagonal matrices.

use super::window::SpectralWindow;
use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;

/// Symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("tridiagonal matrix needs n >= 1"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::invalid(format!(
                "off-diagonal length {} does not match n - 1 = {}",
                offdiag.len(),
                diag.len() - 1
            )));
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::invalid("tridiagonal entries must be finite"));
        }
        Ok(TridiagonalMatrix { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    fn pivot_floor(&self) -> f64 {
        let emax = self.offdiag.iter().fold(0.0_f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax.max(1.0)
    }
}

/// Number of eigenvalues of `t` strictly below `sigma`.
///
/// Counts negative pivots of the LDLᵀ factorization of `t − σI`. Pivots that
/// underflow are replaced by `−pivmin`, the usual bisection convention.
#[must_use]
pub fn sturm_count(t: &TridiagonalMatrix, sigma: f64) -> usize {
    let pivmin = t.pivot_floor();
    let mut count = 0;
    let mut q = t.diag[0] - sigma;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..t.dim() {
        let e = t.offdiag[i - 1];
        q = (t.diag[i] - sigma) - e * e / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of `t` below `sigma`, each bisected to width `tol` and
/// polished by a Rayleigh quotient from one inverse-iteration step.
pub fn eigs_below_tridiag(t: &TridiagonalMatrix, sigma: f64, tol: f64) -> Result<SpectralWindow> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !sigma.is_finite() {
        return Err(Error::invalid("threshold must be finite"));
    }
    let count = sturm_count(t, sigma);
    if count == 0 {
        return Ok(SpectralWindow::empty(sigma));
    }
    let (g_lo, _) = t.gershgorin();
    let mut lo = g_lo - tol - 1e-12 * g_lo.abs().max(1.0);
    while sturm_count(t, lo) > 0 {
        lo -= 1.0 + lo.abs();
    }

    let mut values = Vec::with_capacity(count);
    // Lower bracket reused between consecutive indices.
    let mut floor = lo;
    for k in 0..count {
        let (a, b) = bisect_kth(t, k, floor, sigma, tol, sigma)?;
        floor = a;
        values.push(rayleigh_polish(t, a, b));
    }
    Ok(SpectralWindow::from_eigenvalues(sigma, values))
}

/// The `k`-th eigenvalue (0-based, ascending) of `t`, bisected to width
/// `tol` and polished like [`eigs_below_tridiag`].
pub fn kth_eigenvalue(t: &TridiagonalMatrix, k: usize, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if k >= t.dim() {
        return Err(Error::invalid(format!(
            "eigenvalue index {k} out of range for n = {}",
            t.dim()
        )));
    }
    let (g_lo, g_hi) = t.gershgorin();
    let pad = tol + 1e-12 * g_lo.abs().max(g_hi.abs()).max(1.0);
    let (mut lo, mut hi) = (g_lo - pad, g_hi + pad);
    while sturm_count(t, lo) > k {
        lo -= 1.0 + lo.abs();
    }
    while sturm_count(t, hi) <= k {
        hi += 1.0 + hi.abs();
    }
    let (a, b) = bisect_kth(t, k, lo, hi, tol, hi)?;
    Ok(rayleigh_polish(t, a, b))
}

/// Bracket of width ≤ `tol` around the k-th (0-based) eigenvalue, given
/// `count(lo) ≤ k < count(hi)`.
fn bisect_kth(
    t: &TridiagonalMatrix,
    k: usize,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    sigma: f64,
) -> Result<(f64, f64)> {
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations == MAX_BISECTIONS {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(t, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let width = hi - lo;
    if width > tol * (1.0 + sigma.abs()) {
        return Err(Error::BisectionStall {
            width,
            tol,
            iterations,
        });
    }
    Ok((lo, hi))
}

/// Rayleigh quotient of the inverse-iteration vector at the bracket midpoint,
/// kept only if it stays inside the bracket.
fn rayleigh_polish(t: &TridiagonalMatrix, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let n = t.dim();
    if n == 1 {
        return t.diag[0];
    }
    let mut x = vec![1.0; n];
    for _ in 0..2 {
        x = shifted_solve(t, mid, &x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return mid;
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    let mut tx = vec![0.0; n];
    t.matvec(&x, &mut tx);
    let rq = x.iter().zip(&tx).map(|(a, b)| a * b).sum::<f64>();
    if rq >= lo && rq <= hi {
        rq
    } else {
        mid
    }
}

/// Solves `(t − shift) x = rhs` by Gaussian elimination with partial
/// pivoting; tiny pivots are nudged so the near-singular solve still returns
/// a large, finite vector.
fn shifted_solve(t: &TridiagonalMatrix, shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = t.dim();
    let scale = t
        .diag
        .iter()
        .map(|d| (d - shift).abs())
        .chain(t.offdiag.iter().map(|e| e.abs()))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;

    // Rows of U carry up to two super-diagonals after pivoting.
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut b = rhs.to_vec();

    let mut cur_d = t.diag[0] - shift;
    let mut cur_e = if n > 1 { t.offdiag[0] } else { 0.0 };
    let mut cur_f = 0.0;
    for i in 0..n {
        if i + 1 < n {
            let sub = t.offdiag[i];
            let next_d = t.diag[i + 1] - shift;
            let next_e = if i + 2 < n { t.offdiag[i + 1] } else { 0.0 };
            if sub.abs() > cur_d.abs() {
                // swap rows i and i+1
                u0[i] = sub;
                u1[i] = next_d;
                u2[i] = next_e;
                let m = cur_d / sub;
                b.swap(i, i + 1);
                b[i + 1] -= m * b[i];
                cur_d = cur_e - m * next_d;
                cur_e = cur_f - m * next_e;
                cur_f = 0.0;
            } else {
                let piv = if cur_d.abs() < tiny { tiny } else { cur_d };
                u0[i] = piv;
                u1[i] = cur_e;
                u2[i] = cur_f;
                let m = sub / piv;
                b[i + 1] -= m * b[i];
                cur_d = next_d - m * cur_e;
                cur_e = next_e;
                cur_f = 0.0;
            }
        } else {
            u0[i] = if cur_d.abs() < tiny { tiny } else { cur_d };
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= u2[i] * x[i + 2];
        }
        x[i] = acc / u0[i];
    }
    x
}

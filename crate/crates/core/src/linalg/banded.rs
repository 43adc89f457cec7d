//! Symmetric banded matrices, inertia counting by banded LDLᵀ, and spectrum
//! slicing.

use super::window::SpectralWindow;
use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;
const JITTER_RETRIES: usize = 5;
const PIVOT_ABS_FLOOR: f64 = 1e-300;
const PIVOT_REL_FLOOR: f64 = 1e-14;
/// Rayleigh-quotient steps attempted per isolated eigenvalue before plain
/// bisection takes over.
const MAX_RQ_STEPS: usize = 6;
/// Element growth above which a 2×2 pivot is considered.
const MAX_GROWTH: f64 = 1e4;
/// Clusters of at most this many eigenvalues in an interval narrower than
/// `CLUSTER_WIDTH·(1+|σ|)` are resolved by block Rayleigh–Ritz.
const MAX_CLUSTER: usize = 16;
const CLUSTER_WIDTH: f64 = 1e-6;

/// Symmetric banded matrix with optional diagonal mass.
///
/// Only the lower band is stored, row-major: row `i` holds columns
/// `i-b ..= i` at offsets `j + b - i`. Entries left of column 0 are padding.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    bandwidth: usize,
    bands: Vec<f64>,
    mass: Option<Vec<f64>>,
}

impl BandedMatrix {
    /// Zero matrix of dimension `n` and half-bandwidth `bandwidth`.
    pub fn zeros(n: usize, bandwidth: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("banded matrix needs n >= 1"));
        }
        if bandwidth >= n.max(1) && !(n == 1 && bandwidth == 0) {
            return Err(Error::invalid(format!(
                "bandwidth {bandwidth} must be smaller than n = {n}"
            )));
        }
        let len = n
            .checked_mul(bandwidth + 1)
            .ok_or_else(|| Error::ProblemTooLarge(format!("band storage {n} x {}", bandwidth + 1)))?;
        Ok(BandedMatrix {
            n,
            bandwidth,
            bands: vec![0.0; len],
            mass: None,
        })
    }

    /// Builds a diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = BandedMatrix::zeros(diag.len(), 0)?;
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    /// Attaches a diagonal mass so the matrix represents `K v = λ M v`.
    pub fn with_mass(mut self, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != self.n {
            return Err(Error::invalid(format!(
                "mass has length {}, expected {}",
                mass.len(),
                self.n
            )));
        }
        if mass.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::invalid("mass entries must be positive and finite"));
        }
        self.mass = Some(mass);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn mass(&self) -> Option<&[f64]> {
        self.mass.as_deref()
    }

    /// Packed lower-band storage.
    pub fn bands(&self) -> &[f64] {
        &self.bands
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bandwidth + 1) + j + self.bandwidth - i
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i >= self.n || i - j > self.bandwidth {
            return 0.0;
        }
        self.bands[self.idx(i, j)]
    }

    /// Sets entry `(i, j)` and its mirror.
    ///
    /// # Panics
    /// If the entry lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i < self.n && i - j <= self.bandwidth, "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.bands[k] = v;
    }

    /// Adds to entry `(i, j)` and its mirror.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i < self.n && i - j <= self.bandwidth, "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.bands[k] += v;
    }

    pub fn is_finite(&self) -> bool {
        self.bands.iter().all(|x| x.is_finite())
    }

    /// `y = K x` (the mass is ignored).
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let b = self.bandwidth;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.bands[i * (b + 1)..(i + 1) * (b + 1)];
            let j0 = i.saturating_sub(b);
            let mut acc = row[b] * x[i];
            for j in j0..i {
                let a = row[j + b - i];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
    }

    /// The standard-form matrix `M^{-1/2} K M^{-1/2}` (a clone when there
    /// is no mass).
    #[must_use]
    pub fn reduced(&self) -> BandedMatrix {
        let Some(mass) = &self.mass else {
            return self.clone();
        };
        let scale: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let b = self.bandwidth;
        let mut out = BandedMatrix {
            n: self.n,
            bandwidth: b,
            bands: self.bands.clone(),
            mass: None,
        };
        for i in 0..self.n {
            for j in i.saturating_sub(b)..=i {
                let k = out.idx(i, j);
                out.bands[k] *= scale[i] * scale[j];
            }
        }
        out
    }

    /// Row sums of `|K_ij|` over `j ≠ i`.
    fn offdiag_abs_sums(&self) -> Vec<f64> {
        let b = self.bandwidth;
        let mut sums = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(b)..i {
                let a = self.bands[self.idx(i, j)].abs();
                sums[i] += a;
                sums[j] += a;
            }
        }
        sums
    }

    /// Gershgorin enclosure of the spectrum of the standard-form problem.
    pub fn gershgorin(&self) -> (f64, f64) {
        let red;
        let m = if self.mass.is_some() {
            red = self.reduced();
            &red
        } else {
            self
        };
        let sums = m.offdiag_abs_sums();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, r) in sums.iter().enumerate() {
            let d = m.get(i, i);
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }
}

/// Reusable banded LDLᵀ factorization of `K − σM` with 1×1 and 2×2 pivots
/// and no interchanges.
///
/// A 2×2 block on rows `k, k+1` is used when the 1×1 pivot would cause
/// large element growth and the block is better conditioned; eliminating two
/// consecutive rows together keeps the Schur complement inside the band.
/// The eliminated columns are left unscaled in place (`L = C D⁻¹`), which
/// keeps every stored entry inside the band as well.
#[derive(Debug, Clone)]
struct Ldl {
    n: usize,
    b: usize,
    w: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    offdiag_abs: Vec<f64>,
    /// `block[k]` is set when rows `k, k+1` form a 2×2 pivot.
    block: Vec<bool>,
}

impl Ldl {
    fn new(a: &BandedMatrix) -> Self {
        Ldl {
            n: a.n,
            b: a.bandwidth,
            w: vec![0.0; a.bands.len()],
            c1: vec![0.0; a.bandwidth + 1],
            c2: vec![0.0; a.bandwidth + 1],
            offdiag_abs: a.offdiag_abs_sums(),
            block: vec![false; a.n],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.b + 1) + j + self.b - i
    }

    fn floor(&self, k: usize, d: f64) -> f64 {
        PIVOT_ABS_FLOOR.max(PIVOT_REL_FLOOR * (self.offdiag_abs[k] + d.abs()))
    }

    /// Factors `a − σ·mass` and returns the number of negative eigenvalues
    /// of the block-diagonal factor.
    fn factor(&mut self, a: &BandedMatrix, sigma: f64) -> Result<usize> {
        let (n, b) = (self.n, self.b);
        let stride = b + 1;
        self.w.copy_from_slice(&a.bands);
        match &a.mass {
            Some(m) => (0..n).for_each(|i| self.w[i * stride + b] -= sigma * m[i]),
            None => (0..n).for_each(|i| self.w[i * stride + b] -= sigma),
        }
        self.block.iter_mut().for_each(|f| *f = false);
        let mut negatives = 0;
        let mut k = 0;
        while k < n {
            let d = self.w[k * stride + b];
            let last = (k + b).min(n - 1);
            let mut gamma = 0.0_f64;
            for i in k + 1..=last {
                gamma = gamma.max(self.w[self.at(i, k)].abs());
            }
            let growth1 = if d != 0.0 { gamma / d.abs() } else { f64::INFINITY };
            if growth1 > MAX_GROWTH && k + 1 < n && self.try_block(k, d, growth1, &mut negatives) {
                k += 2;
                continue;
            }
            if !(d.abs() >= self.floor(k, d)) {
                return Err(Error::SingularShift {
                    shift: sigma,
                    pivot: d.abs(),
                    row: k,
                });
            }
            if d < 0.0 {
                negatives += 1;
            }
            let width = last - k;
            for t in 0..width {
                let i = k + 1 + t;
                self.c1[t] = self.w[self.at(i, k)];
            }
            let inv_d = 1.0 / d;
            for t in 0..width {
                let i = k + 1 + t;
                let l = self.c1[t] * inv_d;
                if l != 0.0 {
                    // row i, columns k+1..=i  <->  c1[0..=t]
                    let base = i * stride + k + 1 + b - i;
                    let row = &mut self.w[base..base + t + 1];
                    for (r, c) in row.iter_mut().zip(&self.c1[..=t]) {
                        *r -= l * c;
                    }
                }
            }
            k += 1;
        }
        Ok(negatives)
    }

    /// Eliminates rows `k, k+1` with a 2×2 pivot if that is better
    /// conditioned than the 1×1 pivot; returns whether it did.
    fn try_block(&mut self, k: usize, d: f64, growth1: f64, negatives: &mut usize) -> bool {
        let (n, b) = (self.n, self.b);
        let stride = b + 1;
        let e = self.w[self.at(k + 1, k)];
        let d2 = self.w[(k + 1) * stride + b];
        let det = d * d2 - e * e;
        let pmax = d.abs().max(d2.abs()).max(e.abs());
        let det_floor = self.floor(k, d) * self.floor(k + 1, d2);
        if !(det.abs() >= det_floor) || pmax == 0.0 {
            return false;
        }
        let last1 = (k + b).min(n - 1);
        let last2 = (k + 1 + b).min(n - 1);
        let width = last2.saturating_sub(k + 1);
        let mut gamma = 0.0_f64;
        for t in 0..width {
            let i = k + 2 + t;
            let v1 = if i <= last1 { self.w[self.at(i, k)] } else { 0.0 };
            let v2 = self.w[self.at(i, k + 1)];
            self.c1[t] = v1;
            self.c2[t] = v2;
            gamma = gamma.max(v1.abs()).max(v2.abs());
        }
        let growth2 = gamma.max(pmax) * pmax / det.abs();
        if !(growth2 < growth1) {
            return false;
        }
        *negatives += if det < 0.0 {
            1
        } else if d + d2 < 0.0 {
            2
        } else {
            0
        };
        let (p11, p12, p22) = (d2 / det, -e / det, d / det);
        for t in 0..width {
            let i = k + 2 + t;
            let (u, v) = (self.c1[t], self.c2[t]);
            let l1 = u * p11 + v * p12;
            let l2 = u * p12 + v * p22;
            if l1 != 0.0 || l2 != 0.0 {
                let base = i * stride + k + 2 + b - i;
                let row = &mut self.w[base..base + t + 1];
                for ((r, c1), c2) in row.iter_mut().zip(&self.c1[..=t]).zip(&self.c2[..=t]) {
                    *r -= l1 * c1 + l2 * c2;
                }
            }
        }
        self.block[k] = true;
        true
    }

    /// Solves `(LDLᵀ) x = rhs` in place using the last factorization.
    fn solve(&self, x: &mut [f64]) {
        let (n, b) = (self.n, self.b);
        let stride = b + 1;
        // forward: L D z = rhs, column oriented
        let mut k = 0;
        while k < n {
            if self.block[k] {
                let (d, e, d2) = (
                    self.w[k * stride + b],
                    self.w[self.at(k + 1, k)],
                    self.w[(k + 1) * stride + b],
                );
                let det = d * d2 - e * e;
                let (y1, y2) = (x[k], x[k + 1]);
                let z1 = (d2 * y1 - e * y2) / det;
                let z2 = (d * y2 - e * y1) / det;
                x[k] = z1;
                x[k + 1] = z2;
                for i in k + 2..=(k + b).min(n - 1) {
                    x[i] -= self.w[self.at(i, k)] * z1;
                }
                for i in k + 2..=(k + 1 + b).min(n - 1) {
                    x[i] -= self.w[self.at(i, k + 1)] * z2;
                }
                k += 2;
            } else {
                let z = x[k] / self.w[k * stride + b];
                x[k] = z;
                for i in k + 1..=(k + b).min(n - 1) {
                    x[i] -= self.w[self.at(i, k)] * z;
                }
                k += 1;
            }
        }
        // backward: Lᵀ x = z with L = C D⁻¹
        let mut k = n;
        while k > 0 {
            let top = k - 1;
            if top > 0 && self.block[top - 1] {
                let k0 = top - 1;
                let (d, e, d2) = (
                    self.w[k0 * stride + b],
                    self.w[self.at(k0 + 1, k0)],
                    self.w[(k0 + 1) * stride + b],
                );
                let det = d * d2 - e * e;
                let mut s1 = 0.0;
                for i in k0 + 2..=(k0 + b).min(n - 1) {
                    s1 += self.w[self.at(i, k0)] * x[i];
                }
                let mut s2 = 0.0;
                for i in k0 + 2..=(k0 + 1 + b).min(n - 1) {
                    s2 += self.w[self.at(i, k0 + 1)] * x[i];
                }
                x[k0] -= (d2 * s1 - e * s2) / det;
                x[k0 + 1] -= (d * s2 - e * s1) / det;
                k = k0;
            } else {
                let mut s = 0.0;
                for i in top + 1..=(top + b).min(n - 1) {
                    s += self.w[self.at(i, top)] * x[i];
                }
                x[top] -= s / self.w[top * stride + b];
                k = top;
            }
        }
    }
}

/// Negative inertia of `K − σM`, i.e. the number of eigenvalues below `σ`.
///
/// Fails with [`Error::SingularShift`] when a pivot falls under the guard; the
/// caller is expected to perturb `σ` and retry.
pub fn band_inertia(a: &BandedMatrix, sigma: f64) -> Result<usize> {
    if !sigma.is_finite() {
        return Err(Error::invalid("shift must be finite"));
    }
    Ldl::new(a).factor(a, sigma)
}

/// Factors at `sigma`, nudging the shift on singular pivots. Returns the
/// shift actually used together with the count.
fn factor_jittered(ldl: &mut Ldl, a: &BandedMatrix, sigma: f64) -> Result<(f64, usize)> {
    let jitter = 1e-10 * (1.0 + sigma.abs());
    let mut last = None;
    for attempt in 0..=JITTER_RETRIES {
        // 0, +j, −j, +2j, −2j, +3j
        let k = ((attempt + 1) / 2) as f64;
        let sign = if attempt % 2 == 1 { 1.0 } else { -1.0 };
        let shift = sigma + sign * k * jitter;
        match ldl.factor(a, shift) {
            Ok(c) => return Ok((shift, c)),
            Err(e @ Error::SingularShift { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, Copy)]
struct Slice {
    lo: f64,
    hi: f64,
    c_lo: usize,
    c_hi: usize,
}

/// All eigenvalues below `sigma` by spectrum slicing.
///
/// Intervals from the Gershgorin bound to `sigma` are bisected with
/// inertia counts. Once an interval isolates a single eigenvalue, shifted
/// inverse iteration with Rayleigh-quotient shifts is tried; its value is
/// accepted only when a residual bound certifies it to `tol / 2` inside the
/// isolating interval, otherwise bisection continues to width `tol`.
pub fn eigs_below_band(a: &BandedMatrix, sigma: f64, tol: f64) -> Result<SpectralWindow> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !sigma.is_finite() {
        return Err(Error::invalid("threshold must be finite"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("matrix entries must be finite"));
    }
    let a = a.reduced();
    let mut ldl = Ldl::new(&a);

    let (sigma_used, c_sigma) = factor_jittered(&mut ldl, &a, sigma)?;
    if c_sigma == 0 {
        return Ok(SpectralWindow::empty(sigma));
    }
    let (g_lo, _) = a.gershgorin();
    let mut lo = g_lo - tol - 1e-12 * g_lo.abs().max(1.0);
    let (mut lo_used, mut c_lo) = factor_jittered(&mut ldl, &a, lo)?;
    while c_lo > 0 {
        lo -= 1.0 + lo.abs();
        (lo_used, c_lo) = factor_jittered(&mut ldl, &a, lo)?;
    }

    let mut values: Vec<f64> = Vec::with_capacity(c_sigma);
    let mut stack = vec![Slice {
        lo: lo_used,
        hi: sigma_used,
        c_lo,
        c_hi: c_sigma,
    }];
    let mut scratch = InverseIteration::new(a.n);
    while let Some(s) = stack.pop() {
        let inside = s.c_hi - s.c_lo;
        if inside == 0 {
            continue;
        }
        if s.hi - s.lo <= tol {
            let mid = 0.5 * (s.lo + s.hi);
            values.extend(std::iter::repeat(mid).take(inside));
            continue;
        }
        if inside == 1 {
            values.push(isolate_one(&a, &mut ldl, &mut scratch, s, tol, sigma)?);
            continue;
        }
        if inside <= MAX_CLUSTER && s.hi - s.lo <= CLUSTER_WIDTH * (1.0 + sigma.abs()) {
            if let Some(ritz) = cluster_ritz(&a, &mut ldl, s, inside, tol)? {
                values.extend(ritz);
                continue;
            }
        }
        let Some((mid, c_mid)) = probe(&mut ldl, &a, s)? else {
            if inside <= MAX_CLUSTER {
                if let Some(ritz) = cluster_ritz(&a, &mut ldl, s, inside, tol)? {
                    values.extend(ritz);
                    continue;
                }
            }
            return Err(Error::BisectionStall {
                width: s.hi - s.lo,
                tol,
                iterations: 0,
            });
        };
        // upper half first so that the lower half is popped next
        stack.push(Slice {
            lo: mid,
            hi: s.hi,
            c_lo: c_mid,
            c_hi: s.c_hi,
        });
        stack.push(Slice {
            lo: s.lo,
            hi: mid,
            c_lo: s.c_lo,
            c_hi: c_mid,
        });
    }
    Ok(SpectralWindow::from_eigenvalues(sigma, values))
}

/// Inertia at an interior point of `s` whose count is consistent with the
/// counts at the ends. Counts that are not are treated like singular shifts.
fn probe(ldl: &mut Ldl, a: &BandedMatrix, s: Slice) -> Result<Option<(f64, usize)>> {
    for frac in [0.5, 0.4375, 0.5625, 0.375, 0.625] {
        let x = s.lo + frac * (s.hi - s.lo);
        let (used, c) = match factor_jittered(ldl, a, x) {
            Ok(r) => r,
            Err(Error::SingularShift { .. }) => continue,
            Err(e) => return Err(e),
        };
        if used > s.lo && used < s.hi && c >= s.c_lo && c <= s.c_hi {
            return Ok(Some((used, c)));
        }
    }
    Ok(None)
}

/// Block inverse iteration plus Rayleigh–Ritz for the `k` eigenvalues known
/// to lie in `s`. The Ritz values are returned only when the quadratic
/// residual bound `‖R‖² / gap ≤ tol / 2` holds, the gap being measured to the
/// ends of `s` (no other eigenvalues lie inside).
fn cluster_ritz(
    a: &BandedMatrix,
    ldl: &mut Ldl,
    s: Slice,
    k: usize,
    tol: f64,
) -> Result<Option<Vec<f64>>> {
    let n = a.n;
    let shift = 0.5 * (s.lo + s.hi);
    match factor_jittered(ldl, a, shift) {
        Ok(_) => {}
        Err(Error::SingularShift { .. }) => return Ok(None),
        Err(e) => return Err(e),
    }
    let mut x: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let phase = 0.618_033_988_75 * (j as f64 + 1.0);
            (0..n)
                .map(|i| ((i as f64 + 1.0) * phase).fract() - 0.5)
                .collect()
        })
        .collect();
    let mut ax = vec![vec![0.0; n]; k];
    for _ in 0..MAX_RQ_STEPS {
        for v in x.iter_mut() {
            ldl.solve(v);
        }
        if !orthonormalize(&mut x) {
            return Ok(None);
        }
        for (v, av) in x.iter().zip(ax.iter_mut()) {
            a.matvec(v, av);
        }
        let mut h = vec![0.0; k * k];
        for p in 0..k {
            for q in 0..=p {
                let v: f64 = x[p].iter().zip(&ax[q]).map(|(u, w)| u * w).sum();
                h[p * k + q] = v;
                h[q * k + p] = v;
            }
        }
        let (theta, q) = small_sym_eig(&mut h, k);
        // rotate the basis to the Ritz vectors
        let rot = |basis: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..k)
                .map(|j| {
                    let mut y = vec![0.0; n];
                    for (p, bp) in basis.iter().enumerate() {
                        let c = q[p * k + j];
                        y.iter_mut().zip(bp).for_each(|(yi, bi)| *yi += c * bi);
                    }
                    y
                })
                .collect()
        };
        x = rot(&x);
        ax = rot(&ax);
        let mut r2 = 0.0;
        for j in 0..k {
            r2 += x[j]
                .iter()
                .zip(&ax[j])
                .map(|(u, w)| (w - theta[j] * u).powi(2))
                .sum::<f64>();
        }
        let r = r2.sqrt();
        let inside = theta.iter().all(|&t| t - r > s.lo && t + r < s.hi);
        if inside {
            let gap = theta
                .iter()
                .map(|&t| (t - s.lo).min(s.hi - t))
                .fold(f64::INFINITY, f64::min);
            if r2 / gap <= 0.5 * tol {
                return Ok(Some(theta));
            }
        }
    }
    Ok(None)
}

/// Modified Gram–Schmidt, applied twice. Returns false on rank loss.
fn orthonormalize(x: &mut [Vec<f64>]) -> bool {
    for _ in 0..2 {
        for j in 0..x.len() {
            let (done, rest) = x.split_at_mut(j);
            let v = &mut rest[0];
            for u in done.iter() {
                let c: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= c * ui);
            }
            let norm = normalize(v);
            if !(norm > 0.0 && norm.is_finite()) {
                return false;
            }
        }
    }
    true
}

/// Cyclic Jacobi for a small dense symmetric matrix (row-major `k×k`).
/// Returns ascending eigenvalues and the eigenvector matrix (columns).
fn small_sym_eig(h: &mut [f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; k * k];
    (0..k).for_each(|i| v[i * k + i] = 1.0);
    for _sweep in 0..64 {
        let off: f64 = (0..k)
            .flat_map(|p| (0..k).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| h[p * k + q].powi(2))
            .sum();
        let diag: f64 = (0..k).map(|p| h[p * k + p].powi(2)).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = h[p * k + q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (h[q * k + q] - h[p * k + p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for r in 0..k {
                    let (hrp, hrq) = (h[r * k + p], h[r * k + q]);
                    h[r * k + p] = c * hrp - sn * hrq;
                    h[r * k + q] = sn * hrp + c * hrq;
                }
                for r in 0..k {
                    let (hpr, hqr) = (h[p * k + r], h[q * k + r]);
                    h[p * k + r] = c * hpr - sn * hqr;
                    h[q * k + r] = sn * hpr + c * hqr;
                }
                for r in 0..k {
                    let (vrp, vrq) = (v[r * k + p], v[r * k + q]);
                    v[r * k + p] = c * vrp - sn * vrq;
                    v[r * k + q] = sn * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| h[i * k + i].total_cmp(&h[j * k + j]));
    let vals = order.iter().map(|&i| h[i * k + i]).collect();
    let mut vecs = vec![0.0; k * k];
    for (new, &old) in order.iter().enumerate() {
        for r in 0..k {
            vecs[r * k + new] = v[r * k + old];
        }
    }
    (vals, vecs)
}

struct InverseIteration {
    x: Vec<f64>,
    ax: Vec<f64>,
}

impl InverseIteration {
    fn new(n: usize) -> Self {
        InverseIteration {
            x: vec![0.0; n],
            ax: vec![0.0; n],
        }
    }

    fn seed(&mut self) {
        // deterministic, generic starting vector
        for (i, v) in self.x.iter_mut().enumerate() {
            *v = 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract();
        }
        normalize(&mut self.x);
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// Pins down the single eigenvalue inside `s`.
fn isolate_one(
    a: &BandedMatrix,
    ldl: &mut Ldl,
    it: &mut InverseIteration,
    mut s: Slice,
    tol: f64,
    sigma: f64,
) -> Result<f64> {
    it.seed();
    let mut shift = 0.5 * (s.lo + s.hi);
    for _ in 0..MAX_RQ_STEPS {
        let (used, c) = factor_jittered(ldl, a, shift)?;
        if used > s.lo && used < s.hi {
            if c == s.c_lo {
                s.lo = used;
            } else if c == s.c_hi {
                s.hi = used;
            }
        }
        if s.hi - s.lo <= tol {
            return Ok(0.5 * (s.lo + s.hi));
        }
        ldl.solve(&mut it.x);
        let norm = normalize(&mut it.x);
        if !(norm > 0.0 && norm.is_finite()) {
            it.seed();
            shift = 0.5 * (s.lo + s.hi);
            continue;
        }
        a.matvec(&it.x, &mut it.ax);
        let rho: f64 = it.x.iter().zip(&it.ax).map(|(x, y)| x * y).sum();
        let res = it
            .x
            .iter()
            .zip(&it.ax)
            .map(|(x, y)| (y - rho * x).powi(2))
            .sum::<f64>()
            .sqrt();
        if rho - res > s.lo && rho + res < s.hi {
            let gap = (rho - s.lo).min(s.hi - rho);
            if res * res / gap <= 0.5 * tol {
                return Ok(rho);
            }
        }
        shift = if rho > s.lo && rho < s.hi {
            rho
        } else {
            0.5 * (s.lo + s.hi)
        };
    }
    bisect_single(a, ldl, s, tol, sigma)
}

fn bisect_single(a: &BandedMatrix, ldl: &mut Ldl, mut s: Slice, tol: f64, sigma: f64) -> Result<f64> {
    let mut iterations = 0;
    while s.hi - s.lo > tol && iterations < MAX_BISECTIONS {
        let Some((used, c)) = probe(ldl, a, s)? else {
            break;
        };
        if c == s.c_lo {
            s.lo = used;
        } else {
            s.hi = used;
        }
        iterations += 1;
    }
    let width = s.hi - s.lo;
    if width > tol * (1.0 + sigma.abs()) {
        return Err(Error::BisectionStall {
            width,
            tol,
            iterations,
        });
    }
    Ok(0.5 * (s.lo + s.hi))
}

//! The de Gennes family `H(ξ) = −∂t² + (t − ξ)²` on the half-line with a
//! Neumann condition at `t = 0`.
//!
//! The operator is discretized on a cell-centred grid, which makes the
//! Neumann reflection at `t = 0` symmetric; the far end is a Dirichlet cap.
//! [`mu`] is the plain second-order scheme. [`DeGennes`] wraps it with
//! Richardson extrapolation over two grid levels, memoization, the
//! minimization giving `(Θ₀, ξ₀)`, the sublevel sets `{μ₁ < λ}` and the
//! moment integrals `∫ (λ − μ₁)_+^p dξ`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kth_eigenvalue, TridiagonalMatrix};
use crate::quad;

/// Decay margin added beyond `max(ξ, 0)` when truncating the half-line.
pub const DEFAULT_MARGIN: f64 = 10.0;
/// Largest `ξ` searched for the right end of a sublevel set.
pub const XI_CAP: f64 = 30.0;
/// Largest level accepted by [`DeGennes::support_interval`].
pub const LAMBDA_MAX: f64 = 0.999;
const MAX_INDEX: usize = 5;
const EIG_TOL: f64 = 1e-13;
const SELF_CHECK_LIMIT: f64 = 1e-8;
const MOMENT_RTOL: f64 = 1e-7;

/// Cell-centred grid on `(0, t_max)`: nodes `t_i = (i + ½)Δ`, `Δ = t_max/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfLineGrid {
    pub t_max: f64,
    pub n: usize,
}

impl HalfLineGrid {
    pub fn new(t_max: f64, n: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
        }
        if n < 16 {
            return Err(Error::invalid(format!("grid needs at least 16 cells, got {n}")));
        }
        Ok(HalfLineGrid { t_max, n })
    }

    /// The grid on `(0, t_max)` whose spacing is the largest one not above
    /// `spacing`.
    pub fn with_spacing(t_max: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::invalid(format!("spacing must be positive, got {spacing}")));
        }
        let n = (t_max / spacing - 1e-9).ceil().max(16.0) as usize;
        HalfLineGrid::new(t_max, n)
    }

    /// The standard truncation `t_max = max(ξ, 0) + margin` for a given `ξ`.
    pub fn for_xi(xi: f64, spacing: f64, margin: f64) -> Result<Self> {
        HalfLineGrid::with_spacing(xi.max(0.0) + margin, spacing)
    }

    pub fn spacing(&self) -> f64 {
        self.t_max / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    /// Same truncation, twice as many cells.
    pub fn refined(&self) -> Self {
        HalfLineGrid {
            t_max: self.t_max,
            n: 2 * self.n,
        }
    }
}

/// Three-point discretization of `H(ξ)` on `grid`.
///
/// The first row carries `1/Δ²` (reflection through `t = 0`), all other rows
/// `2/Δ²`, which puts a homogeneous Dirichlet ghost just past `t_max`.
#[must_use]
pub fn assemble_h_xi(xi: f64, grid: &HalfLineGrid) -> TridiagonalMatrix {
    let d = grid.spacing();
    let inv = 1.0 / (d * d);
    let diag = (0..grid.n)
        .map(|i| {
            let t = grid.node(i);
            let kinetic = if i == 0 { inv } else { 2.0 * inv };
            kinetic + (t - xi) * (t - xi)
        })
        .collect();
    TridiagonalMatrix::new(diag, vec![-inv; grid.n - 1]).expect("stencil is well formed")
}

fn check_index(j: usize) -> Result<()> {
    if j == 0 || j > MAX_INDEX {
        return Err(Error::invalid(format!(
            "eigenvalue index must be in 1..={MAX_INDEX}, got {j}"
        )));
    }
    Ok(())
}

/// The `j`-th eigenvalue (1-based) of the discretized `H(ξ)` on `grid`.
///
/// Requires `grid.t_max ≥ max(ξ, 0) + 10` so the Dirichlet cap sits well
/// inside the Gaussian tail of the eigenfunctions.
pub fn mu(xi: f64, j: usize, grid: &HalfLineGrid) -> Result<f64> {
    check_index(j)?;
    if !xi.is_finite() {
        return Err(Error::invalid("xi must be finite"));
    }
    let need = xi.max(0.0) + DEFAULT_MARGIN;
    if grid.t_max < need - 1e-12 {
        return Err(Error::invalid(format!(
            "t_max = {} is below max(xi, 0) + {DEFAULT_MARGIN} = {need}",
            grid.t_max
        )));
    }
    eigenvalue(xi, j, grid)
}

fn eigenvalue(xi: f64, j: usize, grid: &HalfLineGrid) -> Result<f64> {
    if grid.n < j {
        return Err(Error::invalid("grid has fewer cells than the eigenvalue index"));
    }
    kth_eigenvalue(&assemble_h_xi(xi, grid), j - 1, EIG_TOL)
}

/// Like [`mu`] but without the margin precondition: the truncation is
/// instead verified by recomputing with `t_max + 2` at the same spacing,
/// failing with [`Error::TruncationTooSmall`] if the eigenvalue moves by
/// more than `1e-8`.
pub fn mu_checked(xi: f64, j: usize, grid: &HalfLineGrid) -> Result<f64> {
    check_index(j)?;
    if !xi.is_finite() {
        return Err(Error::invalid("xi must be finite"));
    }
    let value = eigenvalue(xi, j, grid)?;
    let longer = HalfLineGrid::with_spacing(grid.t_max + 2.0, grid.spacing())?;
    let moved = (eigenvalue(xi, j, &longer)? - value).abs();
    if moved > SELF_CHECK_LIMIT {
        return Err(Error::TruncationTooSmall {
            movement: moved,
            limit: SELF_CHECK_LIMIT,
        });
    }
    Ok(value)
}

/// Discretization settings for [`DeGennes`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeGennesParams {
    /// Coarse grid spacing `Δ`.
    pub spacing: f64,
    /// Truncation margin beyond `max(ξ, 0)`.
    pub margin: f64,
    /// Combine `Δ` and `Δ/2` as `(4 μ(Δ/2) − μ(Δ)) / 3`.
    pub extrapolate: bool,
    /// Run the truncation self-check on every evaluation.
    pub self_check: bool,
}

impl Default for DeGennesParams {
    fn default() -> Self {
        DeGennesParams {
            spacing: 0.005,
            margin: DEFAULT_MARGIN,
            extrapolate: true,
            self_check: false,
        }
    }
}

/// Moment exponents used by the energy and counting densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Moment {
    /// `p = 1/2`, the counting density.
    Half,
    /// `p = 3/2`, the energy density.
    ThreeHalves,
}

impl Moment {
    pub fn exponent(self) -> f64 {
        match self {
            Moment::Half => 0.5,
            Moment::ThreeHalves => 1.5,
        }
    }
}

/// `{ξ : μ₁(ξ) < λ} = (ξ₋, ξ₊)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub lambda: f64,
    pub xi_minus: f64,
    pub xi_plus: f64,
}

/// Sampled `μ₁` together with the minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeGennesCurve {
    pub xi_samples: Vec<f64>,
    pub mu1: Vec<f64>,
    /// `(Θ₀, ξ₀)`.
    pub theta0: (f64, f64),
    pub params: DeGennesParams,
}

impl DeGennesCurve {
    /// Number of strict interior local minima of the sampled curve.
    pub fn local_minima(&self) -> usize {
        self.mu1
            .windows(3)
            .filter(|w| w[1] < w[0] && w[1] < w[2])
            .count()
    }
}

/// Memoizing evaluator of the de Gennes eigenvalue curves.
#[derive(Debug)]
pub struct DeGennes {
    params: DeGennesParams,
    cache: RwLock<HashMap<(i64, usize), f64>>,
    minimum: OnceLock<(f64, f64)>,
    moments: RwLock<HashMap<(i64, Moment), f64>>,
}

impl DeGennes {
    pub fn new(params: DeGennesParams) -> Result<Self> {
        if !(params.spacing > 0.0 && params.spacing <= 0.1) {
            return Err(Error::invalid(format!(
                "spacing must lie in (0, 0.1], got {}",
                params.spacing
            )));
        }
        if !(params.margin >= DEFAULT_MARGIN) {
            return Err(Error::invalid(format!(
                "margin must be at least {DEFAULT_MARGIN}, got {}",
                params.margin
            )));
        }
        Ok(DeGennes {
            params,
            cache: RwLock::new(HashMap::new()),
            minimum: OnceLock::new(),
            moments: RwLock::new(HashMap::new()),
        })
    }

    /// Process-wide instance with default parameters.
    pub fn shared() -> &'static DeGennes {
        static SHARED: OnceLock<DeGennes> = OnceLock::new();
        SHARED.get_or_init(|| DeGennes::new(DeGennesParams::default()).expect("defaults are valid"))
    }

    pub fn params(&self) -> &DeGennesParams {
        &self.params
    }

    /// `μ_j(ξ)`, extrapolated unless disabled.
    pub fn mu(&self, xi: f64, j: usize) -> Result<f64> {
        check_index(j)?;
        if !xi.is_finite() {
            return Err(Error::invalid("xi must be finite"));
        }
        let key = ((xi * 1e12).round() as i64, j);
        if let Some(&v) = self.cache.read().expect("cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = self.compute(xi, j)?;
        self.cache.write().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn mu1(&self, xi: f64) -> Result<f64> {
        self.mu(xi, 1)
    }

    fn compute(&self, xi: f64, j: usize) -> Result<f64> {
        let p = &self.params;
        let grid = HalfLineGrid::for_xi(xi, p.spacing, p.margin)?;
        let eval = |g: &HalfLineGrid| if p.self_check { mu_checked(xi, j, g) } else { mu(xi, j, g) };
        let coarse = eval(&grid)?;
        if !p.extrapolate {
            return Ok(coarse);
        }
        let fine = eval(&grid.refined())?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// `(Θ₀, ξ₀)` by golden-section search on `[0, 1]` to a `ξ`-tolerance of
    /// `1e-8`; computed once.
    pub fn minimize_mu1(&self) -> Result<(f64, f64)> {
        if let Some(&m) = self.minimum.get() {
            return Ok(m);
        }
        let m = golden_section(|x| self.mu1(x), 0.0, 1.0, 1e-8)?;
        Ok(*self.minimum.get_or_init(|| m))
    }

    pub fn theta0(&self) -> Result<f64> {
        Ok(self.minimize_mu1()?.0)
    }

    /// The sublevel set `{μ₁ < λ}`, or `None` when `λ ≤ Θ₀`.
    pub fn support_interval(&self, lambda: f64) -> Result<Option<SupportInterval>> {
        if !(0.0..=LAMBDA_MAX).contains(&lambda) {
            return Err(Error::invalid(format!(
                "lambda must lie in [0, {LAMBDA_MAX}], got {lambda}"
            )));
        }
        let (theta0, xi0) = self.minimize_mu1()?;
        if lambda <= theta0 {
            return Ok(None);
        }
        // μ₁(0) = 1 > λ, so the left end lies in (0, ξ₀).
        let xi_minus = bisect_level(|x| self.mu1(x), lambda, 0.0, xi0, 1e-10)?;
        let mut hi = xi0 + 1.0;
        while self.mu1(hi)? < lambda {
            if hi >= XI_CAP {
                return Err(Error::invalid(format!(
                    "sublevel set of lambda = {lambda} extends beyond xi = {XI_CAP}"
                )));
            }
            hi = (2.0 * hi).min(XI_CAP);
        }
        let xi_plus = bisect_level(|x| self.mu1(x), lambda, hi, xi0, 1e-10)?;
        Ok(Some(SupportInterval {
            lambda,
            xi_minus,
            xi_plus,
        }))
    }

    /// `∫ (λ − μ₁(ξ))_+^p dξ` to a relative tolerance of `1e-7`.
    pub fn moment_integral(&self, lambda: f64, p: Moment) -> Result<f64> {
        let key = ((lambda * 1e12).round() as i64, p);
        if let Some(&v) = self.moments.read().expect("cache poisoned").get(&key) {
            return Ok(v);
        }
        let Some(support) = self.support_interval(lambda)? else {
            return Ok(0.0);
        };
        let exponent = p.exponent();
        let (a, b) = (support.xi_minus, support.xi_plus);
        // x = a + (b − a)(3s² − 2s³) turns the square-root edges into
        // smooth zeros, so the adaptive rule converges quickly.
        let f = |s: f64| -> Result<f64> {
            let x = a + (b - a) * s * s * (3.0 - 2.0 * s);
            let jac = (b - a) * 6.0 * s * (1.0 - s);
            Ok((lambda - self.mu1(x)?).max(0.0).powf(exponent) * jac)
        };
        // Scale estimate from a plain rule, then the adaptive pass.
        let rough: f64 = quad::gauss_legendre(20, 0.0, 1.0)
            .iter()
            .map(|&(x, w)| f(x).map(|v| w * v))
            .sum::<Result<f64>>()?;
        let tol = MOMENT_RTOL * rough.abs().max(f64::MIN_POSITIVE);
        let v = quad::adaptive(f, 0.0, 1.0, tol)?;
        self.moments.write().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    /// Samples `μ₁` on `xi_samples` (evaluated in parallel, returned in
    /// input order).
    pub fn curve(&self, xi_samples: &[f64]) -> Result<DeGennesCurve> {
        let mu1 = xi_samples
            .par_iter()
            .map(|&x| self.mu1(x))
            .collect::<Result<Vec<f64>>>()?;
        Ok(DeGennesCurve {
            xi_samples: xi_samples.to_vec(),
            mu1,
            theta0: self.minimize_mu1()?,
            params: self.params,
        })
    }
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`; returns
/// `(min value, argmin)`.
fn golden_section<F>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((f(x)?, x))
}

/// Solves `f(x) = level` by bisection, given `f(outer) ≥ level > f(inner)`.
fn bisect_level<F>(f: F, level: f64, mut outer: f64, mut inner: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    while (outer - inner).abs() > xtol {
        let mid = 0.5 * (outer + inner);
        if f(mid)? >= level {
            outer = mid;
        } else {
            inner = mid;
        }
    }
    Ok(0.5 * (outer + inner))
}

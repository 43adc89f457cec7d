//! The half-plane model `L(θ) = −∂t² − ∂s² + (t cosθ − s sinθ)²` with a
//! Neumann condition at `t = 0`, and its eigenvalues `ζ_j(θ)` below the
//! essential-spectrum edge 1.
//!
//! The half-plane is truncated to `(−S, S) × (0, T)` with Dirichlet walls,
//! which can only raise eigenvalues; the grid is cell-centred in both
//! directions and ordered with `t` fastest, so the bandwidth is the number
//! of `t`-cells.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{band_inertia, eigs_below_band, BandedMatrix};

/// Smallest supported angle; below it the `θ = 0` densities apply.
pub const THETA_MIN: f64 = 3.0 * std::f64::consts::PI / 180.0;
/// Largest admissible window, kept clear of the essential edge.
pub const WINDOW_MAX: f64 = 0.995;
/// Default grid spacing in both directions.
pub const DEFAULT_SPACING: f64 = 0.05;
const EIG_TOL: f64 = 1e-10;
const SELF_CHECK_LIMIT: f64 = 1e-6;

/// Truncation box `(−S, S) × (0, T)` and grid spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneBox {
    pub s_half: f64,
    pub t_max: f64,
    pub ds: f64,
    pub dt: f64,
}

impl HalfPlaneBox {
    pub fn new(s_half: f64, t_max: f64, ds: f64, dt: f64) -> Result<Self> {
        for (name, v) in [("S", s_half), ("T", t_max), ("ds", ds), ("dt", dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let b = HalfPlaneBox {
            s_half,
            t_max,
            ds,
            dt,
        };
        if b.n_s() < 2 || b.n_t() < 2 {
            return Err(Error::invalid("box must hold at least 2 cells per direction"));
        }
        Ok(b)
    }

    /// Standard box for angle `θ`: `S = 8 + 6 / max(sinθ, sin 3°)`, `T = 10`.
    pub fn for_theta(theta: f64, spacing: f64) -> Result<Self> {
        let s = 8.0 + 6.0 / theta.sin().max(THETA_MIN.sin());
        HalfPlaneBox::new(s, 10.0, spacing, spacing)
    }

    pub fn n_s(&self) -> usize {
        (2.0 * self.s_half / self.ds).round() as usize
    }

    pub fn n_t(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn unknowns(&self) -> usize {
        self.n_s() * self.n_t()
    }

    /// Actual spacings after rounding the cell counts.
    pub fn spacings(&self) -> (f64, f64) {
        (
            2.0 * self.s_half / self.n_s() as f64,
            self.t_max / self.n_t() as f64,
        )
    }

    /// Same spacing, `S` and `T` doubled.
    pub fn enlarged(&self) -> Self {
        HalfPlaneBox {
            s_half: 2.0 * self.s_half,
            t_max: 2.0 * self.t_max,
            ..*self
        }
    }

    /// Same box, spacings halved.
    pub fn refined(&self) -> Self {
        HalfPlaneBox {
            ds: 0.5 * self.ds,
            dt: 0.5 * self.dt,
            ..*self
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2 + 1e-12) {
        return Err(Error::invalid(format!(
            "theta must lie in (0, pi/2], got {theta}"
        )));
    }
    Ok(())
}

/// Five-point discretization of `L(θ)` on `bx`.
pub fn assemble_l_theta(theta: f64, bx: &HalfPlaneBox) -> Result<BandedMatrix> {
    check_theta(theta)?;
    let (ns, nt) = (bx.n_s(), bx.n_t());
    let (ds, dt) = bx.spacings();
    let (is2, it2) = (1.0 / (ds * ds), 1.0 / (dt * dt));
    let (c, s_) = (theta.cos(), theta.sin());
    let mut a = BandedMatrix::zeros(ns * nt, nt)?;
    for i in 0..ns {
        let s = -bx.s_half + (i as f64 + 0.5) * ds;
        for j in 0..nt {
            let t = (j as f64 + 0.5) * dt;
            let k = i * nt + j;
            let kin_t = if j == 0 { it2 } else { 2.0 * it2 };
            let v = t * c - s * s_;
            a.set(k, k, 2.0 * is2 + kin_t + v * v);
            if j + 1 < nt {
                a.set(k + 1, k, -it2);
            }
            if i + 1 < ns {
                a.set(k + nt, k, -is2);
            }
        }
    }
    Ok(a)
}

/// Eigenvalues of the truncated `L(θ)` below a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuPanSpectrum {
    pub theta: f64,
    pub window: f64,
    pub zetas: Vec<f64>,
    #[serde(rename = "box")]
    pub bx: HalfPlaneBox,
}

impl LuPanSpectrum {
    /// `Σ_j (ζ_j − λ)_-` for `λ ≤ window`.
    pub fn deficit(&self, lambda: f64) -> f64 {
        crate::linalg::deficit_sum(lambda, &self.zetas)
    }

    /// `#{ζ_j < λ}` for `λ ≤ window`.
    pub fn count(&self, lambda: f64) -> usize {
        self.zetas.partition_point(|&z| z < lambda)
    }
}

fn check_query(theta: f64, window: f64) -> Result<()> {
    check_theta(theta)?;
    if theta < THETA_MIN - 1e-12 {
        return Err(Error::invalid(format!(
            "theta = {:.4} deg is below the 3 deg minimum; use the theta = 0 densities",
            theta.to_degrees()
        )));
    }
    if !(window <= WINDOW_MAX) {
        return Err(Error::invalid(format!(
            "window {window} exceeds the limit {WINDOW_MAX}"
        )));
    }
    Ok(())
}

/// `ζ_j(θ) < window` on the given box.
pub fn zetas(theta: f64, window: f64, bx: &HalfPlaneBox) -> Result<LuPanSpectrum> {
    check_query(theta, window)?;
    let a = assemble_l_theta(theta, bx)?;
    let w = eigs_below_band(&a, window, EIG_TOL)?;
    Ok(LuPanSpectrum {
        theta,
        window,
        zetas: w.eigenvalues,
        bx: *bx,
    })
}

/// [`zetas`] followed by the truncation self-check: the computation is
/// repeated with `S` and `T` doubled and every eigenvalue must move by less
/// than `1e-6`.
pub fn zetas_checked(theta: f64, window: f64, bx: &HalfPlaneBox) -> Result<LuPanSpectrum> {
    let base = zetas(theta, window, bx)?;
    let big = zetas(theta, window, &bx.enlarged())?;
    let mut movement: f64 = 0.0;
    for (j, z) in base.zetas.iter().enumerate() {
        let other = big.zetas.get(j).copied().unwrap_or(window);
        movement = movement.max((z - other).abs());
    }
    if big.zetas.len() > base.zetas.len() {
        let extra = big.zetas[base.zetas.len()];
        movement = movement.max(window - extra);
    }
    if movement >= SELF_CHECK_LIMIT {
        return Err(Error::TruncationTooSmall {
            movement,
            limit: SELF_CHECK_LIMIT,
        });
    }
    Ok(base)
}

/// `#{ζ_j(θ) < λ}` by a single inertia count.
pub fn count_below(theta: f64, lambda: f64, bx: &HalfPlaneBox) -> Result<usize> {
    check_query(theta, lambda)?;
    let a = assemble_l_theta(theta, bx)?;
    jittered_count(&a, lambda)
}

fn jittered_count(a: &BandedMatrix, lambda: f64) -> Result<usize> {
    let jitter = 1e-10 * (1.0 + lambda.abs());
    let mut last = None;
    for k in [0.0, 1.0, -1.0, 2.0, -2.0, 3.0] {
        match band_inertia(a, lambda + k * jitter) {
            Ok(c) => return Ok(c),
            Err(e @ Error::SingularShift { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("attempted"))
}

/// Lowest eigenvalue of the truncated operator, searched below `ceiling`
/// (which may exceed the window limit). `None` if nothing lies below.
///
/// Plain bisection on inertia counts, so the cost does not depend on how
/// many eigenvalues crowd in under the ceiling.
pub fn lowest(theta: f64, bx: &HalfPlaneBox, ceiling: f64) -> Result<Option<f64>> {
    check_theta(theta)?;
    let a = assemble_l_theta(theta, bx)?;
    if jittered_count(&a, ceiling)? == 0 {
        return Ok(None);
    }
    let (mut lo, _) = a.gershgorin();
    let mut hi = ceiling;
    lo = lo.min(hi);
    while hi - lo > EIG_TOL * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if jittered_count(&a, mid)? >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

type CacheKey = (u64, u64, [u64; 4]);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<LuPanSpectrum>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<LuPanSpectrum>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Memoized [`zetas`]; concurrent readers share results.
pub fn zetas_cached(theta: f64, window: f64, bx: &HalfPlaneBox) -> Result<Arc<LuPanSpectrum>> {
    let key = (
        theta.to_bits(),
        window.to_bits(),
        [
            bx.s_half.to_bits(),
            bx.t_max.to_bits(),
            bx.ds.to_bits(),
            bx.dt.to_bits(),
        ],
    );
    if let Some(s) = cache().read().expect("cache poisoned").get(&key) {
        return Ok(Arc::clone(s));
    }
    let s = Arc::new(zetas(theta, window, bx)?);
    cache()
        .write()
        .expect("cache poisoned")
        .insert(key, Arc::clone(&s));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_box_matches_hand_stencil() {
        let bx = HalfPlaneBox::new(1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!((bx.n_s(), bx.n_t()), (2, 2));
        let th = std::f64::consts::FRAC_PI_4;
        let a = assemble_l_theta(th, &bx).unwrap();
        let (c, s) = (th.cos(), th.sin());
        let v = |s_: f64, t: f64| (t * c - s_ * s).powi(2);
        // cell (s=-0.5, t=0.25): Neumann row in t, Dirichlet wall in s
        assert!((a.get(0, 0) - (2.0 + 4.0 + v(-0.5, 0.25))).abs() < 1e-14);
        assert!((a.get(1, 1) - (2.0 + 8.0 + v(-0.5, 0.75))).abs() < 1e-14);
        assert!((a.get(2, 2) - (2.0 + 4.0 + v(0.5, 0.25))).abs() < 1e-14);
        assert_eq!(a.get(1, 0), -4.0);
        assert_eq!(a.get(2, 0), -1.0);
        assert_eq!(a.get(3, 0), 0.0);
        assert_eq!(a.bandwidth(), 2);
    }

    #[test]
    fn standard_box_scales_with_angle() {
        let a = HalfPlaneBox::for_theta(THETA_MIN, 0.1).unwrap();
        let b = HalfPlaneBox::for_theta(1.0 * std::f64::consts::PI / 180.0, 0.1).unwrap();
        assert_eq!(a, b);
        let c = HalfPlaneBox::for_theta(std::f64::consts::FRAC_PI_2, 0.1).unwrap();
        assert!((c.s_half - 14.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_queries() {
        let bx = HalfPlaneBox::new(4.0, 4.0, 0.5, 0.5).unwrap();
        assert!(zetas(0.01, 0.9, &bx).is_err());
        assert!(zetas(0.5, 0.999, &bx).is_err());
        assert!(assemble_l_theta(0.0, &bx).is_err());
        assert!(assemble_l_theta(2.0, &bx).is_err());
    }

    #[test]
    fn window_statistics() {
        let s = LuPanSpectrum {
            theta: 0.5,
            window: 0.95,
            zetas: vec![0.7, 0.8, 0.9],
            bx: HalfPlaneBox::new(4.0, 4.0, 0.5, 0.5).unwrap(),
        };
        assert_eq!(s.count(0.85), 2);
        assert!((s.deficit(0.85) - 0.2).abs() < 1e-15);
        assert_eq!(s.count(0.9), 2);
    }
}

//! The half-cylinder operator `(−i∇ + F)²` on `(−L/2, L/2)² × (0, T)`,
//! `F = (t cosθ − s sinθ) e_r`, with Neumann at `t = 0`, and its energy
//! per unit area `ℰ(λ)/L²`, which converges to `E(θ, λ)` as `L → ∞`.
//!
//! Two realizations are offered:
//! * periodic in `r`: a Fourier decomposition into independent 2-D fibers
//!   `−∂s² − ∂t² + (ξ_k + t cosθ − s sinθ)²`, `ξ_k = 2πk/L`, Dirichlet at
//!   the `s`-walls (periodic in `s` as well when `θ = 0`, where the fiber
//!   separates);
//! * Dirichlet in `r` and `s`: the full 3-D problem, coarse scale only.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degennes::{assemble_h_xi, DeGennes, HalfLineGrid};
use crate::energy::{DensityModel, DirectDensity};
use crate::error::{Error, Result};
use crate::linalg::{eigs_below_band, eigs_below_tridiag, BandedMatrix, SpectralWindow};

const EIG_TOL: f64 = 1e-10;
/// Fibers beyond the localization bound that must come out empty.
const EXTRA_FIBERS: i64 = 2;
/// Localization margin in `ξ` beyond `(L/2) sinθ`.
const XI_MARGIN: f64 = 2.0;
/// Largest fiber threshold.
pub const FIBER_LAMBDA_MAX: f64 = 0.95;
/// Size guard for the 3-D Dirichlet solve.
pub const DIRICHLET_MAX_SIDE: f64 = 6.0;
pub const DIRICHLET_MIN_SPACING: f64 = 0.2;

/// Boundary condition in the `r` direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialBc {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub theta: f64,
    pub lambda: f64,
    /// Side length `L`.
    pub side: f64,
    /// Height `T` of the Dirichlet cap.
    pub height: f64,
    /// Lateral spacing (used for `r` and `s`).
    pub ds: f64,
    pub dt: f64,
    pub bc_r: RadialBc,
}

impl CylinderSpec {
    /// Periodic spec with `T = 10` and spacing 0.1.
    pub fn periodic(theta: f64, lambda: f64, side: f64) -> Result<Self> {
        CylinderSpec {
            theta,
            lambda,
            side,
            height: 10.0,
            ds: 0.1,
            dt: 0.1,
            bc_r: RadialBc::Periodic,
        }
        .validated()
    }

    /// Dirichlet spec with `T = 10` and spacing 0.2.
    pub fn dirichlet(theta: f64, lambda: f64, side: f64) -> Result<Self> {
        CylinderSpec {
            theta,
            lambda,
            side,
            height: 10.0,
            ds: 0.2,
            dt: 0.2,
            bc_r: RadialBc::Dirichlet,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(0.0..=PI / 2.0 + 1e-12).contains(&self.theta) {
            return Err(Error::invalid(format!("theta must lie in [0, pi/2], got {}", self.theta)));
        }
        if !(self.lambda < 1.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be below 1, got {}", self.lambda)));
        }
        for (name, v) in [("L", self.side), ("T", self.height), ("ds", self.ds), ("dt", self.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cells_s() < 2 || self.cells_t() < 2 {
            return Err(Error::invalid("grid must hold at least 2 cells per direction"));
        }
        Ok(self)
    }

    pub fn cells_s(&self) -> usize {
        (self.side / self.ds).round() as usize
    }

    pub fn cells_t(&self) -> usize {
        (self.height / self.dt).round() as usize
    }

    fn spacings(&self) -> (f64, f64) {
        (
            self.side / self.cells_s() as f64,
            self.height / self.cells_t() as f64,
        )
    }

    fn with_side(&self, side: f64) -> Result<Self> {
        CylinderSpec { side, ..*self }.validated()
    }
}

/// The window of one Fourier fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberResult {
    pub xi_k: f64,
    pub window: SpectralWindow,
}

/// Fiber operator on the `(s, t)` box, `t` fastest.
fn assemble_fiber(theta: f64, xi: f64, spec: &CylinderSpec) -> Result<BandedMatrix> {
    let (ns, nt) = (spec.cells_s(), spec.cells_t());
    let (ds, dt) = spec.spacings();
    let (is2, it2) = (1.0 / (ds * ds), 1.0 / (dt * dt));
    let (c, sn) = (theta.cos(), theta.sin());
    let mut a = BandedMatrix::zeros(ns * nt, nt)?;
    for i in 0..ns {
        let s = -0.5 * spec.side + (i as f64 + 0.5) * ds;
        for j in 0..nt {
            let t = (j as f64 + 0.5) * dt;
            let k = i * nt + j;
            let v = xi + t * c - s * sn;
            let kin_t = if j == 0 { it2 } else { 2.0 * it2 };
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

/// Eigenvalues of the separable `θ = 0` fiber: the half-line eigenvalues
/// of `H(−ξ)` plus those of the periodic discrete `s`-Laplacian.
fn separable_fiber(xi: f64, spec: &CylinderSpec) -> Result<Vec<f64>> {
    let (ds, dt) = spec.spacings();
    let grid = HalfLineGrid::new(spec.height, spec.cells_t())?;
    debug_assert!((grid.spacing() - dt).abs() < 1e-12);
    let t_part = eigs_below_tridiag(&assemble_h_xi(-xi, &grid), spec.lambda, EIG_TOL)?;
    let ns = spec.cells_s();
    let mut out = Vec::new();
    for &m in &t_part.eigenvalues {
        for q in 0..ns {
            let e = m + (2.0 * (PI * q as f64 / ns as f64).sin() / ds).powi(2);
            if e < spec.lambda {
                out.push(e);
            }
        }
    }
    Ok(out)
}

/// Fourier indices retained for the periodic decomposition.
fn fiber_range(spec: &CylinderSpec) -> Result<(i64, i64)> {
    let bound = if spec.theta > 0.0 {
        0.5 * spec.side * spec.theta.sin() + XI_MARGIN
    } else {
        match DeGennes::shared().support_interval(spec.lambda.max(0.0))? {
            Some(si) => si.xi_plus + 1.0,
            None => 1.0,
        }
    };
    let k = (bound * spec.side / (2.0 * PI)).ceil() as i64 + EXTRA_FIBERS;
    Ok((-k, k))
}

fn check_periodic(spec: &CylinderSpec) -> Result<()> {
    spec.validated()?;
    if spec.bc_r != RadialBc::Periodic {
        return Err(Error::invalid("fiber decomposition needs periodic r"));
    }
    if spec.lambda > FIBER_LAMBDA_MAX {
        return Err(Error::invalid(format!(
            "lambda must be at most {FIBER_LAMBDA_MAX}, got {}",
            spec.lambda
        )));
    }
    if spec.height < 10.0 - 1e-12 {
        return Err(Error::invalid(format!("T must be at least 10, got {}", spec.height)));
    }
    Ok(())
}

/// Windows of all retained fibers, ordered by `ξ_k`.
///
/// Fails with [`Error::MarginTooSmall`] if an outermost fiber is not empty.
pub fn fiber_spectrum(spec: &CylinderSpec) -> Result<Vec<FiberResult>> {
    check_periodic(spec)?;
    let (k_lo, k_hi) = fiber_range(spec)?;
    let fibers = (k_lo..=k_hi)
        .into_par_iter()
        .map(|k| {
            let xi_k = 2.0 * PI * k as f64 / spec.side;
            let eigenvalues = if spec.theta == 0.0 {
                separable_fiber(xi_k, spec)?
            } else {
                let a = assemble_fiber(spec.theta, xi_k, spec)?;
                eigs_below_band(&a, spec.lambda, EIG_TOL)?.eigenvalues
            };
            Ok(FiberResult {
                xi_k,
                window: SpectralWindow::from_eigenvalues(spec.lambda, eigenvalues),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for f in [&fibers[0], &fibers[fibers.len() - 1]] {
        if f.window.count > 0 {
            return Err(Error::MarginTooSmall {
                xi: f.xi_k,
                count: f.window.count,
            });
        }
    }
    Ok(fibers)
}

/// Per-area energy `Σ_k Σ_j (e_{k,j} − λ)_- / L²` of the periodic problem.
pub fn fiber_energy(spec: &CylinderSpec) -> Result<f64> {
    let fibers = fiber_spectrum(spec)?;
    Ok(fibers.iter().map(|f| f.window.deficit).sum::<f64>() / (spec.side * spec.side))
}

/// Total count and energy below `level ≤ λ` from computed fiber windows.
pub fn window_totals(fibers: &[FiberResult], level: f64) -> (usize, f64) {
    fibers.iter().fold((0, 0.0), |(n, e), f| {
        (n + f.window.count_below(level), e + f.window.deficit_below(level))
    })
}

/// Real symmetric form of the 3-D Dirichlet operator.
///
/// The Hermitian finite-difference matrix (Peierls phases on the `r`
/// links) commutes with complex conjugation composed with `r ↦ −r`, so in
/// the basis `(δ_p + δ_p')/√2`, `i(δ_p − δ_p')/√2` over mirror pairs it is
/// real with the same spectrum. Unknowns are ordered pair-component
/// fastest, then `s`, then `t`.
pub fn assemble_dirichlet(spec: &CylinderSpec) -> Result<BandedMatrix> {
    let (nr, nt) = (spec.cells_s(), spec.cells_t());
    let ns = nr;
    let (d, dt) = spec.spacings();
    let (c, sn) = (spec.theta.cos(), spec.theta.sin());
    let h2 = 1.0 / (d * d);
    let it2 = 1.0 / (dt * dt);
    let mut a = BandedMatrix::zeros(nr * ns * nt, nr * ns)?;

    // basis slots of r-node i and its coefficients there
    let slots = |i: usize| -> [(usize, Complex64); 2] {
        let mirror = nr - 1 - i;
        if i == mirror {
            let one = Complex64::new(1.0, 0.0);
            return [(nr - 1, one), (usize::MAX, Complex64::new(0.0, 0.0))];
        }
        let p = i.min(mirror);
        let sign = if i < mirror { 1.0 } else { -1.0 };
        [
            (2 * p, Complex64::new(FRAC_1_SQRT_2, 0.0)),
            (2 * p + 1, Complex64::new(0.0, sign * FRAC_1_SQRT_2)),
        ]
    };

    for it in 0..nt {
        let t = (it as f64 + 0.5) * dt;
        for is in 0..ns {
            let s = -0.5 * spec.side + (is as f64 + 0.5) * d;
            let phase = Complex64::from_polar(1.0, (t * c - s * sn) * d);
            let block = (it * ns + is) * nr;
            let diag = 4.0 * h2 + if it == 0 { it2 } else { 2.0 * it2 };
            // r-part of the block: H restricted to one (s, t) line
            let mut line = vec![Complex64::new(0.0, 0.0); nr * nr];
            for i in 0..nr {
                line[i * nr + i] += diag;
                if i + 1 < nr {
                    line[i * nr + i + 1] += -h2 * phase;
                    line[(i + 1) * nr + i] += -h2 * phase.conj();
                }
            }
            for col in 0..nr {
                for row in 0..nr {
                    let v = line[row * nr + col];
                    if v == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (sa, ca) in slots(row) {
                        if sa == usize::MAX {
                            continue;
                        }
                        for (sb, cb) in slots(col) {
                            if sb == usize::MAX || sa < sb {
                                continue;
                            }
                            let r = (ca.conj() * v * cb).re;
                            if r != 0.0 {
                                a.add(block + sa, block + sb, r);
                            }
                        }
                    }
                }
            }
            // s and t links are real and act identically on every slot
            for slot in 0..nr {
                let k = block + slot;
                if is + 1 < ns {
                    a.add(k + nr, k, -h2);
                }
                if it + 1 < nt {
                    a.add(k + nr * ns, k, -it2);
                }
            }
        }
    }
    Ok(a)
}

/// Per-area energy of the 3-D problem with Dirichlet walls in `r` and `s`.
pub fn dirichlet_energy(spec: &CylinderSpec) -> Result<f64> {
    Ok(dirichlet_window(spec)?.deficit / (spec.side * spec.side))
}

/// Eigenvalues below `λ` of the 3-D Dirichlet problem.
pub fn dirichlet_window(spec: &CylinderSpec) -> Result<SpectralWindow> {
    spec.validated()?;
    if spec.bc_r != RadialBc::Dirichlet {
        return Err(Error::invalid("the 3-D solve needs Dirichlet r"));
    }
    if spec.side > DIRICHLET_MAX_SIDE + 1e-12
        || spec.ds < DIRICHLET_MIN_SPACING - 1e-12
        || spec.dt < DIRICHLET_MIN_SPACING - 1e-12
    {
        return Err(Error::ProblemTooLarge(format!(
            "3-D solve limited to L <= {DIRICHLET_MAX_SIDE} and spacing >= {DIRICHLET_MIN_SPACING}"
        )));
    }
    let a = assemble_dirichlet(spec)?;
    eigs_below_band(&a, spec.lambda, EIG_TOL)
}

/// One row of [`convergence_study`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub side: f64,
    pub energy_per_area: f64,
    /// `E(θ, λ) − ℰ/L²`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub theta: f64,
    pub lambda: f64,
    pub limit: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log gap` against `log L` (needs two rows with
    /// positive gap).
    pub exponent: Option<f64>,
}

/// Per-area energies of the periodic problem for increasing `L`, against
/// `E(θ, λ)` evaluated on the same grid spacing.
pub fn convergence_study(base: &CylinderSpec, sides: &[f64]) -> Result<ConvergenceStudy> {
    if sides.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("side lengths must be strictly ascending"));
    }
    let model = DirectDensity::new(base.ds, base.lambda.max(1e-3).min(crate::lupan::WINDOW_MAX))?;
    let limit = model.energy(base.theta, base.lambda.max(0.0))?.value;
    let rows = sides
        .iter()
        .map(|&side| {
            let e = fiber_energy(&base.with_side(side)?)?;
            Ok(ConvergenceRow {
                side,
                energy_per_area: e,
                gap: limit - e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.gap > 0.0)
        .map(|r| (r.side.ln(), r.gap.ln()))
        .collect();
    let exponent = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(ConvergenceStudy {
        theta: base.theta,
        lambda: base.lambda,
        limit,
        rows,
        exponent,
    })
}

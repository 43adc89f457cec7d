//! `(−ih∇ + A)²` on the unit ball with `A = (B/2)(−y, x, 0)` and the
//! magnetic Neumann condition, through the exact azimuthal decomposition
//! `u = v(ρ, φ) e^{imψ}`.
//!
//! Each mode is the weighted form
//! `∫∫ [h²(v_ρ² + v_φ²/ρ²) + (hm/(ρ sinφ) + Bρ sinφ/2)² v²] ρ² sinφ dρ dφ`
//! against the mass `∫∫ v² ρ² sinφ dρ dφ`, discretized cell-centred in both
//! variables. The sphere is the grid face `ρ = 1`, where the natural
//! condition is the magnetic Neumann condition (`ν·A = 0` there).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{predict_count, predict_energy, ConstantField, SurfaceMesh};
use crate::energy::DensityModel;
use crate::linalg::{eigs_below_band, BandedMatrix, SpectralWindow};

const EIG_TOL: f64 = 1e-10;
/// Modes with `m > 0` checked before the scan may stop.
const POSITIVE_BUFFER: i64 = 3;
/// Consecutive skipped modes that end the downward scan.
const SKIP_RUN: usize = 3;
pub const MAX_N_RHO: usize = 512;
pub const MAX_N_PHI: usize = 1024;

/// Meridian grid: `n_rho` cells on `(0, 1)`, `n_phi` cells on `(0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallGrid {
    pub n_rho: usize,
    pub n_phi: usize,
}

impl Default for BallGrid {
    fn default() -> Self {
        BallGrid {
            n_rho: 128,
            n_phi: 256,
        }
    }
}

impl BallGrid {
    pub fn validated(self) -> Result<Self> {
        if self.n_rho < 2 || self.n_phi < 2 {
            return Err(Error::invalid("ball grid needs at least 2 cells per direction"));
        }
        if self.n_rho > MAX_N_RHO || self.n_phi > MAX_N_PHI {
            return Err(Error::ProblemTooLarge(format!(
                "ball grid {}x{} exceeds {MAX_N_RHO}x{MAX_N_PHI}",
                self.n_rho, self.n_phi
            )));
        }
        Ok(self)
    }

    pub fn doubled(self) -> Self {
        BallGrid {
            n_rho: 2 * self.n_rho,
            n_phi: 2 * self.n_phi,
        }
    }

    fn steps(&self) -> (f64, f64) {
        (1.0 / self.n_rho as f64, std::f64::consts::PI / self.n_phi as f64)
    }

    fn rho(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_rho as f64
    }

    fn phi(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * std::f64::consts::PI / self.n_phi as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeProblem {
    pub m: i64,
    pub h: f64,
    pub b: f64,
    pub grid: BallGrid,
}

fn check_hb(h: f64, b: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("h and B must be positive, got h = {h}, B = {b}")));
    }
    Ok(())
}

fn potential(m: i64, h: f64, b: f64, x: f64) -> f64 {
    (h * m as f64 / x + 0.5 * b * x).powi(2)
}

/// Smallest grid value of the mode potential, a lower bound for every
/// eigenvalue of the mode.
pub fn mode_potential_min(m: i64, h: f64, b: f64, grid: &BallGrid) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..grid.n_rho {
        for j in 0..grid.n_phi {
            best = best.min(potential(m, h, b, grid.rho(i) * grid.phi(j).sin()));
        }
    }
    best
}

/// Stiffness with diagonal mass for mode `m`; unknowns ordered `ρ` fastest.
pub fn mode_matrix(m: i64, h: f64, b: f64, grid: &BallGrid) -> Result<BandedMatrix> {
    check_hb(h, b)?;
    let grid = grid.validated()?;
    let (nr, np) = (grid.n_rho, grid.n_phi);
    let (dr, dp) = grid.steps();
    let h2 = h * h;
    let mut k = BandedMatrix::zeros(nr * np, nr)?;
    let mut mass = vec![0.0; nr * np];
    for j in 0..np {
        let sp = grid.phi(j).sin();
        // sin at the upper φ face
        let sp_face = ((j as f64 + 1.0) * dp).sin();
        for i in 0..nr {
            let r = grid.rho(i);
            let idx = j * nr + i;
            let w = r * r * sp * dr * dp;
            mass[idx] = w;
            k.add(idx, idx, potential(m, h, b, r * sp) * w);
            if i + 1 < nr {
                let rf = (i as f64 + 1.0) * dr;
                let c = h2 * rf * rf * sp * dp / dr;
                k.add(idx, idx, c);
                k.add(idx + 1, idx + 1, c);
                k.add(idx + 1, idx, -c);
            }
            if j + 1 < np {
                let c = h2 * sp_face * dr / dp;
                k.add(idx, idx, c);
                k.add(idx + nr, idx + nr, c);
                k.add(idx + nr, idx, -c);
            }
        }
    }
    k.with_mass(mass)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeWindow {
    pub m: i64,
    pub window: SpectralWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallWindow {
    pub h: f64,
    pub big_lambda: f64,
    pub b: f64,
    pub grid: BallGrid,
    /// Retained (non-skipped) modes in decreasing `m`.
    pub modes: Vec<ModeWindow>,
    pub count: usize,
    /// `Σ_j (e_j(h) − Λh)_-`.
    pub deficit: f64,
}

/// Modes whose potential bound does not exclude them, scanning `m` down
/// from `POSITIVE_BUFFER` until `SKIP_RUN` consecutive `m ≤ 0` are skipped.
pub fn retained_modes(h: f64, big_lambda: f64, b: f64, grid: &BallGrid) -> Vec<i64> {
    let level = big_lambda * h;
    let mut out = Vec::new();
    let mut skipped = 0;
    let mut m = POSITIVE_BUFFER;
    loop {
        if mode_potential_min(m, h, b, grid) < level {
            out.push(m);
            if m <= 0 {
                skipped = 0;
            }
        } else if m <= 0 {
            skipped += 1;
            if skipped >= SKIP_RUN {
                break;
            }
        }
        m -= 1;
    }
    out
}

/// All eigenvalues below `Λh`, mode by mode.
pub fn ball_window(h: f64, big_lambda: f64, b: f64, grid: &BallGrid) -> Result<BallWindow> {
    check_hb(h, b)?;
    if !(0.02..=0.2).contains(&h) {
        return Err(Error::invalid(format!("h must lie in [0.02, 0.2], got {h}")));
    }
    if !(big_lambda >= 0.0 && big_lambda.is_finite()) {
        return Err(Error::invalid(format!("Lambda must be nonnegative, got {big_lambda}")));
    }
    let grid = grid.validated()?;
    let level = big_lambda * h;
    let modes = retained_modes(h, big_lambda, b, &grid)
        .into_par_iter()
        .map(|m| {
            let a = mode_matrix(m, h, b, &grid)?;
            Ok(ModeWindow {
                m,
                window: eigs_below_band(&a, level, EIG_TOL)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = modes.iter().map(|w| w.window.count).sum();
    let deficit = modes.iter().map(|w| w.window.deficit).sum();
    Ok(BallWindow {
        h,
        big_lambda,
        b,
        grid,
        modes,
        count,
        deficit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub h: f64,
    pub count: usize,
    pub deficit: f64,
    pub pred_count: f64,
    pub pred_energy: f64,
    /// `h·count / pred_count` (1 when both vanish).
    pub ratio_count: f64,
    /// `deficit / pred_energy` (1 when both vanish).
    pub ratio_energy: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 && den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Ball spectra for decreasing `h` against the boundary-integral
/// predictions on the unit sphere.
pub fn asymptotic_table(
    h_list: &[f64],
    big_lambda: f64,
    b: f64,
    grid: &BallGrid,
    sphere: &SurfaceMesh,
    model: &dyn DensityModel,
) -> Result<Vec<AsymptoticRow>> {
    if h_list.len() < 3 || h_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::invalid("h list must be strictly decreasing with at least 3 entries"));
    }
    let field = ConstantField([0.0, 0.0, b]);
    let pred_energy = predict_energy(sphere, &field, big_lambda, model)?;
    let pred_count = predict_count(sphere, &field, big_lambda, model)?;
    h_list
        .iter()
        .map(|&h| {
            let w = ball_window(h, big_lambda, b, grid)?;
            Ok(AsymptoticRow {
                h,
                count: w.count,
                deficit: w.deficit,
                pred_count,
                pred_energy,
                ratio_count: ratio(h * w.count as f64, pred_count),
                ratio_energy: ratio(w.deficit, pred_energy),
            })
        })
        .collect()
}

//! The limiting boundary densities `E(θ, λ)` (energy) and `n(θ, λ)`
//! (eigenvalue count).
//!
//! For `θ` below 3° the tangent-field formulas apply:
//! `E = (1/3π²) ∫ (λ − μ₁)_+^{3/2} dξ` and `n = (1/2π²) ∫ (λ − μ₁)_+^{1/2} dξ`.
//! Otherwise `E = (sinθ/2π) Σ_j (ζ_j(θ) − λ)_-` and
//! `n = (sinθ/2π) #{ζ_j(θ) < λ}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degennes::{DeGennes, Moment};
use crate::error::{Error, Result};
use crate::lupan::{self, HalfPlaneBox, THETA_MIN, WINDOW_MAX};

/// Which formula produced a density value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    ThetaZero,
    ThetaPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDensity {
    pub theta: f64,
    pub lambda: f64,
    pub value: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountDensity {
    pub theta: f64,
    pub lambda: f64,
    pub value: f64,
    pub branch: Branch,
}

pub(crate) fn check_args(theta: f64, lambda: f64) -> Result<()> {
    if !(0.0..=PI / 2.0 + 1e-12).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0, pi/2], got {theta}")));
    }
    if !(0.0..=WINDOW_MAX).contains(&lambda) {
        return Err(Error::invalid(format!(
            "lambda must lie in [0, {WINDOW_MAX}], got {lambda}"
        )));
    }
    Ok(())
}

pub(crate) fn branch_of(theta: f64) -> Branch {
    if theta < THETA_MIN - 1e-12 {
        Branch::ThetaZero
    } else {
        Branch::ThetaPositive
    }
}

/// `E(0, λ)`.
pub fn energy_theta_zero(dg: &DeGennes, lambda: f64) -> Result<f64> {
    Ok(dg.moment_integral(lambda, Moment::ThreeHalves)? / (3.0 * PI * PI))
}

/// `n(0, λ)`.
pub fn count_theta_zero(dg: &DeGennes, lambda: f64) -> Result<f64> {
    Ok(dg.moment_integral(lambda, Moment::Half)? / (2.0 * PI * PI))
}

/// A source of the two densities.
pub trait DensityModel: Sync {
    fn energy(&self, theta: f64, lambda: f64) -> Result<EnergyDensity>;
    fn count(&self, theta: f64, lambda: f64) -> Result<CountDensity>;
}

/// Densities from eigenvalues computed on demand (memoized per angle and
/// window).
#[derive(Debug, Clone, Copy)]
pub struct DirectDensity {
    /// Grid spacing of the half-plane solves.
    pub spacing: f64,
    /// Window used for the half-plane spectra; queries need `λ ≤ window`.
    pub window: f64,
    pub degennes: &'static DeGennes,
}

/// Spacing used by [`energy_density`] and [`count_density`].
pub const DEFAULT_DENSITY_SPACING: f64 = 0.1;

impl DirectDensity {
    pub fn new(spacing: f64, window: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing <= 0.5) {
            return Err(Error::invalid(format!("spacing must lie in (0, 0.5], got {spacing}")));
        }
        if !(window > 0.0 && window <= WINDOW_MAX) {
            return Err(Error::invalid(format!("window must lie in (0, {WINDOW_MAX}]")));
        }
        Ok(DirectDensity {
            spacing,
            window,
            degennes: DeGennes::shared(),
        })
    }

    pub fn shared() -> &'static DirectDensity {
        static SHARED: OnceLock<DirectDensity> = OnceLock::new();
        SHARED.get_or_init(|| {
            DirectDensity::new(DEFAULT_DENSITY_SPACING, WINDOW_MAX).expect("defaults are valid")
        })
    }

    fn spectrum(&self, theta: f64, lambda: f64) -> Result<std::sync::Arc<lupan::LuPanSpectrum>> {
        if lambda > self.window {
            return Err(Error::invalid(format!(
                "lambda = {lambda} exceeds the model window {}",
                self.window
            )));
        }
        let bx = HalfPlaneBox::for_theta(theta, self.spacing)?;
        lupan::zetas_cached(theta, self.window, &bx)
    }
}

impl DensityModel for DirectDensity {
    fn energy(&self, theta: f64, lambda: f64) -> Result<EnergyDensity> {
        check_args(theta, lambda)?;
        let branch = branch_of(theta);
        let value = match branch {
            Branch::ThetaZero => energy_theta_zero(self.degennes, lambda)?,
            Branch::ThetaPositive => {
                theta.sin() / (2.0 * PI) * self.spectrum(theta, lambda)?.deficit(lambda)
            }
        };
        Ok(EnergyDensity {
            theta,
            lambda,
            value,
            branch,
        })
    }

    fn count(&self, theta: f64, lambda: f64) -> Result<CountDensity> {
        check_args(theta, lambda)?;
        let branch = branch_of(theta);
        let value = match branch {
            Branch::ThetaZero => count_theta_zero(self.degennes, lambda)?,
            Branch::ThetaPositive => {
                theta.sin() / (2.0 * PI) * self.spectrum(theta, lambda)?.count(lambda) as f64
            }
        };
        Ok(CountDensity {
            theta,
            lambda,
            value,
            branch,
        })
    }
}

/// `E(θ, λ)` with the default direct model.
pub fn energy_density(theta: f64, lambda: f64) -> Result<EnergyDensity> {
    DirectDensity::shared().energy(theta, lambda)
}

/// `n(θ, λ)` with the default direct model.
pub fn count_density(theta: f64, lambda: f64) -> Result<CountDensity> {
    DirectDensity::shared().count(theta, lambda)
}

/// Precomputed `ζ_j(θ)` on an angle grid, interpolated linearly per branch.
///
/// Branches that lie above the window at a node are represented by the
/// window value there, so each branch fades in continuously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaTable {
    pub spacing: f64,
    pub window: f64,
    /// Ascending angles in degrees, all `≥ 3`.
    pub theta_deg: Vec<f64>,
    /// `zetas[k]` lists the eigenvalues below `window` at `theta_deg[k]`.
    pub zetas: Vec<Vec<f64>>,
}

impl ZetaTable {
    /// Computes the table (angles in parallel).
    pub fn compute(theta_deg: &[f64], window: f64, spacing: f64) -> Result<Self> {
        if theta_deg.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("angles must be strictly ascending"));
        }
        let zetas = theta_deg
            .par_iter()
            .map(|&d| {
                let th = d.to_radians();
                let bx = HalfPlaneBox::for_theta(th, spacing)?;
                Ok(lupan::zetas(th, window, &bx)?.zetas)
            })
            .collect::<Result<Vec<_>>>()?;
        let table = ZetaTable {
            spacing,
            window,
            theta_deg: theta_deg.to_vec(),
            zetas,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_deg.len() < 2 || self.theta_deg.len() != self.zetas.len() {
            return Err(Error::invalid("table needs at least two angles and one row per angle"));
        }
        if self.theta_deg.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("table angles must be strictly ascending"));
        }
        if self.theta_deg[0] > THETA_MIN.to_degrees() + 1e-9
            || *self.theta_deg.last().expect("nonempty") < 90.0 - 1e-9
        {
            return Err(Error::invalid("table must cover [3, 90] degrees"));
        }
        for row in &self.zetas {
            if row.windows(2).any(|w| w[0] > w[1]) || row.iter().any(|&z| !(z < self.window)) {
                return Err(Error::invalid("table rows must be ascending and below the window"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: ZetaTable = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("malformed zeta table: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// The shipped table: 1° steps over [3°, 90°], spacing 0.1, window 0.995.
    pub fn embedded() -> &'static ZetaTable {
        static TABLE: OnceLock<ZetaTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            ZetaTable::from_json(include_str!("../fixtures/zeta_table.json"))
                .expect("embedded zeta table is valid")
        })
    }

    /// Interpolated `ζ_j(θ)` below the window at angle `theta` (radians,
    /// clamped to the table range).
    pub fn zetas_at(&self, theta: f64) -> Vec<f64> {
        let deg = theta.to_degrees();
        let last = self.theta_deg.len() - 1;
        let k = self
            .theta_deg
            .partition_point(|&d| d <= deg)
            .clamp(1, last);
        let (d0, d1) = (self.theta_deg[k - 1], self.theta_deg[k]);
        let w = ((deg - d0) / (d1 - d0)).clamp(0.0, 1.0);
        let (r0, r1) = (&self.zetas[k - 1], &self.zetas[k]);
        let branches = r0.len().max(r1.len());
        (0..branches)
            .map(|j| {
                let a = r0.get(j).copied().unwrap_or(self.window);
                let b = r1.get(j).copied().unwrap_or(self.window);
                (1.0 - w) * a + w * b
            })
            .filter(|&z| z < self.window)
            .collect()
    }
}

/// Densities from a [`ZetaTable`] for `θ ≥ 3°` and the de Gennes moments
/// below.
#[derive(Debug, Clone)]
pub struct TabulatedDensity {
    pub table: ZetaTable,
    pub degennes: &'static DeGennes,
}

impl TabulatedDensity {
    pub fn new(table: ZetaTable) -> Result<Self> {
        table.validate()?;
        Ok(TabulatedDensity {
            table,
            degennes: DeGennes::shared(),
        })
    }

    /// Shared model backed by [`ZetaTable::embedded`].
    pub fn embedded() -> &'static TabulatedDensity {
        static MODEL: OnceLock<TabulatedDensity> = OnceLock::new();
        MODEL.get_or_init(|| {
            TabulatedDensity::new(ZetaTable::embedded().clone()).expect("valid table")
        })
    }

    fn check_window(&self, lambda: f64) -> Result<()> {
        if lambda > self.table.window {
            return Err(Error::invalid(format!(
                "lambda = {lambda} exceeds the table window {}",
                self.table.window
            )));
        }
        Ok(())
    }
}

impl DensityModel for TabulatedDensity {
    fn energy(&self, theta: f64, lambda: f64) -> Result<EnergyDensity> {
        check_args(theta, lambda)?;
        self.check_window(lambda)?;
        let branch = branch_of(theta);
        let value = match branch {
            Branch::ThetaZero => energy_theta_zero(self.degennes, lambda)?,
            Branch::ThetaPositive => {
                let z = self.table.zetas_at(theta);
                theta.sin() / (2.0 * PI) * crate::linalg::deficit_sum(lambda, &z)
            }
        };
        Ok(EnergyDensity {
            theta,
            lambda,
            value,
            branch,
        })
    }

    fn count(&self, theta: f64, lambda: f64) -> Result<CountDensity> {
        check_args(theta, lambda)?;
        self.check_window(lambda)?;
        let branch = branch_of(theta);
        let value = match branch {
            Branch::ThetaZero => count_theta_zero(self.degennes, lambda)?,
            Branch::ThetaPositive => {
                let z = self.table.zetas_at(theta);
                theta.sin() / (2.0 * PI) * z.iter().filter(|&&e| e < lambda).count() as f64
            }
        };
        Ok(CountDensity {
            theta,
            lambda,
            value,
            branch,
        })
    }
}

/// One row of [`theta_zero_limit_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub theta: f64,
    /// `(sinθ/2π) Σ (ζ_j(θ) − λ)_-`.
    pub positive: f64,
    /// `E(0, λ)`.
    pub zero: f64,
    /// `positive / zero`, or 1 when both vanish.
    pub ratio: f64,
}

/// Compares the `θ > 0` formula at small angles with `E(0, λ)`.
pub fn theta_zero_limit_scan(
    model: &dyn DensityModel,
    lambda: f64,
    thetas: &[f64],
) -> Result<Vec<ScanRow>> {
    let lo = THETA_MIN - 1e-12;
    let hi = 20f64.to_radians() + 1e-12;
    if thetas.iter().any(|&t| !(lo..=hi).contains(&t)) {
        return Err(Error::invalid("scan angles must lie in [3, 20] degrees"));
    }
    let zero = model.energy(0.0, lambda)?.value;
    thetas
        .iter()
        .map(|&theta| {
            let positive = model.energy(theta, lambda)?.value;
            let ratio = if zero == 0.0 && positive == 0.0 {
                1.0
            } else {
                positive / zero
            };
            Ok(ScanRow {
                theta,
                positive,
                zero,
                ratio,
            })
        })
        .collect()
}

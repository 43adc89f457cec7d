//! Boundary surfaces, the field angle `θ(x) = arcsin(|B·ν| / |B|)`, and the
//! boundary integrals `∫ |B|² E(θ, Λ/|B|) dσ` and `∫ |B| n(θ, Λ/|B|) dσ`.
//!
//! Surfaces are parametrized by polar angle `u ∈ (0, π)` and longitude
//! `v ∈ [0, 2π)`; the rule is composite Gauss–Legendre in `u` (panels of
//! [`POINTS_PER_PANEL`] nodes, so no node sits on a pole) times the
//! uniform rule in `v`, with the exact surface Jacobian.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{branch_of, Branch, DensityModel};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

pub const POINTS_PER_PANEL: usize = 8;
/// Resonance tolerance at the coarsest level; halved per refinement.
pub const RESONANCE_TOL: f64 = 1e-3;

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere { radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
}

/// `u_panels` Gauss panels (of [`POINTS_PER_PANEL`] nodes) in polar angle
/// and `v_points` uniform longitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub u_panels: usize,
    pub v_points: usize,
}

impl Resolution {
    pub fn doubled(self) -> Self {
        Resolution {
            u_panels: 2 * self.u_panels,
            v_points: 2 * self.v_points,
        }
    }
}

/// Quadrature nodes on a closed surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub kind: Option<SurfaceKind>,
    pub nodes: Vec<Vec3>,
    /// Unit interior normals.
    pub normals: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SurfaceMesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[must_use]
    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Builds the product rule for `kind`.
pub fn make_surface(kind: SurfaceKind, res: Resolution) -> Result<SurfaceMesh> {
    let (a, b, c) = match kind {
        SurfaceKind::Sphere { radius } => (radius, radius, radius),
        SurfaceKind::Ellipsoid { a, b, c } => (a, b, c),
    };
    if ![a, b, c].iter().all(|&r| r > 0.0 && r.is_finite()) {
        return Err(Error::BadParams(format!("radii must be positive, got ({a}, {b}, {c})")));
    }
    if res.u_panels == 0 || res.v_points < 3 {
        return Err(Error::BadParams(
            "need at least one polar panel and three longitudes".into(),
        ));
    }
    let panel = PI / res.u_panels as f64;
    let mut us = Vec::with_capacity(res.u_panels * POINTS_PER_PANEL);
    for p in 0..res.u_panels {
        let lo = p as f64 * panel;
        us.extend(gauss_legendre(POINTS_PER_PANEL, lo, lo + panel));
    }
    let dv = 2.0 * PI / res.v_points as f64;
    let n = us.len() * res.v_points;
    let mut mesh = SurfaceMesh {
        kind: Some(kind),
        nodes: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
    };
    for &(u, wu) in &us {
        let (su, cu) = u.sin_cos();
        for k in 0..res.v_points {
            let v = (k as f64 + 0.5) * dv;
            let (sv, cv) = v.sin_cos();
            let x = [a * su * cv, b * su * sv, c * cu];
            let g = [x[0] / (a * a), x[1] / (b * b), x[2] / (c * c)];
            let gn = norm(g);
            let jac = su
                * ((b * c * su * cv).powi(2) + (a * c * su * sv).powi(2) + (a * b * cu).powi(2))
                    .sqrt();
            mesh.nodes.push(x);
            mesh.normals.push([-g[0] / gn, -g[1] / gn, -g[2] / gn]);
            mesh.weights.push(wu * dv * jac);
        }
    }
    Ok(mesh)
}

/// A magnetic field evaluated at boundary nodes.
pub trait MagneticField: Sync {
    fn at(&self, x: Vec3) -> Vec3;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantField(pub Vec3);

impl MagneticField for ConstantField {
    fn at(&self, _x: Vec3) -> Vec3 {
        self.0
    }
}

impl<F: Fn(Vec3) -> Vec3 + Sync> MagneticField for F {
    fn at(&self, x: Vec3) -> Vec3 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub b: Vec3,
    pub magnitude: f64,
    pub theta: f64,
}

/// Field strength and angle at every node.
pub fn theta_field(mesh: &SurfaceMesh, field: &dyn MagneticField) -> Result<Vec<FieldSample>> {
    mesh.nodes
        .iter()
        .zip(&mesh.normals)
        .enumerate()
        .map(|(node, (&x, &nu))| {
            let b = field.at(x);
            let magnitude = norm(b);
            if !(magnitude > 0.0 && magnitude.is_finite()) {
                return Err(Error::ZeroField { node });
            }
            let theta = (dot(b, nu).abs() / magnitude).min(1.0).asin();
            Ok(FieldSample {
                b,
                magnitude,
                theta,
            })
        })
        .collect()
}

fn samples_below(
    mesh: &SurfaceMesh,
    field: &dyn MagneticField,
    big_lambda: f64,
) -> Result<Vec<FieldSample>> {
    if !(big_lambda >= 0.0 && big_lambda.is_finite()) {
        return Err(Error::invalid(format!("Lambda must be nonnegative, got {big_lambda}")));
    }
    let samples = theta_field(mesh, field)?;
    let b_min = samples.iter().map(|s| s.magnitude).fold(f64::INFINITY, f64::min);
    if big_lambda >= b_min {
        return Err(Error::LambdaTooLarge {
            lambda: big_lambda,
            b_min,
        });
    }
    Ok(samples)
}

fn integrate(
    mesh: &SurfaceMesh,
    samples: &[FieldSample],
    f: impl Fn(&FieldSample) -> Result<f64> + Sync + Send,
) -> Result<f64> {
    let vals = samples.par_iter().map(f).collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().zip(&mesh.weights).map(|(v, w)| v * w).sum())
}

/// `∫ |B|² E(θ(x), Λ/|B(x)|) dσ`.
pub fn predict_energy(
    mesh: &SurfaceMesh,
    field: &dyn MagneticField,
    big_lambda: f64,
    model: &dyn DensityModel,
) -> Result<f64> {
    let samples = samples_below(mesh, field, big_lambda)?;
    integrate(mesh, &samples, |s| {
        Ok(s.magnitude * s.magnitude * model.energy(s.theta, big_lambda / s.magnitude)?.value)
    })
}

/// `∫ |B| n(θ(x), Λ/|B(x)|) dσ`.
pub fn predict_count(
    mesh: &SurfaceMesh,
    field: &dyn MagneticField,
    big_lambda: f64,
    model: &dyn DensityModel,
) -> Result<f64> {
    let samples = samples_below(mesh, field, big_lambda)?;
    integrate(mesh, &samples, |s| {
        Ok(s.magnitude * model.count(s.theta, big_lambda / s.magnitude)?.value)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceLevel {
    pub nodes: usize,
    pub tol: f64,
    /// Surface measure of resonant nodes.
    pub measure: f64,
    /// `measure / area`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub levels: Vec<ResonanceLevel>,
    /// Set when the resonant fraction does not shrink under refinement, i.e.
    /// the resonant set looks like it has positive measure.
    pub flagged: bool,
}

/// Estimates the measure of `{x : Λ/|B(x)| ∈ spec L(θ(x))}` on a sequence
/// of refined meshes.
///
/// At level `k` a node counts as resonant when some `ζ_j(θ(x))` lies within
/// `RESONANCE_TOL · 2^{−k}` of `Λ/|B(x)|`; a resonant set of measure zero
/// (a curve) then loses at least half its estimated measure per level,
/// while a set of positive measure keeps it. The flag is raised when the
/// finest fraction exceeds half the coarsest. Nodes with `θ < 3°` use the
/// `θ = 0` integral formula, which has no discrete resonances.
pub fn resonance_check(
    meshes: &[SurfaceMesh],
    field: &dyn MagneticField,
    big_lambda: f64,
    zetas: &(dyn Fn(f64) -> Result<Vec<f64>> + Sync),
) -> Result<ResonanceReport> {
    if meshes.len() < 2 {
        return Err(Error::invalid("resonance check needs at least two meshes"));
    }
    let mut levels = Vec::with_capacity(meshes.len());
    for (k, mesh) in meshes.iter().enumerate() {
        let tol = RESONANCE_TOL / (1u64 << k) as f64;
        let samples = samples_below(mesh, field, big_lambda)?;
        let measure = integrate(mesh, &samples, |s| {
            if branch_of(s.theta) == Branch::ThetaZero {
                return Ok(0.0);
            }
            let lam = big_lambda / s.magnitude;
            let hit = zetas(s.theta)?.iter().any(|z| (z - lam).abs() < tol);
            Ok(if hit { 1.0 } else { 0.0 })
        })?;
        levels.push(ResonanceLevel {
            nodes: mesh.len(),
            tol,
            measure,
            fraction: measure / mesh.area(),
        });
    }
    let first = levels[0].fraction;
    let last = levels[levels.len() - 1].fraction;
    Ok(ResonanceReport {
        flagged: first > 0.0 && last > 0.5 * first,
        levels,
    })
}

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use surfspec_core::energy::{DensityModel, TabulatedDensity, ZetaTable};
use surfspec_core::geometry::{
    make_surface, predict_count, predict_energy, resonance_check, theta_field, ConstantField,
    Resolution, SurfaceKind, SurfaceMesh, Vec3,
};
use surfspec_core::Error;

const UNIT_Z: ConstantField = ConstantField([0.0, 0.0, 1.0]);

fn sphere(u_panels: usize, v_points: usize) -> SurfaceMesh {
    make_surface(SurfaceKind::Sphere { radius: 1.0 }, Resolution { u_panels, v_points }).unwrap()
}

fn model() -> &'static TabulatedDensity {
    TabulatedDensity::embedded()
}

/// Parametrization of the ellipsoid and its two tangent vectors.
fn ellipsoid_frame(a: f64, b: f64, c: f64, u: f64, v: f64) -> (Vec3, Vec3, Vec3) {
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    let x = [a * su * cv, b * su * sv, c * cu];
    let xu = [a * cu * cv, b * cu * sv, -c * su];
    let xv = [-a * su * sv, b * su * cv, 0.0];
    (x, xu, xv)
}

fn cross(p: Vec3, q: Vec3) -> Vec3 {
    [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ]
}

fn norm(p: Vec3) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Composite Simpson in `u`, trapezoid (spectral for periodic data) in `v`.
fn area_oracle(a: f64, b: f64, c: f64) -> f64 {
    let (nu, nv) = (4000, 400);
    let (hu, hv) = (PI / nu as f64, 2.0 * PI / nv as f64);
    let mut total = 0.0;
    for i in 0..=nu {
        let u = i as f64 * hu;
        let w = if i == 0 || i == nu {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let row: f64 = (0..nv)
            .map(|k| {
                let (_, xu, xv) = ellipsoid_frame(a, b, c, u, k as f64 * hv);
                norm(cross(xu, xv))
            })
            .sum();
        total += w * row * hv;
    }
    total * hu / 3.0
}

#[test]
fn sphere_areas() {
    assert!((sphere(16, 32).area() - 4.0 * PI).abs() < 1e-10);
    let r2 = make_surface(SurfaceKind::Sphere { radius: 2.0 }, Resolution { u_panels: 16, v_points: 32 })
        .unwrap();
    assert!((r2.area() - 16.0 * PI).abs() < 1e-9);
}

#[test]
fn prolate_area_matches_closed_form_and_oracle() {
    let (a, c) = (1.0f64, 2.0f64);
    let e = (1.0 - a * a / (c * c)).sqrt();
    let closed = 2.0 * PI * a * a * (1.0 + c / (a * e) * e.asin());
    let mesh = make_surface(
        SurfaceKind::Ellipsoid { a, b: a, c },
        Resolution { u_panels: 16, v_points: 32 },
    )
    .unwrap();
    assert!((mesh.area() - closed).abs() < 1e-9 * closed);
    assert!((area_oracle(a, a, c) - closed).abs() < 1e-9 * closed);
}

#[test]
fn triaxial_area_matches_oracle() {
    let mesh = make_surface(
        SurfaceKind::Ellipsoid { a: 1.0, b: 2.0, c: 3.0 },
        Resolution { u_panels: 16, v_points: 64 },
    )
    .unwrap();
    let want = area_oracle(1.0, 2.0, 3.0);
    assert!((mesh.area() - want).abs() < 1e-8 * want, "{} vs {want}", mesh.area());
}

#[test]
fn ellipsoid_normals_match_tangent_cross_product() {
    let (a, b, c) = (1.0, 2.0, 3.0);
    let res = Resolution { u_panels: 3, v_points: 7 };
    let mesh = make_surface(SurfaceKind::Ellipsoid { a, b, c }, res).unwrap();
    for (x, nu) in mesh.nodes.iter().zip(&mesh.normals) {
        // recover (u, v) from the node
        let u = (x[2] / c).clamp(-1.0, 1.0).acos();
        let v = (x[1] / b).atan2(x[0] / a);
        let (x2, xu, xv) = ellipsoid_frame(a, b, c, u, v);
        assert!(norm([x2[0] - x[0], x2[1] - x[1], x2[2] - x[2]]) < 1e-12);
        let n = cross(xu, xv);
        let l = norm(n);
        let mut n = [n[0] / l, n[1] / l, n[2] / l];
        // interior: pointing towards the centre
        if n[0] * x[0] + n[1] * x[1] + n[2] * x[2] > 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
        assert!(norm([n[0] - nu[0], n[1] - nu[1], n[2] - nu[2]]) < 1e-12);
    }
}

#[test]
fn sphere_field_angle() {
    let mesh = sphere(4, 8);
    let samples = theta_field(&mesh, &UNIT_Z).unwrap();
    for (x, s) in mesh.nodes.iter().zip(&samples) {
        // cos u = z on the unit sphere
        assert!((s.theta - x[2].abs().asin()).abs() < 1e-12);
        assert!((0.0..=FRAC_PI_2).contains(&s.theta));
        assert_eq!(s.magnitude, 1.0);
    }
    let zero = ConstantField([0.0; 3]);
    assert!(matches!(theta_field(&mesh, &zero), Err(Error::ZeroField { .. })));
}

/// Composite Gauss–Legendre on `[lo, hi]` split at `breaks`.
fn piecewise_gauss(f: impl Fn(f64) -> f64, mut breaks: Vec<f64>, sub: usize) -> f64 {
    // 8-point nodes/weights on [-1, 1]
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_0,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362_0,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let h = (w[1] - w[0]) / sub as f64;
        for k in 0..sub {
            let m = w[0] + (k as f64 + 0.5) * h;
            for (x, wt) in X.iter().zip(W) {
                total += wt * 0.5 * h * (f(m - 0.5 * h * x) + f(m + 0.5 * h * x));
            }
        }
    }
    total
}

/// Angles (radians) where the density is not smooth: the table nodes, the
/// branch switch and every crossing of an interpolated branch with `lambda`.
fn density_breaks(lambda: f64) -> Vec<f64> {
    let t = ZetaTable::embedded();
    let mut out = vec![0.0, FRAC_PI_2];
    out.extend(t.theta_deg.iter().map(|d| d.to_radians()));
    for k in 1..t.theta_deg.len() {
        let (d0, d1) = (t.theta_deg[k - 1], t.theta_deg[k]);
        let branches = t.zetas[k - 1].len().max(t.zetas[k].len());
        for j in 0..branches {
            let a = t.zetas[k - 1].get(j).copied().unwrap_or(t.window);
            let b = t.zetas[k].get(j).copied().unwrap_or(t.window);
            if (a - lambda) * (b - lambda) < 0.0 {
                out.push((d0 + (d1 - d0) * (lambda - a) / (b - a)).to_radians());
            }
        }
    }
    out
}

/// `2π ∫₀^π g(arcsin|cos u|) sin u du = 4π ∫₀^{π/2} g(θ) cos θ dθ`.
fn reduced_sphere_integral(g: impl Fn(f64) -> f64, lambda: f64) -> f64 {
    4.0 * PI * piecewise_gauss(|th| g(th) * th.cos(), density_breaks(lambda), 4)
}

#[test]
fn sphere_prediction_matches_reduced_quadrature() {
    let big_lambda = 0.8;
    let mesh = sphere(1440, 4);
    let got_e = predict_energy(&mesh, &UNIT_Z, big_lambda, model()).unwrap();
    let got_n = predict_count(&mesh, &UNIT_Z, big_lambda, model()).unwrap();
    let want_e =
        reduced_sphere_integral(|th| model().energy(th, big_lambda).unwrap().value, big_lambda);
    let want_n =
        reduced_sphere_integral(|th| model().count(th, big_lambda).unwrap().value, big_lambda);
    assert!(((got_e - want_e) / want_e).abs() < 1e-5, "{got_e} vs {want_e}");
    // the count density jumps where a branch crosses Λ; those angles are not
    // panel edges, so the surface rule is only first-order accurate there
    assert!(((got_n - want_n) / want_n).abs() < 1e-4, "{got_n} vs {want_n}");
}

#[test]
fn sphere_prediction_is_stable_under_refinement() {
    let coarse = predict_energy(&sphere(360, 8), &UNIT_Z, 0.8, model()).unwrap();
    let fine = predict_energy(&sphere(720, 16), &UNIT_Z, 0.8, model()).unwrap();
    assert!(((coarse - fine) / fine).abs() < 1e-5, "{coarse} vs {fine}");
}

#[test]
fn homogeneity_is_exact() {
    let mesh = sphere(64, 16);
    let base = predict_energy(&mesh, &UNIT_Z, 0.8, model()).unwrap();
    let doubled = predict_energy(&mesh, &ConstantField([0.0, 0.0, 2.0]), 1.6, model()).unwrap();
    assert_eq!(doubled, 4.0 * base);
    let tilted = ConstantField([0.3, -0.4, 1.2]);
    let scaled = ConstantField([0.9, -1.2, 3.6]);
    let e1 = predict_energy(&mesh, &tilted, 0.9, model()).unwrap();
    let e3 = predict_energy(&mesh, &scaled, 2.7, model()).unwrap();
    assert!((e3 - 9.0 * e1).abs() <= 1e-13 * e3.abs());
}

#[test]
fn predictions_vanish_below_theta0_and_guard_lambda() {
    let mesh = sphere(32, 16);
    assert_eq!(predict_energy(&mesh, &UNIT_Z, 0.5, model()).unwrap(), 0.0);
    assert_eq!(predict_count(&mesh, &UNIT_Z, 0.5, model()).unwrap(), 0.0);
    assert!(matches!(
        predict_energy(&mesh, &UNIT_Z, 1.0, model()),
        Err(Error::LambdaTooLarge { .. })
    ));
}

#[test]
fn varying_field_through_callback() {
    let mesh = sphere(32, 16);
    let field = |x: Vec3| [0.0, 0.0, 1.0 + 0.1 * x[0] * x[0]];
    let e = predict_energy(&mesh, &field, 0.8, model()).unwrap();
    let e0 = predict_energy(&mesh, &UNIT_Z, 0.8, model()).unwrap();
    // a stronger field lowers λ = Λ/|B| but multiplies by |B|²; stays close
    assert!(e > 0.0 && (e / e0 - 1.0).abs() < 0.5);
}

fn table_zetas(theta: f64) -> surfspec_core::Result<Vec<f64>> {
    Ok(ZetaTable::embedded().zetas_at(theta))
}

#[test]
fn sphere_resonances_shrink_under_refinement() {
    let meshes: Vec<SurfaceMesh> = [(45, 16), (90, 32), (180, 64)]
        .iter()
        .map(|&(u, v)| sphere(u, v))
        .collect();
    let report = resonance_check(&meshes, &UNIT_Z, 0.8, &table_zetas).unwrap();
    assert!(!report.flagged, "{report:?}");
    assert!(report.levels[0].fraction > 0.0);
    let quiet = resonance_check(&meshes, &UNIT_Z, 0.5, &table_zetas).unwrap();
    assert!(quiet.levels.iter().all(|l| l.fraction == 0.0));
    assert!(!quiet.flagged);
}

/// Flat square patch with a fixed normal: every node sees the same angle.
fn flat_patch(n: usize, normal: Vec3) -> SurfaceMesh {
    let h = 1.0 / n as f64;
    let mut m = SurfaceMesh {
        kind: None,
        nodes: Vec::new(),
        normals: Vec::new(),
        weights: Vec::new(),
    };
    for i in 0..n {
        for j in 0..n {
            m.nodes.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, 0.0]);
            m.normals.push(normal);
            m.weights.push(h * h);
        }
    }
    m
}

#[test]
fn constant_angle_patch_is_flagged() {
    let theta = 30f64.to_radians();
    // field at angle θ to the patch
    let field = ConstantField([theta.cos(), 0.0, theta.sin()]);
    let zeta1 = table_zetas(theta).unwrap()[0];
    let meshes: Vec<SurfaceMesh> = [4, 8, 16].iter().map(|&n| flat_patch(n, [0.0, 0.0, -1.0])).collect();
    let report = resonance_check(&meshes, &field, zeta1, &table_zetas).unwrap();
    assert!(report.flagged);
    assert!(report.levels.iter().all(|l| (l.fraction - 1.0).abs() < 1e-12));
}

#[test]
fn bad_parameters() {
    let res = Resolution { u_panels: 4, v_points: 8 };
    assert!(matches!(
        make_surface(SurfaceKind::Sphere { radius: -1.0 }, res),
        Err(Error::BadParams(_))
    ));
    assert!(matches!(
        make_surface(SurfaceKind::Ellipsoid { a: 1.0, b: 0.0, c: 1.0 }, res),
        Err(Error::BadParams(_))
    ));
    assert!(make_surface(SurfaceKind::Sphere { radius: 1.0 }, Resolution { u_panels: 0, v_points: 8 }).is_err());
    assert!(resonance_check(&[sphere(4, 8)], &UNIT_Z, 0.8, &table_zetas).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn normals_are_unit_and_weights_positive(
        a in 0.3f64..3.0, b in 0.3f64..3.0, c in 0.3f64..3.0,
        u_panels in 1usize..6, v_points in 3usize..12,
    ) {
        let mesh = make_surface(SurfaceKind::Ellipsoid { a, b, c }, Resolution { u_panels, v_points }).unwrap();
        prop_assert_eq!(mesh.len(), u_panels * 8 * v_points);
        for (x, nu) in mesh.nodes.iter().zip(&mesh.normals) {
            prop_assert!((norm(*nu) - 1.0).abs() < 1e-12);
            prop_assert!(nu[0] * x[0] + nu[1] * x[1] + nu[2] * x[2] < 0.0);
        }
        prop_assert!(mesh.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn homogeneity_in_scale(c in 0.5f64..4.0, lam in 0.55f64..0.95) {
        let mesh = sphere(8, 8);
        let base = predict_energy(&mesh, &UNIT_Z, lam, model()).unwrap();
        let scaled = predict_energy(&mesh, &ConstantField([0.0, 0.0, c]), c * lam, model()).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-12 * (c * c * base).abs().max(1e-300));
    }
}

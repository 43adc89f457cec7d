mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use proptest::prelude::*;
use surfspec_core::degennes::{self, HalfLineGrid};
use surfspec_core::halfcylinder::{
    assemble_dirichlet, convergence_study, dirichlet_energy, dirichlet_window, fiber_energy,
    fiber_spectrum, window_totals, CylinderSpec, FiberResult, RadialBc,
};
use surfspec_core::linalg::{band_inertia, eigs_below_band, kth_eigenvalue};
use surfspec_core::Error;

/// The Hermitian lattice operator with Peierls phases on the `r` links,
/// embedded as the real `2n × 2n` matrix `[[Re, −Im], [Im, Re]]`, whose
/// spectrum is the Hermitian one with every eigenvalue doubled.
fn hermitian_embedding(spec: &CylinderSpec) -> DMatrix<f64> {
    let n_r = spec.cells_s();
    let n_t = spec.cells_t();
    let d = spec.side / n_r as f64;
    let dt = spec.height / n_t as f64;
    let n = n_r * n_r * n_t;
    let idx = |ir: usize, is: usize, it: usize| ir + n_r * (is + n_r * it);
    let mut re = DMatrix::<f64>::zeros(n, n);
    let mut im = DMatrix::<f64>::zeros(n, n);
    for it in 0..n_t {
        let t = (it as f64 + 0.5) * dt;
        for is in 0..n_r {
            let s = -spec.side / 2.0 + (is as f64 + 0.5) * d;
            // conjugate convention to the solver's: same spectrum
            let angle = -(t * spec.theta.cos() - s * spec.theta.sin()) * d;
            for ir in 0..n_r {
                let k = idx(ir, is, it);
                let t_diag = if it == 0 { 1.0 } else { 2.0 };
                re[(k, k)] = 4.0 / (d * d) + t_diag / (dt * dt);
                if ir + 1 < n_r {
                    let j = idx(ir + 1, is, it);
                    re[(k, j)] = -angle.cos() / (d * d);
                    im[(k, j)] = -angle.sin() / (d * d);
                    re[(j, k)] = re[(k, j)];
                    im[(j, k)] = -im[(k, j)];
                }
                if is + 1 < n_r {
                    let j = idx(ir, is + 1, it);
                    re[(k, j)] = -1.0 / (d * d);
                    re[(j, k)] = -1.0 / (d * d);
                }
                if it + 1 < n_t {
                    let j = idx(ir, is, it + 1);
                    re[(k, j)] = -1.0 / (dt * dt);
                    re[(j, k)] = -1.0 / (dt * dt);
                }
            }
        }
    }
    let mut big = DMatrix::<f64>::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(&re);
    big.view_mut((n, n), (n, n)).copy_from(&re);
    big.view_mut((0, n), (n, n)).copy_from(&(-&im));
    big.view_mut((n, 0), (n, n)).copy_from(&im);
    big
}

fn small_dirichlet(theta: f64, side: f64) -> CylinderSpec {
    CylinderSpec {
        theta,
        lambda: 0.9,
        side,
        height: 1.0,
        ds: 0.2,
        dt: 0.2,
        bc_r: RadialBc::Dirichlet,
    }
}

#[test]
fn dirichlet_real_form_matches_hermitian_oracle() {
    for (theta, side) in [(0.7, 1.2), (0.0, 1.0), (FRAC_PI_2, 1.2)] {
        let spec = small_dirichlet(theta, side);
        let a = assemble_dirichlet(&spec).unwrap();
        let got = common::dense_eigenvalues(common::band_dense(&a));
        let doubled = common::dense_eigenvalues(hermitian_embedding(&spec));
        let want: Vec<f64> = doubled.iter().step_by(2).copied().collect();
        assert_eq!(got.len(), want.len());
        assert!(common::max_rel_err(&got, &want) < 1e-10, "theta = {theta}");
        // the solver on the real form reproduces the dense spectrum
        // a level strictly between two distinct eigenvalues
        let k = want.len() / 3;
        let k = (k..want.len() - 1).find(|&i| want[i + 1] - want[i] > 1e-6).unwrap();
        let top = 0.5 * (want[k] + want[k + 1]);
        let w = eigs_below_band(&a, top, 1e-11).unwrap();
        let below: Vec<f64> = want.iter().copied().filter(|&e| e < top).collect();
        assert!(common::max_rel_err(&w.eigenvalues, &below) < 1e-9);
    }
}

fn lowest_eigenvalue(spec: &CylinderSpec) -> f64 {
    let a = assemble_dirichlet(spec).unwrap();
    let (mut lo, mut hi) = (0.0, 197.31);
    assert_eq!(band_inertia(&a, lo).unwrap(), 0);
    assert!(band_inertia(&a, hi).unwrap() > 0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if band_inertia(&a, mid).unwrap() > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn dirichlet_ground_state_decreases_with_side() {
    // the smaller box is a principal submatrix of the larger one
    let theta = 45f64.to_radians();
    let e_small = lowest_eigenvalue(&CylinderSpec { height: 4.0, ..small_dirichlet(theta, 1.2) });
    let e_large = lowest_eigenvalue(&CylinderSpec { height: 4.0, ..small_dirichlet(theta, 2.4) });
    assert!(e_large < e_small, "{e_large} vs {e_small}");
}

#[test]
fn dirichlet_windows_at_small_sides() {
    let theta = 45f64.to_radians();
    let e2 = dirichlet_energy(&CylinderSpec::dirichlet(theta, 0.85, 2.0).unwrap()).unwrap();
    let e4 = dirichlet_energy(&CylinderSpec::dirichlet(theta, 0.85, 4.0).unwrap()).unwrap();
    // the walls push every level above the window at these sizes
    assert_eq!((e2, e4), (0.0, 0.0));
    let big = CylinderSpec::dirichlet(theta, 0.85, 6.5).unwrap();
    assert!(matches!(dirichlet_window(&big), Err(Error::ProblemTooLarge(_))));
    let fine = CylinderSpec { ds: 0.1, ..CylinderSpec::dirichlet(theta, 0.85, 2.0).unwrap() };
    assert!(matches!(dirichlet_window(&fine), Err(Error::ProblemTooLarge(_))));
}

#[test]
fn tangent_field_fibers_are_shifted_half_line_levels() {
    let spec = CylinderSpec::periodic(0.0, 0.8, 40.0).unwrap();
    let fibers = fiber_spectrum(&spec).unwrap();
    let grid = HalfLineGrid::new(spec.height, spec.cells_t()).unwrap();
    let mut nonempty = 0;
    for f in &fibers {
        let h = degennes::assemble_h_xi(-f.xi_k, &grid);
        let mu = kth_eigenvalue(&h, 0, 1e-12).unwrap();
        if mu < spec.lambda {
            nonempty += 1;
            // q = 0 carries no s-energy
            assert!((f.window.eigenvalues[0] - mu).abs() < 1e-9, "xi = {}", f.xi_k);
        } else {
            assert!(f.window.is_empty());
        }
    }
    assert!(nonempty >= 3);
}

#[test]
fn normal_field_has_empty_window() {
    let spec = CylinderSpec::periodic(FRAC_PI_2, 0.9, 10.0).unwrap();
    assert_eq!(fiber_energy(&spec).unwrap(), 0.0);
}

#[test]
fn fibers_cover_the_support_with_empty_margins() {
    let spec = CylinderSpec::periodic(20f64.to_radians(), 0.9, 10.0).unwrap();
    let fibers = fiber_spectrum(&spec).unwrap();
    assert!(fibers.first().unwrap().window.is_empty());
    assert!(fibers.last().unwrap().window.is_empty());
    let step = 2.0 * PI / spec.side;
    assert!(fibers.windows(2).all(|w| (w[1].xi_k - w[0].xi_k - step).abs() < 1e-12));
}

#[test]
fn convergence_study_shape() {
    let base = CylinderSpec::periodic(0.0, 0.9, 10.0).unwrap();
    assert!(convergence_study(&base, &[20.0, 10.0]).is_err());
    let study = convergence_study(&base, &[10.0, 20.0]).unwrap();
    assert_eq!(study.rows.len(), 2);
    for r in &study.rows {
        assert!((r.gap - (study.limit - r.energy_per_area)).abs() < 1e-15);
    }
}

fn shared_fibers() -> &'static (CylinderSpec, Vec<FiberResult>) {
    static F: OnceLock<(CylinderSpec, Vec<FiberResult>)> = OnceLock::new();
    F.get_or_init(|| {
        let spec = CylinderSpec::periodic(15f64.to_radians(), 0.9, 10.0).unwrap();
        let f = fiber_spectrum(&spec).unwrap();
        (spec, f)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_controls_energy(a in 0.5f64..0.9, b in 0.5f64..0.9) {
        let (_, fibers) = shared_fibers();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (n_lo, e_lo) = window_totals(fibers, lo);
        let (n_hi, e_hi) = window_totals(fibers, hi);
        prop_assert!(n_lo <= n_hi);
        prop_assert!(e_lo <= e_hi + 1e-15);
        prop_assert!(e_hi - e_lo <= n_hi as f64 * (hi - lo) + 1e-12);
        let e_min = fibers
            .iter()
            .filter_map(|f| f.window.eigenvalues.first().copied())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(e_hi <= n_hi as f64 * (hi - e_min).max(0.0) + 1e-12);
    }
}

//! Independent de Gennes oracle: RK4 shooting for `−u'' + (t−ξ)²u = μu`
//! from the decaying tail back to `t = 0`, with `μ` chosen so that
//! `u'(0) = 0`.

/// `u'(0)` of the solution that decays at infinity, normalized at the far
/// end.
pub fn neumann_mismatch(xi: f64, mu: f64) -> f64 {
    let t_end = xi.max(0.0) + 9.0;
    let steps = ((t_end / 1e-3).ceil() as usize).max(1000);
    let h = -t_end / steps as f64;
    let g = |t: f64| (t - xi) * (t - xi) - mu;
    let mut t = t_end;
    let mut u = 1e-30;
    let mut v = -g(t_end).max(0.0).sqrt() * u;
    for _ in 0..steps {
        let k1u = v;
        let k1v = g(t) * u;
        let k2u = v + 0.5 * h * k1v;
        let k2v = g(t + 0.5 * h) * (u + 0.5 * h * k1u);
        let k3u = v + 0.5 * h * k2v;
        let k3v = g(t + 0.5 * h) * (u + 0.5 * h * k2u);
        let k4u = v + h * k3v;
        let k4v = g(t + h) * (u + h * k3u);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t += h;
        let scale = u.abs().max(v.abs());
        if scale > 1e100 {
            u /= scale;
            v /= scale;
        }
    }
    v / u.abs().max(v.abs())
}

/// Root of the mismatch in `[lo, hi]` (which must bracket exactly one
/// eigenvalue).
pub fn shoot(xi: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let fa = neumann_mismatch(xi, a);
    assert!(fa * neumann_mismatch(xi, b) < 0.0, "bracket [{lo}, {hi}] has no sign change at xi={xi}");
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if neumann_mismatch(xi, m) * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `μ_j(ξ)`: scans upward from the potential minimum for the `j`-th sign
/// change of the mismatch, then bisects.
pub fn mu_j(xi: f64, j: usize) -> f64 {
    let step = 0.01;
    let mut lo = (-xi).max(0.0).powi(2);
    let mut f_lo = neumann_mismatch(xi, lo);
    let mut found = 0;
    loop {
        let hi = lo + step;
        let f_hi = neumann_mismatch(xi, hi);
        if f_lo * f_hi < 0.0 {
            found += 1;
            if found == j {
                return shoot(xi, lo, hi);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
}

pub fn mu1(xi: f64) -> f64 {
    mu_j(xi, 1)
}

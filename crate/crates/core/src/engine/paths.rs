//! Single Brownian paths and the count-only Yule sampler.

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Point};
use crate::kernels::{add_gaussian_step, bridge_max_from_uniform, RngStream};

fn check_horizon(t: f64, step: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::param("step", format!("must be positive, got {step}")));
    }
    Ok(())
}

/// Visits the vertices of a Brownian path from the origin on the grid
/// `k * step` (the last step may be shorter), calling `f(r_old, r_new, dt)`
/// with the radial endpoints; stops early when `f` returns `false`.
fn walk(stream: &mut RngStream, dim: usize, t: f64, step: f64, mut f: impl FnMut(&mut RngStream, f64, f64, f64) -> bool) {
    let mut x = Point::origin(dim);
    let mut s = 0.0;
    let mut k = 0u64;
    while s < t {
        k += 1;
        let next = (k as f64 * step).min(t);
        let dt = next - s;
        let r_old = x.norm();
        add_gaussian_step(stream, dt.sqrt(), &mut x);
        if !f(stream, r_old, x.norm(), dt) {
            return;
        }
        s = next;
    }
}

/// Bridge-corrected `sup_{s <= t} |X_s|` of a Brownian motion from the origin.
pub fn sample_sup_norm(stream: &mut RngStream, dim: usize, t: f64, step: f64) -> Result<f64> {
    check_dim(dim)?;
    check_horizon(t, step)?;
    let mut sup: f64 = 0.0;
    walk(stream, dim, t, step, |s, a, b, dt| {
        sup = sup.max(bridge_max_from_uniform(a, b, dt, s.uniform_open0()));
        true
    });
    Ok(sup)
}

/// Whether a Brownian path from the origin stays in the open ball of the
/// given radius up to time `t`, with bridge-corrected monitoring.
pub fn sample_confinement(stream: &mut RngStream, dim: usize, radius: f64, t: f64, step: f64) -> Result<bool> {
    check_dim(dim)?;
    check_horizon(t, step)?;
    if !(radius > 0.0) {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    let mut inside = true;
    walk(stream, dim, t, step, |s, a, b, dt| {
        inside = bridge_max_from_uniform(a, b, dt, s.uniform_open0()) < radius;
        inside
    });
    Ok(inside)
}

/// Brownian path from the origin as `(time, position)` vertices, starting
/// with `(0, origin)`.
pub fn sample_bm_path(stream: &mut RngStream, dim: usize, t: f64, step: f64) -> Result<Vec<(f64, Point)>> {
    check_dim(dim)?;
    check_horizon(t, step)?;
    let n = (t / step).ceil() as usize;
    let mut path = Vec::with_capacity(n + 1);
    let mut x = Point::origin(dim);
    path.push((0.0, x));
    let mut s = 0.0;
    for k in 1..=n {
        let next = (k as f64 * step).min(t);
        add_gaussian_step(stream, (next - s).sqrt(), &mut x);
        path.push((next, x));
        s = next;
    }
    Ok(path)
}

/// Total mass `N_t` of a dyadic branching process of rate `beta`, sampled
/// from its geometric law by inversion without simulating particles.
pub fn sample_yule_count(stream: &mut RngStream, beta: f64, t: f64) -> Result<u64> {
    if !(beta > 0.0) || !(t >= 0.0) {
        return Err(Error::param("beta", "rate must be positive and time non-negative"));
    }
    let p = (-beta * t).exp();
    let u = stream.uniform_open0();
    if p >= 1.0 || u >= 1.0 {
        return Ok(1);
    }
    let extra = (u.ln() / (-p).ln_1p()).floor();
    Ok(if extra >= u64::MAX as f64 { u64::MAX } else { 1 + extra as u64 })
}

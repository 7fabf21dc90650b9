//! Minimal surfaces of revolution ("catenoids") spanning two coaxial
//! boundary circles, by shooting on the neck height.
//!
//! A profile with tangent `(cos α, sin α)` in the `(x, r)` half-plane is
//! minimal exactly when `α' = cos α / r + 2 sin α / x`.  Starting at the top of
//! the neck `(x, r, α) = (λ, 1, ±π/2)` and integrating both ways down to
//! `x = 0` gives two boundary radii; their ratio depends only on `λ`, and the
//! solution for `(r₁, r₂)` is the rescaling of the profile whose ratio equals
//! `r₂/r₁`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::fd_weights;
use crate::surface::{ProfileSample, RevolutionSurface};
use crate::Error;

/// Integration and shooting parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RevolutionOptions {
    /// Output sample spacing of the resampled surface.
    pub h: f64,
    /// Largest RK4 arclength step (relative to the neck radius 1).
    pub ds: f64,
    /// Steps are also capped at `step_fraction · x` near the boundary.
    pub step_fraction: f64,
    /// Integration stops at `x ≤ x_stop` (relative to the neck radius).
    pub x_stop: f64,
    /// Log-spaced sweep of the neck height `λ` over `[lambda_min, lambda_max]`.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub sweep_points: usize,
}

impl Default for RevolutionOptions {
    fn default() -> Self {
        Self {
            h: 1.0 / 64.0,
            ds: 2.5e-4,
            step_fraction: 0.05,
            x_stop: 1e-9,
            lambda_min: 0.01,
            lambda_max: 100.0,
            sweep_points: 161,
        }
    }
}

/// Outcome of [`minimal_revolution`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RevolutionSolution {
    /// The resampled surface, `None` when no profile spans the two circles.
    pub surface: Option<RevolutionSurface>,
    /// Dense profile at the integration steps (scaled to the requested radii).
    pub table: Vec<ProfileSample>,
    /// Neck height `λ` of the unit-neck profile.
    pub neck: Option<f64>,
    /// Sweep `(λ, r_outer/r_inner)`; NaN where a branch failed to reach `x = 0`.
    pub sweep: Vec<(f64, f64)>,
}

/// Minimal surface of revolution about the vertical axis through the origin
/// bounded by circles of radii `r1 ≤ r2` on `x = 0`.  For `r1 = r2` this is
/// the hemisphere.  Returns `surface: None` when the sweep finds no sign change.
pub fn minimal_revolution(r1: f64, r2: f64, opts: &RevolutionOptions) -> Result<RevolutionSolution, Error> {
    if !(r1 > 0.0) || !(r2 >= r1) || !r2.is_finite() {
        return Err(Error::InvalidInput(format!("need 0 < r1 <= r2, got ({r1}, {r2})")));
    }
    if !(opts.h > 0.0) || !(opts.ds > 0.0) {
        return Err(Error::InvalidInput("spacings must be positive".into()));
    }
    let origin = Complex64::new(0.0, 0.0);
    if r1 == r2 {
        let surface = RevolutionSurface::hemisphere(origin, r1, opts.h)?;
        let table = hemisphere_table(r1, opts.ds * r1);
        return Ok(RevolutionSolution { surface: Some(surface), table, neck: None, sweep: Vec::new() });
    }
    let target = r2 / r1;
    let coarse = RevolutionOptions { ds: 8.0 * opts.ds, ..*opts };
    let f = |lam: f64| neck_ratio(lam, opts).map_or(f64::NAN, |r| r - target);
    let fc = |lam: f64| neck_ratio(lam, &coarse).map_or(f64::NAN, |r| r - target);
    let n = opts.sweep_points.max(2);
    let (l0, l1) = (opts.lambda_min.ln(), opts.lambda_max.ln());
    let mut sweep = Vec::with_capacity(n);
    let mut bracket = None;
    for i in 0..n {
        let lam = (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp();
        let v = fc(lam);
        sweep.push((lam, v + target));
        if bracket.is_none() && i > 0 {
            let (pl, pv) = sweep[i - 1];
            let pv = pv - target;
            if pv.is_finite() && v.is_finite() && (pv < 0.0) != (v < 0.0) {
                bracket = Some((pl, pv, lam));
            }
        }
    }
    let Some((mut a, _, mut b)) = bracket else {
        return Ok(RevolutionSolution { surface: None, table: Vec::new(), neck: None, sweep });
    };
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= 4.0 * f64::EPSILON * b {
            break;
        }
    }
    let lam = 0.5 * (a + b);
    let (outer, inner) = (branch(lam, FRAC_PI_2, opts), branch(lam, -FRAC_PI_2, opts));
    let (Some(outer), Some(inner)) = (outer, inner) else {
        return Ok(RevolutionSolution { surface: None, table: Vec::new(), neck: None, sweep });
    };
    let scale = r1 / inner.last().map_or(1.0, |p| p.r);
    let table = join_branches(&inner, &outer, scale);
    let surface = RevolutionSurface::from_table(origin, &table, opts.h)?;
    Ok(RevolutionSolution { surface: Some(surface), table, neck: Some(lam), sweep })
}

/// `r_outer / r_inner` for the unit neck at height `λ`.
pub fn neck_ratio(lambda: f64, opts: &RevolutionOptions) -> Option<f64> {
    let outer = branch(lambda, FRAC_PI_2, opts)?;
    let inner = branch(lambda, -FRAC_PI_2, opts)?;
    Some(outer.last()?.r / inner.last()?.r)
}

fn rhs(y: [f64; 3]) -> [f64; 3] {
    let [x, r, a] = y;
    [a.cos(), a.sin(), a.cos() / r + 2.0 * a.sin() / x]
}

/// RK4 from the neck top with initial angle `alpha0` until `x ≤ x_stop`;
/// `None` if the branch hits the axis or runs away.  The last sample is
/// placed on `x = 0`.  `kappa` is filled by finite differences of `α`.
fn branch(lambda: f64, alpha0: f64, opts: &RevolutionOptions) -> Option<Vec<ProfileSample>> {
    let size = lambda.max(1.0);
    let s_max = 50.0 * size;
    let (ds_max, x_stop) = (opts.ds * size, opts.x_stop * size);
    let mut y = [lambda, 1.0, alpha0];
    let mut s = 0.0;
    let mut out = vec![ProfileSample { s, x: y[0], r: y[1], alpha: y[2], kappa: 0.0 }];
    while y[0] > x_stop {
        let ds = ds_max.min(opts.step_fraction * y[0]);
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, 0.5 * ds));
        let k3 = rhs(add(y, k2, 0.5 * ds));
        let k4 = rhs(add(y, k3, ds));
        for i in 0..3 {
            y[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s += ds;
        if !(y[1] > 0.0) || s > s_max || !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        // The profile must head back down once it has turned.
        if y[0] > 4.0 * lambda.max(1.0) {
            return None;
        }
        out.push(ProfileSample { s, x: y[0], r: y[1], alpha: y[2], kappa: 0.0 });
    }
    let last = *out.last()?;
    // Close the remaining gap x_stop → 0 along the (vertical) tangent.
    let c = last.alpha.cos();
    if c.abs() < 0.5 {
        return None;
    }
    let gap = last.x / c.abs();
    out.push(ProfileSample {
        s: last.s + gap,
        x: 0.0,
        r: last.r + gap * last.alpha.sin(),
        alpha: last.alpha,
        kappa: 0.0,
    });
    fill_kappa(&mut out);
    Some(out)
}

fn add(y: [f64; 3], k: [f64; 3], h: f64) -> [f64; 3] {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]]
}

/// `κ = dα/ds` from 5-point finite differences on the (nonuniform) table,
/// independent of the ODE right-hand side.
pub fn fill_kappa(t: &mut [ProfileSample]) {
    let n = t.len();
    if n < 5 {
        for i in 0..n {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            t[i].kappa = if b > a { (t[b].alpha - t[a].alpha) / (t[b].s - t[a].s) } else { 0.0 };
        }
        return;
    }
    let s: Vec<f64> = t.iter().map(|p| p.s).collect();
    let a: Vec<f64> = t.iter().map(|p| p.alpha).collect();
    for i in 0..n {
        let lo = i.saturating_sub(2).min(n - 5);
        let w = fd_weights(s[i], &s[lo..lo + 5], 1);
        t[i].kappa = w.iter().zip(&a[lo..lo + 5]).map(|(w, a)| w * a).sum();
    }
}

/// Concatenates the reversed inner branch (boundary → neck) and the outer
/// branch (neck → boundary), scaled by `scale`.  Reversing the direction of
/// travel maps `α ↦ α + π` and `κ ↦ −κ`.
fn join_branches(inner: &[ProfileSample], outer: &[ProfileSample], scale: f64) -> Vec<ProfileSample> {
    let total = inner.last().map_or(0.0, |p| p.s);
    let mut out: Vec<ProfileSample> = inner
        .iter()
        .rev()
        .map(|p| ProfileSample { s: total - p.s, x: p.x, r: p.r, alpha: p.alpha + PI, kappa: -p.kappa })
        .collect();
    out.extend(outer.iter().skip(1).map(|p| ProfileSample { s: total + p.s, ..*p }));
    for p in &mut out {
        p.s *= scale;
        p.x *= scale;
        p.r *= scale;
        p.kappa /= scale;
    }
    out
}

fn hemisphere_table(radius: f64, ds: f64) -> Vec<ProfileSample> {
    let len = 0.5 * PI * radius;
    let n = ((len / ds).ceil() as usize).max(2);
    (0..=n)
        .map(|i| {
            let s = len * i as f64 / n as f64;
            let t = s / radius;
            let (x, r) = if i == n { (radius, 0.0) } else { (radius * t.sin(), radius * t.cos()) };
            ProfileSample { s, x, r, alpha: -t, kappa: -1.0 / radius }
        })
        .collect()
}

/// `∫|Å̄|² dμ̄ = 2π ∫ ½(k₁ − k₂)² r ds` along a profile table (trapezoid rule);
/// for a minimal profile this is its Willmore energy `∫|A|² dμ`.
pub fn profile_energy(table: &[ProfileSample]) -> f64 {
    let dens = |p: &ProfileSample| {
        let (k1, k2) = p.principal_curvatures();
        0.5 * (k1 - k2).powi(2) * 2.0 * PI * p.r
    };
    table.windows(2).map(|w| 0.5 * (dens(&w[0]) + dens(&w[1])) * (w[1].s - w[0].s)).sum()
}

/// `|⟨∂_x, ν̄⟩| = |sin α|` at the last `rows` samples before each end of a
/// profile (ordered towards the boundary), excluding the boundary samples.
pub fn profile_verticality(profile: &[ProfileSample], rows: usize) -> (Vec<f64>, Vec<f64>) {
    let n = profile.len();
    let k = rows.min(n.saturating_sub(2) / 2);
    let start: Vec<f64> = (1..=k).rev().map(|i| profile[i].alpha.sin().abs()).collect();
    let end: Vec<f64> = (n - 1 - k..n - 1).map(|i| profile[i].alpha.sin().abs()).collect();
    (start, end)
}

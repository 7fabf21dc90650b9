//! Browser bindings for three small hypw operations.  Results cross the
//! boundary as JSON strings so the page needs no generated type glue.

// `!(x > 0.0)` rejects NaN inputs along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use hypw::curves::{lip_rad_global, BoundaryCurve};
use hypw::functionals::{renormalized_area, willmore_energy};
use hypw::hyp3::{hyp_distance, HyperbolicIsometry, Point3};
use hypw::surface::RevolutionSurface;
use num_complex::Complex64;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn point(a: &[f64]) -> Result<Point3, String> {
    match a {
        [x, y, z] if *x > 0.0 => Ok(Point3::new(*x, *y, *z)),
        [_, _, _] => Err("points need height x > 0".into()),
        _ => Err(format!("a point has 3 coordinates, got {}", a.len())),
    }
}

/// Hyperbolic distance of `p` and `q` (each `[x, y, z]`), and of their images
/// under `dilation ∘ rotation ∘ translation`.
pub fn distance_report(p: &[f64], q: &[f64], dilation: f64, rotation: f64, shift: [f64; 2]) -> Result<String, String> {
    let (p, q) = (point(p)?, point(q)?);
    if !(dilation > 0.0) {
        return Err("dilation must be positive".into());
    }
    let iso = HyperbolicIsometry::dilation(dilation)
        .compose(&HyperbolicIsometry::rotation(rotation))
        .compose(&HyperbolicIsometry::translation(Complex64::new(shift[0], shift[1])));
    let (pi, qi) = (iso.apply_interior(&p), iso.apply_interior(&q));
    let d = hyp_distance(&p, &q).map_err(|e| e.to_string())?;
    let di = hyp_distance(&pi, &qi).map_err(|e| e.to_string())?;
    Ok(json!({ "distance": d, "image_distance": di, "p_image": pi.to_array(), "q_image": qi.to_array() }).to_string())
}

/// Willmore energy and renormalized-area fit of a hemisphere of `radius`
/// sampled at spacing `h`.
pub fn hemisphere_report(radius: f64, h: f64) -> Result<String, String> {
    if !(radius > 0.0 && h > 0.0 && h <= radius / 4.0 && radius / h <= 256.0) {
        return Err("need radius > 0 and radius/256 ≤ h ≤ radius/4".into());
    }
    let m = RevolutionSurface::hemisphere(Complex64::new(0.0, 0.0), radius, h)
        .and_then(|s| s.to_mesh())
        .map_err(|e| e.to_string())?;
    let energy = willmore_energy(&m).map_err(|e| e.to_string())?;
    let fit = renormalized_area(&m, &[0.1 * radius, 0.05 * radius, 0.02 * radius, 0.01 * radius])
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "vertices": m.n_vertices(),
        "energy": energy,
        "L": fit.l_coeff,
        "RenA": fit.rena,
        "samples": fit.samples,
    })
    .to_string())
}

/// Lipschitz radius of the ellipse with semi-axes `a`, `b` sampled at `n`
/// points, with the curve for drawing.
pub fn ellipse_report(a: f64, b: f64, zeta: f64, n: usize) -> Result<String, String> {
    if !(a > 0.0 && b > 0.0) || !(16..=8192).contains(&n) {
        return Err("need positive semi-axes and 16 ≤ n ≤ 8192".into());
    }
    let c = BoundaryCurve::from_fn(n, |t| {
        let s = 2.0 * std::f64::consts::PI * t;
        [a * s.cos(), b * s.sin()]
    });
    let r = lip_rad_global(&c, zeta).map_err(|e| e.to_string())?;
    Ok(json!({
        "global": r.global,
        "argmin": c.point(r.argmin),
        "values": r.values,
        "curve": c.components[0],
    })
    .to_string())
}

#[wasm_bindgen(js_name = distanceReport)]
pub fn distance_report_js(
    p: Vec<f64>,
    q: Vec<f64>,
    dilation: f64,
    rotation: f64,
    shift_y: f64,
    shift_z: f64,
) -> Result<String, JsError> {
    distance_report(&p, &q, dilation, rotation, [shift_y, shift_z]).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = hemisphereReport)]
pub fn hemisphere_report_js(radius: f64, h: f64) -> Result<String, JsError> {
    hemisphere_report(radius, h).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = ellipseReport)]
pub fn ellipse_report_js(a: f64, b: f64, zeta: f64, n: usize) -> Result<String, JsError> {
    ellipse_report(a, b, zeta, n).map_err(|e| JsError::new(&e))
}

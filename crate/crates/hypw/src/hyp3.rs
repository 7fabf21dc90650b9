//! Upper half-space model of hyperbolic 3-space.
//!
//! Points are written `(x, y, z)` with `x ≥ 0` the height above the boundary
//! plane.  The boundary plane is identified with the complex numbers through
//! `w = y + i z`, so that every isometry is a fractional-linear map of the
//! boundary (optionally preceded by the reflection `w ↦ w̄`) together with its
//! Poincaré extension to the interior.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::Error;

/// A point of the closed upper half-space; `x = 0` marks the boundary at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Interior point above the boundary coordinate `w` at height `x`.
    pub fn above(w: Complex64, x: f64) -> Self {
        Self { x, y: w.re, z: w.im }
    }

    /// Boundary coordinate `y + i z` of the vertical projection.
    pub fn w(&self) -> Complex64 {
        Complex64::new(self.y, self.z)
    }

    pub fn is_boundary(&self) -> bool {
        self.x == 0.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }

    pub fn euclidean_distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// A point of the boundary sphere `C ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Finite(Complex64),
    Infinity,
}

impl BoundaryPoint {
    pub fn finite(y: f64, z: f64) -> Self {
        BoundaryPoint::Finite(Complex64::new(y, z))
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            BoundaryPoint::Finite(w) => Some(*w),
            BoundaryPoint::Infinity => None,
        }
    }

    fn conj(self) -> Self {
        match self {
            BoundaryPoint::Finite(w) => BoundaryPoint::Finite(w.conj()),
            BoundaryPoint::Infinity => BoundaryPoint::Infinity,
        }
    }

    fn approx_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        match (self, other) {
            (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => true,
            (BoundaryPoint::Finite(a), BoundaryPoint::Finite(b)) => (a - b).norm() <= tol,
            _ => false,
        }
    }
}

/// Hyperbolic distance between two interior points,
/// `cosh d = 1 + |P − Q|² / (2 x_P x_Q)`.
pub fn hyp_distance(p: &Point3, q: &Point3) -> Result<f64, Error> {
    if !(p.x > 0.0 && q.x > 0.0) {
        return Err(Error::InfiniteDistance);
    }
    // 2 asinh(|P − Q| / (2 √(x_P x_Q))) is the cancellation-free form of the arccosh.
    let chord = p.euclidean_distance(q);
    Ok(2.0 * (chord / (2.0 * (p.x * q.x).sqrt())).asinh())
}

/// An isometry of the upper half-space: `w ↦ (a ŵ + b)/(c ŵ + d)` on the boundary,
/// where `ŵ = w̄` when `reflect` is set and `ŵ = w` otherwise.
///
/// Coefficients are kept at determinant one with a canonical sign, so two equal
/// isometries have (numerically) equal coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicIsometry {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub reflect: bool,
}

impl fmt::Display for HyperbolicIsometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]{}", self.a, self.b, self.c, self.d, if self.reflect { " ∘ conj" } else { "" })
    }
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl HyperbolicIsometry {
    pub fn identity() -> Self {
        Self { a: ONE, b: ZERO, c: ZERO, d: ONE, reflect: false }
    }

    /// Builds a normalized isometry from arbitrary nonsingular coefficients.
    pub fn from_coefficients(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
        reflect: bool,
    ) -> Result<Self, Error> {
        let det = a * d - b * c;
        if !(det.norm() > 1e-300) || !det.is_finite() {
            return Err(Error::InvalidInput("singular fractional-linear coefficients".into()));
        }
        let mut m = Self { a, b, c, d, reflect };
        m.normalize();
        Ok(m)
    }

    /// Horizontal translation `w ↦ w + b`.
    pub fn translation(b: Complex64) -> Self {
        Self { a: ONE, b, c: ZERO, d: ONE, reflect: false }
    }

    /// Dilation `P ↦ λP` about the origin of the boundary plane (λ > 0).
    pub fn dilation(lambda: f64) -> Self {
        let s = lambda.sqrt();
        Self { a: Complex64::new(s, 0.0), b: ZERO, c: ZERO, d: Complex64::new(1.0 / s, 0.0), reflect: false }
    }

    /// Rotation by angle θ about the vertical axis through the origin.
    pub fn rotation(theta: f64) -> Self {
        Self::from_coefficients(Complex64::from_polar(1.0, theta), ZERO, ZERO, ONE, false)
            .expect("rotation is nonsingular")
    }

    /// Inversion in the unit hemisphere, `P ↦ P/|P|²` (boundary action `w ↦ 1/w̄`).
    pub fn inversion() -> Self {
        Self::from_coefficients(ZERO, ONE, ONE, ZERO, true).expect("inversion is nonsingular")
    }

    /// Reflection in the vertical plane `z = 0` (boundary action `w ↦ w̄`).
    pub fn reflection() -> Self {
        Self { reflect: true, ..Self::identity() }
    }

    /// The orientation-preserving map `w ↦ 1/w` (a half-turn about the unit
    /// geodesic through `(1,0,0)`); used as the "inversion" of the boundary plane.
    pub fn boundary_inversion() -> Self {
        Self::from_coefficients(ZERO, ONE, ONE, ZERO, false).expect("nonsingular")
    }

    /// Scales to determinant one and fixes the overall sign so that the first
    /// coefficient that is not negligible has positive real part (or, if purely
    /// imaginary, positive imaginary part).
    fn normalize(&mut self) {
        let det = self.a * self.d - self.b * self.c;
        let s = det.sqrt();
        self.a /= s;
        self.b /= s;
        self.c /= s;
        self.d /= s;
        let scale = self.a.norm().max(self.b.norm()).max(self.c.norm()).max(self.d.norm());
        let lead = [self.a, self.b, self.c, self.d].into_iter().find(|z| z.norm() > 1e-9 * scale).unwrap_or(ONE);
        let flip = if lead.re.abs() > 1e-12 * scale { lead.re < 0.0 } else { lead.im < 0.0 };
        if flip {
            self.a = -self.a;
            self.b = -self.b;
            self.c = -self.c;
            self.d = -self.d;
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &HyperbolicIsometry) -> HyperbolicIsometry {
        let cj = |z: Complex64| if self.reflect { z.conj() } else { z };
        let (a2, b2, c2, d2) = (cj(other.a), cj(other.b), cj(other.c), cj(other.d));
        let mut m = HyperbolicIsometry {
            a: self.a * a2 + self.b * c2,
            b: self.a * b2 + self.b * d2,
            c: self.c * a2 + self.d * c2,
            d: self.c * b2 + self.d * d2,
            reflect: self.reflect ^ other.reflect,
        };
        m.normalize();
        m
    }

    pub fn inverse(&self) -> HyperbolicIsometry {
        let cj = |z: Complex64| if self.reflect { z.conj() } else { z };
        let mut m =
            HyperbolicIsometry { a: cj(self.d), b: cj(-self.b), c: cj(-self.c), d: cj(self.a), reflect: self.reflect };
        m.normalize();
        m
    }

    /// Largest coefficientwise deviation from `other` (reflection flags must agree).
    pub fn coefficient_distance(&self, other: &HyperbolicIsometry) -> f64 {
        if self.reflect != other.reflect {
            return f64::INFINITY;
        }
        [(self.a - other.a), (self.b - other.b), (self.c - other.c), (self.d - other.d)]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Fractional-linear action on the boundary sphere.
    pub fn apply_boundary(&self, w: BoundaryPoint) -> BoundaryPoint {
        let w = if self.reflect { w.conj() } else { w };
        match w {
            BoundaryPoint::Infinity => {
                if self.c == ZERO {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(self.a / self.c)
                }
            }
            BoundaryPoint::Finite(w) => {
                let den = self.c * w + self.d;
                if den == ZERO {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((self.a * w + self.b) / den)
                }
            }
        }
    }

    /// Poincaré extension to the closed upper half-space.  Boundary points
    /// (`x = 0`) are mapped by the boundary action; a boundary point sent to ∞
    /// has no finite image and yields coordinates of infinite magnitude.
    ///
    /// With `P = w + x j` and `det = 1`,
    /// `M(P) = [(aw+b)·conj(cw+d) + a c̄ x²]/D + j x/D`, `D = |cw+d|² + |c|² x²`.
    pub fn apply_interior(&self, p: &Point3) -> Point3 {
        let w = if self.reflect { p.w().conj() } else { p.w() };
        let x = p.x;
        let cw_d = self.c * w + self.d;
        let den = cw_d.norm_sqr() + self.c.norm_sqr() * x * x;
        let num = (self.a * w + self.b) * cw_d.conj() + self.a * self.c.conj() * (x * x);
        let wn = num / den;
        Point3 { x: x / den, y: wn.re, z: wn.im }
    }

    /// Derivative scale `|M'(P)|` of the Euclidean conformal map at `P`,
    /// i.e. `x(M(P)) / x(P)` for interior points.
    pub fn conformal_factor(&self, p: &Point3) -> f64 {
        let w = if self.reflect { p.w().conj() } else { p.w() };
        1.0 / ((self.c * w + self.d).norm_sqr() + self.c.norm_sqr() * p.x * p.x)
    }
}

/// The unique orientation-preserving Möbius map sending `z1, z2, z3` to `w1, w2, w3`.
pub fn mobius_three_points(z: [BoundaryPoint; 3], w: [BoundaryPoint; 3]) -> Result<HyperbolicIsometry, Error> {
    let sz = cross_ratio_map(z)?;
    let sw = cross_ratio_map(w)?;
    Ok(sw.inverse().compose(&sz))
}

/// The map sending `p1, p2, p3` to `0, 1, ∞`.
fn cross_ratio_map(p: [BoundaryPoint; 3]) -> Result<HyperbolicIsometry, Error> {
    use BoundaryPoint::{Finite, Infinity};
    let distinct = !p[0].approx_eq(&p[1], 0.0) && !p[1].approx_eq(&p[2], 0.0) && !p[0].approx_eq(&p[2], 0.0);
    if !distinct {
        return Err(Error::InvalidInput("three boundary points must be distinct".into()));
    }
    match (p[0], p[1], p[2]) {
        (Finite(z1), Finite(z2), Finite(z3)) => {
            // (u − z1)(z2 − z3) / ((u − z3)(z2 − z1))
            HyperbolicIsometry::from_coefficients(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1), false)
        }
        (Infinity, Finite(z2), Finite(z3)) => HyperbolicIsometry::from_coefficients(ZERO, z2 - z3, ONE, -z3, false),
        (Finite(z1), Infinity, Finite(z3)) => HyperbolicIsometry::from_coefficients(ONE, -z1, ONE, -z3, false),
        (Finite(z1), Finite(z2), Infinity) => HyperbolicIsometry::from_coefficients(ONE, -z1, ZERO, z2 - z1, false),
        _ => unreachable!("distinctness excludes two points at infinity"),
    }
}

/// The hyperbolic dilation with source `p` and sink `q`: conjugate of
/// `w ↦ e^t w` by a map sending `p ↦ 0`, `q ↦ ∞`.  For `t > 0` every boundary
/// point other than `p` flows towards `q`.
pub fn dilation_source_sink(p: BoundaryPoint, q: BoundaryPoint, t: f64) -> Result<HyperbolicIsometry, Error> {
    use BoundaryPoint::{Finite, Infinity};
    let to_standard = match (p, q) {
        (Finite(p), Finite(q)) => {
            if p == q {
                return Err(Error::InvalidInput("source and sink must differ".into()));
            }
            HyperbolicIsometry::from_coefficients(ONE, -p, ONE, -q, false)?
        }
        (Finite(p), Infinity) => HyperbolicIsometry::translation(-p),
        (Infinity, Finite(q)) => HyperbolicIsometry::from_coefficients(ZERO, ONE, ONE, -q, false)?,
        (Infinity, Infinity) => return Err(Error::InvalidInput("source and sink must differ".into())),
    };
    let scale = HyperbolicIsometry::dilation(t.exp());
    Ok(to_standard.inverse().compose(&scale).compose(&to_standard))
}

/// Horizontal translation by `(−y_Q, −z_Q)` followed by dilation by `1/x_Q`;
/// sends `Q` to `(1, 0, 0)`.
pub fn recentering_isometry(q: &Point3) -> Result<HyperbolicIsometry, Error> {
    if !(q.x > 0.0) {
        return Err(Error::InvalidInput("recentering requires an interior point (x > 0)".into()));
    }
    let s = q.x.sqrt();
    Ok(HyperbolicIsometry {
        a: Complex64::new(1.0 / s, 0.0),
        b: -q.w() / s,
        c: ZERO,
        d: Complex64::new(s, 0.0),
        reflect: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn distance_examples() {
        let o = Point3::new(1.0, 0.0, 0.0);
        assert_eq!(hyp_distance(&o, &o).unwrap(), 0.0);
        assert_abs_diff_eq!(hyp_distance(&o, &Point3::new(E, 0.0, 0.0)).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hyp_distance(&o, &Point3::new(1.0, 2.0, 0.0)).unwrap(), 3.0f64.acosh(), epsilon = 1e-14);
        assert!(matches!(hyp_distance(&o, &Point3::new(0.0, 1.0, 0.0)), Err(Error::InfiniteDistance)));
    }

    #[test]
    fn distance_matches_geodesic_length() {
        // The geodesic through (1,0,0) and (1,2,0) is the semicircle of radius √2
        // centred at (0,1,0); its hyperbolic length is ∫ dθ / sin θ.
        let (t0, t1) = (std::f64::consts::FRAC_PI_4, 3.0 * std::f64::consts::FRAC_PI_4);
        let n = 20_000;
        let h = (t1 - t0) / n as f64;
        let f = |t: f64| 1.0 / t.sin();
        let mut s = f(t0) + f(t1);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t0 + i as f64 * h);
        }
        let len = s * h / 3.0;
        let d = hyp_distance(&Point3::new(1.0, 0.0, 0.0), &Point3::new(1.0, 2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(len, d, epsilon = 1e-10);
        assert_abs_diff_eq!(d, 1.76275, epsilon = 1e-5);
    }

    #[test]
    fn boundary_action_examples() {
        let id = HyperbolicIsometry::identity();
        assert_eq!(id.apply_boundary(BoundaryPoint::finite(3.0, 4.0)), BoundaryPoint::finite(3.0, 4.0));
        let dil = HyperbolicIsometry::dilation(2.0);
        assert!(dil.apply_boundary(BoundaryPoint::finite(1.0, 0.0)).approx_eq(&BoundaryPoint::finite(2.0, 0.0), 1e-15));
        let inv = HyperbolicIsometry::boundary_inversion();
        assert_eq!(inv.apply_boundary(BoundaryPoint::finite(0.0, 0.0)), BoundaryPoint::Infinity);
        assert_eq!(inv.apply_boundary(BoundaryPoint::Infinity), BoundaryPoint::finite(0.0, 0.0));
    }

    #[test]
    fn interior_action_examples() {
        let p = Point3::new(1.0, 5.0, 5.0);
        assert_eq!(HyperbolicIsometry::identity().apply_interior(&p), p);
        let q = HyperbolicIsometry::dilation(3.0).apply_interior(&Point3::new(0.5, -1.0, 2.0));
        assert_abs_diff_eq!(q.x, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(q.y, -3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.z, 6.0, epsilon = 1e-14);
        let f = HyperbolicIsometry::inversion().apply_interior(&Point3::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(f.x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y, 0.0, epsilon = 1e-15);
        // The inversion is P ↦ P/|P|².
        let g = HyperbolicIsometry::inversion().apply_interior(&Point3::new(0.5, 1.0, -2.0));
        let n2 = 0.25 + 1.0 + 4.0;
        assert_abs_diff_eq!(g.x, 0.5 / n2, epsilon = 1e-15);
        assert_abs_diff_eq!(g.y, 1.0 / n2, epsilon = 1e-15);
        assert_abs_diff_eq!(g.z, -2.0 / n2, epsilon = 1e-15);
    }

    #[test]
    fn source_sink_examples() {
        let m = dilation_source_sink(BoundaryPoint::finite(0.0, 0.0), BoundaryPoint::Infinity, 0.7).unwrap();
        let w = m.apply_boundary(BoundaryPoint::finite(1.0, 2.0)).as_finite().unwrap();
        assert_abs_diff_eq!((w - c(1.0, 2.0) * 0.7f64.exp()).norm(), 0.0, epsilon = 1e-13);
        let id = dilation_source_sink(BoundaryPoint::finite(-1.0, 0.0), BoundaryPoint::finite(1.0, 0.0), 0.0).unwrap();
        assert!(id.coefficient_distance(&HyperbolicIsometry::identity()) < 1e-14);
        let m = dilation_source_sink(BoundaryPoint::finite(-1.0, 0.0), BoundaryPoint::finite(1.0, 0.0), 1.0).unwrap();
        let w = m.apply_boundary(BoundaryPoint::finite(0.0, 0.0)).as_finite().unwrap();
        assert_abs_diff_eq!(w.re, 0.5f64.tanh(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.re, 0.46212, epsilon = 1e-5);
        assert!(dilation_source_sink(BoundaryPoint::finite(1.0, 1.0), BoundaryPoint::finite(1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn source_sink_with_source_at_infinity() {
        let q = BoundaryPoint::finite(0.5, -1.0);
        let m = dilation_source_sink(BoundaryPoint::Infinity, q, 3.0).unwrap();
        assert_eq!(m.apply_boundary(BoundaryPoint::Infinity), BoundaryPoint::Infinity);
        assert!(m.apply_boundary(q).approx_eq(&q, 1e-14));
        let far = m.apply_boundary(BoundaryPoint::finite(10.0, 4.0)).as_finite().unwrap();
        let near = dilation_source_sink(BoundaryPoint::Infinity, q, 9.0)
            .unwrap()
            .apply_boundary(BoundaryPoint::finite(10.0, 4.0))
            .as_finite()
            .unwrap();
        assert!((near - q.as_finite().unwrap()).norm() < (far - q.as_finite().unwrap()).norm());
    }

    #[test]
    fn recentering_examples() {
        let m = recentering_isometry(&Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert!(m.coefficient_distance(&HyperbolicIsometry::identity()) < 1e-15);
        let q = Point3::new(0.01, 3.0, -2.0);
        let r = recentering_isometry(&q).unwrap().apply_interior(&q);
        assert_abs_diff_eq!(r.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.z, 0.0, epsilon = 1e-12);
        let r = recentering_isometry(&Point3::new(2.0, 0.0, 0.0)).unwrap().apply_interior(&Point3::new(2.0, 1.0, 0.0));
        assert_abs_diff_eq!(r.x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y, 0.5, epsilon = 1e-15);
        assert!(recentering_isometry(&Point3::new(0.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn three_point_map() {
        let z = [BoundaryPoint::finite(-1.0, 0.0), BoundaryPoint::finite(1.0, 0.0), BoundaryPoint::finite(0.0, 1.0)];
        let w = [BoundaryPoint::finite(2.0, 0.0), BoundaryPoint::Infinity, BoundaryPoint::finite(0.0, 0.0)];
        let m = mobius_three_points(z, w).unwrap();
        for k in 0..3 {
            assert!(m.apply_boundary(z[k]).approx_eq(&w[k], 1e-12), "{k}");
        }
    }
}

//! Spherical geometry on the unit sphere S².

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::error::{Error, Result};

/// Slack used by closed membership tests and degeneracy guards.
pub const EPS: f64 = 1e-12;

/// `arccos(1/3)`: below this common radius four caps never cover the sphere.
pub const OMEGA0: f64 = 1.230_959_417_340_774_7;
/// `arccos(-1/3)`: circumradius of the regular inscribed tetrahedron, equal to `π − OMEGA0`.
pub const THETA0: f64 = 1.910_633_236_249_018_6;
/// Probability that a random inscribed tetrahedron contains the centre and has an acute base.
pub const KAPPA_CLOSED: f64 = 11.0 / 96.0 - 1.0 / (8.0 * PI * PI);
/// Expected number of acute faces of a well-centered random tetrahedron, `32κ`.
pub const E_N_CLOSED: f64 = 11.0 / 3.0 - 4.0 / (PI * PI);

/// The named constants, bundled for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub omega0: f64,
    pub theta0: f64,
    pub kappa_closed: f64,
    pub e_n_closed: f64,
}

impl Constants {
    pub const VALUES: Constants = Constants {
        omega0: OMEGA0,
        theta0: THETA0,
        kappa_closed: KAPPA_CLOSED,
        e_n_closed: E_N_CLOSED,
    };
}

/// Plain 3-vector used by the raw-array helpers below.
pub type V3 = [f64; 3];

#[inline]
pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn det3(a: V3, b: V3, c: V3) -> f64 {
    dot(a, cross(b, c))
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector([f64; 3]);

impl UnitVector {
    pub const E1: UnitVector = UnitVector([1.0, 0.0, 0.0]);
    pub const E2: UnitVector = UnitVector([0.0, 1.0, 0.0]);
    pub const E3: UnitVector = UnitVector([0.0, 0.0, 1.0]);

    /// Normalizes `(x, y, z)`; fails on the zero vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_array([x, y, z])
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        let n = norm(v);
        if !(n > EPS) || !n.is_finite() {
            return Err(Error::Degenerate(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        Ok(UnitVector(scale(v, 1.0 / n)))
    }

    /// Point with polar angle `theta` from the north pole and azimuth `phi`.
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        UnitVector([st * cp, st * sp, ct])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(self.0, other.0)
    }

    pub fn antipode(&self) -> UnitVector {
        UnitVector(scale(self.0, -1.0))
    }
}

impl std::ops::Neg for UnitVector {
    type Output = UnitVector;

    fn neg(self) -> UnitVector {
        self.antipode()
    }
}

/// Closed cap `{Y : d(center, Y) ≤ theta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cap {
    pub center: UnitVector,
    pub theta: f64,
}

impl Cap {
    pub fn new(center: UnitVector, theta: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::domain("theta", theta, "[0, π]"));
        }
        Ok(Cap { center, theta })
    }

    pub fn contains(&self, y: &UnitVector) -> bool {
        angular_distance(&self.center, y) <= self.theta + EPS
    }

    /// The complementary cap sharing this cap's boundary circle.
    pub fn complement(&self) -> Cap {
        Cap {
            center: self.center.antipode(),
            theta: PI - self.theta,
        }
    }
}

/// Four points, read as the tetrahedron with base `abc` and apex `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointQuad {
    pub a: UnitVector,
    pub b: UnitVector,
    pub c: UnitVector,
    pub d: UnitVector,
}

impl PointQuad {
    pub fn new(a: UnitVector, b: UnitVector, c: UnitVector, d: UnitVector) -> Self {
        PointQuad { a, b, c, d }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        PointQuad {
            a: sample_uniform(rng),
            b: sample_uniform(rng),
            c: sample_uniform(rng),
            d: sample_uniform(rng),
        }
    }

    pub fn points(&self) -> [UnitVector; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Vertices of the regular tetrahedron with one vertex at the north pole.
    pub fn regular() -> Self {
        let pts = regular_tetrahedron();
        PointQuad::new(pts[0], pts[1], pts[2], pts[3])
    }

    /// The four (face, opposite vertex) pairs.
    pub fn faces(&self) -> [([UnitVector; 3], UnitVector); 4] {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        [
            ([a, b, c], d),
            ([a, b, d], c),
            ([a, c, d], b),
            ([b, c, d], a),
        ]
    }
}

/// Regular tetrahedron: north pole plus three points at height −1/3.
pub fn regular_tetrahedron() -> [UnitVector; 4] {
    let t = 2.0 * PI / 3.0;
    [
        UnitVector::E3,
        UnitVector::from_polar(THETA0, 0.0),
        UnitVector::from_polar(THETA0, t),
        UnitVector::from_polar(THETA0, 2.0 * t),
    ]
}

/// Great-circle distance, `atan2(|u × v|, u · v)`.
pub fn angular_distance(u: &UnitVector, v: &UnitVector) -> f64 {
    norm(cross(u.0, v.0)).atan2(dot(u.0, v.0))
}

/// Uniform point on S²: `z` uniform on `[−1, 1]`, azimuth uniform on `[0, 2π)`.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> UnitVector {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = phi.sin_cos();
    UnitVector([rho * c, rho * s, z])
}

fn check_triangle(a: &UnitVector, b: &UnitVector, c: &UnitVector) -> Result<V3> {
    let n = cross(sub(b.0, a.0), sub(c.0, a.0));
    if norm(n) < EPS {
        return Err(Error::Degenerate(
            "triangle vertices are coincident or collinear",
        ));
    }
    Ok(n)
}

/// Whether every angle of the planar triangle `abc` is strictly less than π/2.
pub fn is_acute_chordal(a: &UnitVector, b: &UnitVector, c: &UnitVector) -> Result<bool> {
    check_triangle(a, b, c)?;
    let ab = sub(a.0, b.0);
    let bc = sub(b.0, c.0);
    let ca = sub(c.0, a.0);
    let (ab2, bc2, ca2) = (dot(ab, ab), dot(bc, bc), dot(ca, ca));
    Ok(ab2 + ca2 > bc2 && ab2 + bc2 > ca2 && bc2 + ca2 > ab2)
}

/// Barycentric weights (unnormalized) of the origin with respect to `a, b, c, d`.
///
/// `w_a a + w_b b + w_c c + w_d d = 0` holds identically (Cramer).
pub(crate) fn origin_weights(q: &PointQuad) -> [f64; 4] {
    let (a, b, c, d) = (q.a.0, q.b.0, q.c.0, q.d.0);
    [det3(b, c, d), -det3(a, c, d), det3(a, b, d), -det3(a, b, c)]
}

/// Whether the origin lies strictly inside the tetrahedron `abcd`.
///
/// Weights within [`EPS`] of zero put the origin on a face and count as not well-centered.
pub fn is_well_centered(q: &PointQuad) -> bool {
    let w = origin_weights(q);
    if w.iter().any(|x| x.abs() < EPS) {
        return false;
    }
    w.iter().all(|&x| x > 0.0) || w.iter().all(|&x| x < 0.0)
}

/// Cap bounded by the circumcircle of `abc` on the side containing `d`.
pub fn circumcap_containing(
    a: &UnitVector,
    b: &UnitVector,
    c: &UnitVector,
    d: &UnitVector,
) -> Result<Cap> {
    let n = check_triangle(a, b, c)?;
    let center = UnitVector::from_array(n)?;
    let offset = dot(center.0, a.0);
    let side = dot(center.0, d.0) - offset;
    if side.abs() < EPS {
        return Err(Error::AmbiguousSide);
    }
    let center = if side > 0.0 {
        center
    } else {
        center.antipode()
    };
    Ok(Cap {
        center,
        theta: angular_distance(&center, a),
    })
}

/// Both caps bounded by the circumcircle of `abc`, as `(cap around n, cap around −n)`.
pub(crate) fn circumcaps(a: &UnitVector, b: &UnitVector, c: &UnitVector) -> Option<[Cap; 2]> {
    let n = cross(sub(b.0, a.0), sub(c.0, a.0));
    if norm(n) < EPS {
        return None;
    }
    let center = UnitVector::from_array(n).ok()?;
    let theta = angular_distance(&center, a);
    let cap = Cap { center, theta };
    Some([cap, cap.complement()])
}

/// Interior angle at `a` of the spherical triangle `abc`, from the dihedral angle between
/// the planes `(a, b)` and `(a, c)`.
fn vertex_angle(a: V3, b: V3, c: V3) -> f64 {
    let cos_part = dot(b, c) - dot(a, b) * dot(a, c);
    det3(a, b, c).abs().atan2(cos_part)
}

/// Area (spherical excess) of the triangle spanned by the minor arcs of `a, b, c`,
/// which is the set of normalized nonnegative combinations of the vertices.
pub fn spherical_triangle_area(a: &UnitVector, b: &UnitVector, c: &UnitVector) -> Result<f64> {
    let (pa, pb, pc) = (a.0, b.0, c.0);
    for (u, v) in [(pa, pb), (pb, pc), (pc, pa)] {
        if norm(add(u, v)) < EPS {
            return Err(Error::Degenerate(
                "antipodal vertices have no unique geodesic",
            ));
        }
    }
    for (u, v) in [(pa, pb), (pb, pc), (pc, pa)] {
        if norm(sub(u, v)) < EPS {
            return Ok(0.0);
        }
    }
    let excess =
        vertex_angle(pa, pb, pc) + vertex_angle(pb, pc, pa) + vertex_angle(pc, pa, pb) - PI;
    Ok(excess.clamp(0.0, 2.0 * PI))
}

/// L'Huilier's formula from the three side lengths.
pub fn lhuilier_area(a: &UnitVector, b: &UnitVector, c: &UnitVector) -> Result<f64> {
    let sa = angular_distance(b, c);
    let sb = angular_distance(c, a);
    let sc = angular_distance(a, b);
    if [sa, sb, sc].iter().any(|s| (PI - s).abs() < EPS) {
        return Err(Error::Degenerate(
            "antipodal vertices have no unique geodesic",
        ));
    }
    let s = 0.5 * (sa + sb + sc);
    let t =
        (0.5 * s).tan() * (0.5 * (s - sa)).tan() * (0.5 * (s - sb)).tan() * (0.5 * (s - sc)).tan();
    Ok(4.0 * t.max(0.0).sqrt().atan())
}

/// `arccot` on the branch `(−π/2, 0)` for negative arguments, with limit −π/2 at zero.
fn arccot_negative_branch(x: f64) -> f64 {
    if x == 0.0 {
        -FRAC_PI_2
    } else {
        (1.0 / x).atan()
    }
}

/// Area of the equilateral spherical triangle inscribed in a circle of spherical radius
/// `theta ∈ [π/2, π]`: `−6·arccot(√3 cos θ) − π`.
pub fn max_equilateral_area(theta: f64) -> Result<f64> {
    if !(FRAC_PI_2..=PI).contains(&theta) {
        return Err(Error::domain("theta", theta, "[π/2, π]"));
    }
    let x = 3f64.sqrt() * theta.cos();
    // cos(π/2) is ~6e-17, not zero; anything that small sits on the −π/2 limit.
    let x = if x.abs() < 1e-15 { 0.0 } else { x };
    Ok(-6.0 * arccot_negative_branch(x) - PI)
}

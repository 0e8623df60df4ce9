//! Densities of random inscribed triangles and the spherical angle map `λ`.
//!
//! Two charts describe a triangle inscribed in a circle of Euclidean radius `r`:
//! the chord lengths `(a, b)` of two sides and the inscribed angles `(α, β)` opposite them,
//! linked by `a = 2r sin α`, `b = 2r sin β`. The chord chart has integrable
//! `1/√(4r² − a²)` singularities at `a = 2r`; the angle chart is smooth, so the
//! quadrature layer integrates there.
//!
//! When a triangle is three random points of the unit sphere, `r = sin θ` where `θ` is the
//! spherical radius of the circumscribing cap.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Tolerance for clamping `arccos` arguments that overshoot ±1 through rounding.
pub const ACOS_SLACK: f64 = 1e-12;

/// A triangle inscribed in the circle of radius `sin θ`, carried in both charts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrianglePolar {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl TrianglePolar {
    pub fn from_angles(alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha + beta < PI) {
            return Err(Error::Argument(format!(
                "inscribed angles ({alpha}, {beta}) must be positive with sum below π"
            )));
        }
        let r = theta.sin();
        Ok(TrianglePolar {
            a: 2.0 * r * alpha.sin(),
            b: 2.0 * r * beta.sin(),
            theta,
            alpha,
            beta,
        })
    }

    /// Chord chart to angle chart on the branch `α, β ∈ (0, π/2]`.
    pub fn from_chords(a: f64, b: f64, theta: f64) -> Result<Self> {
        let r = theta.sin();
        if !(r > 0.0 && a > 0.0 && b > 0.0 && a <= 2.0 * r && b <= 2.0 * r) {
            return Err(Error::Argument(format!(
                "chords ({a}, {b}) must lie in (0, 2r] with r = sin θ = {r}"
            )));
        }
        Ok(TrianglePolar {
            a,
            b,
            theta,
            alpha: (a / (2.0 * r)).min(1.0).asin(),
            beta: (b / (2.0 * r)).min(1.0).asin(),
        })
    }

    pub fn radius(&self) -> f64 {
        self.theta.sin()
    }

    /// The third inscribed angle `γ = π − α − β`.
    pub fn gamma(&self) -> f64 {
        PI - self.alpha - self.beta
    }
}

fn in_angle_triangle(alpha: f64, beta: f64) -> bool {
    alpha > 0.0 && beta > 0.0 && alpha < PI && beta < PI && alpha + beta < PI
}

/// Joint density of two angles of a triangle on three uniform points of a fixed circle.
pub fn circle_angle_density(alpha: f64, beta: f64) -> f64 {
    if in_angle_triangle(alpha, beta) {
        2.0 / (PI * PI)
    } else {
        0.0
    }
}

/// Joint density of two sides of the same circle triangle; the sides are independent.
pub fn circle_side_density(a: f64, b: f64, r: f64) -> f64 {
    let (u, v) = (a / r, b / r);
    if !(u > 0.0 && u < 2.0 && v > 0.0 && v < 2.0) {
        return 0.0;
    }
    4.0 / (PI * PI * r * r) / ((4.0 - u * u).sqrt() * (4.0 - v * v).sqrt())
}

/// Joint density of two angles of a triangle on three uniform points of the sphere.
pub fn sphere_angle_density(alpha: f64, beta: f64) -> f64 {
    if in_angle_triangle(alpha, beta) {
        8.0 / (3.0 * PI) * alpha.sin() * beta.sin() * (alpha + beta).sin()
    } else {
        0.0
    }
}

fn chord_guard(a: f64, b: f64, r: f64) -> Result<()> {
    let edge = 2.0 * r;
    if (a - edge).abs() <= 1e-12 * edge || (b - edge).abs() <= 1e-12 * edge {
        return Err(Error::SingularEdge(
            "density is unbounded at a chord of length 2r",
        ));
    }
    Ok(())
}

/// Acute part of the `(a, b)` density given circumscribing cap radius `theta`:
/// `ab/(6πr⁴)·[a/√(4r²−a²) + b/√(4r²−b²)]` on `a² + b² > 4r²`.
pub fn delta_density(a: f64, b: f64, theta: f64) -> Result<f64> {
    let r = theta.sin();
    if !(r > 0.0) {
        return Err(Error::domain("theta", theta, "(0, π)"));
    }
    chord_guard(a, b, r)?;
    let r2 = r * r;
    if !(a > 0.0 && b > 0.0 && a < 2.0 * r && b < 2.0 * r && a * a + b * b > 4.0 * r2) {
        return Ok(0.0);
    }
    let sa = (4.0 * r2 - a * a).sqrt();
    let sb = (4.0 * r2 - b * b).sqrt();
    Ok(a * b / (6.0 * PI * r2 * r2) * (a / sa + b / sb))
}

/// Full `(a, b)` density given `theta`, the obtuse and acute parts together.
pub fn trivariate_mixture_density(a: f64, b: f64, theta: f64) -> Result<f64> {
    let r = theta.sin();
    if !(r > 0.0) {
        return Err(Error::domain("theta", theta, "(0, π)"));
    }
    chord_guard(a, b, r)?;
    let (u, v) = (a / r, b / r);
    if !(u > 0.0 && u < 2.0 && v > 0.0 && v < 2.0) {
        return Ok(0.0);
    }
    let (su, sv) = ((4.0 - u * u).sqrt(), (4.0 - v * v).sqrt());
    let (x, y) = (u * sv, v * su);
    Ok(a * b / (6.0 * PI * r.powi(4)) * (x + y + (x - y).abs()) / (su * sv))
}

fn clamped_acos(x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() > 1.0 + ACOS_SLACK {
        return Err(Error::domain("arccos argument", x, "[-1, 1]"));
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

/// `λ` from chords plus precomputed `√(4r²−a²)`, `√(4r²−b²)`; lets substituted charts pass
/// those roots without cancellation.
pub(crate) fn lambda_from_roots(a: f64, b: f64, sa: f64, sb: f64, r: f64) -> Result<f64> {
    let num = (1.0 - r * r) * a * b - sa * sb;
    let den = r * r * ((2.0 - a) * (2.0 + a)).sqrt() * ((2.0 - b) * (2.0 + b)).sqrt();
    if den == 0.0 {
        // Both chords are diameters of a great circle; the vertex angle is straight.
        return Ok(PI);
    }
    clamped_acos(num / den)
}

/// Spherical angle at the third vertex of the inscribed triangle with chords `a`, `b`.
pub fn lambda_angle(a: f64, b: f64, theta: f64) -> Result<f64> {
    if !(a < 2.0 && b < 2.0) {
        return Err(Error::Argument(format!(
            "chords ({a}, {b}) of the unit sphere must be below 2"
        )));
    }
    let r = theta.sin();
    let r2 = r * r;
    if !(a > 0.0 && b > 0.0 && a <= 2.0 * r && b <= 2.0 * r) {
        return Err(Error::Argument(format!(
            "chords ({a}, {b}) must lie in (0, 2r] with r = {r}"
        )));
    }
    let sa = (4.0 * r2 - a * a).max(0.0).sqrt();
    let sb = (4.0 * r2 - b * b).max(0.0).sqrt();
    lambda_from_roots(a, b, sa, sb, r)
}

/// `λ` in the angle chart, with the common factor `4r²` cancelled:
/// `cos γ̃ = (cos²θ sin α sin β − cos α cos β) / (√(1 − r² sin²α) √(1 − r² sin²β))`.
///
/// `1 − r² sin²α` is evaluated as `cos²α + cos²θ sin²α`, which avoids cancellation near
/// `θ = π/2` and keeps the ratio inside `[−1, 1]` (Cauchy–Schwarz).
pub fn lambda_from_angles(alpha: f64, beta: f64, theta: f64) -> Result<f64> {
    let ct = theta.cos();
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let num = ct * ct * sa * sb - ca * cb;
    let den = ca.hypot(ct * sa) * cb.hypot(ct * sb);
    if den == 0.0 {
        return Ok(PI);
    }
    clamped_acos(num / den)
}

/// Cosine of the planar angle opposite the third side, rebuilt from chords:
/// `(ab − √(4r²−a²)√(4r²−b²)) / (4r²)`.
pub fn chordal_cos_gamma(a: f64, b: f64, r: f64) -> f64 {
    let r2 = r * r;
    (a * b - (4.0 * r2 - a * a).max(0.0).sqrt() * (4.0 * r2 - b * b).max(0.0).sqrt()) / (4.0 * r2)
}

/// Whether `(α, β)` lies in the acute region `α, β < π/2 < α + β`.
pub fn is_acute_angles(alpha: f64, beta: f64) -> bool {
    alpha < FRAC_PI_2 && beta < FRAC_PI_2 && alpha + beta > FRAC_PI_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{spherical_triangle_area, UnitVector};
    use crate::quad::{integrate, QuadratureSpec};
    use crate::rng::stream;
    use rand::Rng;

    const S3: f64 = 1.732_050_807_568_877_2;

    /// Vertices of the triangle with inscribed angles `α` at A and `β` at B, on the circle
    /// of radius `sin θ` at height `cos θ` around the north pole. Returns `(A, B, C)`.
    pub(crate) fn embed(alpha: f64, beta: f64, theta: f64) -> [UnitVector; 3] {
        [
            UnitVector::from_polar(theta, -2.0 * beta),
            UnitVector::from_polar(theta, 2.0 * alpha),
            UnitVector::from_polar(theta, 0.0),
        ]
    }

    /// Spherical angle at `c` by the dihedral construction, independent of `λ`.
    fn vertex_angle(a: &UnitVector, b: &UnitVector, c: &UnitVector) -> f64 {
        let (a, b, c) = (a.as_array(), b.as_array(), c.as_array());
        let n1 = crate::geom::cross(c, a);
        let n2 = crate::geom::cross(c, b);
        crate::geom::norm(crate::geom::cross(n1, n2)).atan2(crate::geom::dot(n1, n2))
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::new(1e-11, 1e-11, 1 << 15).unwrap()
    }

    fn integrate2(
        f: impl Fn(f64, f64) -> f64 + Copy,
        x: (f64, f64),
        y: impl Fn(f64) -> (f64, f64) + Copy,
    ) -> f64 {
        integrate(
            |s| {
                let (lo, hi) = y(s);
                Ok(integrate(|t| Ok(f(s, t)), lo, hi, &spec())?.value)
            },
            x.0,
            x.1,
            &spec(),
        )
        .unwrap()
        .value
    }

    #[test]
    fn circle_densities() {
        assert!((circle_angle_density(PI / 4.0, PI / 4.0) - 0.202_642_367_284_675_5).abs() < 1e-15);
        assert_eq!(circle_angle_density(FRAC_PI_2, 0.75 * PI), 0.0);
        let total = integrate2(circle_angle_density, (0.0, PI), |a| (0.0, PI - a));
        assert!((total - 1.0).abs() < 1e-10);
        let acute = integrate2(circle_angle_density, (0.0, FRAC_PI_2), |a| {
            (FRAC_PI_2 - a, FRAC_PI_2)
        });
        assert!((acute - 0.25).abs() < 1e-10);

        assert!((circle_side_density(1.0, 1.0, 1.0) - 4.0 / (3.0 * PI * PI)).abs() < 1e-15);
        assert!((circle_side_density(1.0, 1.0, 1.0) - 0.135_095).abs() < 1e-6);
        assert_eq!(circle_side_density(2.5, 1.0, 1.0), 0.0);
    }

    #[test]
    fn circle_sides_factorize() {
        let r = 0.7;
        let (a0, b0) = (0.3, 0.9);
        for i in 1..10 {
            for j in 1..10 {
                let (a, b) = (0.14 * i as f64, 0.14 * j as f64);
                let lhs = circle_side_density(a, b, r);
                let rhs = circle_side_density(a, b0, r) * circle_side_density(a0, b, r)
                    / circle_side_density(a0, b0, r);
                assert!((lhs - rhs).abs() < 1e-12 * lhs);
            }
        }
    }

    #[test]
    fn sphere_angle_density_values() {
        let v = sphere_angle_density(PI / 3.0, PI / 3.0);
        assert!((v - S3 / PI).abs() < 1e-15);
        assert!((v - 0.551_329).abs() < 1e-6);
        assert!(sphere_angle_density(FRAC_PI_2, FRAC_PI_2).abs() < 1e-15);
        let total = integrate2(sphere_angle_density, (0.0, PI), |a| (0.0, PI - a));
        assert!((total - 1.0).abs() < 1e-10);
        let acute = integrate2(sphere_angle_density, (0.0, FRAC_PI_2), |a| {
            (FRAC_PI_2 - a, FRAC_PI_2)
        });
        assert!((acute - 0.5).abs() < 1e-10);
    }

    #[test]
    fn delta_values() {
        let v = delta_density(S3, S3, FRAC_PI_2).unwrap();
        assert!((v - S3 / PI).abs() < 1e-14);
        assert!((v - sphere_angle_density(PI / 3.0, PI / 3.0)).abs() < 1e-14);
        assert_eq!(delta_density(1.0, 1.0, FRAC_PI_2).unwrap(), 0.0);
        assert!(matches!(
            delta_density(2.0, 1.9, FRAC_PI_2),
            Err(Error::SingularEdge(_))
        ));
        let r = 2.5f64.sin();
        assert!(delta_density(2.0 * r, 0.5, 2.5).is_err());
    }

    #[test]
    fn trivariate_values() {
        let v = trivariate_mixture_density(S3, S3, FRAC_PI_2).unwrap();
        assert!((v - S3 / PI).abs() < 1e-14);
        let w = trivariate_mixture_density(1.0, 1.0, FRAC_PI_2).unwrap();
        assert!((w - S3 / (9.0 * PI)).abs() < 1e-15);
        assert!(w > 0.0);
        assert_eq!(trivariate_mixture_density(2.5, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn delta_chart_matches_angle_density_pointwise() {
        let mut rng = stream(31, 0);
        for _ in 0..20_000 {
            let theta = FRAC_PI_2 + (PI - FRAC_PI_2) * rng.random::<f64>() * 0.999 + 1e-4;
            // Keep cos α, cos β ≥ 0.01: recovering them from chords via √(4r² − a²)
            // costs a factor 1/cos² in relative accuracy.
            let alpha = (FRAC_PI_2 - 0.01) * rng.random::<f64>();
            let beta = (FRAC_PI_2 - 0.01) * rng.random::<f64>();
            if !is_acute_angles(alpha, beta) {
                continue;
            }
            let r = theta.sin();
            let t = TrianglePolar::from_angles(alpha, beta, theta).unwrap();
            let jac = 4.0 * r * r * alpha.cos() * beta.cos();
            let pushed = delta_density(t.a, t.b, theta).unwrap() * jac;
            let direct = sphere_angle_density(alpha, beta);
            assert!(
                (pushed - direct).abs() < 1e-10 * direct.max(1.0),
                "{pushed} vs {direct}"
            );
        }
    }

    #[test]
    fn chordal_gamma_identity() {
        let mut rng = stream(37, 0);
        for _ in 0..100_000 {
            let theta = 0.05 + (PI - 0.1) * rng.random::<f64>();
            let alpha = 1e-3 + (FRAC_PI_2 - 2e-3) * rng.random::<f64>();
            let beta = 1e-3 + (FRAC_PI_2 - 2e-3) * rng.random::<f64>();
            let t = TrianglePolar::from_angles(alpha, beta, theta).unwrap();
            let cg = chordal_cos_gamma(t.a, t.b, t.radius());
            assert!((cg.clamp(-1.0, 1.0).acos() - t.gamma()).abs() < 1e-7);
            assert!((cg - t.gamma().cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda_examples() {
        assert!((lambda_angle(S3, S3, FRAC_PI_2).unwrap() - PI).abs() < 1e-12);
        // A right chordal angle on the equator still sits on the great circle: straight angle.
        assert!((lambda_angle(2f64.sqrt(), 2f64.sqrt(), FRAC_PI_2).unwrap() - PI).abs() < 1e-7);
        let eq = [0.0, FRAC_PI_2, PI].map(|phi| UnitVector::from_polar(FRAC_PI_2, phi));
        assert!((vertex_angle(&eq[0], &eq[2], &eq[1]) - PI).abs() < 1e-12);
        assert!(lambda_angle(2.0, 1.0, FRAC_PI_2).is_err());
    }

    #[test]
    fn lambda_matches_embedded_vertex_angle() {
        let mut rng = stream(41, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..100_000 {
            let theta = 0.01 + (PI - 0.02) * rng.random::<f64>();
            let r = theta.sin();
            let a = 2.0 * r * (0.001 + 0.998 * rng.random::<f64>());
            let b = 2.0 * r * (0.001 + 0.998 * rng.random::<f64>());
            let t = TrianglePolar::from_chords(a, b, theta).unwrap();
            let [va, vb, vc] = embed(t.alpha, t.beta, theta);
            let oracle = vertex_angle(&va, &vb, &vc);
            let lam = lambda_angle(a, b, theta).unwrap();
            let lam2 = lambda_from_angles(t.alpha, t.beta, theta).unwrap();
            worst = worst.max((lam - oracle).abs()).max((lam2 - oracle).abs());
        }
        assert!(worst < 1e-9, "worst deviation {worst}");
    }

    #[test]
    fn spherical_angle_dominates_chordal_angle() {
        let mut rng = stream(43, 0);
        for _ in 0..100_000 {
            let theta = 0.01 + (PI - 0.02) * rng.random::<f64>();
            let alpha = 1e-3 + (FRAC_PI_2 - 2e-3) * rng.random::<f64>();
            let beta = 1e-3 + (FRAC_PI_2 - 2e-3) * rng.random::<f64>();
            let gamma = PI - alpha - beta;
            assert!(lambda_from_angles(alpha, beta, theta).unwrap() >= gamma - 1e-12);
        }
    }

    #[test]
    fn area_of_embedded_triangle_is_sum_of_lambdas() {
        let (alpha, beta, theta) = (1.1, 0.9, 2.2);
        let [va, vb, vc] = embed(alpha, beta, theta);
        let gamma = PI - alpha - beta;
        let area = spherical_triangle_area(&va, &vb, &vc).unwrap();
        let l = lambda_from_angles(alpha, beta, theta).unwrap()
            + lambda_from_angles(beta, gamma, theta).unwrap()
            + lambda_from_angles(gamma, alpha, theta).unwrap();
        assert!((area - (l - PI)).abs() < 1e-12);
    }

    #[test]
    fn densities_are_nonnegative() {
        let mut rng = stream(47, 0);
        for _ in 0..50_000 {
            let theta = PI * rng.random::<f64>();
            let a = 2.2 * rng.random::<f64>();
            let b = 2.2 * rng.random::<f64>();
            let al = PI * rng.random::<f64>();
            let be = PI * rng.random::<f64>();
            assert!(circle_angle_density(al, be) >= 0.0);
            assert!(sphere_angle_density(al, be) >= 0.0);
            assert!(circle_side_density(a, b, theta.sin().max(1e-3)) >= 0.0);
            if let Ok(v) = delta_density(a, b, theta) {
                assert!(v >= 0.0);
            }
            if let Ok(v) = trivariate_mixture_density(a, b, theta) {
                assert!(v >= 0.0);
            }
        }
    }
}

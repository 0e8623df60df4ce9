//! Coverage of S² by four caps: the known closed form, Gilbert's upper bound, an exact
//! decision procedure for concrete configurations, and a seeded simulation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::{add, cross, dot, norm, scale, sub, Cap, PointQuad, EPS, OMEGA0};
use crate::min_cap::theta_min;
use crate::rng::{map_chunks, stream};

/// Boundary slack of the coverage decision: tangent configurations count as covered.
pub const COVER_SLACK: f64 = 1e-9;

/// `p(ω)` where a closed form is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PExact {
    Value(f64),
    /// `ω₀ < ω < π/2`: no closed form is known.
    Open,
}

impl PExact {
    pub fn value(self) -> Option<f64> {
        match self {
            PExact::Value(v) => Some(v),
            PExact::Open => None,
        }
    }
}

/// Result of [`p_monte_carlo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    pub omega: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub n: u64,
    pub seed: u64,
}

fn check_omega(omega: f64) -> Result<()> {
    if !(0.0..=PI).contains(&omega) {
        return Err(Error::domain("omega", omega, "[0, π]"));
    }
    Ok(())
}

/// Coverage probability of four random caps of radius `omega`, or [`PExact::Open`].
pub fn p_exact(omega: f64) -> Result<PExact> {
    check_omega(omega)?;
    if omega <= OMEGA0 {
        return Ok(PExact::Value(0.0));
    }
    if omega < PI / 2.0 {
        return Ok(PExact::Open);
    }
    let c2 = 0.5 * (1.0 + omega.cos());
    Ok(PExact::Value(1.0 - 2.0 * c2 * c2 * c2 * (8.0 - 9.0 * c2)))
}

/// Gilbert's upper bound `1 − 2cos⁸(ω/2) + cos⁴ω`.
pub fn gilbert_upper(omega: f64) -> Result<f64> {
    check_omega(omega)?;
    Ok(1.0 - 2.0 * (0.5 * omega).cos().powi(8) + omega.cos().powi(4))
}

/// The four caps of radius `omega` around `centers`.
pub fn equal_caps(centers: &PointQuad, omega: f64) -> Result<[Cap; 4]> {
    let [a, b, c, d] = centers.points();
    Ok([
        Cap::new(a, omega)?,
        Cap::new(b, omega)?,
        Cap::new(c, omega)?,
        Cap::new(d, omega)?,
    ])
}

/// Whether the closed caps cover S², with [`COVER_SLACK`] at the boundary.
///
/// Equal radii go through the duality with the minimal enclosing cap: a point `y` is
/// missed by every cap iff all centres lie within `π − ω` of `−y`, so the caps cover
/// exactly when the antipodal centres need a cap of radius at least `π − ω`. Mixed radii
/// use [`coverage_margin`].
pub fn covers(caps: &[Cap; 4]) -> bool {
    let omega = caps[0].theta;
    if caps.iter().all(|c| c.theta == omega) {
        let anti = PointQuad::new(
            caps[0].center.antipode(),
            caps[1].center.antipode(),
            caps[2].center.antipode(),
            caps[3].center.antipode(),
        );
        let t = theta_min(&anti).expect("four points always have an enclosing cap");
        return t >= PI - omega - COVER_SLACK;
    }
    coverage_margin(caps) >= -COVER_SLACK
}

/// Intersection of the sphere with the line `{y : n1·y = d1, n2·y = d2}`.
fn line_on_sphere(n1: [f64; 3], d1: f64, n2: [f64; 3], d2: f64) -> Option<[[f64; 3]; 2]> {
    let axis = cross(n1, n2);
    let det = dot(axis, axis);
    if det < EPS * EPS {
        return None;
    }
    let (g11, g12, g22) = (dot(n1, n1), dot(n1, n2), dot(n2, n2));
    let a = (d1 * g22 - d2 * g12) / det;
    let b = (d2 * g11 - d1 * g12) / det;
    let foot = add(scale(n1, a), scale(n2, b));
    let h2 = 1.0 - dot(foot, foot);
    if h2 < 0.0 {
        return None;
    }
    let off = scale(axis, h2.sqrt() / det.sqrt());
    Some([add(foot, off), sub(foot, off)])
}

fn any_perpendicular(v: [f64; 3]) -> [f64; 3] {
    let e = if v[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let p = cross(v, e);
    scale(p, 1.0 / norm(p))
}

/// `min over unit y of max_j (X_j·y − cos ω_j)`: negative iff some point escapes every cap.
///
/// The minimum of a maximum of linear functions on the sphere sits where one, two or three
/// of them are active. One active: `y = −X_j`. Two active: the minimum of `X_i·y` on the
/// circle where `f_i = f_j`. Three active: the two points where `f_i = f_j = f_k`.
/// Evaluating the objective at every such candidate gives the exact minimum.
pub fn coverage_margin(caps: &[Cap; 4]) -> f64 {
    let x: Vec<[f64; 3]> = caps.iter().map(|c| c.center.as_array()).collect();
    let c: Vec<f64> = caps.iter().map(|c| c.theta.cos()).collect();
    let objective = |y: [f64; 3]| {
        (0..4)
            .map(|j| dot(x[j], y) - c[j])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best = f64::INFINITY;
    let mut consider = |y: [f64; 3]| best = best.min(objective(y));

    for xj in &x {
        consider(scale(*xj, -1.0));
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let u = sub(x[i], x[j]);
            let m = norm(u);
            if m < EPS {
                continue;
            }
            let h = (c[i] - c[j]) / m;
            if h.abs() > 1.0 {
                continue;
            }
            let u = scale(u, 1.0 / m);
            // Component of X_i orthogonal to u is (X_i + X_j)/2.
            let s = add(x[i], x[j]);
            let w = if norm(s) < EPS {
                any_perpendicular(u)
            } else {
                scale(s, -1.0 / norm(s))
            };
            consider(add(scale(u, h), scale(w, (1.0 - h * h).sqrt())));
        }
    }
    for i in 0..4 {
        for j in i + 1..4 {
            for k in j + 1..4 {
                let n1 = sub(x[i], x[j]);
                let n2 = sub(x[i], x[k]);
                if let Some(ys) = line_on_sphere(n1, c[i] - c[j], n2, c[i] - c[k]) {
                    ys.into_iter().for_each(&mut consider);
                }
            }
        }
    }
    best
}

/// Independent coverage oracle from the arrangement of boundary circles.
///
/// The uncovered region, when nonempty, is bounded by arcs of the circles. So it exists
/// iff some transversal crossing of two circles lies strictly outside every other cap, or
/// some circle that crosses no other has a point outside all the other caps. Strict
/// comparisons without slack; only meaningful away from tangencies.
pub fn covers_by_arrangement(caps: &[Cap; 4]) -> bool {
    let x: Vec<[f64; 3]> = caps.iter().map(|c| c.center.as_array()).collect();
    let c: Vec<f64> = caps.iter().map(|c| c.theta.cos()).collect();
    let strictly_inside = |k: usize, p: [f64; 3]| dot(x[k], p) > c[k];
    let mut crosses = [false; 4];
    for i in 0..4 {
        for j in i + 1..4 {
            let Some(ps) = line_on_sphere(x[i], c[i], x[j], c[j]) else {
                continue;
            };
            if norm(sub(ps[0], ps[1])) < 1e-9 {
                continue;
            }
            crosses[i] = true;
            crosses[j] = true;
            for p in ps {
                if !(0..4)
                    .filter(|&k| k != i && k != j)
                    .any(|k| strictly_inside(k, p))
                {
                    return false;
                }
            }
        }
    }
    for i in 0..4 {
        if crosses[i] {
            continue;
        }
        let sin = caps[i].theta.sin();
        let p = add(scale(x[i], c[i]), scale(any_perpendicular(x[i]), sin));
        if !(0..4).filter(|&k| k != i).any(|k| strictly_inside(k, p)) {
            return false;
        }
    }
    true
}

/// Four caps of radius `omega` around independent uniform centres.
pub fn sample_caps<R: rand::Rng + ?Sized>(rng: &mut R, omega: f64) -> Result<[Cap; 4]> {
    equal_caps(&PointQuad::sample(rng), omega)
}

/// Fraction of `n` random configurations whose caps of radius `omega` cover S².
/// Trial `i` uses stream `(seed, i)`, so the estimate does not depend on the thread count.
pub fn p_monte_carlo(omega: f64, n: u64, seed: u64) -> Result<CoverageEstimate> {
    check_omega(omega)?;
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let hits: u64 = map_chunks(n, |range| {
        let mut hits = 0u64;
        for i in range {
            let caps = sample_caps(&mut stream(seed, i), omega)?;
            hits += covers(&caps) as u64;
        }
        Ok::<_, Error>(hits)
    })
    .into_iter()
    .sum::<Result<u64>>()?;
    let p_hat = hits as f64 / n as f64;
    Ok(CoverageEstimate {
        omega,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
        n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{sample_uniform, UnitVector, THETA0};
    use rand::Rng;

    #[test]
    fn closed_form_values() {
        assert_eq!(p_exact(PI / 2.0).unwrap(), PExact::Value(0.125));
        let v = p_exact(2.0 * PI / 3.0).unwrap().value().unwrap();
        assert!((v - 105.0 / 128.0).abs() < 1e-15);
        assert_eq!(p_exact(60f64.to_radians()).unwrap(), PExact::Value(0.0));
        assert_eq!(p_exact(80f64.to_radians()).unwrap(), PExact::Open);
        assert_eq!(p_exact(PI).unwrap(), PExact::Value(1.0));
        assert!(p_exact(-0.1).is_err());
        assert!(p_exact(3.2).is_err());
    }

    #[test]
    fn gilbert_values() {
        assert!((gilbert_upper(88f64.to_radians()).unwrap() - 0.8567).abs() < 1e-4);
        assert!(gilbert_upper(0.0).unwrap().abs() < 1e-15);
        for k in 0..=100 {
            let w = PI / 2.0 + PI / 2.0 * k as f64 / 100.0;
            let p = p_exact(w).unwrap().value().unwrap();
            assert!(gilbert_upper(w).unwrap() >= p - 1e-15, "{w}");
        }
        assert!(gilbert_upper(4.0).is_err());
    }

    #[test]
    fn tetrahedral_and_identical_caps() {
        let tet = PointQuad::regular();
        assert!(covers(&equal_caps(&tet, OMEGA0).unwrap()));
        assert!(!covers(&equal_caps(&tet, 70f64.to_radians()).unwrap()));
        assert!(covers(&equal_caps(&tet, 90f64.to_radians()).unwrap()));
        let p = UnitVector::new(0.2, 0.4, -0.7).unwrap();
        let same = PointQuad::new(p, p, p, p);
        assert!(!covers(&equal_caps(&same, 80f64.to_radians()).unwrap()));
        // Duality threshold: the antipodal tetrahedron needs exactly θ₀.
        assert!((PI - OMEGA0 - THETA0).abs() < 1e-15);
    }

    #[test]
    fn margin_matches_duality_for_equal_radii() {
        let mut disagreements = 0;
        for i in 0..20_000u64 {
            let mut rng = stream(41, i);
            let omega = 1.2 + 0.6 * rng.random::<f64>();
            let caps = sample_caps(&mut rng, omega).unwrap();
            let margin = coverage_margin(&caps);
            if margin.abs() < 1e-9 {
                continue;
            }
            if (margin >= 0.0) != covers(&caps) {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn arrangement_oracle_agrees_on_equal_radii() {
        for &deg in &[75.0, 85.0, 95.0, 110.0] {
            let omega = f64::to_radians(deg);
            for i in 0..10_000u64 {
                let caps = sample_caps(&mut stream(43, i), omega).unwrap();
                let anti = PointQuad::new(
                    -caps[0].center,
                    -caps[1].center,
                    -caps[2].center,
                    -caps[3].center,
                );
                if (theta_min(&anti).unwrap() - (PI - omega)).abs() < 1e-9 {
                    continue;
                }
                assert_eq!(covers(&caps), covers_by_arrangement(&caps), "{deg}° #{i}");
            }
        }
    }

    #[test]
    fn arrangement_oracle_agrees_on_mixed_radii() {
        let mut covered = 0;
        for i in 0..20_000u64 {
            let mut rng = stream(47, i);
            let caps: [Cap; 4] = std::array::from_fn(|_| {
                let c = sample_uniform(&mut rng);
                Cap::new(c, 0.9 + 1.4 * rng.random::<f64>()).unwrap()
            });
            if coverage_margin(&caps).abs() < 1e-9 {
                continue;
            }
            let exact = covers(&caps);
            covered += exact as u32;
            assert_eq!(exact, covers_by_arrangement(&caps), "instance {i}");
        }
        // Both outcomes must be exercised.
        assert!(covered > 1_000 && covered < 19_000, "{covered}");
    }

    #[test]
    fn margin_is_a_true_minimum() {
        // No probe point may beat the enumerated minimum.
        let mut rng = stream(53, 0);
        for _ in 0..200 {
            let caps: [Cap; 4] = std::array::from_fn(|_| {
                let c = sample_uniform(&mut rng);
                Cap::new(c, 0.5 + 2.0 * rng.random::<f64>()).unwrap()
            });
            let m = coverage_margin(&caps);
            for _ in 0..500 {
                let y = sample_uniform(&mut rng).as_array();
                let f = caps
                    .iter()
                    .map(|c| dot(c.center.as_array(), y) - c.theta.cos())
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(f >= m - 1e-12);
            }
        }
    }

    #[test]
    fn simulation_below_threshold_is_zero() {
        let e = p_monte_carlo(60f64.to_radians(), 10_000, 7).unwrap();
        assert_eq!(e.p_hat, 0.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn simulation_matches_closed_form() {
        let e = p_monte_carlo(2.0 * PI / 3.0, 100_000, 11).unwrap();
        assert!((e.p_hat - 105.0 / 128.0).abs() < 3.0 * e.std_err, "{e:?}");
        let e = p_monte_carlo(PI / 2.0, 100_000, 12).unwrap();
        assert!((e.p_hat - 0.125).abs() < 3.0 * e.std_err, "{e:?}");
    }

    #[test]
    fn simulation_is_monotone_and_reproducible() {
        let n = 50_000;
        let mut prev: Option<CoverageEstimate> = None;
        for deg in [75.0, 80.0, 85.0, 90.0, 100.0] {
            let e = p_monte_carlo(f64::to_radians(deg), n, 5).unwrap();
            if let Some(p) = prev {
                let s = (p.std_err.powi(2) + e.std_err.powi(2)).sqrt();
                assert!(e.p_hat >= p.p_hat - 3.0 * s, "{deg}°");
            }
            prev = Some(e);
        }
        let a = p_monte_carlo(1.5, 20_000, 99).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| p_monte_carlo(1.5, 20_000, 99).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn bad_arguments() {
        assert!(p_monte_carlo(1.0, 0, 1).is_err());
        assert!(p_monte_carlo(-1.0, 10, 1).is_err());
    }
}

//! Minimal enclosing cap of up to four points on S².
//!
//! For `n ≤ 4` the optimum is attained by a cap whose boundary passes through one, two or
//! three of the points, so enumerating every single, pair and triple candidate (both sides
//! of each circumcircle) and keeping the smallest feasible one is exact. No hemisphere
//! assumption is made: radii above π/2 are the interesting regime here.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geom::{
    add, angular_distance, circumcaps, dot, norm, scale, sub, Cap, PointQuad, UnitVector, EPS,
};

/// Containment slack for candidate caps.
pub const CONTAIN_SLACK: f64 = 1e-9;

/// The optimal cap together with the points on its boundary that pin it down.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportResult {
    pub cap: Cap,
    /// Indices into the input slice, ascending.
    pub support: Vec<usize>,
    /// Set when an antipodal pair forces radius π/2 and the centre is not unique; the
    /// returned centre is then a fixed choice on the bisecting great circle.
    pub tie: bool,
}

fn feasible(cap: &Cap, points: &[UnitVector]) -> bool {
    points
        .iter()
        .all(|p| angular_distance(&cap.center, p) <= cap.theta + CONTAIN_SLACK)
}

/// Deterministic unit vector orthogonal to `p`: project the coordinate axis along which
/// `p` has the smallest magnitude (lowest index on ties).
fn fixed_perpendicular(p: &UnitVector) -> UnitVector {
    let v = p.as_array();
    let k = (0..3)
        .min_by(|&i, &j| v[i].abs().partial_cmp(&v[j].abs()).unwrap())
        .unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let proj = sub(e, scale(v, v[k]));
    UnitVector::from_array(proj).expect("axis of smallest weight is never parallel to p")
}

/// Smallest cap containing all `points` (1 to 4 of them).
pub fn min_enclosing_cap(points: &[UnitVector]) -> Result<SupportResult> {
    if points.is_empty() || points.len() > 4 {
        return Err(Error::Argument(format!(
            "min_enclosing_cap takes 1 to 4 points, got {}",
            points.len()
        )));
    }
    let n = points.len();
    let mut best: Option<SupportResult> = None;
    let mut offer = |cap: Cap, support: Vec<usize>, tie: bool| {
        if !feasible(&cap, points) {
            return;
        }
        // Strict improvement only, so smaller supports win ties (they are offered first).
        if best.as_ref().is_none_or(|b| cap.theta < b.cap.theta - EPS) {
            best = Some(SupportResult { cap, support, tie });
        }
    };

    for (i, p) in points.iter().enumerate() {
        offer(
            Cap {
                center: *p,
                theta: 0.0,
            },
            vec![i],
            false,
        );
    }
    for i in 0..n {
        for j in i + 1..n {
            let (p, q) = (points[i], points[j]);
            let mid = add(p.as_array(), q.as_array());
            if norm(mid) < EPS {
                let center = fixed_perpendicular(&p);
                offer(
                    Cap {
                        center,
                        theta: FRAC_PI_2,
                    },
                    vec![i, j],
                    true,
                );
            } else {
                let center = UnitVector::from_array(mid)?;
                let theta = 0.5 * angular_distance(&p, &q);
                offer(Cap { center, theta }, vec![i, j], false);
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if let Some(caps) = circumcaps(&points[i], &points[j], &points[k]) {
                    for cap in caps {
                        offer(cap, vec![i, j, k], false);
                    }
                }
            }
        }
    }
    best.ok_or(Error::Degenerate("no feasible enclosing cap"))
}

/// Angular radius of the minimal cap containing the four points of `q`.
pub fn theta_min(q: &PointQuad) -> Result<f64> {
    Ok(min_enclosing_cap(&q.points())?.cap.theta)
}

/// Number of Fibonacci-lattice centres used for a given `resolution`.
///
/// With `8π/res²` points the area per point is `res²/2`, which keeps the lattice's covering
/// radius (distance from any point of S² to the nearest centre) below `res`.
pub fn lattice_size(resolution: f64) -> usize {
    ((8.0 * PI / (resolution * resolution)).ceil() as usize).max(64)
}

/// Fibonacci lattice of `n` near-uniform points.
pub fn fibonacci_lattice(n: usize) -> impl Iterator<Item = UnitVector> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n).map(move |i| {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        UnitVector::from_polar(z.acos(), golden * i as f64)
    })
}

/// Grid-search oracle: the lattice centre minimizing the largest distance to `points`.
///
/// The result is never better than the optimum and worse by at most the lattice's covering
/// radius, which [`lattice_size`] keeps below `resolution`.
pub fn brute_force_cap(points: &[UnitVector], resolution: f64) -> Cap {
    let mut best_center = UnitVector::E3;
    let mut best_min_dot = f64::NEG_INFINITY;
    for c in fibonacci_lattice(lattice_size(resolution)) {
        let worst = points
            .iter()
            .map(|p| dot(c.as_array(), p.as_array()))
            .fold(f64::INFINITY, f64::min);
        if worst > best_min_dot {
            best_min_dot = worst;
            best_center = c;
        }
    }
    let theta = points
        .iter()
        .map(|p| angular_distance(&best_center, p))
        .fold(0.0, f64::max);
    Cap {
        center: best_center,
        theta,
    }
}

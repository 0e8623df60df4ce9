//! Lower bounds for the coverage probability on `(ω₀, π/2)`.
//!
//! The distribution of `θ_min` is known exactly on `[0, π/2]`: `Φ(θ) = 1 − p(π − θ)`. Above
//! `π/2` its density is dominated by `ψ = 4κ·g`, and by `ψ_lcv` under a log-convexity
//! assumption. Integrating either majorant gives an upper bound on `Φ(π − ω)`, hence a lower
//! bound on `p(ω)`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::coverage::{gilbert_upper, p_exact, PExact};
use crate::error::{Error, Result};
use crate::geom::{KAPPA_CLOSED, OMEGA0, THETA0};
use crate::mc_lab::theta_min_samples;
use crate::quad::{integrate, PeTable, QuadratureSpec};

const LCV_BASE: f64 = 2.5;

fn check(name: &'static str, v: f64, lo: f64, hi: f64, domain: &'static str) -> Result<()> {
    if !(lo..=hi).contains(&v) {
        return Err(Error::domain(name, v, domain));
    }
    Ok(())
}

/// `Φ(θ) = P{θ_min ≤ θ} = 16 sin⁶(θ/2) − 18 sin⁸(θ/2)` for `θ ≤ π/2`.
pub fn phi_cdf(theta: f64) -> Result<f64> {
    check("theta", theta, 0.0, FRAC_PI_2, "[0, π/2]")?;
    let s2 = (0.5 * theta).sin().powi(2);
    Ok(s2 * s2 * s2 * (16.0 - 18.0 * s2))
}

/// The majorant of the `θ_min` density: exact on `[0, π/2]`, `4κ·g` above.
pub fn psi(theta: f64) -> Result<f64> {
    check("theta", theta, 0.0, PI, "[0, π]")?;
    if theta <= FRAC_PI_2 {
        let (s, c) = (0.5 * theta).sin_cos();
        return Ok(24.0 * s.powi(5) * c * (2.0 - 3.0 * s * s));
    }
    Ok(4.0 * KAPPA_CLOSED * PeTable::shared()?.g(theta)?)
}

/// `(5/2)^((θ₀−θ)/(θ₀−π/2)) − 1` on `[π/2, θ₀]`.
pub fn psi_lcv(theta: f64) -> Result<f64> {
    check("theta", theta, FRAC_PI_2, THETA0, "[π/2, θ₀]")?;
    let span = THETA0 - FRAC_PI_2;
    Ok(LCV_BASE.powf((THETA0 - theta) / span) - 1.0)
}

/// `Ψ_lcv(θ) = ∫_{π/2}^{θ} ψ_lcv`, in closed form.
pub fn psi_lcv_integral(theta: f64) -> Result<f64> {
    check("theta", theta, FRAC_PI_2, THETA0, "[π/2, θ₀]")?;
    let span = THETA0 - FRAC_PI_2;
    let exp = span / LCV_BASE.ln() * (LCV_BASE - LCV_BASE.powf((THETA0 - theta) / span));
    Ok(exp - (theta - FRAC_PI_2))
}

/// [`psi_lcv_integral`] by quadrature, as a cross-check.
pub fn psi_lcv_integral_quad(theta: f64) -> Result<f64> {
    check("theta", theta, FRAC_PI_2, THETA0, "[π/2, θ₀]")?;
    let spec = QuadratureSpec::new(1e-13, 1e-13, 1 << 10)?;
    Ok(integrate(psi_lcv, FRAC_PI_2, theta, &spec)?.value)
}

/// `q(ω) = (1 − 32κ·G(π − ω))/8` for `0 < ω < π/2`.
pub fn q_bound(omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega < FRAC_PI_2) {
        return Err(Error::domain("omega", omega, "(0, π/2)"));
    }
    let g = PeTable::shared()?.cdf(PI - omega)?;
    Ok((1.0 - 32.0 * KAPPA_CLOSED * g) / 8.0)
}

/// `q_lcv(ω) = 1/8 − Ψ_lcv(π − ω)` for `ω₀ < ω < π/2`.
pub fn q_lcv_bound(omega: f64) -> Result<f64> {
    if !(omega > OMEGA0 && omega < FRAC_PI_2) {
        return Err(Error::domain("omega", omega, "(ω₀, π/2)"));
    }
    Ok(0.125 - psi_lcv_integral(PI - omega)?)
}

/// Root of an increasing `f` on `[lo, hi]` by bisection to `tol`.
fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::Argument(format!(
            "no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const ROOT_TOL: f64 = 1e-9;

/// Smallest `ω` at which `q` becomes positive, in radians.
pub fn q_threshold() -> Result<f64> {
    bisect(q_bound, 80f64.to_radians(), 89f64.to_radians(), ROOT_TOL)
}

/// Smallest `ω` at which `q_lcv` becomes positive, in radians.
pub fn q_lcv_threshold() -> Result<f64> {
    bisect(
        q_lcv_bound,
        80f64.to_radians(),
        89f64.to_radians(),
        ROOT_TOL,
    )
}

/// Everything known about `p(ω)` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub omega: f64,
    /// `None` outside `(0, π/2)`.
    pub q: Option<f64>,
    /// `None` outside `(ω₀, π/2)`.
    pub q_lcv: Option<f64>,
    pub gilbert: f64,
    pub p_exact: PExact,
}

pub fn bound_report(omega: f64) -> Result<BoundReport> {
    let p_exact = p_exact(omega)?;
    let q = (omega > 0.0 && omega < FRAC_PI_2)
        .then(|| q_bound(omega))
        .transpose()?;
    let q_lcv = (omega > OMEGA0 && omega < FRAC_PI_2)
        .then(|| q_lcv_bound(omega))
        .transpose()?;
    Ok(BoundReport {
        omega,
        q,
        q_lcv,
        gilbert: gilbert_upper(omega)?,
        p_exact,
    })
}

/// One grid point of [`dominance_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominancePoint {
    pub xi: f64,
    /// `F̂(ξ) = 8(Φ̂(ξ) − 7/8)`.
    pub f_hat: f64,
    pub sigma: f64,
    pub g_cdf: f64,
    /// `32κ·G(ξ) − F̂(ξ)`.
    pub refined_margin: f64,
    /// `4·G(ξ) − F̂(ξ)`.
    pub crude_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub n: u64,
    pub seed: u64,
    pub points: Vec<DominancePoint>,
    /// Grid points where `32κ·G < F̂ − 3σ`.
    pub refined_violations: usize,
    /// Grid points where `4G < F̂ − 3σ`.
    pub crude_violations: usize,
}

/// `ξ = π/2 + k·(π/2)/m` for `k = 1..=m`.
pub fn default_dominance_grid(m: usize) -> Vec<f64> {
    (1..=m)
        .map(|k| FRAC_PI_2 + FRAC_PI_2 * k as f64 / m as f64)
        .collect()
}

/// Compares the empirical `F̂` from `n` simulated `θ_min` values against `32κ·G` and `4G`.
pub fn dominance_check(n: u64, grid: &[f64], seed: u64) -> Result<DominanceReport> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    for &xi in grid {
        check("xi", xi, FRAC_PI_2, PI, "[π/2, π]")?;
    }
    let mut samples = theta_min_samples(n, seed)?;
    samples.sort_by(f64::total_cmp);
    let table = PeTable::shared()?;
    let mut points = Vec::with_capacity(grid.len());
    let (mut refined_violations, mut crude_violations) = (0, 0);
    for &xi in grid {
        let below = samples.partition_point(|&t| t <= xi) as f64 / n as f64;
        let f_hat = 8.0 * (below - 0.875);
        let sigma = 8.0 * (below * (1.0 - below) / n as f64).sqrt();
        let g = table.cdf(xi)?;
        let p = DominancePoint {
            xi,
            f_hat,
            sigma,
            g_cdf: g,
            refined_margin: 32.0 * KAPPA_CLOSED * g - f_hat,
            crude_margin: 4.0 * g - f_hat,
        };
        refined_violations += (p.refined_margin < -3.0 * sigma) as usize;
        crude_violations += (p.crude_margin < -3.0 * sigma) as usize;
        points.push(p);
    }
    Ok(DominanceReport {
        n,
        seed,
        points,
        refined_violations,
        crude_violations,
    })
}

/// One-sided values of `ψ` at `π/2 ∓ ε`. Monitored only: nothing forces them to agree.
pub fn psi_continuity(eps: f64) -> Result<(f64, f64)> {
    Ok((psi(FRAC_PI_2 - eps)?, psi(FRAC_PI_2 + eps)?))
}

/// Grid points of `[π/2, θ₀]` where `ψ_lcv < ψ`, with both values. Monitored only.
pub fn envelope_violations(m: usize) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::new();
    for k in 0..=m {
        let theta = FRAC_PI_2 + (THETA0 - FRAC_PI_2) * k as f64 / m as f64;
        let (lcv, p) = (psi_lcv(theta)?, psi(theta)?);
        if lcv < p - 1e-9 {
            out.push((theta, lcv, p));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::p_monte_carlo;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn left_branch_values() {
        assert_eq!(psi(0.0).unwrap(), 0.0);
        assert!((psi(FRAC_PI_2).unwrap() - 1.5).abs() < 1e-14);
        assert!((phi_cdf(FRAC_PI_2).unwrap() - 0.875).abs() < 1e-15);
        // Φ(θ) = 1 − p(π − θ) on the closed-form range.
        for k in 0..=20 {
            let t = FRAC_PI_2 * k as f64 / 20.0;
            let p = p_exact(PI - t).unwrap().value().unwrap();
            assert!((phi_cdf(t).unwrap() - (1.0 - p)).abs() < 1e-14);
        }
    }

    #[test]
    fn left_branch_is_derivative_of_phi() {
        let h = 1e-5;
        for k in 1..40 {
            let t = FRAC_PI_2 * k as f64 / 40.0;
            let d = (phi_cdf(t + h).unwrap() - phi_cdf(t - h).unwrap()) / (2.0 * h);
            assert!((d - psi(t).unwrap()).abs() < 1e-8, "{t}");
        }
    }

    #[test]
    fn psi_areas() {
        let spec = QuadratureSpec::new(1e-12, 1e-12, 1 << 12).unwrap();
        let left = integrate(psi, 0.0, FRAC_PI_2, &spec).unwrap().value;
        assert!((left - 0.875).abs() < 1e-9, "{left}");
        let spec = QuadratureSpec::new(1e-10, 1e-10, 1 << 12).unwrap();
        let right = integrate(psi, FRAC_PI_2, PI, &spec).unwrap().value;
        assert!((right - 0.407_672_74).abs() < 1e-6, "{right}");
    }

    #[test]
    fn lcv_values() {
        assert!((psi_lcv(FRAC_PI_2).unwrap() - 1.5).abs() < 1e-15);
        assert!(psi_lcv(THETA0).unwrap().abs() < 1e-15);
        let closed = (THETA0 - FRAC_PI_2) * (1.5 / LCV_BASE.ln() - 1.0);
        assert!((psi_lcv_integral(THETA0).unwrap() - closed).abs() < 1e-15);
        assert!((closed - 0.2165).abs() < 1e-4);
        for k in 0..=10 {
            let t = FRAC_PI_2 + (THETA0 - FRAC_PI_2) * k as f64 / 10.0;
            let a = psi_lcv_integral(t).unwrap();
            let b = psi_lcv_integral_quad(t).unwrap();
            assert!((a - b).abs() < 1e-12, "{t}: {a} vs {b}");
        }
        assert!(psi_lcv(1.5).is_err());
        assert!(psi_lcv(2.0).is_err());
    }

    #[test]
    fn bounds_at_88_degrees() {
        let q = q_bound(deg(88.0)).unwrap();
        assert!((q - 0.0765).abs() < 5e-4, "{q}");
        let ql = q_lcv_bound(deg(88.0)).unwrap();
        assert!((ql - 0.0766).abs() < 5e-4, "{ql}");
        assert!(ql >= q);
        // Both tend to 1/8 at π/2.
        assert!((q_bound(FRAC_PI_2 - 1e-9).unwrap() - 0.125).abs() < 1e-6);
        assert!((q_lcv_bound(FRAC_PI_2 - 1e-9).unwrap() - 0.125).abs() < 1e-8);
    }

    #[test]
    fn domains() {
        assert!(q_bound(0.0).is_err());
        assert!(q_bound(FRAC_PI_2).is_err());
        assert!(q_lcv_bound(deg(70.0)).is_err());
        assert!(q_lcv_bound(deg(95.0)).is_err());
        assert!(psi(-0.1).is_err());
        let r = bound_report(deg(60.0)).unwrap();
        assert!(r.q.is_some() && r.q_lcv.is_none());
        assert_eq!(r.p_exact, PExact::Value(0.0));
        let r = bound_report(deg(100.0)).unwrap();
        assert!(r.q.is_none() && r.q_lcv.is_none());
    }

    #[test]
    fn thresholds() {
        let a = q_threshold().unwrap().to_degrees();
        assert!((a - 84.25).abs() < 0.05, "{a}");
        let b = q_lcv_threshold().unwrap().to_degrees();
        assert!((b - 83.90).abs() < 0.05, "{b}");
    }

    #[test]
    fn lcv_is_tighter_up_to_88_degrees() {
        let top = 88f64.to_radians();
        for k in 1..=100 {
            let w = OMEGA0 + (top - OMEGA0) * k as f64 / 100.0;
            assert!(q_lcv_bound(w).unwrap() >= q_bound(w).unwrap(), "{w}");
        }
        // Just above π/2, ψ falls like ε·ln ε and dips below ψ_lcv, so the order flips
        // between 88° and 89°, by less than 1e-4.
        let flip = bisect(
            |w| Ok(q_bound(w)? - q_lcv_bound(w)?),
            88f64.to_radians(),
            89f64.to_radians(),
            1e-9,
        )
        .unwrap();
        assert!(flip > 88f64.to_radians() && flip < 89f64.to_radians());
        for d in [88.5, 89.0, 89.5] {
            let w = f64::to_radians(d);
            let gap = q_bound(w).unwrap() - q_lcv_bound(w).unwrap();
            assert!(gap > 0.0 && gap < 1e-4, "{d}: {gap}");
        }
    }

    #[test]
    fn bounds_stay_below_simulation() {
        for d in [85.5, 87.0, 88.5, 89.5] {
            let e = p_monte_carlo(deg(d), 100_000, 31).unwrap();
            let r = bound_report(deg(d)).unwrap();
            assert!(r.q.unwrap() <= e.p_hat + 3.0 * e.std_err, "{d}");
            assert!(r.q_lcv.unwrap() <= e.p_hat + 3.0 * e.std_err, "{d}");
            assert!(r.gilbert >= e.p_hat - 3.0 * e.std_err, "{d}");
        }
    }

    #[test]
    fn dominance_small_run() {
        let grid = default_dominance_grid(30);
        let r = dominance_check(100_000, &grid, 3).unwrap();
        assert_eq!(r.refined_violations, 0);
        assert_eq!(r.crude_violations, 0);
        let last = r.points.last().unwrap();
        assert_eq!(last.xi, PI);
        assert_eq!(last.f_hat, 1.0);
        assert!((last.g_cdf * 32.0 * KAPPA_CLOSED - 3.2614).abs() < 1e-3);
    }

    #[test]
    fn monitored_reports_run() {
        let (l, r) = psi_continuity(1e-6).unwrap();
        assert!((l - 1.5).abs() < 1e-5);
        assert!((r - 1.5).abs() < 1e-3);
        envelope_violations(50).unwrap();
    }
}

//! Adaptive quadrature and the integrals built on it.
//!
//! The conditional probability that a random tetrahedron is well-centered with an acute base,
//! given that the base's circumscribing cap on the apex side has radius `θ`, is
//!
//! ```text
//! P{E | θ} = ∬_acute (3λ(α, β, θ) − π)/(4π) · f(α, β) dα dβ
//! ```
//!
//! where `f` is [`sphere_angle_density`] and the acute region is `α, β < π/2 < α + β`.
//! From it follow `κ = ∫ (3/2) sin³θ P{E|θ} dθ`, the density `g` and its distribution `G`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::densities::{lambda_from_angles, lambda_from_roots, sphere_angle_density};
use crate::error::{Error, Result};
use crate::geom::KAPPA_CLOSED;

/// Tolerances for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_subdivisions: 1 << 15,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::domain("abs_tol", abs_tol, "(0, ∞)"));
        }
        if !(rel_tol >= 0.0) {
            return Err(Error::domain("rel_tol", rel_tol, "[0, ∞)"));
        }
        if max_subdivisions < 1 {
            return Err(Error::domain(
                "max_subdivisions",
                max_subdivisions as f64,
                "[1, ∞)",
            ));
        }
        Ok(QuadratureSpec {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    /// Budget for an integral nested inside this one: both tolerances divided by `factor`.
    pub fn inner(&self, factor: f64) -> Self {
        QuadratureSpec {
            abs_tol: self.abs_tol / factor,
            rel_tol: self.rel_tol / factor,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_931_619,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
/// 10-point Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Gauss–Kronrod panel with the QUADPACK error heuristic.
fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = (fc * WGK[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        return Err(Error::NotConverged {
            estimate: value,
            error_bound: f64::INFINITY,
        });
    }
    Ok(Segment { a, b, value, error })
}

/// Globally adaptive Gauss–Kronrod integration of a fallible integrand over `[a, b]`.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol·|I|)`; splitting more
/// than `max_subdivisions` panels yields [`Error::NotConverged`] with the best estimate.
pub fn integrate<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
        });
    }
    let first = gk21(&mut f, a, b)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tol {
            break;
        }
        if heap.len() >= spec.max_subdivisions {
            return Err(Error::NotConverged {
                estimate: value,
                error_bound: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Panel can no longer be split in floating point.
            return Err(Error::NotConverged {
                estimate: value,
                error_bound: error,
            });
        }
        let left = gk21(&mut f, worst.a, mid)?;
        let right = gk21(&mut f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(QuadResult { value, error })
}

fn check_theta(theta: f64) -> Result<()> {
    if !(FRAC_PI_2..=PI).contains(&theta) {
        return Err(Error::domain("theta", theta, "[π/2, π]"));
    }
    Ok(())
}

/// `P{E | θ}` in the inscribed-angle chart. At `θ = π/2` this is the limit `1/4`.
pub fn prob_e_given_theta(theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_theta(theta)?;
    if theta == PI {
        return Ok(0.0);
    }
    let inner = spec.inner(10.0);
    let outer = integrate(
        |alpha| {
            Ok(integrate(
                |beta| {
                    let lam = lambda_from_angles(alpha, beta, theta)?;
                    Ok((3.0 * lam - PI) / (4.0 * PI) * sphere_angle_density(alpha, beta))
                },
                FRAC_PI_2 - alpha,
                FRAC_PI_2,
                &inner,
            )?
            .value)
        },
        0.0,
        FRAC_PI_2,
        spec,
    )?;
    Ok(outer.value)
}

/// Substituted chord chart: `a = 2r − u²`, `b = 2r − v²`.
///
/// Returns `(a, b, √(4r²−a²), √(4r²−b²), δ·|∂(a,b)/∂(u,v)|)`; the Jacobian `4uv` cancels the
/// inverse square roots of the acute density exactly.
fn substituted(u: f64, v: f64, r: f64) -> (f64, f64, f64, f64, f64) {
    let a = 2.0 * r - u * u;
    let b = 2.0 * r - v * v;
    let pa = (2.0 * r + a).sqrt();
    let pb = (2.0 * r + b).sqrt();
    let r2 = r * r;
    let weight = a * b / (6.0 * PI * r2 * r2) * 4.0 * (a * v / pa + b * u / pb);
    (a, b, u * pa, v * pb, weight)
}

/// Integrates `h(a, b, √(4r²−a²), √(4r²−b²)) · δ(a, b, θ)` over the acute chord region in
/// the substituted chart.
fn chord_chart_integral<H>(theta: f64, spec: &QuadratureSpec, h: H) -> Result<f64>
where
    H: Fn(f64, f64, f64, f64, f64) -> Result<f64>,
{
    let r = theta.sin();
    let inner = spec.inner(10.0);
    let v_max = (2.0 * r).sqrt();
    let outer = integrate(
        |v| {
            let b = 2.0 * r - v * v;
            // a > √(4r² − b²) = v√(2r + b).
            let u_max = (2.0 * r - v * (2.0 * r + b).sqrt()).max(0.0).sqrt();
            Ok(integrate(
                |u| {
                    let (a, b, sa, sb, w) = substituted(u, v, r);
                    Ok(h(a, b, sa, sb, r)? * w)
                },
                0.0,
                u_max,
                &inner,
            )?
            .value)
        },
        0.0,
        v_max,
        spec,
    )?;
    Ok(outer.value)
}

/// `P{E | θ}` evaluated in the chord chart with endpoint singularities substituted away.
/// An independent route to [`prob_e_given_theta`].
pub fn prob_e_given_theta_chord_chart(theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_theta(theta)?;
    if theta == PI {
        return Ok(0.0);
    }
    chord_chart_integral(theta, spec, |a, b, sa, sb, r| {
        let lam = lambda_from_roots(a, b, sa, sb, r)?;
        Ok((3.0 * lam - PI) / (4.0 * PI))
    })
}

/// `∬ δ(a, b, θ) da db`, the probability that the inscribed triangle is acute.
pub fn delta_mass(theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::domain("theta", theta, "(0, π)"));
    }
    chord_chart_integral(theta, spec, |_, _, _, _, _| Ok(1.0))
}

/// `∬ over (0, 2r)²` of the full chord density; should be one.
pub fn trivariate_mass(theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::domain("theta", theta, "(0, π)"));
    }
    let r = theta.sin();
    let inner = spec.inner(10.0);
    let root = (2.0 * r).sqrt();
    // With a = 2r − u², b = 2r − v² the density times 4uv is
    // ab/(6πr⁴) · 4 (a·s_b + b·s_a + |a·s_b − b·s_a|) / (√(2r+a)√(2r+b)),
    // which has a kink on u = v; the inner integral is split there.
    let integrand = |u: f64, v: f64| {
        let a = 2.0 * r - u * u;
        let b = 2.0 * r - v * v;
        let (pa, pb) = ((2.0 * r + a).sqrt(), (2.0 * r + b).sqrt());
        let (sa, sb) = (u * pa, v * pb);
        let (x, y) = (a * sb, b * sa);
        a * b / (6.0 * PI * r.powi(4)) * 4.0 * (x + y + (x - y).abs()) / (pa * pb)
    };
    let outer = integrate(
        |v| {
            let lo = integrate(|u| Ok(integrand(u, v)), 0.0, v, &inner)?.value;
            let hi = integrate(|u| Ok(integrand(u, v)), v, root, &inner)?.value;
            Ok(lo + hi)
        },
        0.0,
        root,
        spec,
    )?;
    Ok(outer.value)
}

/// Density of the larger circumcap radius of three uniform points, `(3/2) sin³θ` on `(π/2, π)`.
pub fn circumradius_density(theta: f64) -> f64 {
    1.5 * theta.sin().powi(3)
}

/// `κ = P{E}` by outer adaptive quadrature over `θ`, with `P{E|θ}` at one tenth of the
/// tolerance.
pub fn kappa(spec: &QuadratureSpec) -> Result<f64> {
    let inner = spec.inner(10.0);
    Ok(integrate(
        |t| Ok(circumradius_density(t) * prob_e_given_theta(t, &inner)?),
        FRAC_PI_2,
        PI,
        spec,
    )?
    .value)
}

/// Conditional density of `θ_abc` given `E`, normalized with the closed-form `κ`.
pub fn g_density(theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(circumradius_density(theta) * prob_e_given_theta(theta, spec)? / KAPPA_CLOSED)
}

/// `G(θ) = ∫_{π/2}^{θ} g`, through the shared interpolation table when `spec` is the default.
pub fn g_cdf(theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    if *spec == QuadratureSpec::default() {
        PeTable::shared()?.cdf(theta)
    } else {
        PeTable::build(spec, PeTable::DEFAULT_NODES)?.cdf(theta)
    }
}

/// `P{E | θ}` sampled on a Chebyshev grid and interpolated barycentrically.
///
/// Near `θ = π/2` the function behaves like `1/4 + c·ε ln ε` with `ε = θ − π/2`, which
/// ruins polynomial convergence in `θ`. The grid therefore lives in `t ∈ [0, 1]` with
/// `θ = π/2 + (π/2) t³`, where the singular term becomes `t³ ln t` and the Chebyshev
/// coefficients decay like `k⁻⁷`.
#[derive(Debug, Clone)]
pub struct PeTable {
    /// Chebyshev points of the second kind on `[-1, 1]`, `x_k = cos(kπ/n)`.
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

static SHARED: OnceLock<std::result::Result<PeTable, String>> = OnceLock::new();

const GRADING: i32 = 3;

fn theta_of_x(x: f64) -> f64 {
    let t = 0.5 * (x + 1.0);
    FRAC_PI_2 + FRAC_PI_2 * t.powi(GRADING)
}

fn x_of_theta(theta: f64) -> f64 {
    let t = ((theta - FRAC_PI_2) / FRAC_PI_2).max(0.0).cbrt();
    2.0 * t - 1.0
}

/// `dθ/dx` for the graded map.
fn dtheta_dx(x: f64) -> f64 {
    let t = 0.5 * (x + 1.0);
    FRAC_PI_2 * GRADING as f64 * t.powi(GRADING - 1) * 0.5
}

impl PeTable {
    pub const DEFAULT_NODES: usize = 96;

    /// Builds a table with `n + 1` nodes, each evaluated at `spec`'s tolerance.
    /// Nodes are computed in parallel; every node is a pure function of its position, so
    /// the table does not depend on the thread count.
    pub fn build(spec: &QuadratureSpec, n: usize) -> Result<Self> {
        let nodes: Vec<f64> = (0..=n).map(|k| (PI * k as f64 / n as f64).cos()).collect();
        let values = nodes
            .par_iter()
            .map(|&x| prob_e_given_theta(theta_of_x(x).min(PI), spec))
            .collect::<Result<Vec<_>>>()?;
        let weights = (0..=n)
            .map(|k| {
                let w = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k == n {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        Ok(PeTable {
            nodes,
            values,
            weights,
        })
    }

    /// The table for the default tolerances, built once per process.
    pub fn shared() -> Result<&'static PeTable> {
        SHARED
            .get_or_init(|| {
                PeTable::build(&QuadratureSpec::default(), Self::DEFAULT_NODES)
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|msg| Error::Argument(format!("interpolation table unavailable: {msg}")))
    }

    fn interpolate(&self, x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xk, &fk), &wk) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let d = x - xk;
            if d == 0.0 {
                return fk;
            }
            let c = wk / d;
            num += c * fk;
            den += c;
        }
        num / den
    }

    /// Interpolated `P{E | θ}` on `[π/2, π]`.
    pub fn prob_e(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.interpolate(x_of_theta(theta)))
    }

    /// Interpolated `g(θ)`.
    pub fn g(&self, theta: f64) -> Result<f64> {
        Ok(circumradius_density(theta) * self.prob_e(theta)? / KAPPA_CLOSED)
    }

    fn g_in_x(&self, x: f64) -> f64 {
        let theta = theta_of_x(x);
        circumradius_density(theta) * self.interpolate(x) / KAPPA_CLOSED * dtheta_dx(x)
    }

    fn integrate_x<F: Fn(f64) -> f64>(&self, x_hi: f64, weight: F) -> Result<f64> {
        let spec = QuadratureSpec::new(1e-13, 1e-13, 1 << 12)?;
        Ok(integrate(
            |x| Ok(weight(theta_of_x(x)) * self.g_in_x(x)),
            -1.0,
            x_hi,
            &spec,
        )?
        .value)
    }

    /// `G(θ) = ∫_{π/2}^{θ} g(t) dt`.
    pub fn cdf(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        self.integrate_x(x_of_theta(theta), |_| 1.0)
    }

    /// `(∫θ g, ∫θ² g)` over `(π/2, π)`.
    pub fn moments(&self) -> Result<(f64, f64)> {
        Ok((
            self.integrate_x(1.0, |t| t)?,
            self.integrate_x(1.0, |t| t * t)?,
        ))
    }
}

//! Coverage of the unit sphere by four random circular caps.
//!
//! The crate is organised bottom-up:
//!
//! * [`geom`] – unit vectors, caps, tetrahedron predicates, spherical areas, sampling.
//! * [`min_cap`] – the minimal enclosing cap of up to four points (`θ_min`).
//! * [`densities`] – closed-form triangle densities and the spherical angle map `λ`.
//! * [`quad`] – adaptive Gauss–Kronrod machinery and the conditional probability
//!   `P{E | θ}`, the constant `κ`, the density `g` and its distribution `G`.
//! * [`coverage`] – exact, bounded and simulated coverage probability.
//! * [`bounds`] – the dominating functions `ψ`, `ψ_lcv` and the lower bounds `q`, `q_lcv`.
//! * [`mc_lab`] – seeded, thread-count-invariant Monte Carlo experiments and histograms.
//! * [`cli`] – the command line front end.

// Quadrature tables keep their published digits; `!(x > 0.0)` is how NaN gets rejected.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod coverage;
pub mod densities;
pub mod error;
pub mod geom;
pub mod mc_lab;
pub mod min_cap;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
pub use geom::{Cap, Constants, PointQuad, UnitVector};

//! Command-line front end. Angles are degrees here and radians everywhere else; the
//! conversion happens in [`radians`] only.
//!
//! Exit codes: 0 success, 1 a `check` failed or a file could not be written, 2 bad argument
//! or value outside its domain, 3 quadrature did not converge.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bounds::{
    bound_report, default_dominance_grid, dominance_check, q_lcv_threshold, q_threshold,
};
use crate::coverage::{covers, covers_by_arrangement, p_exact, p_monte_carlo, sample_caps, PExact};
use crate::error::Error;
use crate::geom::{PointQuad, KAPPA_CLOSED};
use crate::mc_lab::{
    emit_csv, format_real, hist_theta_abc, hist_theta_min, lcv_rows, overlay_excess,
    run_tetra_experiment, theta_abc_fit, theta_min_fit, write_rows, Estimate,
};
use crate::min_cap::theta_min;
use crate::quad::{delta_mass, kappa, prob_e_given_theta, PeTable, QuadratureSpec};
use crate::rng::{stream, DEFAULT_SEED};

const SEED_HELP: &str = "Seed, decimal or 0x-prefixed hex [default: 0x5EED_CA95]";

#[derive(Parser, Debug)]
#[command(
    name = "capcover",
    version,
    about = "Coverage of the sphere by four random caps"
)]
pub struct Cli {
    /// Worker threads for Monte Carlo batches (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print reals with 17 significant digits
    #[arg(long, global = true)]
    full: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form coverage probability, or OPEN where none is known
    Exact {
        #[arg(long, allow_hyphen_values = true)]
        omega_deg: f64,
    },
    /// Lower bounds q, q_lcv and Gilbert's upper bound; thresholds when no angle is given
    Bounds {
        #[arg(long, allow_hyphen_values = true)]
        omega_deg: Option<f64>,
    },
    /// P{well-centered with acute base}
    Kappa {
        #[arg(long, value_enum, default_value_t = KappaMethod::Quad)]
        method: KappaMethod,
        /// Trials for --method mc
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, value_parser = parse_seed, help = SEED_HELP)]
        seed: Option<u64>,
    },
    /// P{E | θ} by direct quadrature
    Pe {
        #[arg(long, allow_hyphen_values = true)]
        theta_deg: f64,
    },
    /// Table of P{E|θ}, g and G on a uniform θ grid over [90°, 180°]
    Gdist {
        /// Number of grid intervals
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulated coverage probability
    Coverage {
        #[arg(long, allow_hyphen_values = true)]
        omega_deg: f64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, value_parser = parse_seed, help = SEED_HELP)]
        seed: Option<u64>,
    },
    /// Random tetrahedron statistics
    Simulate {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Histogram CSV of θ_abc given E, or of θ_min
    Hist {
        #[arg(value_enum)]
        kind: HistKind,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[arg(long, value_parser = parse_seed, help = SEED_HELP)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Consistency checks; exit 1 when one fails
    Check {
        #[arg(value_enum)]
        which: CheckKind,
        /// Sample size (duality: instances per angle; dominance: quads)
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, value_parser = parse_seed, help = SEED_HELP)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum Experiment {
    Tetra {
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, value_parser = parse_seed, help = SEED_HELP)]
        seed: Option<u64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KappaMethod {
    Quad,
    Closed,
    Mc,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum HistKind {
    ThetaAbc,
    ThetaMin,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CheckKind {
    Duality,
    Dominance,
    DeltaNorm,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.replace('_', "");
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|e| format!("{s:?}: {e}"))
}

/// An error together with the flag it came from, if any.
struct Failure {
    flag: Option<&'static str>,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { flag: None, error }
    }
}

fn at(flag: &'static str) -> impl Fn(Error) -> Failure {
    move |error| Failure {
        flag: Some(flag),
        error,
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Degrees from the command line to radians. The only place the conversion happens.
fn radians(flag: &'static str, deg: f64) -> std::result::Result<f64, Failure> {
    if !deg.is_finite() {
        return Err(Failure {
            flag: Some(flag),
            error: Error::Argument(format!("{deg} is not a finite angle")),
        });
    }
    Ok(deg.to_radians())
}

struct Fmt {
    full: bool,
}

impl Fmt {
    /// `digits` decimals, or 17 significant digits with `--full`.
    fn real(&self, x: f64, digits: usize) -> String {
        if self.full {
            format_real(x)
        } else {
            format!("{x:.digits$}")
        }
    }

    /// Upper bounds are rounded up so the printed value remains a bound.
    fn upper(&self, x: f64, digits: usize) -> String {
        if self.full {
            return format_real(x);
        }
        let scale = 10f64.powi(digits as i32);
        format!("{:.digits$}", (x * scale).ceil() / scale)
    }

    fn estimate(&self, e: &Estimate, digits: usize) -> String {
        format!(
            "{} ± {}",
            self.real(e.value, digits),
            self.real(e.std_err, digits)
        )
    }
}

fn seed_text(seed: u64) -> String {
    format!("{seed:#X}").replace("0X", "0x")
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    // Output is buffered so the dispatch can run inside a worker pool.
    let mut buf: Vec<u8> = Vec::new();
    let outcome = match cli.threads {
        Some(0) => Err(Failure {
            flag: Some("--threads"),
            error: Error::Argument("must be at least 1".into()),
        }),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &mut buf)),
            Err(e) => Err(Failure {
                flag: Some("--threads"),
                error: Error::Argument(e.to_string()),
            }),
        },
        None => dispatch(&cli, &mut buf),
    };
    if out.write_all(&buf).and_then(|_| out.flush()).is_err() {
        return 1;
    }
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let prefix = f.flag.map(|fl| format!("{fl}: ")).unwrap_or_default();
            let _ = writeln!(err, "error: {prefix}{}", f.error);
            match f.error {
                Error::NotConverged { .. } => 3,
                Error::Io { .. } => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let fmt = Fmt { full: cli.full };
    let io = |e: std::io::Error| {
        Failure::from(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
    };
    match &cli.command {
        Command::Exact { omega_deg } => {
            let omega = radians("--omega-deg", *omega_deg)?;
            let line = match p_exact(omega).map_err(at("--omega-deg"))? {
                PExact::Value(v) => fmt.real(v, 4),
                PExact::Open => "OPEN (omega0 < omega < 90°; no closed form known)".into(),
            };
            writeln!(out, "p({omega_deg}°) = {line}").map_err(io)?;
        }
        Command::Bounds { omega_deg: None } => {
            let a = q_threshold()?.to_degrees();
            let b = q_lcv_threshold()?.to_degrees();
            writeln!(out, "q>0 for omega>{}°", fmt.real(a, 2)).map_err(io)?;
            writeln!(out, "q_lcv>0 for omega>{}°", fmt.real(b, 2)).map_err(io)?;
        }
        Command::Bounds {
            omega_deg: Some(deg),
        } => {
            let omega = radians("--omega-deg", *deg)?;
            let r = bound_report(omega).map_err(at("--omega-deg"))?;
            let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| fmt.real(x, 4));
            let p = match r.p_exact {
                PExact::Value(v) => fmt.real(v, 4),
                PExact::Open => "OPEN".into(),
            };
            writeln!(
                out,
                "omega={deg}° q={} q_lcv={} gilbert={} p={p}",
                opt(r.q),
                opt(r.q_lcv),
                fmt.upper(r.gilbert, 4)
            )
            .map_err(io)?;
        }
        Command::Kappa { method, n, seed } => match method {
            KappaMethod::Closed => {
                writeln!(out, "kappa = {}", fmt.real(KAPPA_CLOSED, 12)).map_err(io)?
            }
            KappaMethod::Quad => {
                let k = kappa(&QuadratureSpec::default())?;
                writeln!(out, "kappa = {}", fmt.real(k, 12)).map_err(io)?;
            }
            KappaMethod::Mc => {
                let seed = seed.unwrap_or(DEFAULT_SEED);
                let r = run_tetra_experiment(*n, seed).map_err(at("--n"))?;
                writeln!(
                    out,
                    "kappa = {} (n={n}, seed={})",
                    fmt.estimate(&r.kappa_hat, 5),
                    seed_text(seed)
                )
                .map_err(io)?;
            }
        },
        Command::Pe { theta_deg } => {
            let theta = radians("--theta-deg", *theta_deg)?;
            let p =
                prob_e_given_theta(theta, &QuadratureSpec::default()).map_err(at("--theta-deg"))?;
            writeln!(out, "P(E | theta={theta_deg}°) = {}", fmt.real(p, 12)).map_err(io)?;
        }
        Command::Gdist { grid, out: path } => {
            if *grid < 1 {
                return Err(at("--grid")(Error::Argument("must be at least 1".into())));
            }
            write_gdist(*grid, path)?;
            writeln!(out, "wrote {} rows to {}", grid + 1, path.display()).map_err(io)?;
        }
        Command::Coverage { omega_deg, n, seed } => {
            let omega = radians("--omega-deg", *omega_deg)?;
            let seed = seed.unwrap_or(DEFAULT_SEED);
            if *n == 0 {
                return Err(at("--n")(Error::Argument("must be at least 1".into())));
            }
            let e = p_monte_carlo(omega, *n, seed).map_err(at("--omega-deg"))?;
            let exact = match p_exact(omega)? {
                PExact::Value(v) => fmt.real(v, 4),
                PExact::Open => "OPEN".into(),
            };
            writeln!(
                out,
                "omega={omega_deg}° p_hat={} se={} n={n} seed={} exact={exact}",
                fmt.real(e.p_hat, 4),
                fmt.real(e.std_err, 4),
                seed_text(seed)
            )
            .map_err(io)?;
        }
        Command::Simulate {
            experiment: Experiment::Tetra { n, seed },
        } => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let r = run_tetra_experiment(*n, seed).map_err(at("--n"))?;
            let c = r.n_counts;
            let text = format!(
                "n={n} seed={}\n\
                 p_wc = {}\n\
                 p_acute = {}\n\
                 kappa_hat = {}\n\
                 e_n_hat = {}\n\
                 n_counts = 0:{} 1:{} 2:{} 3:{} 4:{}\n\
                 min_n = {} (exploratory)\n",
                seed_text(seed),
                fmt.estimate(&r.p_wc, 5),
                fmt.estimate(&r.p_acute, 5),
                fmt.estimate(&r.kappa_hat, 5),
                fmt.estimate(&r.e_n_hat, 4),
                c[0],
                c[1],
                c[2],
                c[3],
                c[4],
                r.min_n.map_or("n/a".into(), |m| m.to_string()),
            );
            write!(out, "{text}").map_err(io)?;
        }
        Command::Hist {
            kind,
            n,
            bins,
            seed,
            out: path,
        } => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            if *n == 0 {
                return Err(at("--n")(Error::Argument("must be at least 1".into())));
            }
            if *bins < 2 {
                return Err(at("--bins")(Error::Argument("must be at least 2".into())));
            }
            match kind {
                HistKind::ThetaAbc => {
                    let h = hist_theta_abc(*n, *bins, seed)?;
                    emit_csv(&h, path)?;
                    let chi = theta_abc_fit(&h)?;
                    writeln!(
                        out,
                        "wrote {} bins to {}; chi2={} dof={} p={}",
                        h.bins(),
                        path.display(),
                        fmt.real(chi.statistic, 2),
                        chi.dof,
                        fmt.real(chi.p_value, 4)
                    )
                    .map_err(io)?;
                }
                HistKind::ThetaMin => {
                    let h = hist_theta_min(*n, *bins, seed)?;
                    emit_csv(&h, path)?;
                    let lcv = lcv_path(path);
                    write_rows(&lcv_rows(&h)?, &lcv)?;
                    let chi = theta_min_fit(&h)?;
                    let excess = overlay_excess(&h, 3.0).len();
                    writeln!(
                        out,
                        "wrote {} bins to {} and {}; chi2={} dof={} p={} bins_above_psi={excess}",
                        h.bins(),
                        path.display(),
                        lcv.display(),
                        fmt.real(chi.statistic, 2),
                        chi.dof,
                        fmt.real(chi.p_value, 4)
                    )
                    .map_err(io)?;
                }
            }
        }
        Command::Check { which, n, seed } => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let passed = match which {
                CheckKind::Duality => check_duality(n.unwrap_or(100_000), seed, out)?,
                CheckKind::Dominance => check_dominance(n.unwrap_or(1_000_000), seed, &fmt, out)?,
                CheckKind::DeltaNorm => check_delta_norm(&fmt, out)?,
            };
            return Ok(if passed { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// `foo.csv` → `foo.lcv.csv`.
pub fn lcv_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.lcv.csv"))
}

fn write_gdist(grid: usize, path: &Path) -> std::result::Result<(), Failure> {
    let table = PeTable::shared()?;
    let io = |source| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "theta,pe,g,cdf").map_err(io)?;
    for k in 0..=grid {
        let theta = (FRAC_PI_2 + FRAC_PI_2 * k as f64 / grid as f64).min(PI);
        writeln!(
            w,
            "{},{},{},{}",
            format_real(theta),
            format_real(table.prob_e(theta)?),
            format_real(table.g(theta)?),
            format_real(table.cdf(theta)?)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn check_duality(n: u64, seed: u64, out: &mut dyn Write) -> std::result::Result<bool, Failure> {
    let io = |e| {
        Failure::from(Error::Io {
            path: "<stdout>".into(),
            source: e,
        })
    };
    let mut ok = true;
    for (j, deg) in [75.0, 85.0, 95.0, 110.0].into_iter().enumerate() {
        let omega = f64::to_radians(deg);
        let (mut compared, mut disagree) = (0u64, 0u64);
        for i in 0..n {
            let caps = sample_caps(&mut stream(seed ^ j as u64, i), omega)?;
            let q = PointQuad::new(
                -caps[0].center,
                -caps[1].center,
                -caps[2].center,
                -caps[3].center,
            );
            if (theta_min(&q)? - (PI - omega)).abs() < 1e-9 {
                continue;
            }
            compared += 1;
            disagree += (covers(&caps) != covers_by_arrangement(&caps)) as u64;
        }
        ok &= disagree == 0;
        writeln!(
            out,
            "duality omega={deg}° compared={compared} disagreements={disagree}"
        )
        .map_err(io)?;
    }
    Ok(ok)
}

fn check_dominance(
    n: u64,
    seed: u64,
    fmt: &Fmt,
    out: &mut dyn Write,
) -> std::result::Result<bool, Failure> {
    let io = |e| {
        Failure::from(Error::Io {
            path: "<stdout>".into(),
            source: e,
        })
    };
    let r = dominance_check(n, &default_dominance_grid(90), seed).map_err(at("--n"))?;
    let worst = |m: fn(&crate::bounds::DominancePoint) -> f64| {
        r.points
            .iter()
            .map(|p| m(p) / p.sigma.max(f64::MIN_POSITIVE))
            .fold(f64::INFINITY, f64::min)
    };
    writeln!(
        out,
        "dominance n={n} grid={} refined_violations={} crude_violations={} min_refined_margin_sigmas={} min_crude_margin_sigmas={}",
        r.points.len(),
        r.refined_violations,
        r.crude_violations,
        fmt.real(worst(|p| p.refined_margin), 2),
        fmt.real(worst(|p| p.crude_margin), 2)
    )
    .map_err(io)?;
    Ok(r.refined_violations == 0 && r.crude_violations == 0)
}

fn check_delta_norm(fmt: &Fmt, out: &mut dyn Write) -> std::result::Result<bool, Failure> {
    let io = |e| {
        Failure::from(Error::Io {
            path: "<stdout>".into(),
            source: e,
        })
    };
    let spec = QuadratureSpec::new(1e-11, 1e-11, 1 << 15)?;
    let mut ok = true;
    for deg in [95.0, 110.0, 125.0, 140.0, 155.0, 170.0] {
        let m = delta_mass(f64::to_radians(deg), &spec)?;
        let pass = (m - 0.5).abs() <= 1e-8;
        ok &= pass;
        writeln!(
            out,
            "delta-norm theta={deg}° mass={} {}",
            fmt.real(m, 10),
            if pass { "ok" } else { "FAIL" }
        )
        .map_err(io)?;
    }
    Ok(ok)
}

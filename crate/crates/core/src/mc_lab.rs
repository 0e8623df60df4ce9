//! Seeded Monte Carlo experiments: tetrahedron statistics, histograms of `θ_abc` and
//! `θ_min`, goodness-of-fit tests against the theoretical curves, and CSV output.
//!
//! Trial `i` always draws from stream `(seed, i)` and samples are gathered in trial order,
//! so every result is a pure function of its arguments and independent of the thread count.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bounds::{phi_cdf, psi, psi_lcv};
use crate::error::{Error, Result};
use crate::geom::{circumcap_containing, is_acute_chordal, is_well_centered, PointQuad, THETA0};
use crate::min_cap::theta_min;
use crate::quad::PeTable;
use crate::rng::{map_chunks, stream};

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub n: u64,
}

impl Estimate {
    pub fn proportion(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Estimate {
            value: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// Whether `target` is within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_err
    }
}

/// Results of [`run_tetra_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct TetraReport {
    pub n: u64,
    pub seed: u64,
    /// P{ABCD is well-centered}.
    pub p_wc: Estimate,
    /// P{ABC is acute}.
    pub p_acute: Estimate,
    /// P{E}: well-centered with acute base.
    pub kappa_hat: Estimate,
    /// Number of acute faces `N` among well-centered quads: `n_counts[k]` quads had `N = k`.
    pub n_counts: [u64; 5],
    /// Mean of `N` over well-centered quads.
    pub e_n_hat: Estimate,
    /// Smallest `N` observed, if any quad was well-centered.
    pub min_n: Option<usize>,
}

#[derive(Default)]
struct Tally {
    wc: u64,
    acute: u64,
    event: u64,
    n_counts: [u64; 5],
}

/// Samples `n` quads and tallies well-centeredness, acute faces and the event `E`.
pub fn run_tetra_experiment(n: u64, seed: u64) -> Result<TetraReport> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let tallies = map_chunks(n, |range| {
        let mut t = Tally::default();
        for i in range {
            let q = PointQuad::sample(&mut stream(seed, i));
            let acute = is_acute_chordal(&q.a, &q.b, &q.c)?;
            t.acute += acute as u64;
            if is_well_centered(&q) {
                t.wc += 1;
                t.event += acute as u64;
                let mut faces = 0;
                for (f, _) in q.faces() {
                    faces += is_acute_chordal(&f[0], &f[1], &f[2])? as usize;
                }
                t.n_counts[faces] += 1;
            }
        }
        Ok::<_, Error>(t)
    });
    let mut total = Tally::default();
    for t in tallies {
        let t = t?;
        total.wc += t.wc;
        total.acute += t.acute;
        total.event += t.event;
        for k in 0..5 {
            total.n_counts[k] += t.n_counts[k];
        }
    }
    let wc = total.wc;
    let (sum, sum2) = total
        .n_counts
        .iter()
        .enumerate()
        .fold((0u64, 0u64), |(s, s2), (k, &c)| {
            (s + k as u64 * c, s2 + (k * k) as u64 * c)
        });
    let e_n_hat = if wc == 0 {
        Estimate {
            value: f64::NAN,
            std_err: f64::NAN,
            n: 0,
        }
    } else {
        let mean = sum as f64 / wc as f64;
        let var = if wc > 1 {
            (sum2 as f64 - wc as f64 * mean * mean) / (wc - 1) as f64
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_err: (var.max(0.0) / wc as f64).sqrt(),
            n: wc,
        }
    };
    Ok(TetraReport {
        n,
        seed,
        p_wc: Estimate::proportion(wc, n),
        p_acute: Estimate::proportion(total.acute, n),
        kappa_hat: Estimate::proportion(total.event, n),
        n_counts: total.n_counts,
        e_n_hat,
        min_n: total.n_counts.iter().position(|&c| c > 0),
    })
}

/// `θ_min` of `n` random quads, in trial order.
pub fn theta_min_samples(n: u64, seed: u64) -> Result<Vec<f64>> {
    let chunks = map_chunks(n, |range| {
        range
            .map(|i| theta_min(&PointQuad::sample(&mut stream(seed, i))))
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(n as usize);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// `θ_abc` for the first `n` trials satisfying `E`, in trial order.
pub fn theta_abc_samples(n: u64, seed: u64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n as usize);
    let mut offset = 0u64;
    while (out.len() as u64) < n {
        // About one trial in ten satisfies E; overshoot a little to avoid a second pass.
        let batch = ((n - out.len() as u64) as f64 * 10.5) as u64 + 1024;
        let chunks = map_chunks(batch, |range| {
            let mut v = Vec::new();
            for i in range {
                let q = PointQuad::sample(&mut stream(seed, offset + i));
                if is_well_centered(&q) && is_acute_chordal(&q.a, &q.b, &q.c)? {
                    v.push(circumcap_containing(&q.a, &q.b, &q.c, &q.d)?.theta);
                }
            }
            Ok::<_, Error>(v)
        });
        for c in chunks {
            out.extend(c?);
        }
        offset += batch;
    }
    out.truncate(n as usize);
    Ok(out)
}

/// A histogram with a theoretical curve sampled at the bin midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `count / (n · width)`.
    pub density: Vec<f64>,
    pub overlay: Vec<f64>,
}

impl Histogram {
    /// Bins `samples` into `bins` equal bins on `[lo, hi]`. Every sample must lie in range.
    pub fn from_samples<F>(
        samples: &[f64],
        lo: f64,
        hi: f64,
        bins: usize,
        overlay: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if bins < 2 {
            return Err(Error::Argument(format!(
                "bins must be at least 2, got {bins}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Argument("no samples".into()));
        }
        let bin_edges: Vec<f64> = (0..=bins)
            .map(|k| lo + (hi - lo) * k as f64 / bins as f64)
            .collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            if !(lo..=hi).contains(&x) {
                return Err(Error::Argument(format!("sample {x} outside [{lo}, {hi}]")));
            }
            let k = (((x - lo) / (hi - lo)) * bins as f64) as usize;
            counts[k.min(bins - 1)] += 1;
        }
        let n = samples.len() as f64;
        let density = counts
            .iter()
            .zip(bin_edges.windows(2))
            .map(|(&c, e)| c as f64 / (n * (e[1] - e[0])))
            .collect();
        let overlay = bin_edges
            .windows(2)
            .map(|e| overlay(0.5 * (e[0] + e[1])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Histogram {
            bin_edges,
            counts,
            density,
            overlay,
        })
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, k: usize) -> f64 {
        self.bin_edges[k + 1] - self.bin_edges[k]
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        0.5 * (self.bin_edges[k] + self.bin_edges[k + 1])
    }
}

/// Histogram of `θ_abc` given `E` on `[π/2, π]`, overlaid with `g`. `n` counts accepted
/// samples, not trials.
pub fn hist_theta_abc(n: u64, bins: usize, seed: u64) -> Result<Histogram> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let table = PeTable::shared()?;
    let samples = theta_abc_samples(n, seed)?;
    Histogram::from_samples(&samples, FRAC_PI_2, PI, bins, |t| table.g(t))
}

/// Histogram of `θ_min` of random quads on `[0, π]`, overlaid with `ψ`.
pub fn hist_theta_min(n: u64, bins: usize, seed: u64) -> Result<Histogram> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let samples = theta_min_samples(n, seed)?;
    Histogram::from_samples(&samples, 0.0, PI, bins, psi)
}

/// Rows of `h` whose midpoint lies in `[π/2, θ₀]`, with `ψ_lcv` as the overlay.
pub fn lcv_rows(h: &Histogram) -> Result<Vec<CsvRow>> {
    (0..h.bins())
        .filter(|&k| (FRAC_PI_2..=THETA0).contains(&h.midpoint(k)))
        .map(|k| {
            Ok(CsvRow {
                bin_left: h.bin_edges[k],
                bin_right: h.bin_edges[k + 1],
                count: h.counts[k],
                density: h.density[k],
                overlay: psi_lcv(h.midpoint(k))?,
            })
        })
        .collect()
}

/// Pearson goodness-of-fit result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson χ² of `observed` against `expected`, merging neighbouring cells until each
/// expects at least 5. The expected counts must be fully specified (no fitted parameters).
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() {
        return Err(Error::Argument(
            "observed and expected differ in length".into(),
        ));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        acc = (acc.0 + o as f64, acc.1 + e);
        if acc.1 >= 5.0 {
            cells.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match cells.last_mut() {
            Some(last) => *last = (last.0 + acc.0, last.1 + acc.1),
            None => cells.push(acc),
        }
    }
    if cells.len() < 2 {
        return Err(Error::Argument("fewer than two cells after merging".into()));
    }
    let statistic = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// χ² of a `θ_abc` histogram against `G`.
pub fn theta_abc_fit(h: &Histogram) -> Result<ChiSquare> {
    let table = PeTable::shared()?;
    let n = h.n() as f64;
    let cdf = h
        .bin_edges
        .iter()
        .map(|&t| table.cdf(t.clamp(FRAC_PI_2, PI)))
        .collect::<Result<Vec<_>>>()?;
    let expected: Vec<f64> = cdf.windows(2).map(|w| n * (w[1] - w[0])).collect();
    chi_square(&h.counts, &expected)
}

/// χ² of a `θ_min` histogram against the exact law on `[0, π/2]`.
///
/// Bins lying wholly in `[0, π/2]` are compared with `Φ`; everything above is pooled into
/// one cell whose expected mass `1 − Φ(edge)` is also exact.
pub fn theta_min_fit(h: &Histogram) -> Result<ChiSquare> {
    let n = h.n() as f64;
    let full = (0..h.bins())
        .take_while(|&k| h.bin_edges[k + 1] <= FRAC_PI_2 + 1e-12)
        .count();
    let mut observed = h.counts[..full].to_vec();
    let mut expected = Vec::with_capacity(full + 1);
    for k in 0..full {
        let b = h.bin_edges[k + 1].min(FRAC_PI_2);
        expected.push(n * (phi_cdf(b)? - phi_cdf(h.bin_edges[k])?));
    }
    let edge = h.bin_edges[full].min(FRAC_PI_2);
    observed.push(h.counts[full..].iter().sum());
    expected.push(n * (1.0 - phi_cdf(edge)?));
    chi_square(&observed, &expected)
}

/// Bins above `π/2` whose empirical density exceeds the overlay by more than `k` binomial
/// standard errors: `(bin index, density, overlay, σ)`.
pub fn overlay_excess(h: &Histogram, k: f64) -> Vec<(usize, f64, f64, f64)> {
    let n = h.n() as f64;
    (0..h.bins())
        .filter(|&i| h.bin_edges[i] >= FRAC_PI_2 - 1e-12)
        .filter_map(|i| {
            let p = h.counts[i] as f64 / n;
            let sigma = (p * (1.0 - p) / n).sqrt() / h.width(i);
            (h.density[i] > h.overlay[i] + k * sigma).then_some((
                i,
                h.density[i],
                h.overlay[i],
                sigma,
            ))
        })
        .collect()
}

/// One CSV line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
    pub density: f64,
    pub overlay: f64,
}

pub const CSV_HEADER: &str = "bin_left,bin_right,count,density,overlay";

/// Seventeen significant digits: enough to round-trip every `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl Histogram {
    pub fn rows(&self) -> Vec<CsvRow> {
        (0..self.bins())
            .map(|k| CsvRow {
                bin_left: self.bin_edges[k],
                bin_right: self.bin_edges[k + 1],
                count: self.counts[k],
                density: self.density[k],
                overlay: self.overlay[k],
            })
            .collect()
    }
}

/// Writes `rows` under [`CSV_HEADER`] with LF line endings.
pub fn write_rows(rows: &[CsvRow], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{CSV_HEADER}").map_err(io)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            format_real(r.bin_left),
            format_real(r.bin_right),
            r.count,
            format_real(r.density),
            format_real(r.overlay)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn emit_csv(h: &Histogram, path: &Path) -> Result<()> {
    write_rows(&h.rows(), path)
}

/// Parses a file written by [`write_rows`].
pub fn read_rows(path: &Path) -> Result<Vec<CsvRow>> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let bad = |line: usize, msg: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if i == 0 {
            if line != CSV_HEADER {
                return Err(bad(1, format!("unexpected header {line:?}")));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(i + 1, format!("expected 5 fields, got {}", f.len())));
        }
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| bad(i + 1, format!("{s:?}: {e}")))
        };
        rows.push(CsvRow {
            bin_left: real(f[0])?,
            bin_right: real(f[1])?,
            count: f[2]
                .parse()
                .map_err(|e| bad(i + 1, format!("{:?}: {e}", f[2])))?,
            density: real(f[3])?,
            overlay: real(f[4])?,
        });
    }
    Ok(rows)
}

/// Reads back a histogram written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Histogram> {
    let rows = read_rows(path)?;
    let Some(first) = rows.first() else {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            line: 2,
            msg: "no rows".into(),
        });
    };
    let mut bin_edges = vec![first.bin_left];
    bin_edges.extend(rows.iter().map(|r| r.bin_right));
    Ok(Histogram {
        bin_edges,
        counts: rows.iter().map(|r| r.count).collect(),
        density: rows.iter().map(|r| r.density).collect(),
        overlay: rows.iter().map(|r| r.overlay).collect(),
    })
}

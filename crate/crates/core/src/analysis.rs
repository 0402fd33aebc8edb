//! Convergence studies, approximate dispersion relations (ADR) and CSV
//! report emission.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::real;
use crate::funcspace::FunctionSpec;
use crate::scheme::Scheme;
use crate::solver::{self, Boundary, Equation, GridSpec, Problem};
use crate::train::{convergence_order, interpolation_error};

pub const ADR_NX: usize = 256;
pub const ADR_POINTS: usize = 64;
/// Step length of the single ADR time step, in units of `dx`.
pub const ADR_DT_FACTOR: f64 = 1e-3;
/// Mode amplitudes below this (relative to the grid size) are unusable.
const AMPLITUDE_FLOOR: f64 = 1e-12;

/// One sampled point of the modified wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct AdrPoint {
    pub scheme: String,
    /// Reduced wavenumber `kappa * dx`.
    pub kappa_dx: f64,
    /// Real part of the modified reduced wavenumber; ideal is `kappa_dx`.
    pub dispersion: f64,
    /// Imaginary part; zero is ideal, negative damps.
    pub dissipation: f64,
    /// Energy that left the initialized mode, relative to its amplitude.
    pub leakage: f64,
}

impl AdrPoint {
    pub fn is_valid(&self) -> bool {
        self.dispersion.is_finite() && self.dissipation.is_finite()
    }
}

/// `ADR_POINTS` evenly spaced reduced wavenumbers in `(0, pi]` that are
/// exact grid modes on `nx` cells.
pub fn default_kappas(nx: usize) -> Vec<f64> {
    let step = (nx / 2 / ADR_POINTS).max(1);
    (1..=nx / 2 / step)
        .map(|k| 2.0 * PI * (k * step) as f64 / nx as f64)
        .collect()
}

/// DFT coefficient `sum_j u_j exp(-2 pi i m j / n)`.
fn dft(u: &[f64], m: usize) -> Complex64 {
    let n = u.len();
    u.iter()
        .enumerate()
        .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * ((m * j) % n) as f64 / n as f64))
        .sum()
}

/// Modified wavenumber by short-time evolution of `sin(kappa x)` and a
/// projection onto the initialized Fourier mode.
///
/// With `a(t)` the mode amplitude, exact transport gives
/// `a(dt) = a(0) exp(-i kappa dt)`, so the modified reduced wavenumber is
/// `i dx / dt * log(a(dt) / a(0))`.
pub fn adr(scheme: &Scheme, kappas: &[f64], nx: usize) -> Result<Vec<AdrPoint>> {
    let grid = GridSpec::new(nx, 0.0, 1.0, Boundary::Periodic)?;
    let dx = grid.dx();
    let dt = ADR_DT_FACTOR * dx;
    kappas
        .iter()
        .map(|&kd| {
            let m_real = kd * nx as f64 / (2.0 * PI);
            let m = m_real.round();
            if !(kd > 0.0 && kd <= PI + 1e-12) || (m_real - m).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "kappa*dx = {kd} is not a grid mode on {nx} cells inside (0, pi]"
                )));
            }
            let m = m as usize;
            let kappa = 2.0 * PI * m as f64;
            // exact cell averages of sin(kappa x)
            let u0: Vec<f64> = (0..nx)
                .map(|i| {
                    let (lo, hi) = (grid.edge(i), grid.edge(i + 1));
                    ((kappa * lo).cos() - (kappa * hi).cos()) / (kappa * dx)
                })
                .collect();
            let u1 = solver::ssp_rk3_step(&u0, dt, |v| {
                solver::rhs(v, &grid, scheme, Equation::Advection)
            })?;
            let (a0, a1) = (dft(&u0, m), dft(&u1, m));
            let floor = AMPLITUDE_FLOOR * nx as f64;
            let (dispersion, dissipation) = if a0.norm() < floor || a1.norm() < floor {
                (f64::NAN, f64::NAN)
            } else {
                let k = Complex64::i() * (a1 / a0).ln() * (dx / dt);
                (k.re, k.im)
            };
            let leaked: f64 = (0..nx)
                .filter(|&k| k != m && k != nx - m)
                .map(|k| dft(&u1, k).norm().powi(2))
                .sum();
            Ok(AdrPoint {
                scheme: scheme.name().to_string(),
                kappa_dx: kd,
                dispersion,
                dissipation,
                leakage: leaked.sqrt() / a1.norm(),
            })
        })
        .collect()
}

/// What a convergence study measures.
#[derive(Debug, Clone)]
pub enum StudyTarget {
    /// Final-time L1 error of a solver run.
    Solve(Problem),
    /// Face-interpolation RMSE on a periodic function.
    Interpolate(FunctionSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub scheme: String,
    pub nx: usize,
    pub dx: f64,
    pub error: f64,
    /// Fitted order over all of this scheme's grids.
    pub slope: f64,
}

/// Errors of every scheme on every grid plus per-scheme fitted orders.
/// Runs in parallel on the current rayon pool; row order is scheme-major
/// and independent of scheduling.
pub fn convergence_study(
    schemes: &[Scheme],
    target: &StudyTarget,
    nx_list: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    if nx_list.len() < 3 {
        return Err(Error::Config(format!(
            "a convergence study needs at least 3 grids, got {}",
            nx_list.len()
        )));
    }
    let jobs: Vec<(usize, usize)> = (0..schemes.len())
        .flat_map(|s| nx_list.iter().map(move |&nx| (s, nx)))
        .collect();
    let errors: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(s, nx)| -> Result<(f64, f64)> {
            let scheme = &schemes[s];
            match target {
                StudyTarget::Solve(p) => {
                    let dx = p.grid(nx)?.dx();
                    Ok((dx, solver::run(p, nx, scheme)?.final_error()))
                }
                StudyTarget::Interpolate(f) => {
                    let (a, b) = f.domain();
                    Ok(((b - a) / nx as f64, interpolation_error(scheme, f, nx)))
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(jobs.len());
    for (s, chunk) in errors.chunks(nx_list.len()).enumerate() {
        let slope = convergence_order(chunk)?.slope;
        for (&nx, &(dx, error)) in nx_list.iter().zip(chunk) {
            rows.push(ConvergenceRow {
                scheme: schemes[s].name().to_string(),
                nx,
                dx,
                error,
                slope,
            });
        }
    }
    Ok(rows)
}

/// Provenance written as the first (comment) line of every report.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Metadata {
    pub version: String,
    pub seed: Option<u64>,
    /// Left empty for byte-reproducible artifacts.
    pub date: Option<String>,
}

impl Metadata {
    pub fn new(seed: Option<u64>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            date: None,
        }
    }

    fn line(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        format!(
            "# version={}, seed={}, date={}",
            self.version,
            opt(self.seed.map(|s| s.to_string())),
            opt(self.date.clone())
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let body = line
            .strip_prefix("# ")
            .ok_or_else(|| Error::Parse("report must start with a `# ` metadata line".into()))?;
        let mut meta = Metadata::default();
        for part in body.split(", ") {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata entry `{part}`")))?;
            let v = (v != "-").then(|| v.to_string());
            match k {
                "version" => meta.version = v.unwrap_or_default(),
                "seed" => {
                    meta.seed = v
                        .map(|s| s.parse().map_err(|e| Error::Parse(format!("seed: {e}"))))
                        .transpose()?
                }
                "date" => meta.date = v,
                _ => return Err(Error::Parse(format!("unknown metadata key `{k}`"))),
            }
        }
        Ok(meta)
    }
}

/// A CSV row type with a fixed column order.
pub trait Record: Sized {
    const HEADER: &'static str;
    fn fields(&self) -> Vec<String>;
    fn from_fields(fields: &[&str]) -> Result<Self>;
}

fn num<T: std::str::FromStr>(s: &str, col: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| Error::Parse(format!("column `{col}`: `{s}`: {e}")))
}

impl Record for AdrPoint {
    const HEADER: &'static str = "scheme,kappa_dx,dispersion,dissipation,leakage";

    fn fields(&self) -> Vec<String> {
        vec![
            self.scheme.clone(),
            real(self.kappa_dx),
            real(self.dispersion),
            real(self.dissipation),
            real(self.leakage),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        Ok(Self {
            scheme: f[0].to_string(),
            kappa_dx: num(f[1], "kappa_dx")?,
            dispersion: num(f[2], "dispersion")?,
            dissipation: num(f[3], "dissipation")?,
            leakage: num(f[4], "leakage")?,
        })
    }
}

impl Record for ConvergenceRow {
    const HEADER: &'static str = "scheme,nx,dx,error,slope";

    fn fields(&self) -> Vec<String> {
        vec![
            self.scheme.clone(),
            self.nx.to_string(),
            real(self.dx),
            real(self.error),
            real(self.slope),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        Ok(Self {
            scheme: f[0].to_string(),
            nx: num(f[1], "nx")?,
            dx: num(f[2], "dx")?,
            error: num(f[3], "error")?,
            slope: num(f[4], "slope")?,
        })
    }
}

/// Writes `# metadata`, the header and one line per row.
pub fn write_report<W: Write, R: Record>(mut w: W, meta: &Metadata, rows: &[R]) -> Result<()> {
    let io = |e| Error::Parse(format!("write failed: {e}"));
    writeln!(w, "{}", meta.line()).map_err(io)?;
    writeln!(w, "{}", R::HEADER).map_err(io)?;
    for r in rows {
        writeln!(w, "{}", r.fields().join(",")).map_err(io)?;
    }
    Ok(())
}

/// [`write_report`] to a file; refuses an empty table.
pub fn emit_report<R: Record>(path: &Path, meta: &Metadata, rows: &[R]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config("refusing to write an empty report".into()));
    }
    let mut buf = Vec::new();
    write_report(&mut buf, meta, rows)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn parse_report<R: Record>(text: &str) -> Result<(Metadata, Vec<R>)> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let meta = Metadata::parse(first)?;
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != R::HEADER {
        return Err(Error::Parse(format!("expected header `{}`", R::HEADER)));
    }
    let rows = rdr
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            R::from_fields(&rec.iter().collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, rows))
}

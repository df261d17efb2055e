//! Command line interface.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration
//! error, 3 computation error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::domain::{DomainSpace, MeshParams};
use crate::error::{Error, Result};
use crate::generate::DomainSpec;
use crate::mesh::MeshedDomain;
use crate::metric::{validate_metric, FiniteMetricSpace};
use crate::moebius::{cross_ratio, qm_scan, qs_scan, Correspondence, ScanSampling};
use crate::quasihyperbolic::{pair_report, QhWeightMode};
use crate::sampling::{PairSampling, DEFAULT_PAIR_SAMPLES, DEFAULT_SEED};
use crate::suite::{Suite, SuiteConfig};
use crate::transforms::{invert, invert_domain, sphericalize, sphericalize_domain, TransformedSpace};
use crate::uniformity::domain_constants;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;

/// Environment variable fixing the worker thread count.
pub const THREADS_ENV: &str = "QHGEOM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qhgeom", version, about = "Quasihyperbolic geometry of sampled domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Point ids of `x` and `y`.
    #[arg(long)]
    pub xid: Option<usize>,
    #[arg(long)]
    pub yid: Option<usize>,
    /// Coordinates, snapped to the nearest interior sample.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub y: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenParams {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Exponent range `lo,hi` of the half-line samples.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Vec<i32>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransformArg {
    Sphericalize,
    Invert,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScanKind {
    Qm,
    Qs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a domain: `gen disk --h 0.05`, or `gen --spec JSON` with
    /// inline JSON or `@file`.
    Gen {
        /// disk, snowflake_disk, halfline, grid_rect, slit_disk or arc_example.
        kind: Option<String>,
        #[command(flatten)]
        params: GenParams,
        #[arg(long, conflicts_with = "kind")]
        spec: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Check the metric axioms of a domain's ambient space.
    Validate {
        /// Domain file.
        #[arg(long = "in", alias = "domain")]
        domain: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Build the mesh graph and summarize it.
    Mesh {
        /// Domain file.
        #[arg(long = "in", alias = "domain")]
        domain: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        /// Include the edge list.
        #[arg(long)]
        edges: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Quasihyperbolic distance, geodesic and j for one pair.
    Qh {
        /// Domain file.
        #[arg(long = "in", alias = "domain")]
        domain: PathBuf,
        #[command(flatten)]
        points: PointArgs,
        #[arg(long, default_value = "trapezoid")]
        mode: QhWeightMode,
        #[command(flatten)]
        out: Output,
    },
    /// Sphericalize or invert a domain at a point.
    Transform {
        /// Domain file.
        #[arg(long = "in", alias = "domain")]
        domain: PathBuf,
        #[arg(long, value_enum)]
        kind: TransformArg,
        #[arg(long)]
        p: usize,
        /// Inversion at a point of an unbounded space.
        #[arg(long)]
        unbounded: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Cross ratio of four points.
    Cr {
        /// Domain file.
        #[arg(long = "in", alias = "domain")]
        domain: PathBuf,
        /// Four point ids, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Distortion scan of a map between finite spaces.
    Scan {
        /// Domain file.
        #[arg(long = "in", alias = "domain")]
        domain: PathBuf,
        /// Target: a domain file (identity on ids), `sphericalize:P`,
        /// `invert:P`, `snowflake:EPS` or `scale:S`.
        #[arg(long)]
        to: String,
        #[arg(long, value_enum, default_value = "qm")]
        kind: ScanKind,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        exhaustive: bool,
        /// Emit the samples as CSV instead of the JSON summary.
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Estimate the uniformity constants of a domain.
    Constants {
        /// Domain file.
        #[arg(long = "in", alias = "domain")]
        domain: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PAIR_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Run the verification suite.
    Suite {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_COMPUTATION
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV}={raw} is not a thread count")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: &Output, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, &text)
}

fn load_domain(path: &Path) -> Result<DomainSpace> {
    DomainSpace::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        Error::InvalidDomain(m) | Error::InvalidSpace(m) => {
            Error::Config(format!("{}: {m}", path.display()))
        }
        other => other,
    })
}

fn pick_point(dom: &DomainSpace, id: Option<usize>, coords: Option<&[f64]>, name: &str) -> Result<usize> {
    match (id, coords) {
        (Some(id), None) => Ok(id),
        (None, Some(c)) => dom.nearest_interior(c),
        _ => Err(Error::InvalidParameter(format!("give exactly one of --{name}id and --{name}"))),
    }
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Gen { kind, params, spec, out } => {
            let value = match (kind, spec) {
                (Some(kind), None) => {
                    let mut v = serde_json::to_value(&params)?;
                    v["kind"] = Value::String(kind);
                    v
                }
                (None, Some(spec)) => {
                    let text = match spec.strip_prefix('@') {
                        Some(path) => std::fs::read_to_string(path)
                            .map_err(|e| Error::Config(format!("{path}: {e}")))?,
                        None => spec,
                    };
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("domain spec: {e}")))?
                }
                _ => return Err(Error::InvalidParameter("give a domain kind or --spec".into())),
            };
            let spec: DomainSpec =
                serde_json::from_value(value).map_err(|e| Error::Config(format!("domain spec: {e}")))?;
            emit(&out, &(spec.generate()?.to_json() + "\n"))?;
            Ok(EXIT_OK)
        }
        Command::Validate { domain, out } => {
            let dom = load_domain(&domain)?;
            let report = validate_metric(dom.ambient());
            emit_json(&out, &report)?;
            Ok(if report.is_ok() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Mesh { domain, beta, k, edges, out } => {
            let dom = load_domain(&domain)?;
            let d = dom.mesh_params();
            let params = MeshParams {
                beta: beta.unwrap_or(d.beta),
                k: k.unwrap_or(d.k),
            };
            let md = MeshedDomain::with_params(dom, params.beta, params.k)?;
            let mesh = md.mesh();
            let mut v = json!({
                "beta": mesh.beta(),
                "k": mesh.k(),
                "vertices": mesh.vertices().len(),
                "edges": mesh.edge_count(),
            });
            if edges {
                v["edge_list"] = json!(mesh.edge_list().collect::<Vec<_>>());
            }
            emit_json(&out, &v)?;
            Ok(EXIT_OK)
        }
        Command::Qh { domain, points, mode, out } => {
            let dom = load_domain(&domain)?;
            let x = pick_point(&dom, points.xid, points.x.as_deref(), "x")?;
            let y = pick_point(&dom, points.yid, points.y.as_deref(), "y")?;
            let md = MeshedDomain::new(dom)?;
            emit_json(&out, &pair_report(&md, x, y, mode)?)?;
            Ok(EXIT_OK)
        }
        Command::Transform { domain, kind, p, unbounded, out } => {
            let dom = load_domain(&domain)?;
            let t = match kind {
                TransformArg::Sphericalize => sphericalize_domain(&dom, p)?,
                TransformArg::Invert => invert_domain(&dom, p, unbounded)?,
            };
            let sandwich = t.space.sandwich();
            let name = match kind {
                TransformArg::Sphericalize => "sphericalize",
                TransformArg::Invert => "invert",
            };
            emit_json(
                &out,
                &json!({
                    "transform": name,
                    "p": p,
                    "sandwich_worst": { "pair": sandwich.worst_pair, "ratio": sandwich.min_ratio },
                    "sandwich": sandwich,
                    "metric": t.domain.to_file(),
                }),
            )?;
            Ok(if sandwich.holds() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Cr { domain, q, out } => {
            let q: [usize; 4] = q
                .try_into()
                .map_err(|_| Error::InvalidParameter("--q takes exactly four ids".into()))?;
            let dom = load_domain(&domain)?;
            emit_json(&out, &json!({ "q": q, "cross_ratio": cross_ratio(dom.ambient(), q)? }))?;
            Ok(EXIT_OK)
        }
        Command::Scan { domain, to, kind, samples, seed, exhaustive, csv, out } => {
            let dom = load_domain(&domain)?;
            let (target, corr) = scan_target(&dom, &to)?;
            let sampling = if exhaustive {
                ScanSampling::Exhaustive
            } else {
                ScanSampling::Auto { count: samples, seed }
            };
            let input = dom.ambient();
            match kind {
                ScanKind::Qm => {
                    let scan = qm_scan(input, target.as_ref(), &corr, sampling)?;
                    if csv {
                        let mut text = String::from("x1,x2,x3,x4,cr_in,cr_out\n");
                        for s in &scan.samples {
                            text += &format!("{},{},{},{},{},{}\n", s.q[0], s.q[1], s.q[2], s.q[3], s.cr_in, s.cr_out);
                        }
                        emit(&out, &text)?;
                    } else {
                        emit_json(&out, &scan_summary(&scan))?;
                    }
                }
                ScanKind::Qs => {
                    let scan = qs_scan(input, target.as_ref(), &corr, sampling)?;
                    if csv {
                        let mut text = String::from("x,a,b,ratio_in,ratio_out\n");
                        for s in &scan.samples {
                            text += &format!("{},{},{},{},{}\n", s.t[0], s.t[1], s.t[2], s.ratio_in, s.ratio_out);
                        }
                        emit(&out, &text)?;
                    } else {
                        emit_json(&out, &scan_summary(&scan))?;
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Constants { domain, samples, seed, out } => {
            let dom = load_domain(&domain)?;
            let md = MeshedDomain::new(dom)?;
            let c = domain_constants(&md, PairSampling::Auto { count: samples, seed })?;
            emit_json(&out, &c)?;
            Ok(EXIT_OK)
        }
        Command::Suite { config, seed, out } => {
            let mut cfg = SuiteConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let base = config.parent().unwrap_or(Path::new("."));
            let suite = Suite::prepare(cfg, base)?;
            let report = suite.run();
            emit_json(&out, &report)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn scan_summary<S: Serialize>(scan: &crate::moebius::Scan<S>) -> Value {
    json!({
        "samples": scan.samples.len(),
        "exhaustive": scan.exhaustive,
        "envelope": scan.envelope,
        "worst": scan.worst,
        "min_ratio": scan.min_ratio,
        "max_ratio": scan.max_ratio,
    })
}

type Target = Box<dyn crate::metric::Distances>;

fn scan_target(dom: &DomainSpace, to: &str) -> Result<(Target, Correspondence)> {
    let n = dom.ambient().len();
    let number = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::InvalidParameter(format!("bad number in --to {to}")))
    };
    let transformed = |t: TransformedSpace, p: usize| -> Result<(Target, Correspondence)> {
        let map = t.index_map(n);
        let pairs = (0..n)
            .filter(|&i| i != p)
            .filter_map(|i| map[i].map(|j| (i, j)))
            .collect();
        Ok((Box::new(t), Correspondence::new(pairs)?))
    };
    let coords = || {
        dom.ambient()
            .points()
            .ok_or_else(|| Error::InvalidParameter("target needs a coordinate space".into()))
    };
    match to.split_once(':') {
        Some(("sphericalize", p)) => {
            let p = number(p)? as usize;
            transformed(sphericalize(dom.ambient(), p)?, p)
        }
        Some(("invert", p)) => {
            let p = number(p)? as usize;
            transformed(invert(dom.ambient(), p, false)?, p)
        }
        Some(("snowflake", eps)) => {
            let s = FiniteMetricSpace::snowflake(&coords()?, number(eps)?)?;
            Ok((Box::new(s), Correspondence::identity(n)))
        }
        Some(("scale", s)) => {
            let s = number(s)?;
            let pts: Vec<Vec<f64>> = coords()?
                .into_iter()
                .map(|p| p.into_iter().map(|c| c * s).collect())
                .collect();
            Ok((Box::new(FiniteMetricSpace::euclidean(&pts)?), Correspondence::identity(n)))
        }
        _ => {
            let other = load_domain(Path::new(to))?;
            if other.ambient().len() != n {
                return Err(Error::InvalidParameter(format!(
                    "target has {} points, source has {n}",
                    other.ambient().len()
                )));
            }
            Ok((Box::new(other.ambient().clone()), Correspondence::identity(n)))
        }
    }
}

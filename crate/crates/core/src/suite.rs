//! End-to-end verification run: ten checks over generated and loaded
//! domains, reported as JSON records in a fixed order.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::domain::DomainSpace;
use crate::error::{Error, Result};
use crate::generate::{
    dyadic_space, gen_arc_example, gen_halfline, gen_snowflake_disk, disk_with, map_domain,
    random_space, tau, DomainSpec, DEFAULT_ANCHORS, halfline_id,
};
use crate::mesh::MeshedDomain;
use crate::metric::{validate_metric, Distances, FiniteMetricSpace};
use crate::moebius::{cross_ratio, qm_scan, qs_scan, Correspondence, ScanSampling};
use crate::quasihyperbolic::{qh_distance, QhWeightMode};
use crate::sampling::{rng, sample_pairs, PairSampling, DEFAULT_PAIR_SAMPLES, DEFAULT_SEED};
use crate::transforms::{
    invert, roundtrip_check, sphericalize, sphericalize_domain, PointLabel, TransformedSpace,
};
use crate::uniformity::{
    additive_constant, additive_from, c6_closed_form, c6_numeric, classify_refinement, cprime_at,
    pair_values, quasiconvexity_estimate, quasiconvexity_with, uniformity_estimate, CheckStatus,
    CurveKind, Refinement,
};

/// Relative tolerance of exact identities checked in floating point.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
/// Relative tolerance of the isometry between the inverted arc and the ray.
pub const RAY_TOLERANCE: f64 = 1e-9;
pub const C6_TOLERANCE: f64 = 1e-9;
/// Allowed range of `c_est(u / 2) / c_est(u)` on the arc.
pub const ARC_GROWTH: [f64; 2] = [1.6, 2.4];
pub const INVERTED_ARC_BOUND: f64 = 3.0;
/// Upper bound of `k(1, 2) / log 2` on the ratio-1.01 half-line.
pub const HALFLINE_SLACK: f64 = 1.05;

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_pair_samples() -> usize {
    DEFAULT_PAIR_SAMPLES
}
fn default_subsample() -> usize {
    300
}
fn default_quadruples() -> usize {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainEntry {
    pub name: String,
    /// Domain file, relative to the config file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub spec: Option<DomainSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpaces {
    pub count: usize,
    pub min_points: usize,
    pub max_points: usize,
    /// The first `exhaustive_count` spaces have `exhaustive_points` points
    /// and get exhaustive quadruple scans.
    pub exhaustive_points: usize,
    pub exhaustive_count: usize,
}

impl Default for RandomSpaces {
    fn default() -> Self {
        Self {
            count: 50,
            min_points: 20,
            max_points: 200,
            exhaustive_points: 40,
            exhaustive_count: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcConfig {
    pub n: usize,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnowflakeConfig {
    pub epsilon: f64,
    /// Grid spacings, coarse to fine.
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceConfig {
    /// Grid spacings of the disk families, coarse to fine.
    pub levels: Vec<f64>,
    pub arc_u: f64,
    /// Arc sample counts, coarse to fine.
    pub arc_n: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_pair_samples")]
    pub pair_samples: usize,
    /// Larger ambient spaces are subsampled to this many points before
    /// transforms.
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default = "default_quadruples")]
    pub quadruple_samples: usize,
    pub domains: Vec<DomainEntry>,
    #[serde(default)]
    pub random_spaces: RandomSpaces,
    /// Name of the domain used for the quasiconvexity and additive checks.
    pub uniform_domain: String,
    pub arc: ArcConfig,
    pub snowflake: SnowflakeConfig,
    pub correspondences: CorrespondenceConfig,
}

impl SuiteConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }

    fn sampling(&self) -> PairSampling {
        PairSampling::Auto {
            count: self.pair_samples,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: u32,
    pub anchor: &'static str,
    pub status: CheckStatus,
    pub measured: Value,
    pub witnesses: Value,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub pass: bool,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub runtime_ms: u64,
}

impl SuiteReport {
    /// The report as JSON with every runtime field removed.
    pub fn without_timing(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        strip_timing(&mut v);
        v
    }
}

/// Removes `runtime_ms` keys recursively.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("runtime_ms");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

pub const ANCHORS: [&str; 10] = [
    "quarter base weight <= chain metric <= base weight",
    "k >= j >= |log d(x)/d(y)|",
    "identity into a sphericalized or inverted space is 16t-quasimobius",
    "sphericalizing then inverting at infinity is 16-bilipschitz",
    "sphericalized domain is (lambda/(10000c^2), 64c)-quasiconvex",
    "k <= 2c j + c' with c' = 2 lambda0 + 2c log(2 c0 c / lambda0)",
    "max{u(e^(2c0/u) - 1) : u >= 2} = 2(e^c0 - 1)",
    "arc minus endpoints: uniformity constant of order 1/u, inverted image a ray",
    "snowflaked disk admits no rectifiable curves",
    "uniformity survives quasimobius and quasisymmetric maps",
];

struct Outcome {
    status: CheckStatus,
    measured: Value,
    witnesses: Value,
}

impl Outcome {
    fn new(ok: bool, measured: Value, witnesses: Value) -> Self {
        Self {
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            measured,
            witnesses,
        }
    }
}

/// A validated configuration with its domains loaded.
pub struct Suite {
    config: SuiteConfig,
    domains: Vec<(String, DomainSpace)>,
}

impl Suite {
    /// Loads every input; any problem is a configuration error.
    pub fn prepare(config: SuiteConfig, base_dir: &Path) -> Result<Self> {
        let bad = |m: String| Err(Error::Config(m));
        if config.domains.is_empty() {
            return bad("no domains listed".into());
        }
        if config.arc.u.is_empty() || config.snowflake.levels.len() < 2 {
            return bad("arc.u must be nonempty and snowflake.levels needs two levels".into());
        }
        if config.correspondences.levels.len() < 2 || config.correspondences.arc_n.len() < 2 {
            return bad("correspondence families need two levels each".into());
        }
        if config.subsample < 4 || config.pair_samples == 0 {
            return bad("subsample must be at least 4 and pair_samples positive".into());
        }
        let rs = &config.random_spaces;
        if rs.min_points < 4 || rs.min_points > rs.max_points || rs.exhaustive_points < 5 || rs.exhaustive_count > rs.count {
            return bad("inconsistent random_spaces settings".into());
        }
        let mut domains = Vec::new();
        for entry in &config.domains {
            let dom = match (&entry.file, &entry.spec) {
                (Some(file), None) => {
                    let path = base_dir.join(file);
                    if !path.exists() {
                        return bad(format!("domain {}: file {} not found", entry.name, path.display()));
                    }
                    DomainSpace::load(&path)
                        .map_err(|e| Error::Config(format!("domain {}: {e}", entry.name)))?
                }
                (None, Some(spec)) => spec
                    .generate()
                    .map_err(|e| Error::Config(format!("domain {}: {e}", entry.name)))?,
                _ => return bad(format!("domain {} needs exactly one of file and spec", entry.name)),
            };
            if domains.iter().any(|(n, _)| n == &entry.name) {
                return bad(format!("domain name {} used twice", entry.name));
            }
            domains.push((entry.name.clone(), dom));
        }
        if !domains.iter().any(|(n, _)| n == &config.uniform_domain) {
            return bad(format!("uniform_domain {} is not listed", config.uniform_domain));
        }
        Ok(Self { config, domains })
    }

    pub fn config(&self) -> &SuiteConfig {
        &self.config
    }

    pub fn run(&self) -> SuiteReport {
        let start = Instant::now();
        let checks: Vec<CheckRecord> = (1..=10u32)
            .into_par_iter()
            .map(|id| {
                let t = Instant::now();
                let outcome = self.check(id).unwrap_or_else(|e| Outcome {
                    status: CheckStatus::Fail,
                    measured: json!({ "error": e.to_string() }),
                    witnesses: Value::Null,
                });
                CheckRecord {
                    id,
                    anchor: ANCHORS[id as usize - 1],
                    status: outcome.status,
                    measured: outcome.measured,
                    witnesses: outcome.witnesses,
                    runtime_ms: t.elapsed().as_millis() as u64,
                }
            })
            .collect();
        SuiteReport {
            pass: checks.iter().all(|c| c.status != CheckStatus::Fail),
            seed: self.config.seed,
            checks,
            runtime_ms: start.elapsed().as_millis() as u64,
        }
    }

    fn check(&self, id: u32) -> Result<Outcome> {
        match id {
            1 => self.check_sandwich(),
            2 => self.check_j_bounds(),
            3 => self.check_cross_ratios(),
            4 => self.check_roundtrip(),
            5 => self.check_sphericalized_quasiconvexity(),
            6 => self.check_additive(),
            7 => Ok(check_c6()),
            8 => self.check_arc(),
            9 => self.check_snowflake(),
            10 => self.check_correspondences(),
            _ => unreachable!("ten checks"),
        }
    }

    fn random_spaces(&self) -> Result<Vec<FiniteMetricSpace>> {
        let rs = &self.config.random_spaces;
        let mut sizes = rng(self.config.seed);
        (0..rs.count)
            .map(|i| {
                let n = if i < rs.exhaustive_count {
                    rs.exhaustive_points
                } else {
                    sizes.gen_range(rs.min_points..=rs.max_points)
                };
                random_space(self.config.seed * 1000 + i as u64, n)
            })
            .collect()
    }

    /// At most `subsample` points of the ambient space, always containing
    /// the first boundary sample, which is returned as the base point.
    fn ambient_sample(&self, dom: &DomainSpace) -> Result<(FiniteMetricSpace, usize)> {
        let n = dom.ambient().len();
        let p = dom.boundary()[0];
        if n <= self.config.subsample {
            return Ok((dom.ambient().clone(), p));
        }
        let mut r = rng(self.config.seed);
        let mut ids: Vec<usize> = index::sample(&mut r, n, self.config.subsample - 1)
            .into_iter()
            .filter(|&i| i != p)
            .collect();
        ids.push(p);
        ids.sort_unstable();
        ids.dedup();
        let local = ids.binary_search(&p).expect("base point kept");
        Ok((dom.ambient().subspace(&ids)?, local))
    }

    fn domain(&self, name: &str) -> &DomainSpace {
        &self.domains.iter().find(|(n, _)| n == name).expect("validated").1
    }

    fn check_sandwich(&self) -> Result<Outcome> {
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        let mut metric_witnesses = Vec::new();
        for (name, dom) in &self.domains {
            let v = validate_metric(dom.ambient());
            if !v.is_ok() {
                metric_witnesses.push(json!({ "domain": name, "total": v.total, "first": v.violations.first() }));
            }
        }
        let mut spaces: Vec<(String, FiniteMetricSpace, usize)> = self
            .random_spaces()?
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("random_{i}"), s, 0))
            .collect();
        for (name, dom) in &self.domains {
            let (s, p) = self.ambient_sample(dom)?;
            spaces.push((name.clone(), s, p));
        }
        type Row = (String, f64, f64, Vec<Value>);
        let results: Vec<Result<Row>> = spaces
            .par_iter()
            .enumerate()
            .map(|(i, (name, space, p))| {
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                let mut bad = Vec::new();
                for t in [sphericalize(space, *p)?, invert(space, *p, i % 2 == 0)?] {
                    let s = t.sandwich();
                    lo = lo.min(s.min_ratio);
                    hi = hi.max(s.max_ratio);
                    if !s.holds() {
                        bad.push(json!({ "space": name, "transform": t.base().kind, "pair": s.worst_pair, "violations": s.violations }));
                    }
                }
                Ok((name.clone(), lo, hi, bad))
            })
            .collect();
        for r in results {
            let (name, lo, hi, bad) = r?;
            rows.push(json!({ "space": name, "min_ratio": lo, "max_ratio": hi }));
            failures.extend(bad);
        }
        let ok = failures.is_empty() && metric_witnesses.is_empty();
        Ok(Outcome::new(
            ok,
            json!({ "spaces": rows.len(), "ratios": rows, "metric_violations": metric_witnesses.len() }),
            json!({ "sandwich": failures, "metric": metric_witnesses }),
        ))
    }

    fn check_j_bounds(&self) -> Result<Outcome> {
        let mut rows = Vec::new();
        let mut witnesses = Vec::new();
        for (name, dom) in &self.domains {
            let md = MeshedDomain::new(dom.clone())?;
            let pairs = sample_pairs(dom, self.config.sampling());
            let values = pair_values(&md, &pairs)?;
            let (mut below_j, mut below_log) = (0usize, 0usize);
            let mut min_gap = f64::INFINITY;
            let mut max_excess: f64 = 0.0;
            for &((x, y), [j, up, _]) in &values {
                let (dx, dy) = (dom.boundary_distance(x)?, dom.boundary_distance(y)?);
                let log_ratio = ((dx.max(dy) - dx.min(dy)) / dx.min(dy)).ln_1p();
                min_gap = min_gap.min(up - j);
                below_j += usize::from(up < j);
                below_log += usize::from(j < log_ratio);
                if j < log_ratio {
                    max_excess = max_excess.max((log_ratio - j) / j);
                }
                if (up < j || j < log_ratio) && witnesses.len() < 10 {
                    witnesses.push(json!({ "domain": name, "pair": [x, y], "k_upper": up, "j": j, "log_ratio": log_ratio }));
                }
            }
            rows.push(json!({
                "domain": name,
                "pairs": values.len(),
                "k_below_j": below_j,
                "j_below_log_ratio": below_log,
                "max_relative_excess": max_excess,
                "min_k_minus_j": min_gap,
            }));
        }
        let line = gen_halfline(1.01, [-400, 400], &DEFAULT_ANCHORS)?;
        let (one, two) = (halfline_id(&line, 1.0)?, halfline_id(&line, 2.0)?);
        let md = MeshedDomain::new(line)?;
        let k12 = qh_distance(&md, one, two, QhWeightMode::Upper)?;
        let ln2 = 2f64.ln();
        let anchor_ok = k12 >= ln2 && k12 <= HALFLINE_SLACK * ln2;
        Ok(Outcome::new(
            witnesses.is_empty() && anchor_ok,
            json!({ "domains": rows, "halfline_k12": k12, "halfline_k12_over_log2": k12 / ln2 }),
            json!(witnesses),
        ))
    }

    fn check_cross_ratios(&self) -> Result<Outcome> {
        let rs = &self.config.random_spaces;
        let mut targets: Vec<(String, FiniteMetricSpace, usize, ScanSampling)> = self
            .random_spaces()?
            .into_iter()
            .take(rs.exhaustive_count)
            .enumerate()
            .map(|(i, s)| (format!("random_{i}"), s, 0, ScanSampling::Exhaustive))
            .collect();
        for (i, (name, dom)) in self.domains.iter().enumerate() {
            let (s, p) = self.ambient_sample(dom)?;
            targets.push((
                name.clone(),
                s,
                p,
                ScanSampling::Seeded {
                    count: self.config.quadruple_samples,
                    seed: self.config.seed + i as u64,
                },
            ));
        }
        let mut rows = Vec::new();
        let mut witnesses = Vec::new();
        for (name, space, p, sampling) in &targets {
            for t in [sphericalize(space, *p)?, invert(space, *p, false)?] {
                let row = cross_ratio_bounds(space, &t, *p, *sampling)?;
                if row.violations > 0 || row.cancellation_violations > 0 {
                    witnesses.push(json!({ "space": name, "transform": t.base().kind, "worst": row.worst }));
                }
                rows.push(json!({
                    "space": name,
                    "transform": t.base().kind,
                    "samples": row.samples,
                    "exhaustive": row.exhaustive,
                    "min_ratio": row.min_ratio,
                    "max_ratio": row.max_ratio,
                    "violations": row.violations,
                    "max_cancellation_error": row.max_cancellation_error,
                }));
            }
        }
        Ok(Outcome::new(witnesses.is_empty(), json!(rows), json!(witnesses)))
    }

    fn check_roundtrip(&self) -> Result<Outcome> {
        let (dyadic, p) = dyadic_space();
        let mut spaces = vec![("dyadic".to_string(), dyadic, p)];
        for (name, dom) in &self.domains {
            let (s, p) = self.ambient_sample(dom)?;
            spaces.push((name.clone(), s, p));
        }
        let results = spaces
            .par_iter()
            .map(|(name, s, p)| Ok((name.clone(), roundtrip_check(s, *p)?)))
            .collect::<Result<Vec<_>>>()?;
        let ok = results.iter().all(|r| r.1.pass);
        let witnesses: Vec<Value> = results
            .iter()
            .filter(|r| !r.1.pass)
            .map(|(n, r)| json!({ "space": n, "pair": r.worst_pair, "ratio": r.worst_ratio }))
            .collect();
        let rows: Vec<Value> = results
            .iter()
            .map(|(n, r)| json!({ "space": n, "worst_ratio": r.worst_ratio, "min_ratio": r.min_ratio, "max_ratio": r.max_ratio }))
            .collect();
        Ok(Outcome::new(ok, json!(rows), json!(witnesses)))
    }

    fn check_sphericalized_quasiconvexity(&self) -> Result<Outcome> {
        let dom = self.domain(&self.config.uniform_domain);
        let md = MeshedDomain::new(dom.clone())?;
        let out = sphericalized_quasiconvexity(&md, 0.5)?;
        let ok = out.transported_ratio <= out.bound && out.literal_ratio <= out.bound;
        let mut o = Outcome::new(ok, serde_json::to_value(&out)?, json!({
            "transported": out.transported_witness,
            "literal": out.literal_witness,
        }));
        if ok && out.transported_pairs == 0 && out.literal_pairs == 0 {
            o.status = CheckStatus::Vacuous;
        }
        Ok(o)
    }

    fn check_additive(&self) -> Result<Outcome> {
        let dom = self.domain(&self.config.uniform_domain);
        let md = MeshedDomain::new(dom.clone())?;
        let out = additive_check(&md, self.config.sampling())?;
        Ok(Outcome::new(
            out.pass,
            serde_json::to_value(&out)?,
            json!({ "pair": out.witness, "uniform": out.uniform_witness }),
        ))
    }

    fn check_arc(&self) -> Result<Outcome> {
        let cfg = &self.config.arc;
        let mut rows = Vec::new();
        let mut witnesses = Vec::new();
        let mut estimates = Vec::new();
        let mut ok = true;
        for (i, &u) in cfg.u.iter().enumerate() {
            let (arc, inv) = gen_arc_example(u, cfg.n)?;
            let md = MeshedDomain::new(arc.clone())?;
            let est = uniformity_estimate(&md, self.config.sampling(), &CurveKind::ALL)?;
            let mdi = MeshedDomain::new(inv.domain.clone())?;
            let inv_est = uniformity_estimate(&mdi, self.config.sampling(), &CurveKind::ALL)?;
            let ray = ray_isometry(&arc, &inv.space)?;
            let mut row = json!({
                "u": u,
                "c_est": est.c,
                "inverted_c_est": inv_est.c,
                "ray_max_error": ray.max_error,
                "ray_pairs": ray.pairs,
            });
            if inv_est.c > INVERTED_ARC_BOUND {
                ok = false;
                witnesses.push(json!({ "u": u, "inverted": inv_est.witness }));
            }
            if ray.max_error > RAY_TOLERANCE {
                ok = false;
                witnesses.push(json!({ "u": u, "ray_pair": ray.worst_pair, "error": ray.max_error }));
            }
            if i == 0 {
                let qc = quasiconvexity_estimate(&md, &[0.5]);
                row["quasiconvex_half"] = json!(qc[0].c);
                if qc[0].c > PI + RAY_TOLERANCE {
                    ok = false;
                    witnesses.push(json!({ "u": u, "quasiconvex": qc[0] }));
                }
            }
            estimates.push((u, est));
            rows.push(row);
        }
        let mut growth = Vec::new();
        for w in estimates.windows(2) {
            let ((u0, e0), (u1, e1)) = (&w[0], &w[1]);
            let ratio = e1.c / e0.c;
            let halving = (u0 / u1 - 2.0).abs() < 1e-9;
            growth.push(json!({ "from": u0, "to": u1, "ratio": ratio }));
            if halving && !(ARC_GROWTH[0]..=ARC_GROWTH[1]).contains(&ratio) {
                ok = false;
                witnesses.push(json!({ "u": [u0, u1], "witnesses": [e0.witness, e1.witness] }));
            }
        }
        Ok(Outcome::new(ok, json!({ "levels": rows, "growth": growth }), json!(witnesses)))
    }

    fn check_snowflake(&self) -> Result<Outcome> {
        let cfg = &self.config.snowflake;
        let mut lengths = Vec::new();
        let mut rows = Vec::new();
        for &h in &cfg.levels {
            let dom = gen_snowflake_disk(cfg.epsilon, h)?;
            let a = dom.nearest_interior(&[-0.5, 0.0])?;
            let b = dom.nearest_interior(&[0.5, 0.0])?;
            let md = MeshedDomain::new(dom)?;
            let len = md.length_distance(a, b)?;
            rows.push(json!({ "h": h, "pair": [a, b], "length": len }));
            lengths.push(len);
        }
        // cross ratios of the snowflake are exact powers
        let coarse = gen_snowflake_disk(cfg.epsilon, cfg.levels[0])?;
        let pts = coarse.ambient().points().expect("coordinates");
        let ids: Vec<usize> = coarse.interior().iter().copied().step_by(coarse.interior().len().div_ceil(24)).collect();
        let flat = FiniteMetricSpace::euclidean(&ids.iter().map(|&i| pts[i].clone()).collect::<Vec<_>>())?;
        let snow = FiniteMetricSpace::snowflake(&ids.iter().map(|&i| pts[i].clone()).collect::<Vec<_>>(), cfg.epsilon)?;
        let scan = qm_scan(&flat, &snow, &Correspondence::identity(ids.len()), ScanSampling::Exhaustive)?;
        let power_ok = (scan.envelope.alpha - cfg.epsilon).abs() < 1e-12 && (scan.envelope.c - 1.0).abs() < 1e-9;
        let trend = classify_refinement(&lengths);
        let status = match (trend, power_ok) {
            (Refinement::Diverges { .. }, true) => CheckStatus::Diverges,
            _ => CheckStatus::Fail,
        };
        Ok(Outcome {
            status,
            measured: json!({ "levels": rows, "trend": trend, "envelope": scan.envelope }),
            witnesses: json!({ "pair_lengths": lengths }),
        })
    }

    fn check_correspondences(&self) -> Result<Outcome> {
        let cfg = &self.config.correspondences;
        let sampling = self.config.sampling();
        let estimate = |dom: DomainSpace| -> Result<f64> {
            let md = MeshedDomain::new(dom)?;
            Ok(uniformity_estimate(&md, sampling, &CurveKind::ALL)?.c)
        };
        let mut families = Vec::new();
        let scale = |z: &[f64]| z.iter().map(|c| 7.0 * c).collect::<Vec<_>>();
        let mut similarity = Vec::new();
        let mut mobius = Vec::new();
        for &h in &cfg.levels {
            similarity.push(estimate(map_domain(&disk_with(h, [0.0, 0.0], 1.0)?, scale)?)?);
            mobius.push(estimate(map_domain(&disk_with(h, [2.0, 0.0], 1.0)?, tau)?)?);
        }
        families.push(("similarity_disk", similarity));
        families.push(("inversion_disk", mobius));
        let mut arc = Vec::new();
        for &n in &cfg.arc_n {
            arc.push(estimate(gen_arc_example(cfg.arc_u, n)?.1.domain)?);
        }
        families.push(("inverted_arc", arc));
        // distortion envelopes of the two disk maps on a coarse sample
        let coarse = disk_with(cfg.levels[0], [2.0, 0.0], 1.0)?;
        let pts = coarse.ambient().points().expect("coordinates");
        let ids: Vec<usize> = coarse.interior().iter().copied().step_by(coarse.interior().len().div_ceil(30)).collect();
        let a = FiniteMetricSpace::euclidean(&ids.iter().map(|&i| pts[i].clone()).collect::<Vec<_>>())?;
        let b = FiniteMetricSpace::euclidean(&ids.iter().map(|&i| tau(&pts[i])).collect::<Vec<_>>())?;
        let c = FiniteMetricSpace::euclidean(&ids.iter().map(|&i| scale(&pts[i])).collect::<Vec<_>>())?;
        let id = Correspondence::identity(ids.len());
        let qm = qm_scan(&a, &b, &id, ScanSampling::default())?;
        let qs = qs_scan(&a, &c, &id, ScanSampling::default())?;
        let mut ok = true;
        let mut rows = Vec::new();
        let mut witnesses = Vec::new();
        for (name, values) in &families {
            let trend = classify_refinement(values);
            let stable = values.iter().all(|v| v.is_finite()) && matches!(trend, Refinement::Stable { .. });
            if !stable {
                ok = false;
                witnesses.push(json!({ "family": name, "c_est": values }));
            }
            rows.push(json!({ "family": name, "c_est": values, "trend": trend }));
        }
        Ok(Outcome::new(
            ok,
            json!({ "families": rows, "inversion_envelope": qm.envelope, "similarity_envelope": qs.envelope }),
            json!(witnesses),
        ))
    }
}

fn check_c6() -> Outcome {
    let mut rows = Vec::new();
    let mut ok = true;
    for c0 in [1.0, 2.0, 4.0] {
        let (u, numeric) = c6_numeric(c0);
        let closed = c6_closed_form(c0);
        let err = (numeric - closed).abs() / closed;
        ok &= err <= C6_TOLERANCE;
        rows.push(json!({ "c0": c0, "argmax": u, "numeric": numeric, "closed_form": closed, "relative_error": err }));
    }
    Outcome::new(ok, json!(rows), Value::Null)
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossRatioBounds {
    pub samples: usize,
    pub exhaustive: bool,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Quadruples with `cr_out / cr_in` outside `[1/16, 16]`.
    pub violations: usize,
    /// Largest relative difference between the base-weight cross ratio
    /// and the original one.
    pub max_cancellation_error: f64,
    pub cancellation_violations: usize,
    pub worst: Option<[usize; 4]>,
}

/// Identity from `space` (minus `p`) into a transformed space: cross ratios
/// change by at most 16, and the base weight has the original cross ratios.
pub fn cross_ratio_bounds(
    space: &FiniteMetricSpace,
    t: &TransformedSpace,
    p: usize,
    sampling: ScanSampling,
) -> Result<CrossRatioBounds> {
    let map = t.index_map(space.len());
    let pairs: Vec<(usize, usize)> = (0..space.len())
        .filter(|&i| i != p)
        .filter_map(|i| map[i].map(|j| (i, j)))
        .collect();
    let corr = Correspondence::new(pairs)?;
    let scan = qm_scan(space, t, &corr, sampling)?;
    let mut out = CrossRatioBounds {
        samples: scan.samples.len(),
        exhaustive: scan.exhaustive,
        min_ratio: scan.min_ratio,
        max_ratio: scan.max_ratio,
        violations: 0,
        max_cancellation_error: 0.0,
        cancellation_violations: 0,
        worst: None,
    };
    let mut worst = 1.0;
    for s in &scan.samples {
        let r = s.cr_out / s.cr_in;
        if !((1.0 - IDENTITY_TOLERANCE) / 16.0..=16.0 * (1.0 + IDENTITY_TOLERANCE)).contains(&r) {
            out.violations += 1;
        }
        let q_out = s.q.map(|i| map[i].expect("mapped"));
        let base_cr = cross_ratio(&t.base().values, q_out)?;
        let err = (base_cr - s.cr_in).abs() / s.cr_in.abs().max(1.0);
        out.max_cancellation_error = out.max_cancellation_error.max(err);
        if err > IDENTITY_TOLERANCE {
            out.cancellation_violations += 1;
        }
        let spread = r.max(1.0 / r);
        if spread > worst {
            worst = spread;
            out.worst = Some(s.q);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RayIsometry {
    pub pairs: usize,
    /// `max |d_p(a, b) - |tau(a) - tau(b)|| / max(1, |tau(a) - tau(b)|)`.
    pub max_error: f64,
    pub worst_pair: [usize; 2],
}

/// Compares the inverted metric with the Euclidean distance of the images
/// under `tau` on every pair. Pair ids refer to the source space.
pub fn ray_isometry(source: &DomainSpace, inverted: &TransformedSpace) -> Result<RayIsometry> {
    let labels = inverted.labels();
    let images: Vec<Option<Vec<f64>>> = labels
        .iter()
        .map(|l| match l {
            PointLabel::Point(i) => source.ambient().point(*i).map(tau),
            PointLabel::Infinity => None,
        })
        .collect();
    let n = labels.len();
    let rows: Vec<(usize, f64, [usize; 2])> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut count = 0;
            let mut worst = (0.0, [0, 0]);
            let Some(ta) = &images[a] else { return (0, 0.0, [0, 0]) };
            for b in a + 1..n {
                let Some(tb) = &images[b] else { continue };
                let e: f64 = ta.iter().zip(tb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                let err = (inverted.dist(a, b) - e).abs() / e.max(1.0);
                count += 1;
                if err > worst.0 {
                    let id = |k: usize| match labels[k] {
                        PointLabel::Point(i) => i,
                        PointLabel::Infinity => usize::MAX,
                    };
                    worst = (err, [id(a), id(b)]);
                }
            }
            (count, worst.0, worst.1)
        })
        .collect();
    let mut out = RayIsometry {
        pairs: 0,
        max_error: 0.0,
        worst_pair: [0, 0],
    };
    for (count, err, pair) in rows {
        out.pairs += count;
        if err > out.max_error {
            out.max_error = err;
            out.worst_pair = pair;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SphericalizedQuasiconvexity {
    pub lambda: f64,
    pub c: f64,
    pub lambda_prime: f64,
    pub c_prime: f64,
    /// `c' (1 + 2 beta)`.
    pub bound: f64,
    /// Pairs inside `B(x, lambda' d(x))` for the sphericalized distances.
    pub literal_pairs: usize,
    pub literal_ratio: f64,
    pub literal_witness: Option<[usize; 3]>,
    /// Pairs inside the original `B(x, lambda d(x))`, joined by mesh paths
    /// measured in the sphericalized metric.
    pub transported_pairs: usize,
    pub transported_ratio: f64,
    pub transported_witness: Option<[usize; 3]>,
}

/// Sphericalize at the first boundary sample and measure quasiconvexity of
/// the result along the original mesh, whose edges are reweighted by the
/// sphericalized metric.
pub fn sphericalized_quasiconvexity(md: &MeshedDomain, lambda: f64) -> Result<SphericalizedQuasiconvexity> {
    let dom = md.domain();
    let c = quasiconvexity_estimate(md, &[lambda])[0].c;
    let p = dom.boundary()[0];
    let sph = sphericalize_domain(dom, p)?;
    // sphericalization keeps source ids
    let hat = &sph.space;
    let graph = md.mesh().graph();
    let vertices = md.mesh().vertices();
    let weights: Vec<f64> = graph
        .edges()
        .iter()
        .map(|e| hat.dist(vertices[e.u], vertices[e.v]))
        .collect();
    let hat_dist = |a: usize, b: usize| hat.dist(a, b);
    let lambda_prime = lambda / (10_000.0 * c * c);
    let c_prime = 64.0 * c;
    let bound = c_prime * (1.0 + 2.0 * md.beta());
    let literal = quasiconvexity_with(&sph.domain, graph, &weights, &hat_dist, &[lambda_prime])[0];
    let transported = quasiconvexity_with(dom, graph, &weights, &hat_dist, &[lambda])[0];
    Ok(SphericalizedQuasiconvexity {
        lambda,
        c,
        lambda_prime,
        c_prime,
        bound,
        literal_pairs: literal.pairs,
        literal_ratio: literal.c,
        literal_witness: literal.witness,
        transported_pairs: transported.pairs,
        transported_ratio: transported.c,
        transported_witness: transported.witness,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdditiveCheck {
    pub lambda0: f64,
    pub c0: f64,
    pub c_est: f64,
    /// Smallest grid value at least `2 c_est`.
    pub c_grid: f64,
    /// Smallest `c'` with `k_upper <= c_grid j + c'` on the sampled pairs.
    pub cprime_induced: f64,
    /// `(1 + 2 beta) (2 lambda0 + 2 c_est log(2 c0 c_est / lambda0))`.
    pub bound: f64,
    /// Optimal `(c, c')` for the trapezoid `k`.
    pub fit_c: f64,
    pub fit_cprime: f64,
    pub pass: bool,
    pub witness: Option<[usize; 2]>,
    pub uniform_witness: Option<[usize; 2]>,
}

pub fn additive_check(md: &MeshedDomain, sampling: PairSampling) -> Result<AdditiveCheck> {
    let lambda0 = 0.5;
    let c0 = quasiconvexity_estimate(md, &[lambda0])[0].c;
    let pairs = sample_pairs(md.domain(), sampling);
    let est = crate::uniformity::uniformity_on_pairs(md, &pairs, &CurveKind::ALL)?;
    let values = pair_values(md, &pairs)?;
    let fit = additive_from(&values);
    let c_grid = (2.0 * est.c / crate::uniformity::ADDITIVE_STEP).ceil() * crate::uniformity::ADDITIVE_STEP;
    let jk: Vec<(f64, f64)> = values.iter().map(|v| (v.1[0], v.1[1])).collect();
    let (cprime, arg) = cprime_at(&jk, c_grid);
    let bound = (1.0 + 2.0 * md.beta()) * additive_constant(lambda0, c0, est.c);
    Ok(AdditiveCheck {
        lambda0,
        c0,
        c_est: est.c,
        c_grid,
        cprime_induced: cprime,
        bound,
        fit_c: fit.c,
        fit_cprime: fit.cprime,
        pass: cprime <= bound && c_grid <= 2.0 * est.c + crate::uniformity::ADDITIVE_STEP,
        witness: arg.map(|i| [values[i].0 .0, values[i].0 .1]),
        uniform_witness: est.witness.map(|w| w.pair),
    })
}


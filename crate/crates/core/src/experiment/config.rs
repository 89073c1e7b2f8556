//! Experiment configuration files.
//!
//! The format is TOML. A minimal file:
//!
//! ```toml
//! [environment]
//! type = "orr"
//!
//! [run]
//! algorithms = ["vqb_case1"]
//! horizons = [500]
//! seeds = [1]
//! ```
//!
//! Parsing never stops at the first problem: every unknown key, type
//! mismatch and out-of-range value is reported with its line number.

use std::collections::BTreeSet;
use std::ops::Range;

use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::envs::{Drift, EnvConfig, Job, JobSchedConfig, NetworkConfig, OrrConfig, SlaterConfig};
use crate::error::{ConfigIssue, Error, Result};
use crate::subsolver::{SolverConfig, StepRule};

/// Algorithm names accepted in `run.algorithms`, in documentation order.
pub const ALGORITHM_NAMES: [&str; 9] = [
    "vqb_case1",
    "vqb_case2",
    "slater",
    "doubling_vqb_case1",
    "doubling_vqb_case2",
    "cao2018",
    "chen2017",
    "chen2018",
    "chen2019",
];

/// Per-algorithm overrides from an `[algorithm.<name>]` section.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlgorithmOverrides {
    /// Exponent `a` of the Slater variant's constant parameters.
    pub a: Option<f64>,
    /// Primal step of a saddle-point preset.
    pub eta: Option<f64>,
    /// Dual step of a saddle-point preset.
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub name: String,
    pub overrides: AlgorithmOverrides,
}

/// How the learners' first action is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitRule {
    /// Projection of the origin onto `χ(1)`.
    Origin,
    /// A uniform draw from the bounding box of `χ(1)`, projected, using the
    /// tuple seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricOptions {
    /// Sample count for constraint-variation rounds without an exact value.
    pub vg_samples: usize,
    /// Growth-fit window as fractions of the horizon.
    pub window: (f64, f64),
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            vg_samples: 64,
            window: (0.25, 1.0),
        }
    }
}

impl MetricOptions {
    /// The fit window in rounds for horizon `T`.
    pub fn window_for(&self, horizon: usize) -> (usize, usize) {
        let lo = ((self.window.0 * horizon as f64).floor() as usize).max(1);
        let hi = ((self.window.1 * horizon as f64).floor() as usize).clamp(lo, horizon.max(1));
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Environment with a placeholder horizon and seed; each run overrides
    /// both.
    pub environment: EnvConfig,
    pub algorithms: Vec<AlgorithmSpec>,
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
    pub init: InitRule,
    pub solver: SolverConfig,
    pub metrics: MetricOptions,
    pub output_dir: String,
    pub plot_script: bool,
}

impl ExperimentConfig {
    /// Keeps only the algorithms whose name contains `pattern`. Algorithm
    /// indices (and so tuple seeds) are those of the full list.
    pub fn indexed_algorithms(&self, filter: Option<&str>) -> Vec<(usize, &AlgorithmSpec)> {
        self.algorithms
            .iter()
            .enumerate()
            .filter(|(_, a)| filter.is_none_or(|f| a.name.contains(f)))
            .collect()
    }
}

/// Byte offset to 1-based line number.
fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())].iter().filter(|b| **b == b'\n').count() + 1
}

struct Ctx<'t> {
    text: &'t str,
    issues: Vec<ConfigIssue>,
}

type Val<'i> = Spanned<DeValue<'i>>;

impl Ctx<'_> {
    fn push(&mut self, span: Range<usize>, message: impl Into<String>) {
        let line = line_of(self.text, span.start);
        self.issues.push(ConfigIssue {
            line: Some(line),
            message: message.into(),
        });
    }

    fn type_error(&mut self, key: &str, v: &Val<'_>, expected: &str) {
        self.push(v.span(), format!("{key}: expected {expected}, found {}", v.get_ref().type_str()));
    }

    fn int(&mut self, key: &str, v: &Val<'_>) -> Option<i64> {
        match v.get_ref() {
            DeValue::Integer(i) => match i64::from_str_radix(i.as_str(), i.radix()) {
                Ok(n) => Some(n),
                Err(_) => {
                    self.push(v.span(), format!("{key}: integer out of range"));
                    None
                }
            },
            _ => {
                self.type_error(key, v, "an integer");
                None
            }
        }
    }

    fn usize_min(&mut self, key: &str, v: &Val<'_>, min: usize) -> Option<usize> {
        let n = self.int(key, v)?;
        if n < min as i64 {
            self.push(v.span(), format!("{key}: must be ≥ {min}, got {n}"));
            return None;
        }
        Some(n as usize)
    }

    fn float(&mut self, key: &str, v: &Val<'_>) -> Option<f64> {
        let parsed = match v.get_ref() {
            DeValue::Float(f) => f.as_str().parse::<f64>().ok(),
            DeValue::Integer(i) => i64::from_str_radix(i.as_str(), i.radix()).ok().map(|n| n as f64),
            _ => {
                self.type_error(key, v, "a number");
                return None;
            }
        };
        match parsed {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(v.span(), format!("{key}: must be a finite number"));
                None
            }
        }
    }

    fn positive(&mut self, key: &str, v: &Val<'_>) -> Option<f64> {
        let x = self.float(key, v)?;
        if x <= 0.0 {
            self.push(v.span(), format!("{key}: must be > 0, got {x}"));
            return None;
        }
        Some(x)
    }

    fn string<'a>(&mut self, key: &str, v: &'a Val<'_>) -> Option<&'a str> {
        match v.get_ref() {
            DeValue::String(s) => Some(s.as_ref()),
            _ => {
                self.type_error(key, v, "a string");
                None
            }
        }
    }

    fn boolean(&mut self, key: &str, v: &Val<'_>) -> Option<bool> {
        match v.get_ref() {
            DeValue::Boolean(b) => Some(*b),
            _ => {
                self.type_error(key, v, "a boolean");
                None
            }
        }
    }

    fn array<'a, 'i>(&mut self, key: &str, v: &'a Val<'i>) -> Option<&'a [Val<'i>]> {
        match v.get_ref() {
            DeValue::Array(a) => Some(a.as_ref()),
            _ => {
                self.type_error(key, v, "an array");
                None
            }
        }
    }

    fn floats(&mut self, key: &str, v: &Val<'_>) -> Option<Vec<f64>> {
        let items = self.array(key, v)?;
        let out: Vec<Option<f64>> = items.iter().map(|x| self.float(key, x)).collect();
        out.into_iter().collect()
    }

    fn table<'a, 'i>(&mut self, key: &str, v: &'a Val<'i>) -> Option<&'a DeTable<'i>> {
        match v.get_ref() {
            DeValue::Table(t) => Some(t),
            _ => {
                self.type_error(key, v, "a table");
                None
            }
        }
    }

    /// Flags every key of `table` not in `allowed`.
    fn only(&mut self, section: &str, table: &DeTable<'_>, allowed: &[&str]) {
        for (k, _) in table.iter() {
            if !allowed.contains(&k.get_ref().as_ref()) {
                self.push(
                    k.span(),
                    format!("unknown key '{}' in [{section}] (allowed: {})", k.get_ref(), allowed.join(", ")),
                );
            }
        }
    }
}

fn entry<'a, 'i>(table: &'a DeTable<'i>, key: &str) -> Option<&'a Val<'i>> {
    table.get(key)
}

/// Parses and validates a configuration file, collecting every issue.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let (doc, errors) = DeTable::parse_recoverable(text);
    let mut cx = Ctx {
        text,
        issues: Vec::new(),
    };
    for e in &errors {
        let line = e.span().map(|s| line_of(text, s.start));
        cx.issues.push(ConfigIssue {
            line,
            message: e.message().trim().to_string(),
        });
    }
    let root = doc.get_ref();
    cx.only("top level", root, &["environment", "run", "algorithm", "solver", "metrics", "output"]);

    let environment = match entry(root, "environment") {
        Some(v) => cx.table("environment", v).and_then(|t| parse_environment(&mut cx, t, v.span())),
        None => {
            cx.issues.push(ConfigIssue {
                line: None,
                message: "missing [environment] section".into(),
            });
            None
        }
    };

    let mut algorithms = Vec::new();
    let mut horizons = Vec::new();
    let mut seeds = Vec::new();
    let mut init = InitRule::Origin;
    match entry(root, "run") {
        Some(v) => {
            if let Some(t) = cx.table("run", v) {
                cx.only("run", t, &["algorithms", "horizons", "seeds", "init"]);
                parse_run(&mut cx, t, v.span(), &mut algorithms, &mut horizons, &mut seeds, &mut init);
            }
        }
        None => cx.issues.push(ConfigIssue {
            line: None,
            message: "missing [run] section".into(),
        }),
    }

    if let Some(v) = entry(root, "algorithm") {
        if let Some(t) = cx.table("algorithm", v) {
            parse_overrides(&mut cx, t, &mut algorithms);
        }
    }

    let mut solver = SolverConfig::default();
    if let Some(v) = entry(root, "solver") {
        if let Some(t) = cx.table("solver", v) {
            cx.only("solver", t, &["max_iters", "tol", "fixed_step"]);
            if let Some(x) = entry(t, "max_iters").and_then(|v| cx.usize_min("max_iters", v, 1)) {
                solver.max_iters = x;
            }
            if let Some(x) = entry(t, "tol").and_then(|v| cx.positive("tol", v)) {
                solver.tol = x;
            }
            if let Some(x) = entry(t, "fixed_step").and_then(|v| cx.positive("fixed_step", v)) {
                solver.step_rule = StepRule::Fixed(x);
            }
        }
    }

    let mut metrics = MetricOptions::default();
    if let Some(v) = entry(root, "metrics") {
        if let Some(t) = cx.table("metrics", v) {
            cx.only("metrics", t, &["vg_samples", "window"]);
            if let Some(x) = entry(t, "vg_samples").and_then(|v| cx.usize_min("vg_samples", v, 1)) {
                metrics.vg_samples = x;
            }
            if let Some(w) = entry(t, "window") {
                if let Some(xs) = cx.floats("window", w) {
                    if xs.len() == 2 && 0.0 <= xs[0] && xs[0] < xs[1] && xs[1] <= 1.0 {
                        metrics.window = (xs[0], xs[1]);
                    } else {
                        cx.push(w.span(), "window: expected [lo, hi] with 0 ≤ lo < hi ≤ 1 (fractions of the horizon)");
                    }
                }
            }
        }
    }

    let mut output_dir = "results".to_string();
    let mut plot_script = false;
    if let Some(v) = entry(root, "output") {
        if let Some(t) = cx.table("output", v) {
            cx.only("output", t, &["dir", "plot_script"]);
            if let Some(s) = entry(t, "dir").and_then(|v| cx.string("dir", v)) {
                output_dir = s.to_string();
            }
            if let Some(b) = entry(t, "plot_script").and_then(|v| cx.boolean("plot_script", v)) {
                plot_script = b;
            }
        }
    }

    cx.issues.sort_by_key(|i| i.line.unwrap_or(0));
    match environment {
        Some(environment) if cx.issues.is_empty() => Ok(ExperimentConfig {
            environment,
            algorithms,
            horizons,
            seeds,
            init,
            solver,
            metrics,
            output_dir,
            plot_script,
        }),
        _ => Err(Error::ConfigIssues(cx.issues)),
    }
}

#[allow(clippy::too_many_arguments)]
fn parse_run(
    cx: &mut Ctx<'_>,
    t: &DeTable<'_>,
    span: Range<usize>,
    algorithms: &mut Vec<AlgorithmSpec>,
    horizons: &mut Vec<usize>,
    seeds: &mut Vec<u64>,
    init: &mut InitRule,
) {
    match entry(t, "algorithms") {
        Some(v) => {
            if let Some(items) = cx.array("algorithms", v) {
                for item in items {
                    let Some(name) = cx.string("algorithms", item) else { continue };
                    if !ALGORITHM_NAMES.contains(&name) {
                        cx.push(
                            item.span(),
                            format!("unknown algorithm '{name}' (expected one of {})", ALGORITHM_NAMES.join(", ")),
                        );
                    } else if algorithms.iter().any(|a| a.name == name) {
                        cx.push(item.span(), format!("algorithm '{name}' listed twice"));
                    } else {
                        algorithms.push(AlgorithmSpec {
                            name: name.to_string(),
                            overrides: AlgorithmOverrides::default(),
                        });
                    }
                }
                if items.is_empty() {
                    cx.push(v.span(), "algorithms: need at least one algorithm");
                }
            }
        }
        None => cx.push(span.clone(), "[run] is missing 'algorithms'"),
    }
    match entry(t, "horizons") {
        Some(v) => {
            if let Some(items) = cx.array("horizons", v) {
                for item in items {
                    if let Some(n) = cx.int("horizons", item) {
                        if n < 1 {
                            cx.push(item.span(), format!("horizons: horizon ≥ 1 required, got {n}"));
                        } else {
                            horizons.push(n as usize);
                        }
                    }
                }
                if items.is_empty() {
                    cx.push(v.span(), "horizons: need at least one horizon");
                }
            }
        }
        None => cx.push(span.clone(), "[run] is missing 'horizons'"),
    }
    match entry(t, "seeds") {
        Some(v) => {
            if let Some(items) = cx.array("seeds", v) {
                for item in items {
                    if let Some(n) = cx.int("seeds", item) {
                        if n < 0 {
                            cx.push(item.span(), format!("seeds: must be nonnegative, got {n}"));
                        } else {
                            seeds.push(n as u64);
                        }
                    }
                }
                if items.is_empty() {
                    cx.push(v.span(), "seeds: need at least one seed");
                }
            }
        }
        None => cx.push(span, "[run] is missing 'seeds'"),
    }
    if let Some(v) = entry(t, "init") {
        match cx.string("init", v) {
            Some("origin") => *init = InitRule::Origin,
            Some("random") => *init = InitRule::Random,
            Some(other) => cx.push(v.span(), format!("init: expected \"origin\" or \"random\", got \"{other}\"")),
            None => {}
        }
    }
}

fn parse_overrides(cx: &mut Ctx<'_>, t: &DeTable<'_>, algorithms: &mut [AlgorithmSpec]) {
    for (k, v) in t.iter() {
        let name = k.get_ref().as_ref();
        let Some(body) = cx.table(name, v) else { continue };
        let section = format!("algorithm.{name}");
        let allowed: &[&str] = match name {
            "slater" => &["a"],
            "cao2018" | "chen2017" | "chen2018" | "chen2019" => &["eta", "mu"],
            n if ALGORITHM_NAMES.contains(&n) => &[],
            _ => {
                cx.push(k.span(), format!("unknown algorithm '{name}' in [algorithm.*]"));
                continue;
            }
        };
        cx.only(&section, body, allowed);
        let mut o = AlgorithmOverrides::default();
        if let Some(v) = entry(body, "a") {
            if let Some(a) = cx.float("a", v) {
                if a > 0.0 && a < 1.0 {
                    o.a = Some(a);
                } else {
                    cx.push(v.span(), format!("a: must lie in (0, 1), got {a}"));
                }
            }
        }
        o.eta = entry(body, "eta").and_then(|v| cx.positive("eta", v));
        o.mu = entry(body, "mu").and_then(|v| cx.positive("mu", v));
        match algorithms.iter_mut().find(|a| a.name == name) {
            Some(spec) => spec.overrides = o,
            None => cx.push(k.span(), format!("[{section}] configures an algorithm not listed in run.algorithms")),
        }
    }
}

fn parse_environment(cx: &mut Ctx<'_>, t: &DeTable<'_>, span: Range<usize>) -> Option<EnvConfig> {
    let kind = match entry(t, "type") {
        Some(v) => cx.string("type", v).map(|s| (s.to_string(), v.span())),
        None => {
            cx.push(span, "[environment] is missing 'type'");
            None
        }
    }?;
    // placeholders; every run overrides horizon and seed
    let env = match kind.0.as_str() {
        "orr" => {
            cx.only("environment", t, &["type", "drift", "n", "k", "c", "b"]);
            let mut c = OrrConfig::new(Drift::Log, 1, 0);
            if let Some(v) = entry(t, "drift") {
                if let Some(s) = cx.string("drift", v) {
                    match Drift::parse(s) {
                        Some(d) => c.drift = d,
                        None => cx.push(v.span(), format!("drift: expected \"log\" or \"sqrt\", got \"{s}\"")),
                    }
                }
            }
            set_usize(cx, t, "n", 1, &mut c.n);
            set_usize(cx, t, "k", 1, &mut c.k);
            set_positive(cx, t, "c", &mut c.c);
            if let Some(x) = entry(t, "b").and_then(|v| cx.float("b", v)) {
                c.b = x;
            }
            EnvConfig::Orr(c)
        }
        "slater" => {
            cx.only("environment", t, &["type", "eps", "drift_cap", "rho", "target_scale"]);
            let mut c = SlaterConfig::new(1, 0, 0.3, 0.05);
            set_positive(cx, t, "eps", &mut c.eps);
            if let Some(x) = entry(t, "drift_cap").and_then(|v| cx.float("drift_cap", v)) {
                c.drift_cap = x;
            }
            set_positive(cx, t, "rho", &mut c.rho);
            set_positive(cx, t, "target_scale", &mut c.target_scale);
            EnvConfig::Slater(c)
        }
        "network" => {
            cx.only(
                "environment",
                t,
                &["type", "j", "k", "incidence", "bandwidth", "capacity", "load", "amplitude", "period", "cost_step"],
            );
            let mut j = 3;
            let mut k = 2;
            set_usize(cx, t, "j", 1, &mut j);
            set_usize(cx, t, "k", 1, &mut k);
            let mut c = NetworkConfig::new(j, k, 1, 0);
            if let Some(v) = entry(t, "incidence") {
                if let Some(rows) = cx.array("incidence", v) {
                    let parsed: Vec<Option<Vec<f64>>> = rows.iter().map(|r| cx.floats("incidence", r)).collect();
                    if let Some(m) = parsed.into_iter().collect::<Option<Vec<_>>>() {
                        c.incidence = Some(m);
                    }
                }
            }
            if let Some(x) = entry(t, "bandwidth").and_then(|v| cx.floats("bandwidth", v)) {
                c.bandwidth = x;
            }
            if let Some(x) = entry(t, "capacity").and_then(|v| cx.floats("capacity", v)) {
                c.capacity = x;
            }
            set_positive(cx, t, "load", &mut c.load);
            if let Some(x) = entry(t, "amplitude").and_then(|v| cx.float("amplitude", v)) {
                c.amplitude = x;
            }
            set_positive(cx, t, "period", &mut c.period);
            if let Some(x) = entry(t, "cost_step").and_then(|v| cx.float("cost_step", v)) {
                c.cost_step = x;
            }
            EnvConfig::Network(c)
        }
        "jobsched" => {
            cx.only("environment", t, &["type", "cores", "jobs", "num_jobs", "norm_order"]);
            let mut c = JobSchedConfig::new(1, 0);
            if let Some(x) = entry(t, "cores").and_then(|v| cx.floats("cores", v)) {
                c.cores = x;
            }
            set_usize(cx, t, "num_jobs", 1, &mut c.num_jobs);
            if let Some(x) = entry(t, "norm_order").and_then(|v| cx.float("norm_order", v)) {
                c.norm_order = x;
            }
            if let Some(v) = entry(t, "jobs") {
                if let Some(items) = cx.array("jobs", v) {
                    for item in items {
                        let Some(jt) = cx.table("jobs", item) else { continue };
                        cx.only("environment.jobs", jt, &["arrival", "demand", "duration"]);
                        let arrival = entry(jt, "arrival").and_then(|v| cx.usize_min("arrival", v, 0));
                        let demand = entry(jt, "demand").and_then(|v| cx.positive("demand", v));
                        let duration = entry(jt, "duration").and_then(|v| cx.positive("duration", v));
                        match (arrival, demand, duration) {
                            (Some(arrival), Some(demand), Some(duration)) => c.jobs.push(Job {
                                arrival,
                                demand,
                                duration,
                            }),
                            _ => cx.push(item.span(), "jobs: each job needs arrival, demand and duration"),
                        }
                    }
                }
            }
            EnvConfig::JobSched(c)
        }
        other => {
            cx.push(
                kind.1,
                format!("type: unknown environment \"{other}\" (expected orr, slater, network or jobsched)"),
            );
            return None;
        }
    };
    Some(env)
}

fn set_usize(cx: &mut Ctx<'_>, t: &DeTable<'_>, key: &str, min: usize, slot: &mut usize) {
    if let Some(x) = entry(t, key).and_then(|v| cx.usize_min(key, v, min)) {
        *slot = x;
    }
}

fn set_positive(cx: &mut Ctx<'_>, t: &DeTable<'_>, key: &str, slot: &mut f64) {
    if let Some(x) = entry(t, key).and_then(|v| cx.positive(key, v)) {
        *slot = x;
    }
}

/// Checks what needs a concrete horizon: environment invariants (e.g. job
/// schedulability) at every configured horizon and seed.
pub fn validate_runs(cfg: &ExperimentConfig) -> Result<()> {
    let mut issues = Vec::new();
    let mut seen = BTreeSet::new();
    for &h in &cfg.horizons {
        for &s in &cfg.seeds {
            let env = cfg.environment.with_run(h, s);
            if let Err(e) = env.validate() {
                let msg = e.to_string();
                if seen.insert(msg.clone()) {
                    issues.push(ConfigIssue {
                        line: None,
                        message: format!("environment at horizon {h}, seed {s}: {msg}"),
                    });
                }
            }
        }
    }
    if let Err(e) = cfg.solver.validate() {
        issues.push(ConfigIssue {
            line: None,
            message: e.to_string(),
        });
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(Error::ConfigIssues(issues))
    }
}

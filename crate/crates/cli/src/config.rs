//! Experiment configuration read from a TOML file.
//!
//! Every key is looked up by its dotted path so that a bad value can be
//! reported by name. Unknown keys are rejected for the same reason.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use subact_core::maps::Family;
use subact_core::moduli::{make_omega_alpha_beta, make_omega_log, Modulus};
use toml::{Table, Value};

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = Result<T, ConfigError>;

fn bad<T>(key: &str, message: impl Into<String>) -> Res<T> {
    Err(ConfigError { key: key.to_string(), message: message.into() })
}

#[derive(Debug, Clone, Serialize)]
pub enum ModulusSpec {
    AlphaBeta { alpha: f64, beta: f64 },
    LogK { k: f64 },
}

impl ModulusSpec {
    pub fn build(&self) -> subact_core::Result<Modulus> {
        match *self {
            ModulusSpec::AlphaBeta { alpha, beta } => make_omega_alpha_beta(alpha, beta),
            ModulusSpec::LogK { k } => make_omega_log(k),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum Trim {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum XiChoice {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleConfig {
    pub w0: f64,
    pub gamma_time: f64,
    pub n1: usize,
    pub k_max: usize,
    pub c0_inflation: f64,
    pub trim: Trim,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionConfig {
    pub xi: XiChoice,
    /// Depth `K` of the violation certificate; defaults to `k_max`.
    pub depth: Option<usize>,
    pub samples: usize,
    pub max_period: usize,
    pub orbit_budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PotentialKind {
    Zero,
    Random,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubactionConfig {
    pub grid_size: usize,
    pub omega_grid: usize,
    pub eps: f64,
    pub k_cap: usize,
    pub max_period: usize,
    pub orbit_budget: usize,
    pub potential: PotentialKind,
    pub terms: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub family: Family,
    pub modulus: ModulusSpec,
    pub schedule: ScheduleConfig,
    pub obstruction: ObstructionConfig,
    pub subaction: SubactionConfig,
    pub checkpoints: Option<Vec<usize>>,
    pub out: Option<String>,
    /// The parsed file, echoed into manifests.
    pub raw: Table,
}

/// Walks a table, remembering which keys were read.
struct Reader<'a> {
    prefix: String,
    table: Option<&'a Table>,
    seen: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(prefix: &str, table: Option<&'a Table>) -> Self {
        Reader { prefix: prefix.to_string(), table, seen: BTreeSet::new() }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        self.seen.insert(key.to_string());
        self.table.and_then(|t| t.get(key))
    }

    fn f64_opt(&mut self, key: &str) -> Res<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => bad(&self.path(key), format!("expected a number, got {}", v.type_str())),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Res<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&mut self, key: &str) -> Res<f64> {
        match self.f64_opt(key)? {
            Some(x) => Ok(x),
            None => bad(&self.path(key), "missing"),
        }
    }

    fn usize_opt(&mut self, key: &str) -> Res<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(v) => bad(&self.path(key), format!("expected a nonnegative integer, got {v}")),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Res<usize> {
        Ok(self.usize_opt(key)?.unwrap_or(default))
    }

    fn str_opt(&mut self, key: &str) -> Res<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => bad(&self.path(key), format!("expected a string, got {}", v.type_str())),
        }
    }

    fn finish(self) -> Res<()> {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.seen.contains(k) {
                    return bad(&self.path(k), "unknown key");
                }
            }
        }
        Ok(())
    }
}

fn section<'a>(root: &'a Table, name: &str) -> Res<Option<&'a Table>> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(v) => bad(name, format!("expected a table, got {}", v.type_str())),
    }
}

fn check(ok: bool, key: &str, message: &str) -> Res<()> {
    if ok {
        Ok(())
    } else {
        bad(key, message)
    }
}

fn parse_family(t: Option<&Table>) -> Res<Family> {
    let mut r = Reader::new("map", t);
    let name = r.str_opt("family")?.unwrap_or("mp");
    let fam = match name {
        "mp" | "mp-inverse" => {
            let s = r.f64_req("s")?;
            check(s > 0.0 && s.is_finite(), "map.s", "must be > 0")?;
            if name == "mp" {
                Family::MannevillePomeau { s }
            } else {
                Family::MpInverse { s }
            }
        }
        "farey-f" | "farey-g" | "h" => {
            let rho = r.f64_or("rho", 1.0)?;
            check(rho > 0.0 && rho <= 1.0, "map.rho", "must lie in (0, 1]")?;
            match name {
                "farey-f" => Family::Farey { rho },
                "farey-g" => Family::FareyInverse { rho },
                _ => Family::H { rho },
            }
        }
        "log" => {
            let tau = r.f64_req("tau")?;
            let theta = r.f64_or("theta", 0.0)?;
            check(tau > 0.0 && tau <= 1.0, "map.tau", "must lie in (0, 1]")?;
            check(theta >= 0.0, "map.theta", "must be >= 0")?;
            Family::LogMap { tau, theta }
        }
        "doubling" => Family::Doubling,
        other => {
            return bad(
                "map.family",
                format!("unknown family `{other}` (expected mp, mp-inverse, farey-f, farey-g, h, log or doubling)"),
            )
        }
    };
    r.finish()?;
    Ok(fam)
}

fn parse_modulus(t: Option<&Table>) -> Res<ModulusSpec> {
    let mut r = Reader::new("modulus", t);
    let spec = match r.str_opt("kind")?.unwrap_or("alpha-beta") {
        "alpha-beta" => {
            let alpha = r.f64_req("alpha")?;
            let beta = r.f64_or("beta", 0.0)?;
            check(alpha >= 0.0 && alpha <= 1.0, "modulus.alpha", "must lie in [0, 1]")?;
            check(beta >= 0.0, "modulus.beta", "must be >= 0")?;
            check(alpha > 0.0 || beta > 0.0, "modulus.alpha", "alpha = beta = 0 is degenerate")?;
            ModulusSpec::AlphaBeta { alpha, beta }
        }
        "log-k" => {
            let k = r.f64_req("k")?;
            check(k > 0.0 && k.is_finite(), "modulus.k", "must be > 0")?;
            ModulusSpec::LogK { k }
        }
        other => return bad("modulus.kind", format!("unknown kind `{other}` (expected alpha-beta or log-k)")),
    };
    r.finish()?;
    Ok(spec)
}

fn parse_schedule(t: Option<&Table>) -> Res<ScheduleConfig> {
    let mut r = Reader::new("schedule", t);
    let w0 = r.f64_or("w0", 0.25)?;
    let gamma_time = r.f64_or("gamma_time", 0.96)?;
    let n1 = r.usize_or("n1", 200)?;
    let k_max = r.usize_or("k_max", 100)?;
    let c0_inflation = r.f64_or("c0_inflation", 0.005)?;
    let trim = match r.get("trim") {
        None => Trim::Auto,
        Some(Value::String(s)) if s == "auto" => Trim::Auto,
        Some(Value::Integer(i)) if *i >= 0 => Trim::Fixed(*i as usize),
        Some(v) => return bad("schedule.trim", format!("expected \"auto\" or a nonnegative integer, got {v}")),
    };
    check(w0 > 0.0 && w0 < 1.0, "schedule.w0", "must lie in (0, 1)")?;
    check(gamma_time > 0.0 && gamma_time < 1.0, "schedule.gamma_time", "must lie in (0, 1)")?;
    check(n1 >= 1, "schedule.n1", "must be >= 1")?;
    check(k_max >= 3, "schedule.k_max", "must be >= 3")?;
    check(c0_inflation >= 0.0, "schedule.c0_inflation", "must be >= 0")?;
    r.finish()?;
    Ok(ScheduleConfig { w0, gamma_time, n1, k_max, c0_inflation, trim })
}

fn parse_obstruction(t: Option<&Table>) -> Res<ObstructionConfig> {
    let mut r = Reader::new("obstruction", t);
    let xi = match r.get("xi") {
        None => XiChoice::Auto,
        Some(Value::String(s)) if s == "auto" => XiChoice::Auto,
        Some(Value::Float(x)) if *x > 0.0 => XiChoice::Fixed(*x),
        Some(Value::Integer(i)) if *i > 0 => XiChoice::Fixed(*i as f64),
        Some(v) => return bad("obstruction.xi", format!("expected \"auto\" or a positive number, got {v}")),
    };
    let depth = r.usize_opt("K")?;
    let samples = r.usize_or("samples", 1000)?;
    let max_period = r.usize_or("max_period", 12)?;
    let orbit_budget = r.usize_or("orbit_budget", 200_000)?;
    check(samples >= 1, "obstruction.samples", "must be >= 1")?;
    check((1..=20).contains(&max_period), "obstruction.max_period", "must lie in [1, 20]")?;
    r.finish()?;
    Ok(ObstructionConfig { xi, depth, samples, max_period, orbit_budget })
}

fn parse_subaction(t: Option<&Table>) -> Res<SubactionConfig> {
    let mut r = Reader::new("subaction", t);
    let grid_size = r.usize_or("grid_size", 256)?;
    let omega_grid = r.usize_or("omega_grid", 1000)?;
    let eps = r.f64_or("eps", 1e-10)?;
    let k_cap = r.usize_or("k_cap", 10_000)?;
    let max_period = r.usize_or("max_period", 10)?;
    let orbit_budget = r.usize_or("orbit_budget", 20_000)?;
    let potential = match r.str_opt("potential")?.unwrap_or("random") {
        "random" => PotentialKind::Random,
        "zero" => PotentialKind::Zero,
        other => return bad("subaction.potential", format!("unknown potential `{other}` (expected random or zero)")),
    };
    let terms = r.usize_or("terms", 4)?;
    let pairs = r.usize_or("pairs", 10_000)?;
    check(grid_size >= 2, "subaction.grid_size", "must be >= 2")?;
    check(omega_grid >= 2, "subaction.omega_grid", "must be >= 2")?;
    check(eps >= 0.0, "subaction.eps", "must be >= 0")?;
    check(k_cap >= 1, "subaction.k_cap", "must be >= 1")?;
    check((1..=20).contains(&max_period), "subaction.max_period", "must lie in [1, 20]")?;
    check(terms >= 1, "subaction.terms", "must be >= 1")?;
    r.finish()?;
    Ok(SubactionConfig { grid_size, omega_grid, eps, k_cap, max_period, orbit_budget, potential, terms, pairs })
}

fn parse_checkpoints(t: Option<&Table>) -> Res<Option<Vec<usize>>> {
    let mut r = Reader::new("asymptotics", t);
    let out = match r.get("checkpoints") {
        None => None,
        Some(Value::Array(a)) => {
            let mut v = Vec::with_capacity(a.len());
            for x in a {
                match x {
                    Value::Integer(i) if *i >= 1 => v.push(*i as usize),
                    _ => return bad("asymptotics.checkpoints", format!("entries must be positive integers, got {x}")),
                }
            }
            check(!v.is_empty(), "asymptotics.checkpoints", "must not be empty")?;
            Some(v)
        }
        Some(v) => return bad("asymptotics.checkpoints", format!("expected an array, got {}", v.type_str())),
    };
    r.finish()?;
    Ok(out)
}

pub fn parse_config(text: &str) -> Res<ExperimentConfig> {
    let raw: Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        key: "<file>".into(),
        message: e.message().to_string(),
    })?;
    let mut root = Reader::new("", Some(&raw));
    let seed = root.usize_or("seed", 0)? as u64;
    let out = root.str_opt("out")?.map(str::to_string);
    for name in ["map", "modulus", "schedule", "obstruction", "subaction", "asymptotics"] {
        root.get(name);
    }
    root.finish()?;
    Ok(ExperimentConfig {
        seed,
        family: parse_family(section(&raw, "map")?)?,
        modulus: parse_modulus(section(&raw, "modulus")?)?,
        schedule: parse_schedule(section(&raw, "schedule")?)?,
        obstruction: parse_obstruction(section(&raw, "obstruction")?)?,
        subaction: parse_subaction(section(&raw, "subaction")?)?,
        checkpoints: parse_checkpoints(section(&raw, "asymptotics")?)?,
        out,
        raw,
    })
}

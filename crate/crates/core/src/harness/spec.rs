//! Experiment definitions read from `key = value` files and flags.
//!
//! ```text
//! # strongly convex fixture
//! problem = synthetic(42, 500, 20, 2, 1.0)
//! mu = 0.1
//! solver = fncr_reg_ls
//! sigma = 0.05
//! out = runs/ce.csv
//! ```
//!
//! Problems: `quadratic(seed, d, cond)`, `synthetic(seed, N, d, C, sep)`,
//! `libsvm(path)` and `csv(path)`. Solver keys left unset take the defaults
//! of the chosen solver.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::solvers::{SolverConfig, SolverKind};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic {
        seed: u64,
        n: usize,
        d: usize,
        c: usize,
        separation: f64,
    },
    Libsvm {
        path: PathBuf,
        n_features: Option<usize>,
    },
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Quadratic { seed: u64, d: usize, cond: f64 },
    CrossEntropy { source: DataSource, mu: f64 },
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Quadratic { seed, d, cond } => write!(f, "quadratic({seed}, {d}, {cond})"),
            ProblemSpec::CrossEntropy { source, mu } => {
                match source {
                    DataSource::Synthetic { seed, n, d, c, separation } => {
                        write!(f, "synthetic({seed}, {n}, {d}, {c}, {separation})")?
                    }
                    DataSource::Libsvm { path, .. } => write!(f, "libsvm({})", path.display())?,
                    DataSource::Csv(path) => write!(f, "csv({})", path.display())?,
                }
                write!(f, " mu={mu}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    #[default]
    Uniform01,
    Zeros,
}

/// Reference optimum used to fill the `delta` column.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FStarSpec {
    #[default]
    None,
    Value(f64),
    /// Computed by a tight-tolerance run before the experiment.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub solver: SolverKind,
    pub config: SolverConfig,
    pub output_path: Option<PathBuf>,
    /// Seed for the starting point.
    pub seed: u64,
    pub init: InitScheme,
    pub f_star: FStarSpec,
    pub policy: ExecPolicy,
}

/// Keys accepted in config files and `--override`.
pub const KEYS: &[&str] = &[
    "problem",
    "mu",
    "n_features",
    "solver",
    "seed",
    "init",
    "out",
    "f_star",
    "policy",
    "rho",
    "omega",
    "T",
    "T_max",
    "zeta",
    "eta0",
    "sigma",
    "theta",
    "kappa_schedule",
    "grad_tol",
    "budget",
    "max_outer",
    "check_window",
    "ls_rho",
];

/// Raw `key = value` pairs in the order given; later pairs win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pairs: Vec<(String, String)>,
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses one pair per line. `#` starts a comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, found {line:?}"),
            })?;
            raw.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets `key`, rejecting unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.pairs.push((key.to_string(), value.to_string()));
        Ok(())
    }

    /// Applies a `key=value` string.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, found {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn merge(&mut self, other: &RawConfig) {
        self.pairs.extend(other.pairs.iter().cloned());
    }

    pub fn into_spec(self) -> Result<ExperimentSpec> {
        build_spec(&self)
    }
}

/// Parses a config file text into a validated spec.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    RawConfig::parse(text)?.into_spec()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key} = {v:?} is not a valid number")))
}

/// Splits `name(a, b, c)` into the name and trimmed arguments.
fn call(v: &str) -> Result<(&str, Vec<&str>)> {
    let bad = || Error::Config(format!("problem = {v:?}: expected name(args)"));
    let open = v.find('(').ok_or_else(bad)?;
    let inner = v[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Ok((v[..open].trim(), args))
}

fn arity(name: &str, args: &[&str], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(Error::Config(format!(
            "{name} takes {n} arguments, found {}",
            args.len()
        )));
    }
    Ok(())
}

fn parse_problem(raw: &RawConfig) -> Result<ProblemSpec> {
    let v = raw
        .get("problem")
        .ok_or_else(|| Error::Config("missing problem".into()))?;
    let (name, args) = call(v)?;
    let mu = match raw.get("mu") {
        Some(m) => num::<f64>("mu", m)?,
        None => 0.0,
    };
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Config(format!("mu = {mu} is out of range: expected mu >= 0")));
    }
    let n_features = raw.get("n_features").map(|v| num("n_features", v)).transpose()?;
    let spec = match name {
        "quadratic" => {
            arity(name, &args, 3)?;
            let d: usize = num("d", args[1])?;
            let cond: f64 = num("cond", args[2])?;
            if d < 1 || !(cond >= 1.0 && cond.is_finite()) {
                return Err(Error::Config(format!(
                    "problem = {v} is out of range: expected d >= 1, cond >= 1"
                )));
            }
            ProblemSpec::Quadratic { seed: num("seed", args[0])?, d, cond }
        }
        "synthetic" => {
            arity(name, &args, 5)?;
            let source = DataSource::Synthetic {
                seed: num("seed", args[0])?,
                n: num("N", args[1])?,
                d: num("d", args[2])?,
                c: num("C", args[3])?,
                separation: num("sep", args[4])?,
            };
            ProblemSpec::CrossEntropy { source, mu }
        }
        "libsvm" => {
            arity(name, &args, 1)?;
            let source = DataSource::Libsvm { path: args[0].into(), n_features };
            ProblemSpec::CrossEntropy { source, mu }
        }
        "csv" => {
            arity(name, &args, 1)?;
            ProblemSpec::CrossEntropy { source: DataSource::Csv(args[0].into()), mu }
        }
        other => return Err(Error::Config(format!("unknown problem {other:?}"))),
    };
    Ok(spec)
}

fn build_spec(raw: &RawConfig) -> Result<ExperimentSpec> {
    let problem = parse_problem(raw)?;
    let solver: SolverKind = raw.get("solver").unwrap_or("fncr_ls").parse()?;
    let mut c = solver.default_config();
    for key in KEYS {
        let Some(v) = raw.get(key) else { continue };
        match *key {
            "rho" => c.rho = num(key, v)?,
            "omega" => c.omega = num(key, v)?,
            "T" => c.t_min = num(key, v)?,
            "T_max" => c.t_max = num(key, v)?,
            "zeta" => c.zeta = num(key, v)?,
            "eta0" => c.eta0 = num(key, v)?,
            "sigma" => c.sigma = num(key, v)?,
            "theta" => c.theta = num(key, v)?,
            "kappa_schedule" => {
                c.kappa_schedule = match v {
                    "none" | "" => None,
                    _ => Some(num(key, v)?),
                }
            }
            "grad_tol" => c.grad_tol = num(key, v)?,
            "budget" => c.oracle_budget = num::<f64>(key, v).and_then(|b| budget(b, v))?,
            "max_outer" => c.max_outer = num(key, v)?,
            "check_window" => c.check_window = num(key, v)?,
            "ls_rho" => c.ls_rho = num(key, v)?,
            _ => {}
        }
    }
    if solver == SolverKind::FncrRegLs && c.sigma <= 0.0 {
        return Err(Error::Config(format!(
            "sigma = {} is out of range: fncr_reg_ls needs sigma > 0",
            c.sigma
        )));
    }
    c.validate()?;

    let init = match raw.get("init").unwrap_or("uniform01") {
        "uniform01" => InitScheme::Uniform01,
        "zeros" => InitScheme::Zeros,
        other => return Err(Error::Config(format!("unknown init scheme {other:?}"))),
    };
    let f_star = match raw.get("f_star") {
        None | Some("none") => FStarSpec::None,
        Some("auto") => FStarSpec::Auto,
        Some(v) => FStarSpec::Value(num("f_star", v)?),
    };
    let policy = match raw.get("policy").unwrap_or("parallel") {
        "parallel" => ExecPolicy::Parallel,
        "sequential" => ExecPolicy::Sequential,
        other => return Err(Error::Config(format!("unknown policy {other:?}"))),
    };
    Ok(ExperimentSpec {
        problem,
        solver,
        config: c,
        output_path: raw.get("out").map(PathBuf::from),
        seed: raw.get("seed").map(|v| num("seed", v)).transpose()?.unwrap_or(0),
        init,
        f_star,
        policy,
    })
}

/// Accepts `100000` as well as `1e5`.
fn budget(b: f64, v: &str) -> Result<u64> {
    if b >= 1.0 && b.fract() == 0.0 && b <= u64::MAX as f64 {
        Ok(b as u64)
    } else {
        Err(Error::Config(format!(
            "budget = {v} is out of range: expected a positive integer"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gets_defaults() {
        let spec = parse_config("problem = quadratic(1, 10, 100)\n").unwrap();
        assert_eq!(spec.solver, SolverKind::FncrLs);
        assert_eq!(spec.config, SolverConfig::default());
        assert_eq!(spec.init, InitScheme::Uniform01);
        assert_eq!(spec.f_star, FStarSpec::None);
    }

    #[test]
    fn solver_defaults_and_override_order() {
        let mut raw = RawConfig::parse("problem = synthetic(1, 20, 3, 2, 1.0)\nmu = 0.1").unwrap();
        raw.set_pair("solver=gd").unwrap();
        assert_eq!(raw.clone().into_spec().unwrap().config.eta0, 0.01);
        raw.set_pair("eta0=0.5").unwrap();
        assert_eq!(raw.clone().into_spec().unwrap().config.eta0, 0.5);

        let reg = parse_config("problem = quadratic(1,3,2)\nsolver = fncr_reg_ls").unwrap();
        assert_eq!(reg.config.sigma, 0.01);
        let ncg = parse_config("problem = quadratic(1,3,2)\nsolver = newton_cg").unwrap();
        assert_eq!(ncg.config.omega, 0.1);
    }

    #[test]
    fn comments_and_values() {
        let spec = parse_config(
            "# header\n\nproblem = quadratic(7, 5, 10) # inline\nT = 3\nT_max=4\nbudget = 1e7\n\
             f_star = -1.5\ninit = zeros\nout = a.csv\nseed=9\npolicy=sequential\nkappa_schedule=16\n",
        )
        .unwrap();
        assert_eq!(spec.problem, ProblemSpec::Quadratic { seed: 7, d: 5, cond: 10.0 });
        assert_eq!((spec.config.t_min, spec.config.t_max), (3, 4));
        assert_eq!(spec.config.oracle_budget, 10_000_000);
        assert_eq!(spec.config.kappa_schedule, Some(16.0));
        assert_eq!(spec.f_star, FStarSpec::Value(-1.5));
        assert_eq!(spec.init, InitScheme::Zeros);
        assert_eq!(spec.output_path, Some(PathBuf::from("a.csv")));
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.policy, ExecPolicy::Sequential);
    }

    #[test]
    fn errors() {
        let cases = [
            "problem = quadratic(1, 10, 100)\nrho = 0.7",
            "problem = quadratic(1, 10, 100)\nfoo = 1",
            "mu = 0.1",
            "problem = cube(1)",
            "problem = quadratic(1, 10)",
            "problem = quadratic(1, 10, 0.5)",
            "problem = quadratic(1, 10, 100)\nsolver = lbfgs",
            "problem = quadratic(1, 10, 100)\nbudget = 0",
            "problem = quadratic(1, 10, 100)\nsolver = fncr_reg_ls\nsigma = 0",
            "problem = quadratic(1, 10, 100)\nT = x",
            "problem quadratic",
        ];
        for text in cases {
            assert!(parse_config(text).is_err(), "{text}");
        }
        let msg = parse_config("problem = quadratic(1, 10, 100)\nrho = 0.7").unwrap_err().to_string();
        assert!(msg.contains("rho"), "{msg}");
        assert!(matches!(parse_config("mu = 1"), Err(Error::Config(m)) if m.contains("missing problem")));
    }

    #[test]
    fn display_round_trip() {
        let p = parse_config("problem = synthetic(42, 500, 20, 2, 1)\nmu=0.1").unwrap().problem;
        assert_eq!(p.to_string(), "synthetic(42, 500, 20, 2, 1) mu=0.1");
    }
}

//! Experiment configuration: command-line flags, a flat `key = value` file,
//! and the resolved form written next to the results.
//!
//! Precedence is defaults < `--paper-scale` preset < config file < flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::error::{BenchError, Result};

/// Command-line interface. Every option except `--config` has a config-file
/// key of the same name without the leading dashes.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "bcddr", about = "Compare ALS-DR, ALS and MU on nonnegative CP factorization")]
pub struct Cli {
    /// Flat key = value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// synth, surrogate or file:PATH (NTF1 tensor).
    #[arg(long)]
    pub data: Option<String>,
    /// Comma-separated data dimensions.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub rank: Option<String>,
    /// als_dr[:beta[:c_prime]], als or mu; repeatable or comma-separated.
    #[arg(long)]
    pub algo: Vec<String>,
    /// Default β for als_dr entries that do not carry one.
    #[arg(long)]
    pub beta: Option<String>,
    /// Default c′ for als_dr entries that do not carry one.
    #[arg(long = "c-prime")]
    pub c_prime: Option<String>,
    #[arg(long)]
    pub runs: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long = "max-sweeps")]
    pub max_sweeps: Option<String>,
    #[arg(long = "max-seconds")]
    pub max_seconds: Option<String>,
    /// Entrywise upper bound M on all factors; `auto` for the data-driven default.
    #[arg(long = "box-bound")]
    pub box_bound: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub plot: bool,
    /// Full-size protocol: dims 100,200,300, rank 5, 10 runs, all four algorithms.
    #[arg(long = "paper-scale")]
    pub paper_scale: bool,
    /// Run one job at a time (timings unaffected by sibling runs).
    #[arg(long)]
    pub serial: bool,
    /// wall, or work for a reproducible flop-count clock.
    #[arg(long)]
    pub clock: Option<String>,
    /// Nominal flop rate of the work clock.
    #[arg(long = "work-rate")]
    pub work_rate: Option<String>,
    /// Number of time bins in the aggregate curve.
    #[arg(long)]
    pub bins: Option<String>,
    #[arg(long = "log-y")]
    pub log_y: bool,
    /// Also write the data tensor as NTF1.
    #[arg(long = "emit-data")]
    pub emit_data: bool,
    /// Relative noise level of synthetic data.
    #[arg(long)]
    pub noise: Option<String>,
    /// Nonzero fraction of surrogate data.
    #[arg(long)]
    pub density: Option<String>,
    /// Mean entry of surrogate data.
    #[arg(long = "target-mean")]
    pub target_mean: Option<String>,
    /// Upper end of the uniform initialization.
    #[arg(long = "init-scale")]
    pub init_scale: Option<String>,
}

/// Config-file keys, in the order they are written back.
pub const KEYS: &[&str] = &[
    "data",
    "shape",
    "rank",
    "algo",
    "beta",
    "c-prime",
    "runs",
    "seed",
    "max-sweeps",
    "max-seconds",
    "box-bound",
    "out",
    "plot",
    "paper-scale",
    "serial",
    "clock",
    "work-rate",
    "bins",
    "log-y",
    "emit-data",
    "noise",
    "density",
    "target-mean",
    "init-scale",
];

pub const DEFAULT_C_PRIME: f64 = 1e5;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synth,
    Surrogate,
    File(PathBuf),
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Synth => f.write_str("synth"),
            DataSource::Surrogate => f.write_str("surrogate"),
            DataSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    AlsDr { beta: f64, c_prime: f64 },
    Als,
    Mu,
}

impl Algorithm {
    /// Short name used in file names, CSVs and the plot legend.
    pub fn label(&self) -> String {
        match *self {
            Algorithm::AlsDr { beta, c_prime } if c_prime == DEFAULT_C_PRIME => format!("als_dr-{beta}"),
            Algorithm::AlsDr { beta, c_prime } => format!("als_dr-{beta}-c{c_prime}"),
            Algorithm::Als => "als".into(),
            Algorithm::Mu => "mu".into(),
        }
    }

    /// Inverse of the `Display` form; bare `als_dr` takes the given defaults.
    pub fn parse(s: &str, default_beta: f64, default_c_prime: f64) -> Result<Self> {
        let bad = |msg: String| BenchError::usage("algo", msg);
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        match name {
            "als" | "mu" if !rest.is_empty() => Err(bad(format!("`{name}` takes no parameters: {s}"))),
            "als" => Ok(Algorithm::Als),
            "mu" => Ok(Algorithm::Mu),
            "als_dr" if rest.len() <= 2 => {
                let num = |v: Option<&&str>, default: f64| -> Result<f64> {
                    v.map_or(Ok(default), |t| t.parse().map_err(|_| bad(format!("bad number `{t}` in {s}"))))
                };
                let beta = num(rest.first(), default_beta)?;
                let c_prime = num(rest.get(1), default_c_prime)?;
                if !(beta > 0.0 && beta.is_finite() && c_prime > 0.0 && c_prime.is_finite()) {
                    return Err(bad(format!("β and c′ must be positive in {s}")));
                }
                Ok(Algorithm::AlsDr { beta, c_prime })
            }
            _ => Err(bad(format!("unknown algorithm `{s}` (expected als_dr[:beta[:c_prime]], als or mu)"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::AlsDr { beta, c_prime } => write!(f, "als_dr:{beta}:{c_prime}"),
            Algorithm::Als => f.write_str("als"),
            Algorithm::Mu => f.write_str("mu"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClockKind {
    Wall,
    Work,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub shape: Vec<usize>,
    pub rank: usize,
    pub algorithms: Vec<Algorithm>,
    pub beta: f64,
    pub c_prime: f64,
    pub runs: usize,
    pub seed: u64,
    pub max_sweeps: u64,
    pub max_seconds: f64,
    pub box_bound: Option<f64>,
    pub out: PathBuf,
    pub plot: bool,
    pub paper_scale: bool,
    pub serial: bool,
    pub clock: ClockKind,
    pub work_rate: f64,
    pub bins: usize,
    pub log_y: bool,
    pub emit_data: bool,
    pub noise: f64,
    pub density: f64,
    pub target_mean: f64,
    pub init_scale: f64,
}

/// Where a resolved value came from, plus any overridden file value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Default,
    Preset,
    File,
    Flag { file_value: Option<String> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub sources: BTreeMap<String, Source>,
    pub config_file: Option<PathBuf>,
}

impl Provenance {
    /// Human-readable notes, one per key that did not come from defaults.
    pub fn notes(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(p) = &self.config_file {
            out.push(format!("config file: {}", p.display()));
        }
        for key in KEYS {
            match self.sources.get(*key) {
                Some(Source::Preset) => out.push(format!("{key}: paper-scale preset")),
                Some(Source::File) => out.push(format!("{key}: config file")),
                Some(Source::Flag { file_value: None }) => out.push(format!("{key}: command line")),
                Some(Source::Flag { file_value: Some(v) }) => {
                    out.push(format!("{key}: command line (overrides config file value `{v}`)"))
                }
                _ => {}
            }
        }
        out
    }
}

/// Parses the flat config format: `key = value` lines, `#` comments, blank
/// lines ignored. Unknown and repeated keys are errors.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| BenchError::usage("config", format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(BenchError::usage(key, format!("unknown config key on line {}", lineno + 1)));
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(BenchError::usage(key, format!("repeated on line {}", lineno + 1)));
        }
    }
    Ok(out)
}

fn cli_values(cli: &Cli) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut put = |k: &str, v: &Option<String>| {
        if let Some(v) = v {
            out.insert(k.to_string(), v.clone());
        }
    };
    put("data", &cli.data);
    put("shape", &cli.shape);
    put("rank", &cli.rank);
    put("beta", &cli.beta);
    put("c-prime", &cli.c_prime);
    put("runs", &cli.runs);
    put("seed", &cli.seed);
    put("max-sweeps", &cli.max_sweeps);
    put("max-seconds", &cli.max_seconds);
    put("box-bound", &cli.box_bound);
    put("out", &cli.out);
    put("clock", &cli.clock);
    put("work-rate", &cli.work_rate);
    put("bins", &cli.bins);
    put("noise", &cli.noise);
    put("density", &cli.density);
    put("target-mean", &cli.target_mean);
    put("init-scale", &cli.init_scale);
    if !cli.algo.is_empty() {
        out.insert("algo".into(), cli.algo.join(","));
    }
    for (k, set) in [
        ("plot", cli.plot),
        ("paper-scale", cli.paper_scale),
        ("serial", cli.serial),
        ("log-y", cli.log_y),
        ("emit-data", cli.emit_data),
    ] {
        if set {
            out.insert(k.into(), "true".into());
        }
    }
    out
}

fn defaults(full_scale: bool, surrogate: bool) -> Vec<(&'static str, &'static str, bool)> {
    // (key, value, comes from the paper-scale preset)
    let mut d = vec![
        ("data", "synth", false),
        ("algo", "als_dr:0.5,als_dr:1,als,mu", false),
        ("beta", "1", false),
        ("c-prime", "100000", false),
        ("seed", "0", false),
        ("max-sweeps", "300", false),
        ("max-seconds", "60", false),
        ("box-bound", "auto", false),
        ("out", "results", false),
        ("plot", "false", false),
        ("paper-scale", "false", false),
        ("serial", "false", false),
        ("clock", "wall", false),
        ("work-rate", "1000000000", false),
        ("bins", "100", false),
        ("log-y", "false", false),
        ("emit-data", "false", false),
        ("noise", "0", false),
        ("density", "0.01", false),
        ("target-mean", "0.00067", false),
        ("init-scale", "1", false),
    ];
    if full_scale {
        d.extend([("shape", "100,200,300", true), ("rank", "5", true), ("runs", "10", true)]);
    } else {
        d.push(("shape", if surrogate { "90,500,100" } else { "20,25,30" }, false));
        d.push(("runs", "5", false));
    }
    d
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(BenchError::usage(key, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| BenchError::usage(key, format!("cannot parse `{v}`")))
}

/// Resolves flags and an optional config file into a validated configuration.
pub fn resolve(cli: &Cli) -> Result<(ExperimentConfig, Provenance)> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| BenchError::usage("config", format!("cannot read {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    let flags = cli_values(cli);
    let lookup = |k: &str| flags.get(k).or_else(|| file.get(k)).map(String::as_str);
    let full_scale = parse_bool("paper-scale", lookup("paper-scale").unwrap_or("false"))?;
    let surrogate = lookup("data") == Some("surrogate");

    let mut values: BTreeMap<String, String> = BTreeMap::new();
    let mut prov = Provenance {
        config_file: cli.config.clone(),
        ..Default::default()
    };
    for (k, v, preset) in defaults(full_scale, surrogate) {
        values.insert(k.into(), v.into());
        prov.sources.insert(k.into(), if preset { Source::Preset } else { Source::Default });
    }
    for (k, v) in &file {
        values.insert(k.clone(), v.clone());
        prov.sources.insert(k.clone(), Source::File);
    }
    for (k, v) in &flags {
        let file_value = file.get(k).filter(|fv| *fv != v).cloned();
        values.insert(k.clone(), v.clone());
        prov.sources.insert(k.clone(), Source::Flag { file_value });
    }

    let get = |k: &str| values.get(k).map(String::as_str);
    let req = |k: &str| get(k).ok_or_else(|| BenchError::usage(k, "is required".to_string()));

    let data = match req("data")? {
        "synth" => DataSource::Synth,
        "surrogate" => DataSource::Surrogate,
        other => match other.strip_prefix("file:") {
            Some(p) if !p.is_empty() => DataSource::File(PathBuf::from(p)),
            _ => {
                return Err(BenchError::usage(
                    "data",
                    format!("expected synth, surrogate or file:PATH, got `{other}`"),
                ))
            }
        },
    };
    let shape: Vec<usize> = req("shape")?
        .split(',')
        .map(|s| parse_num::<usize>("shape", s.trim()))
        .collect::<Result<_>>()?;
    if shape.is_empty() || shape.contains(&0) {
        return Err(BenchError::usage("shape", "dimensions must be positive".into()));
    }
    let rank: usize = parse_num("rank", req("rank")?)?;
    if rank == 0 {
        return Err(BenchError::usage("rank", "must be at least 1".into()));
    }
    let beta: f64 = parse_num("beta", req("beta")?)?;
    let c_prime: f64 = parse_num("c-prime", req("c-prime")?)?;
    let algorithms: Vec<Algorithm> = req("algo")?
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| Algorithm::parse(s, beta, c_prime))
        .collect::<Result<_>>()?;
    if algorithms.is_empty() {
        return Err(BenchError::usage("algo", "at least one algorithm is required".into()));
    }
    let mut labels: Vec<String> = algorithms.iter().map(Algorithm::label).collect();
    labels.sort();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(BenchError::usage("algo", format!("`{}` listed twice", w[0])));
    }

    let runs: usize = parse_num("runs", req("runs")?)?;
    if runs == 0 {
        return Err(BenchError::usage("runs", "must be at least 1".into()));
    }
    let max_sweeps: u64 = parse_num("max-sweeps", req("max-sweeps")?)?;
    if max_sweeps == 0 {
        return Err(BenchError::usage("max-sweeps", "must be at least 1".into()));
    }
    let max_seconds: f64 = parse_num("max-seconds", req("max-seconds")?)?;
    if !(max_seconds > 0.0) {
        return Err(BenchError::usage("max-seconds", "must be positive".into()));
    }
    let box_bound = match req("box-bound")? {
        "auto" => None,
        v => {
            let m: f64 = parse_num("box-bound", v)?;
            if !(m > 0.0 && m.is_finite()) {
                return Err(BenchError::usage("box-bound", "must be positive and finite".into()));
            }
            Some(m)
        }
    };
    let clock = match req("clock")? {
        "wall" => ClockKind::Wall,
        "work" => ClockKind::Work,
        v => return Err(BenchError::usage("clock", format!("expected wall or work, got `{v}`"))),
    };
    let work_rate: f64 = parse_num("work-rate", req("work-rate")?)?;
    if !(work_rate > 0.0 && work_rate.is_finite()) {
        return Err(BenchError::usage("work-rate", "must be positive".into()));
    }
    let bins: usize = parse_num("bins", req("bins")?)?;
    if bins < 2 {
        return Err(BenchError::usage("bins", "need at least 2 bins".into()));
    }
    let noise: f64 = parse_num("noise", req("noise")?)?;
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(BenchError::usage("noise", "must be nonnegative".into()));
    }
    let density: f64 = parse_num("density", req("density")?)?;
    if !(density > 0.0 && density <= 1.0) {
        return Err(BenchError::usage("density", "must lie in (0, 1]".into()));
    }
    let target_mean: f64 = parse_num("target-mean", req("target-mean")?)?;
    if !(target_mean > 0.0 && target_mean.is_finite()) {
        return Err(BenchError::usage("target-mean", "must be positive".into()));
    }
    let init_scale: f64 = parse_num("init-scale", req("init-scale")?)?;
    if !(init_scale > 0.0 && init_scale.is_finite()) {
        return Err(BenchError::usage("init-scale", "must be positive".into()));
    }

    let cfg = ExperimentConfig {
        data,
        shape,
        rank,
        algorithms,
        beta,
        c_prime,
        runs,
        seed: parse_num("seed", req("seed")?)?,
        max_sweeps,
        max_seconds,
        box_bound,
        out: PathBuf::from(req("out")?),
        plot: parse_bool("plot", req("plot")?)?,
        paper_scale: full_scale,
        serial: parse_bool("serial", req("serial")?)?,
        clock,
        work_rate,
        bins,
        log_y: parse_bool("log-y", req("log-y")?)?,
        emit_data: parse_bool("emit-data", req("emit-data")?)?,
        noise,
        density,
        target_mean,
        init_scale,
    };
    Ok((cfg, prov))
}

/// Convenience for tests and scripts: resolve from an argument list.
pub fn resolve_args<I, T>(args: I) -> Result<(ExperimentConfig, Provenance)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| BenchError::usage("arguments", e.to_string()))?;
    resolve(&cli)
}

impl ExperimentConfig {
    /// The resolved configuration in config-file syntax. Loading it back with
    /// `--config` reproduces this configuration exactly.
    pub fn to_config_text(&self, provenance: &Provenance) -> String {
        let mut s = String::from("# resolved experiment configuration\n");
        for note in provenance.notes() {
            s.push_str(&format!("# {note}\n"));
        }
        s.push_str(&format!(
            "# execution: {}\n",
            if self.serial { "serial" } else { "parallel (timings may interfere)" }
        ));
        let algos: Vec<String> = self.algorithms.iter().map(|a| a.to_string()).collect();
        let shape: Vec<String> = self.shape.iter().map(|d| d.to_string()).collect();
        let lines: Vec<(&str, String)> = vec![
            ("data", self.data.to_string()),
            ("shape", shape.join(",")),
            ("rank", self.rank.to_string()),
            ("algo", algos.join(",")),
            ("beta", self.beta.to_string()),
            ("c-prime", self.c_prime.to_string()),
            ("runs", self.runs.to_string()),
            ("seed", self.seed.to_string()),
            ("max-sweeps", self.max_sweeps.to_string()),
            ("max-seconds", self.max_seconds.to_string()),
            ("box-bound", self.box_bound.map_or("auto".into(), |m| m.to_string())),
            ("out", self.out.display().to_string()),
            ("plot", self.plot.to_string()),
            // The preset has already been expanded into the other keys.
            ("paper-scale", "false".into()),
            ("serial", self.serial.to_string()),
            (
                "clock",
                match self.clock {
                    ClockKind::Wall => "wall".into(),
                    ClockKind::Work => "work".into(),
                },
            ),
            ("work-rate", self.work_rate.to_string()),
            ("bins", self.bins.to_string()),
            ("log-y", self.log_y.to_string()),
            ("emit-data", self.emit_data.to_string()),
            ("noise", self.noise.to_string()),
            ("density", self.density.to_string()),
            ("target-mean", self.target_mean.to_string()),
            ("init-scale", self.init_scale.to_string()),
        ];
        for (k, v) in lines {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn config_path(&self) -> PathBuf {
        self.out.join("config.txt")
    }

    pub fn trace_path(&self, algorithm: &Algorithm, run: usize) -> PathBuf {
        trace_path(&self.out, algorithm, run)
    }
}

pub fn trace_path(out: &Path, algorithm: &Algorithm, run: usize) -> PathBuf {
    out.join("traces").join(format!("{}_run{run}.csv", algorithm.label()))
}

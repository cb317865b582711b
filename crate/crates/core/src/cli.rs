//! Command-line interface: `simulate`, `fit`, `decode`, `select`, `gp`, `study`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{build_gp_series, load_mortality_table, load_series, parse_range, PanelOrder};
use crate::error::{Error, Result};
use crate::hmm::{simulate, HmmModel, ObservedSeries};
use crate::inference::{
    fit, ModelShape, ParamSummary, PriorConfig, PriorScenario, RunConfig, TransitionPrior,
};
use crate::model_selection::{score, select, PlugIn, SelectionReport};
use crate::simulate::{find_scenario, run_study, simulation_rng, ChainDiagnostics, Scenario};
use crate::viterbi::{extract_changepoints, viterbi_decode, Changepoint};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "SNHMM_THREADS";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "snhmm",
    version,
    about = "Hidden Markov models with skew-normal mixture emissions, fitted by HMC"
)]
pub struct Cli {
    /// Worker threads for parallel chains (default: $SNHMM_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a series from a built-in scenario or a model file.
    Simulate(SimulateArgs),
    /// Fit a model to a series.
    Fit(FitArgs),
    /// Decode the most probable state path with a fitted model.
    Decode(DecodeArgs),
    /// Compare state counts by BIC and ICL.
    Select(SelectArgs),
    /// Build the log male/female mortality-ratio series.
    Gp(GpArgs),
    /// Simulate, fit, decode and score a built-in scenario.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, conflicts_with = "model_file", required_unless_present = "model_file")]
    pub scenario: Option<String>,
    /// JSON model file (transition, initial, emissions).
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Series length (defaults to the scenario's).
    #[arg(long = "T", alias = "length")]
    pub length: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionChoice {
    Sticky,
    Uniform,
}

impl std::str::FromStr for TransitionChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sticky" => Ok(TransitionChoice::Sticky),
            "uniform" => Ok(TransitionChoice::Uniform),
            other => Err(Error::Config(format!(
                "unknown transition prior `{other}` (expected sticky or uniform)"
            ))),
        }
    }
}

impl TransitionChoice {
    fn prior(self) -> TransitionPrior {
        match self {
            TransitionChoice::Sticky => TransitionPrior::default(),
            TransitionChoice::Uniform => TransitionPrior::uniform(),
        }
    }
}

/// Flags shared by every command that fits.
#[derive(Debug, Clone, Default, Args)]
pub struct FitOptions {
    /// TOML file with optional `[model]`, `[prior]` and `[run]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub components: Option<usize>,
    /// One weight simplex shared by all states.
    #[arg(long)]
    pub shared_weights: bool,
    /// baseline, S1 or S2.
    #[arg(long)]
    pub prior_scenario: Option<PriorScenario>,
    /// TOML file with a complete prior configuration.
    #[arg(long)]
    pub prior_file: Option<PathBuf>,
    /// sticky (self-transition mean 0.9) or uniform (Dirichlet(1) rows).
    #[arg(long)]
    pub transition_prior: Option<TransitionChoice>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Leapfrog steps per trajectory.
    #[arg(long)]
    pub leapfrog: Option<usize>,
    #[arg(long)]
    pub target_accept: Option<f64>,
}

/// Model, prior and sampler settings, as read from `--config`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub model: ModelShape,
    pub prior: PriorConfig,
    pub run: RunConfig,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    toml::from_str(&read_text(path)?).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl FitOptions {
    /// Defaults, then `--config`, then `--prior-file`, then individual flags.
    /// `default_transition` applies when neither a file nor a flag sets the
    /// transition prior.
    pub fn resolve(&self, default_transition: TransitionPrior) -> Result<FitConfig> {
        let mut cfg = match &self.config {
            Some(p) => read_toml::<FitConfig>(p)?,
            None => FitConfig {
                prior: PriorConfig::for_scenario(PriorScenario::Baseline, default_transition),
                ..FitConfig::default()
            },
        };
        if let Some(p) = &self.prior_file {
            cfg.prior = read_toml(p)?;
        }
        if let Some(s) = self.prior_scenario {
            let base = cfg.prior.clone();
            cfg.prior = PriorConfig {
                transition: base.transition,
                weights: base.weights,
                initial: base.initial,
                ..PriorConfig::for_scenario(s, TransitionPrior::default())
            };
        }
        if let Some(t) = self.transition_prior {
            cfg.prior.transition = t.prior();
        }
        if let Some(k) = self.components {
            cfg.model.components = k;
        }
        cfg.model.shared_weights |= self.shared_weights;
        let run = &mut cfg.run;
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { run.$field = v; })*
            };
        }
        set!(chains => chains, warmup => warmup, iters => iters, seed => seed,
             leapfrog => n_leapfrog, target_accept => target_accept);
        run.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column holding the observations.
    #[arg(long, default_value = "y")]
    pub column: String,
    /// Optional column of time labels.
    #[arg(long)]
    pub time_column: Option<String>,
}

impl DataArgs {
    fn load(&self) -> Result<ObservedSeries> {
        Ok(load_series(&self.data, &self.column, self.time_column.as_deref())?)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub states: Option<usize>,
    #[command(flatten)]
    pub fit: FitOptions,
    /// Also write every relabeled draw to `draws.csv`.
    #[arg(long)]
    pub save_draws: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `fit.json` written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Candidate state counts, e.g. `2,3,4`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub states: Vec<usize>,
    #[command(flatten)]
    pub fit: FitOptions,
    /// posterior-mean or max-draw.
    #[arg(long, default_value = "posterior-mean")]
    pub plug_in: PlugIn,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GpArgs {
    #[arg(long)]
    pub deaths: PathBuf,
    #[arg(long)]
    pub exposures: PathBuf,
    #[arg(long, default_value = "0:90")]
    pub ages: String,
    #[arg(long, default_value = "1960:1975")]
    pub years: String,
    /// year-major or age-major.
    #[arg(long, default_value = "year-major")]
    pub order: PanelOrder,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub scenario: String,
    /// Series length (defaults to the scenario's).
    #[arg(long = "T", alias = "length")]
    pub length: Option<usize>,
    #[command(flatten)]
    pub fit: FitOptions,
    #[arg(long)]
    pub out: PathBuf,
}

/// Every JSON output: provenance fields around the command result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<C, R> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: C,
    pub result: R,
}

impl<C: Serialize, R: Serialize> Artifact<C, R> {
    pub fn new(command: &str, seed: u64, config: C, result: R) -> Self {
        Self {
            tool: "snhmm".into(),
            version: VERSION.into(),
            command: command.into(),
            seed,
            config,
            result,
        }
    }

    fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Config(format!("cannot serialize output: {e}")))
    }

    /// The same provenance as `#` comment lines for CSV outputs.
    fn csv_preamble(&self) -> Result<String> {
        let config = serde_json::to_string(&self.config)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
        Ok(format!(
            "# tool=snhmm version={} command={} seed={}\n# config={}\n",
            self.version, self.command, self.seed, config
        ))
    }
}

/// Floats in CSV outputs: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Files of one command, written only after everything has been computed.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// Writes each file through a temporary file and a rename.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        let io = |path: &Path, source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(dir, e))?;
            tmp.write_all(contents.as_bytes())
                .and_then(|_| tmp.flush())
                .map_err(|e| io(tmp.path(), e))?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, target) in staged {
            tmp.persist(&target).map_err(|e| io(&target, e.error))?;
            written.push(target);
        }
        Ok(written)
    }
}

fn series_csv(preamble: &str, y: &ObservedSeries, extra: &[(&str, Vec<usize>)]) -> String {
    let mut s = preamble.to_string();
    s.push_str("t,y");
    for (name, _) in extra {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (t, v) in y.values.iter().enumerate() {
        let _ = write!(s, "{},{}", t + 1, fmt_f64(*v));
        for (_, col) in extra {
            let _ = write!(s, ",{}", col[t] + 1);
        }
        s.push('\n');
    }
    s
}

fn path_csv(preamble: &str, y: &ObservedSeries, path: &[usize]) -> String {
    let mut s = preamble.to_string();
    s.push_str("t,label,state\n");
    for (t, z) in path.iter().enumerate() {
        let label = y
            .labels
            .as_ref()
            .map_or_else(|| (t + 1).to_string(), |l| l[t].clone());
        let _ = writeln!(s, "{},{},{}", t + 1, label, z + 1);
    }
    s
}

fn changepoints_csv(preamble: &str, cps: &[Changepoint]) -> String {
    let mut s = preamble.to_string();
    s.push_str("index,from,to\n");
    for c in cps {
        let _ = writeln!(s, "{},{},{}", c.index + 1, c.from + 1, c.to + 1);
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub scenario: Option<String>,
    pub model_file: Option<PathBuf>,
    pub length: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Truth {
    pub model: HmmModel,
    /// 1-based.
    pub states: Vec<usize>,
    /// 1-based.
    pub components: Vec<usize>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outputs> {
    let (model, default_len) = match (&args.scenario, &args.model_file) {
        (Some(name), _) => {
            let sc = find_scenario(name)?;
            (sc.model, sc.length)
        }
        (None, Some(p)) => {
            let m: HmmModel = serde_json::from_str(&read_text(p)?).map_err(|e| Error::Format {
                path: p.clone(),
                message: e.to_string(),
            })?;
            (m, 100)
        }
        (None, None) => return Err(Error::Config("need --scenario or --model-file".into())),
    };
    let length = args.length.unwrap_or(default_len);
    let sim = simulate(&model, length, &mut simulation_rng(args.seed))?;
    let config = SimulateConfig {
        scenario: args.scenario.clone(),
        model_file: args.model_file.clone(),
        length,
        seed: args.seed,
    };
    let truth = Truth {
        model,
        states: sim.states.iter().map(|s| s + 1).collect(),
        components: sim.components.iter().map(|c| c + 1).collect(),
    };
    let art = Artifact::new("simulate", args.seed, config, truth);
    let mut out = Outputs::default();
    out.add(
        "series.csv",
        series_csv(&art.csv_preamble()?, &sim.series, &[]),
    );
    out.add("truth.json", art.to_json()?);
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRunConfig {
    pub data: PathBuf,
    pub column: String,
    #[serde(flatten)]
    pub fit: FitConfig,
}

/// Everything `fit` produces besides the optional draws file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub parameters: Vec<ParamSummary>,
    pub point: HmmModel,
    pub decoded_path: Vec<usize>,
    pub changepoints: Vec<Changepoint>,
    pub selection: SelectionReport,
    pub chains: Vec<ChainDiagnostics>,
}

pub fn cmd_fit(args: &FitArgs) -> Result<Outputs> {
    let y = args.data.load()?;
    let mut cfg = args.fit.resolve(TransitionPrior::default())?;
    if let Some(z) = args.states {
        cfg.model.states = z;
    }
    let f = fit(&y, &cfg.prior, cfg.model, &cfg.run)?;
    let decoded = viterbi_decode(&f.summary.point, &y);
    let selection = SelectionReport::from_candidates(vec![score(
        &y,
        &f.draws,
        &f.summary.point,
        PlugIn::PosteriorMean,
    )?]);
    let result = RunArtifacts {
        parameters: f.summary.params.clone(),
        point: f.summary.point.clone(),
        decoded_path: decoded.path.iter().map(|s| s + 1).collect(),
        changepoints: one_based(&extract_changepoints(&decoded)),
        selection,
        chains: ChainDiagnostics::from_chains(&f.draws.chains),
    };
    let config = FitRunConfig {
        data: args.data.data.clone(),
        column: args.data.column.clone(),
        fit: cfg.clone(),
    };
    let art = Artifact::new("fit", cfg.run.seed, config, result);
    let mut out = Outputs::default();
    out.add("fit.json", art.to_json()?);
    if args.save_draws {
        let mut s = art.csv_preamble()?;
        s.push_str("chain,iteration,log_posterior,");
        let quoted: Vec<String> = f.draws.names().iter().map(|n| format!("\"{n}\"")).collect();
        s.push_str(&quoted.join(","));
        s.push('\n');
        for (c, chain) in f.draws.chains.iter().enumerate() {
            for (i, (d, lp)) in chain.draws.iter().zip(&chain.log_posterior).enumerate() {
                let row: Vec<String> = d.iter().map(|v| fmt_f64(*v)).collect();
                let _ = writeln!(s, "{},{},{},{}", c + 1, i + 1, fmt_f64(*lp), row.join(","));
            }
        }
        out.add("draws.csv", s);
    }
    Ok(out)
}

fn one_based(cps: &[Changepoint]) -> Vec<Changepoint> {
    cps.iter()
        .map(|c| Changepoint {
            index: c.index + 1,
            from: c.from + 1,
            to: c.to + 1,
        })
        .collect()
}

/// Reads the point model out of a `fit.json`.
pub fn read_fit_model(path: &Path) -> Result<HmmModel> {
    let malformed = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let v: serde_json::Value =
        serde_json::from_str(&read_text(path)?).map_err(|e| malformed(e.to_string()))?;
    let point = v
        .pointer("/result/point")
        .ok_or_else(|| malformed("no `result.point` model".into()))?;
    HmmModel::deserialize(point).map_err(|e| malformed(e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub data: PathBuf,
    pub column: String,
    pub fit: PathBuf,
}

pub fn cmd_decode(args: &DecodeArgs) -> Result<Outputs> {
    let y = args.data.load()?;
    let model = read_fit_model(&args.fit)?;
    let decoded = viterbi_decode(&model, &y);
    let config = DecodeConfig {
        data: args.data.data.clone(),
        column: args.data.column.clone(),
        fit: args.fit.clone(),
    };
    let art = Artifact::new("decode", 0, config, ());
    let pre = art.csv_preamble()?;
    let mut out = Outputs::default();
    out.add("path.csv", path_csv(&pre, &y, &decoded.path));
    out.add(
        "changepoints.csv",
        changepoints_csv(&pre, &extract_changepoints(&decoded)),
    );
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectConfig {
    pub data: PathBuf,
    pub column: String,
    pub states: Vec<usize>,
    pub plug_in: PlugIn,
    #[serde(flatten)]
    pub fit: FitConfig,
}

pub fn cmd_select(args: &SelectArgs) -> Result<Outputs> {
    let y = args.data.load()?;
    let cfg = args.fit.resolve(TransitionPrior::default())?;
    let report = select(
        &y,
        &args.states,
        cfg.model.components,
        cfg.model.shared_weights,
        &cfg.prior,
        &cfg.run,
        args.plug_in,
    )?;
    let config = SelectConfig {
        data: args.data.data.clone(),
        column: args.data.column.clone(),
        states: args.states.clone(),
        plug_in: args.plug_in,
        fit: cfg.clone(),
    };
    let mut out = Outputs::default();
    out.add(
        "selection.json",
        Artifact::new("select", cfg.run.seed, config, report).to_json()?,
    );
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpConfig {
    pub deaths: PathBuf,
    pub exposures: PathBuf,
    pub ages: String,
    pub years: String,
    pub order: PanelOrder,
}

pub fn cmd_gp(args: &GpArgs) -> Result<Outputs> {
    let ages = parse_range::<u32>(&args.ages)?;
    let years = parse_range::<i32>(&args.years)?;
    let deaths = load_mortality_table(&args.deaths)?;
    let exposures = load_mortality_table(&args.exposures)?;
    let gp = build_gp_series(&deaths, &exposures, ages, years, args.order)?;
    let config = GpConfig {
        deaths: args.deaths.clone(),
        exposures: args.exposures.clone(),
        ages: args.ages.clone(),
        years: args.years.clone(),
        order: args.order,
    };
    let art = Artifact::new("gp", 0, config, ());
    let mut s = art.csv_preamble()?;
    s.push_str("t,year,age,male_rate,female_rate,y\n");
    for (t, c) in gp.cells.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            t + 1,
            c.year,
            c.age,
            fmt_f64(c.male_rate),
            fmt_f64(c.female_rate),
            fmt_f64(c.gap)
        );
    }
    let mut out = Outputs::default();
    out.add("gp.csv", s);
    out.add("exclusions.log", gp.exclusion_log());
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenario: String,
    pub length: usize,
    #[serde(flatten)]
    pub fit: FitConfig,
}

/// The scenario a `study` invocation runs, with its fit settings.
pub fn study_setup(args: &StudyArgs) -> Result<(Scenario, FitConfig)> {
    let mut sc = find_scenario(&args.scenario)?;
    if let Some(t) = args.length {
        sc.length = t;
    }
    let mut cfg = args.fit.resolve(sc.transition_prior.clone())?;
    if args.fit.seed.is_none() && args.fit.config.is_none() {
        cfg.run.seed = sc.seed;
    }
    sc.seed = cfg.run.seed;
    cfg.model = ModelShape {
        shared_weights: cfg.model.shared_weights,
        ..sc.shape()
    };
    Ok((sc, cfg))
}

pub fn cmd_study(args: &StudyArgs) -> Result<Outputs> {
    let (sc, cfg) = study_setup(args)?;
    let report = run_study(&sc, &cfg.prior, &cfg.run)?;
    let config = StudyConfig {
        scenario: sc.name.clone(),
        length: sc.length,
        fit: cfg.clone(),
    };
    let art = Artifact::new("study", sc.seed, config, report);
    let mut out = Outputs::default();
    out.add("study.json", art.to_json()?);
    Ok(out)
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                Error::Config(format!("{THREADS_ENV}=`{v}` is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(PathBuf, Outputs)> {
    configure_threads(cli.threads)?;
    Ok(match &cli.command {
        Command::Simulate(a) => (a.out.clone(), cmd_simulate(a)?),
        Command::Fit(a) => (a.out.clone(), cmd_fit(a)?),
        Command::Decode(a) => (a.out.clone(), cmd_decode(a)?),
        Command::Select(a) => (a.out.clone(), cmd_select(a)?),
        Command::Gp(a) => (a.out.clone(), cmd_gp(a)?),
        Command::Study(a) => (a.out.clone(), cmd_study(a)?),
    })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli).and_then(|(dir, out)| out.commit(&dir)) {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_defaults_and_overrides() {
        let opts = FitOptions {
            prior_scenario: Some(PriorScenario::S2),
            transition_prior: Some(TransitionChoice::Uniform),
            chains: Some(2),
            ..FitOptions::default()
        };
        let cfg = opts.resolve(TransitionPrior::default()).unwrap();
        assert_eq!(cfg.prior.xi.sd, 1.0);
        assert_eq!(cfg.prior.omega, crate::inference::ScalePrior::HalfCauchy { scale: 1.0 });
        assert_eq!(cfg.prior.lambda.sd, 0.5);
        assert_eq!(cfg.prior.transition, TransitionPrior::uniform());
        assert_eq!(cfg.run.chains, 2);
        assert_eq!(cfg.model, ModelShape::new(2, 2));
    }

    #[test]
    fn config_file_round_trip() {
        let cfg = FitConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: FitConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: FitConfig = toml::from_str("[run]\nchains = 3\n").unwrap();
        assert_eq!(partial.run.chains, 3);
        assert_eq!(partial.run.iters, RunConfig::default().iters);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn bad_flags_exit_two() {
        assert_eq!(run(["snhmm", "fit", "--bogus"]), 2);
        assert_eq!(run(["snhmm", "--version"]), 0);
    }
}

//! Command-line front end: flat key = value experiment configs, named
//! presets for the standard figure-style experiments, CSV/JSON tables, and
//! a JSON sidecar per run echoing the fully resolved configuration.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use ambc::analytics::{
    ber_ideal, ber_iq, conditional_moments, ideal_params, iq_params, threshold_ideal, threshold_iq,
};
use ambc::error::{Error, Result};
use ambc::estimator;
use ambc::model::{
    sample_channels, ChannelSet, ImbalanceMode, InterferenceState, IqImbalance, ResamplePolicy,
    SystemConfig,
};
use ambc::montecarlo::{
    empirical_ber, empirical_pdf_gamma, simulate_t_values, sweep_experiment, threshold_sweep,
    ChannelPolicy, SweepAxis, SweepSpec, ThresholdPolicy, TrialConfig,
};
use ambc::waveform::ReceiverModel;

#[derive(Parser)]
#[command(
    name = "ambc",
    version,
    about = "Ambient backscatter link simulator and detection analytics under IQ imbalance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` config file (# comments); JSON sidecars are also accepted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master PRNG seed (overrides the config file)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output data file; a `<out>.meta.json` sidecar is written next to it
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output table format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads for Monte Carlo runs (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Threshold policy: ideal | iq | blind | fixed:<gamma>
    #[arg(long, global = true)]
    policy: Option<String>,

    /// Interference resampling: per-block | per-symbol
    #[arg(long, global = true)]
    resample: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical BER under the configured threshold policy
    Simulate,
    /// Closed-form detector figures for the configured fixed channel
    Analytic,
    /// Blind threshold estimation from simulated or imported test statistics
    Estimate {
        /// File of T values, one per line; simulated from the config if absent
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Empirical BER along one parameter axis
    Sweep {
        /// snr_db | n_samples | k_symbols | iq_percent | presence
        #[arg(long)]
        axis: String,
        /// Comma-separated values; presence takes `q:v` pairs
        #[arg(long)]
        values: String,
        /// Imbalance side for the iq_percent axis
        #[arg(long, value_enum, default_value_t = Mode::Joint)]
        mode: Mode,
    },
    /// Block-energy histogram with the matching Gaussian overlay
    Pdf {
        #[arg(long, default_value_t = 10_000)]
        blocks: usize,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Tag bit held during the blocks
        #[arg(long)]
        bit: bool,
        /// Image-channel TX signal present
        #[arg(long)]
        xi: bool,
        /// Image-channel tag active
        #[arg(long)]
        eta: bool,
    },
    /// Canned experiment: fig4|fig5|fig6|fig7|fig8|fig9|fig11|fig12|fig13|fig14|table1
    Preset { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Joint,
    Tx,
    Rx,
}

impl From<Mode> for ImbalanceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Joint => ImbalanceMode::Joint,
            Mode::Tx => ImbalanceMode::TxOnly,
            Mode::Rx => ImbalanceMode::RxOnly,
        }
    }
}

/// A fully resolved experiment: config file, flag overrides, and defaults
/// merged; ready to run and to echo into the sidecar.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub system: SystemConfig,
    pub iq: IqImbalance,
    pub policy: ThresholdPolicy,
    /// Trials per channel realization.
    pub trials: usize,
    /// Seed for the fixed channel realization.
    pub channel_seed: u64,
    /// Channel realizations to average over; absent = one fixed channel.
    pub ensemble: Option<usize>,
    pub output_path: PathBuf,
    pub format: Format,
}

impl ExperimentSpec {
    pub fn fixed_channels(&self) -> ChannelSet {
        sample_channels(&mut ChaCha8Rng::seed_from_u64(self.channel_seed))
    }

    pub fn channel_policy(&self) -> ChannelPolicy {
        match self.ensemble {
            Some(n) => ChannelPolicy::Ensemble(n),
            None => ChannelPolicy::Fixed(self.fixed_channels()),
        }
    }

    pub fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            system: self.system,
            iq: self.iq,
            threshold_policy: self.policy,
            channel_policy: self.channel_policy(),
            trials: self.trials,
        }
    }
}

/// All tunable keys before validation. Field names double as config keys.
#[derive(Debug, Clone)]
struct RawConfig {
    snr_db: f64,
    sigma_w2: f64,
    n_samples: usize,
    k_symbols: usize,
    q: f64,
    v: f64,
    seed: u64,
    resample_policy: ResamplePolicy,
    rho_t: f64,
    phi_t: f64,
    rho_r: f64,
    phi_r: f64,
    trials: usize,
    channel_seed: u64,
    ensemble: Option<usize>,
    policy: ThresholdPolicy,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            snr_db: 15.0,
            sigma_w2: 1.0,
            n_samples: 100,
            k_symbols: 100,
            q: 0.5,
            v: 0.5,
            seed: 0,
            resample_policy: ResamplePolicy::PerBlock,
            rho_t: 1.0,
            phi_t: 0.0,
            rho_r: 1.0,
            phi_r: 0.0,
            trials: 1000,
            channel_seed: 1,
            ensemble: None,
            policy: ThresholdPolicy::IqAware,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("key `{key}`: `{value}` is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| {
        Error::InvalidSpec(format!("key `{key}`: `{value}` is not a non-negative integer"))
    })
}

fn parse_policy(s: &str) -> Result<ThresholdPolicy> {
    match s {
        "ideal" => Ok(ThresholdPolicy::Ideal),
        "iq" => Ok(ThresholdPolicy::IqAware),
        "blind" => Ok(ThresholdPolicy::Blind),
        _ => match s.strip_prefix("fixed:") {
            Some(g) => Ok(ThresholdPolicy::Fixed(parse_f64("policy", g)?)),
            None => Err(Error::InvalidSpec(format!(
                "unknown policy `{s}` (expected ideal, iq, blind, or fixed:<gamma>)"
            ))),
        },
    }
}

fn policy_name(p: ThresholdPolicy) -> String {
    match p {
        ThresholdPolicy::Ideal => "ideal".into(),
        ThresholdPolicy::IqAware => "iq".into(),
        ThresholdPolicy::Blind => "blind".into(),
        ThresholdPolicy::Fixed(g) => format!("fixed:{g}"),
    }
}

impl RawConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "snr_db" => self.snr_db = parse_f64(key, value)?,
            "sigma_w2" => self.sigma_w2 = parse_f64(key, value)?,
            "n_samples" => self.n_samples = parse_usize(key, value)?,
            "k_symbols" => self.k_symbols = parse_usize(key, value)?,
            "q" => self.q = parse_f64(key, value)?,
            "v" => self.v = parse_f64(key, value)?,
            "seed" => self.seed = parse_usize(key, value)? as u64,
            "resample_policy" => self.resample_policy = value.parse()?,
            "rho_t" => self.rho_t = parse_f64(key, value)?,
            "phi_t" => self.phi_t = parse_f64(key, value)?,
            "rho_r" => self.rho_r = parse_f64(key, value)?,
            "phi_r" => self.phi_r = parse_f64(key, value)?,
            "trials" => self.trials = parse_usize(key, value)?,
            "channel_seed" => self.channel_seed = parse_usize(key, value)? as u64,
            "ensemble" => self.ensemble = Some(parse_usize(key, value)?),
            "policy" => self.policy = parse_policy(value)?,
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "unknown config key `{key}` (see README for the key list)"
                )))
            }
        }
        Ok(())
    }

    fn apply_text(&mut self, text: &str) -> Result<()> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            return self.apply_json(trimmed);
        }
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidSpec(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sidecars round-trip: a previous run's `.meta.json` is a valid config.
    fn apply_json(&mut self, text: &str) -> Result<()> {
        let map: Map<String, Value> = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSpec(format!("bad JSON config: {e}")))?;
        for (key, value) in &map {
            if key == "name" || key == "p_s" {
                continue; // provenance / derived fields in sidecars
            }
            let text = match value {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            self.set(key, &text)?;
        }
        Ok(())
    }

    fn resolve(&self, name: &str, out: PathBuf, format: Format) -> Result<ExperimentSpec> {
        let system = SystemConfig::from_snr(
            self.snr_db,
            self.sigma_w2,
            self.n_samples,
            self.k_symbols,
            self.q,
            self.v,
            self.seed,
            self.resample_policy,
        )?;
        let iq = IqImbalance::new(self.rho_t, self.phi_t, self.rho_r, self.phi_r)?;
        Ok(ExperimentSpec {
            name: name.to_string(),
            system,
            iq,
            policy: self.policy,
            trials: self.trials,
            channel_seed: self.channel_seed,
            ensemble: self.ensemble,
            output_path: out,
            format,
        })
    }
}

/// Merge config file, flag overrides, and defaults into a runnable spec.
fn parse_config(cli: &Cli, name: &str) -> Result<ExperimentSpec> {
    let mut raw = RawConfig::default();
    if let Some(path) = &cli.config {
        raw.apply_text(&fs::read_to_string(path)?)?;
    }
    if let Some(seed) = cli.seed {
        raw.seed = seed;
    }
    if let Some(policy) = &cli.policy {
        raw.policy = parse_policy(policy)?;
    }
    if let Some(resample) = &cli.resample {
        raw.resample_policy = resample.parse()?;
    }
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{name}.{ext}")));
    raw.resolve(name, out, cli.format)
}

/// One output table: fixed columns, one JSON value per cell.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

/// 17 significant digits: parses back to the identical f64.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    fn cell_to_csv(value: &Value) -> String {
        match value {
            Value::Null => String::new(),
            Value::Bool(b) => b.to_string(),
            Value::Number(n) => match n.as_u64() {
                Some(i) => i.to_string(),
                None => fmt_float(n.as_f64().unwrap()),
            },
            Value::String(s) => csv_field(s),
            other => csv_field(&other.to_string()),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Self::cell_to_csv).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let objects: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.clone()))
                        .collect(),
                )
            })
            .collect();
        let mut text = serde_json::to_string_pretty(&objects).expect("serializable");
        text.push('\n');
        text
    }

    fn write(&self, path: &Path, format: Format) -> Result<()> {
        let text = match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        };
        fs::write(path, text)?;
        Ok(())
    }
}

/// Echo the resolved run next to the data file; the sidecar itself is a
/// valid `--config` input.
fn write_sidecar(spec: &ExperimentSpec) -> Result<()> {
    let mut map = Map::new();
    map.insert("name".into(), json!(spec.name));
    map.insert("snr_db".into(), json!(spec.system.snr_db));
    map.insert("p_s".into(), json!(spec.system.p_s));
    map.insert("sigma_w2".into(), json!(spec.system.sigma_w2));
    map.insert("n_samples".into(), json!(spec.system.n_samples));
    map.insert("k_symbols".into(), json!(spec.system.k_symbols));
    map.insert("q".into(), json!(spec.system.q));
    map.insert("v".into(), json!(spec.system.v));
    map.insert("seed".into(), json!(spec.system.seed));
    let resample = match spec.system.resample_policy {
        ResamplePolicy::PerBlock => "per-block",
        ResamplePolicy::PerSymbol => "per-symbol",
    };
    map.insert("resample_policy".into(), json!(resample));
    map.insert("rho_t".into(), json!(spec.iq.rho_t));
    map.insert("phi_t".into(), json!(spec.iq.phi_t));
    map.insert("rho_r".into(), json!(spec.iq.rho_r));
    map.insert("phi_r".into(), json!(spec.iq.phi_r));
    map.insert("trials".into(), json!(spec.trials));
    map.insert("channel_seed".into(), json!(spec.channel_seed));
    if let Some(n) = spec.ensemble {
        map.insert("ensemble".into(), json!(n));
    }
    map.insert("policy".into(), json!(policy_name(spec.policy)));
    let mut path = spec.output_path.clone();
    path.as_mut_os_string().push(".meta.json");
    let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("serializable");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore "already initialized": harmless on repeat calls in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let name = match &cli.command {
        Command::Simulate => "simulate".to_string(),
        Command::Analytic => "analytic".to_string(),
        Command::Estimate { .. } => "estimate".to_string(),
        Command::Sweep { .. } => "sweep".to_string(),
        Command::Pdf { .. } => "pdf".to_string(),
        Command::Preset { name } => name.clone(),
    };
    let spec = parse_config(&cli, &name)?;
    let table = match &cli.command {
        Command::Simulate => cmd_simulate(&spec)?,
        Command::Analytic => cmd_analytic(&spec)?,
        Command::Estimate { input } => cmd_estimate(&spec, input.as_deref())?,
        Command::Sweep { axis, values, mode } => {
            cmd_sweep(&spec, axis, values, (*mode).into())?
        }
        Command::Pdf { blocks, bins, bit, xi, eta } => {
            cmd_pdf(&spec, *blocks, *bins, *bit, InterferenceState { xi: *xi, eta: *eta })?
        }
        Command::Preset { name } => run_preset(&spec, name)?,
    };
    table.write(&spec.output_path, spec.format)?;
    write_sidecar(&spec)?;
    eprintln!("wrote {}", spec.output_path.display());
    Ok(())
}

fn cmd_simulate(spec: &ExperimentSpec) -> Result<Table> {
    let est = empirical_ber(&spec.trial_config())?;
    let mut t = Table::new(vec!["policy", "trials", "bits", "errors", "ber", "ci95"]);
    t.push(vec![
        json!(policy_name(spec.policy)),
        json!(spec.trials),
        json!(est.bits),
        json!(est.errors),
        json!(est.ber),
        json!(est.ci95),
    ]);
    Ok(t)
}

fn cmd_analytic(spec: &ExperimentSpec) -> Result<Table> {
    let ch = spec.fixed_channels();
    let p = iq_params(&ch, &spec.iq, &spec.system)?;
    let gamma_iq = threshold_iq(&p)?;
    let ideal = ideal_params(&ch, &spec.system)?;
    let gamma_ideal = threshold_ideal(&ideal)?;
    let mut t = Table::new(vec![
        "theta",
        "delta0_sq",
        "delta1_sq",
        "delta_plus",
        "gamma_iq",
        "ber_iq",
        "gamma_ideal",
        "ber_ideal",
    ]);
    t.push(vec![
        json!(p.theta),
        json!(p.delta0_sq),
        json!(p.delta1_sq),
        json!(p.delta_plus()),
        json!(gamma_iq),
        json!(ber_iq(gamma_iq, &p)),
        json!(gamma_ideal),
        json!(ber_ideal(gamma_ideal, &ideal)),
    ]);
    Ok(t)
}

fn cmd_estimate(spec: &ExperimentSpec, input: Option<&Path>) -> Result<Table> {
    let (t_values, reference) = match input {
        Some(path) => {
            let mut values = Vec::new();
            for (lineno, line) in fs::read_to_string(path)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                values.push(line.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("line {}: `{line}` is not a number", lineno + 1))
                })?);
            }
            (values, None)
        }
        None => {
            let ch = spec.fixed_channels();
            let mut rng = ChaCha8Rng::seed_from_u64(spec.system.seed);
            let (_, t_values) =
                simulate_t_values(&spec.system, &ch, &spec.iq, ReceiverModel::IqImpaired, &mut rng)?;
            let reference = threshold_iq(&iq_params(&ch, &spec.iq, &spec.system)?)?;
            (t_values, Some(reference))
        }
    };
    let moments = estimator::sample_moments(&t_values)?;
    let est = estimator::estimate_threshold(&t_values)?;
    let mut t = Table::new(vec![
        "k",
        "mean_abs_t",
        "var_t",
        "theta_abs",
        "delta_plus",
        "gamma",
        "low_confidence",
        "gamma_iq_reference",
    ]);
    t.push(vec![
        json!(t_values.len()),
        json!(moments.mean_abs_t),
        json!(moments.var_t),
        json!(est.theta_abs),
        json!(est.delta_plus),
        json!(est.gamma),
        json!(est.low_confidence),
        reference.map(|g| json!(g)).unwrap_or(Value::Null),
    ]);
    Ok(t)
}

fn parse_list<T: std::str::FromStr>(axis: &str, values: &str) -> Result<Vec<T>> {
    values
        .split(',')
        .map(|v| {
            v.trim().parse().map_err(|_| {
                Error::InvalidSpec(format!("axis `{axis}`: bad value `{}`", v.trim()))
            })
        })
        .collect()
}

fn parse_axis(axis: &str, values: &str, mode: ImbalanceMode) -> Result<SweepAxis> {
    match axis {
        "snr_db" => Ok(SweepAxis::SnrDb(parse_list(axis, values)?)),
        "n_samples" => Ok(SweepAxis::NSamples(parse_list(axis, values)?)),
        "k_symbols" => Ok(SweepAxis::KSymbols(parse_list(axis, values)?)),
        "iq_percent" => Ok(SweepAxis::IqPercent { values: parse_list(axis, values)?, mode }),
        "presence" => {
            let pairs = values
                .split(',')
                .map(|pair| {
                    let (q, v) = pair.trim().split_once(':').ok_or_else(|| {
                        Error::InvalidSpec(format!(
                            "axis `presence`: expected `q:v`, got `{}`",
                            pair.trim()
                        ))
                    })?;
                    Ok((parse_f64("q", q.trim())?, parse_f64("v", v.trim())?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepAxis::Presence(pairs))
        }
        _ => Err(Error::InvalidSpec(format!(
            "unknown sweep axis `{axis}` (expected snr_db, n_samples, k_symbols, iq_percent, or presence)"
        ))),
    }
}

fn sweep_table(rows: &[ambc::montecarlo::SweepRow]) -> Table {
    let mut t = Table::new(vec!["axis", "value", "ber", "ci95", "errors", "bits"]);
    for row in rows {
        t.push(vec![
            json!(row.axis),
            json!(row.value),
            json!(row.ber.ber),
            json!(row.ber.ci95),
            json!(row.ber.errors),
            json!(row.ber.bits),
        ]);
    }
    t
}

fn cmd_sweep(spec: &ExperimentSpec, axis: &str, values: &str, mode: ImbalanceMode) -> Result<Table> {
    let sweep = SweepSpec {
        base: spec.trial_config(),
        axis: parse_axis(axis, values, mode)?,
    };
    Ok(sweep_table(&sweep_experiment(&sweep)?))
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn cmd_pdf(
    spec: &ExperimentSpec,
    blocks: usize,
    bins: usize,
    bit: bool,
    state: InterferenceState,
) -> Result<Table> {
    let ch = spec.fixed_channels();
    let hist = empirical_pdf_gamma(&spec.system, &ch, &spec.iq, state, bit, blocks, bins)?;
    let m = conditional_moments(&ch, &spec.iq, state.xi, state.eta, &spec.system)?;
    let (mean, var) = if bit { (m.mean_b1, m.var_b1) } else { (m.mean_b0, m.var_b0) };
    let mut t = Table::new(vec!["bin_lo", "bin_hi", "empirical_density", "analytic_density"]);
    for i in 0..bins {
        let (lo, hi) = (hist.edges[i], hist.edges[i + 1]);
        t.push(vec![
            json!(lo),
            json!(hi),
            json!(hist.density[i]),
            json!(normal_pdf((lo + hi) / 2.0, mean, var)),
        ]);
    }
    Ok(t)
}

/// The IQ deviation ladder common to the figure presets.
const LADDER: [f64; 6] = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0];

fn ensemble_config(spec: &ExperimentSpec, policy: ThresholdPolicy) -> TrialConfig {
    TrialConfig {
        system: spec.system,
        iq: spec.iq,
        threshold_policy: policy,
        // Presets default to a modest ensemble; set `ensemble` in the
        // config for publication-scale averages.
        channel_policy: ChannelPolicy::Ensemble(spec.ensemble.unwrap_or(2000)),
        trials: 1,
    }
}

/// BER versus IQ deviation percentage at 5 and 15 dB for the three
/// imbalance sides, under one threshold policy.
fn preset_ber_vs_percent(spec: &ExperimentSpec, policy: ThresholdPolicy) -> Result<Table> {
    let mut t = Table::new(vec!["snr_db", "mode", "percent", "ber", "ci95", "bits"]);
    for snr in [5.0, 15.0] {
        for (mode, label) in [
            (ImbalanceMode::Joint, "joint"),
            (ImbalanceMode::TxOnly, "tx"),
            (ImbalanceMode::RxOnly, "rx"),
        ] {
            for pct in LADDER {
                let mut cfg = ensemble_config(spec, policy);
                cfg.system = cfg.system.with_snr(snr);
                cfg.iq = IqImbalance::from_percent(pct, mode)?;
                let est = empirical_ber(&cfg)?;
                t.push(vec![
                    json!(snr),
                    json!(label),
                    json!(pct),
                    json!(est.ber),
                    json!(est.ci95),
                    json!(est.bits),
                ]);
            }
        }
    }
    Ok(t)
}

/// The three IQ settings used for distribution and threshold comparisons.
fn iq_ladder() -> Vec<(&'static str, IqImbalance)> {
    vec![
        ("ideal", IqImbalance::ideal()),
        ("5%", IqImbalance::from_percent(5.0, ImbalanceMode::Joint).unwrap()),
        ("10%", IqImbalance::from_percent(10.0, ImbalanceMode::Joint).unwrap()),
    ]
}

fn preset_pdf_ladder(spec: &ExperimentSpec) -> Result<Table> {
    let ch = spec.fixed_channels();
    let mut t = Table::new(vec![
        "iq_setting",
        "bin_center",
        "empirical_density",
        "analytic_density",
    ]);
    for (label, iq) in iq_ladder() {
        let hist = empirical_pdf_gamma(
            &spec.system,
            &ch,
            &iq,
            InterferenceState::OFF,
            false,
            20_000,
            50,
        )?;
        let m = conditional_moments(&ch, &iq, false, false, &spec.system)?;
        for i in 0..hist.density.len() {
            let center = (hist.edges[i] + hist.edges[i + 1]) / 2.0;
            t.push(vec![
                json!(label),
                json!(center),
                json!(hist.density[i]),
                json!(normal_pdf(center, m.mean_b0, m.var_b0)),
            ]);
        }
    }
    Ok(t)
}

fn preset_ber_vs_threshold(spec: &ExperimentSpec) -> Result<Table> {
    let ch = spec.fixed_channels();
    let iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint)?;
    let mut t = Table::new(vec!["snr_db", "gamma", "ber", "gamma_iq"]);
    for snr in [5.0, 15.0] {
        let system = spec.system.with_snr(snr);
        let p = iq_params(&ch, &iq, &system)?;
        let gamma_iq = threshold_iq(&p)?;
        let step = p.delta_plus() / 10.0;
        let grid: Vec<f64> = (0..=(3.0 * gamma_iq / step) as usize)
            .map(|i| i as f64 * step)
            .collect();
        let sweep = threshold_sweep(&system, &ch, &iq, &grid, spec.trials)?;
        for (g, b) in sweep.gammas.iter().zip(&sweep.bers) {
            t.push(vec![json!(snr), json!(g), json!(b), json!(gamma_iq)]);
        }
    }
    Ok(t)
}

/// Blind-estimated threshold averaged over `runs` independent blocks.
fn mean_blind_threshold(
    system: &SystemConfig,
    ch: &ChannelSet,
    iq: &IqImbalance,
    runs: usize,
) -> Result<f64> {
    let mut sum = 0.0;
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(system.seed);
        rng.set_stream(run as u64 + 1);
        let (_, t_values) = simulate_t_values(system, ch, iq, ReceiverModel::IqImpaired, &mut rng)?;
        sum += estimator::estimate_threshold(&t_values)?.gamma;
    }
    Ok(sum / runs as f64)
}

/// Theoretical versus blind threshold along one integer axis.
fn preset_threshold_vs<F>(spec: &ExperimentSpec, axis: &'static str, points: &[usize], set: F) -> Result<Table>
where
    F: Fn(&SystemConfig, usize) -> SystemConfig,
{
    let ch = spec.fixed_channels();
    let iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint)?;
    let mut t = Table::new(vec![axis, "gamma_iq", "gamma_blind_mean"]);
    for &value in points {
        let system = set(&spec.system, value);
        let gamma_iq = threshold_iq(&iq_params(&ch, &iq, &system)?)?;
        let blind = mean_blind_threshold(&system, &ch, &iq, 50)?;
        t.push(vec![json!(value), json!(gamma_iq), json!(blind)]);
    }
    Ok(t)
}

fn preset_ber_vs_percent_by_n(spec: &ExperimentSpec) -> Result<Table> {
    let mut t = Table::new(vec!["n_samples", "percent", "ber", "ci95", "bits"]);
    for n in [50, 75] {
        for pct in LADDER {
            let mut cfg = ensemble_config(spec, ThresholdPolicy::IqAware);
            cfg.system.n_samples = n;
            cfg.system = cfg.system.with_snr(5.0);
            cfg.iq = IqImbalance::from_percent(pct, ImbalanceMode::Joint)?;
            let est = empirical_ber(&cfg)?;
            t.push(vec![json!(n), json!(pct), json!(est.ber), json!(est.ci95), json!(est.bits)]);
        }
    }
    Ok(t)
}

fn preset_ber_vs_snr(spec: &ExperimentSpec) -> Result<Table> {
    let mut t = Table::new(vec!["n_samples", "snr_db", "ber", "ci95", "bits"]);
    for n in [75, 100] {
        for snr in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
            let mut cfg = ensemble_config(spec, ThresholdPolicy::IqAware);
            cfg.system.n_samples = n;
            cfg.system = cfg.system.with_snr(snr);
            cfg.iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint)?;
            let est = empirical_ber(&cfg)?;
            t.push(vec![json!(n), json!(snr), json!(est.ber), json!(est.ci95), json!(est.bits)]);
        }
    }
    Ok(t)
}

fn preset_theory_vs_sim(spec: &ExperimentSpec) -> Result<Table> {
    let ch = spec.fixed_channels();
    let iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint)?;
    let mut t = Table::new(vec![
        "n_samples",
        "snr_db",
        "ber_analytic",
        "ber_simulated",
        "ci95",
    ]);
    for n in [50, 75, 100] {
        for snr in [0.0, 5.0, 10.0, 15.0] {
            let mut system = spec.system.with_snr(snr);
            system.n_samples = n;
            let p = iq_params(&ch, &iq, &system)?;
            let analytic = ber_iq(threshold_iq(&p)?, &p);
            let cfg = TrialConfig {
                system,
                iq,
                threshold_policy: ThresholdPolicy::IqAware,
                channel_policy: ChannelPolicy::Fixed(ch),
                trials: spec.trials,
            };
            let est = empirical_ber(&cfg)?;
            t.push(vec![
                json!(n),
                json!(snr),
                json!(analytic),
                json!(est.ber),
                json!(est.ci95),
            ]);
        }
    }
    Ok(t)
}

fn preset_ber_vs_presence(spec: &ExperimentSpec) -> Result<Table> {
    let mut t = Table::new(vec!["snr_db", "q", "v", "ber", "ci95", "bits"]);
    for snr in [5.0, 15.0] {
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let mut cfg = ensemble_config(spec, ThresholdPolicy::IqAware);
            cfg.system = cfg.system.with_snr(snr);
            cfg.system.q = p;
            cfg.system.v = p;
            cfg.iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint)?;
            let est = empirical_ber(&cfg)?;
            t.push(vec![json!(snr), json!(p), json!(p), json!(est.ber), json!(est.ci95), json!(est.bits)]);
        }
    }
    Ok(t)
}

fn preset_table1(spec: &ExperimentSpec) -> Result<Table> {
    let ch = spec.fixed_channels();
    let mut t = Table::new(vec![
        "iq_setting",
        "theoretical_threshold",
        "estimated_threshold",
        "sweep_optimal_threshold",
    ]);
    for (label, iq) in iq_ladder() {
        let p = iq_params(&ch, &iq, &spec.system)?;
        let theoretical = threshold_iq(&p)?;
        let estimated = mean_blind_threshold(&spec.system, &ch, &iq, 50)?;
        let step = p.delta_plus() / 10.0;
        let grid: Vec<f64> = (0..=(3.0 * theoretical / step) as usize)
            .map(|i| i as f64 * step)
            .collect();
        let sweep = threshold_sweep(&spec.system, &ch, &iq, &grid, spec.trials)?;
        t.push(vec![
            json!(label),
            json!(theoretical),
            json!(estimated),
            json!(sweep.argmin_gamma),
        ]);
    }
    Ok(t)
}

fn run_preset(spec: &ExperimentSpec, name: &str) -> Result<Table> {
    match name {
        "fig4" => preset_ber_vs_percent(spec, ThresholdPolicy::Ideal),
        "fig5" => preset_pdf_ladder(spec),
        "fig6" => preset_ber_vs_threshold(spec),
        "fig7" => preset_threshold_vs(spec, "n_samples", &[25, 50, 75, 100, 150, 200], |s, n| {
            let mut s = *s;
            s.n_samples = n;
            s
        }),
        "fig8" => preset_threshold_vs(spec, "k_symbols", &[50, 100, 200, 500, 1000], |s, k| {
            let mut s = *s;
            s.k_symbols = k;
            s
        }),
        "fig9" => preset_ber_vs_percent(spec, ThresholdPolicy::IqAware),
        "fig11" => preset_ber_vs_percent_by_n(spec),
        "fig12" => preset_ber_vs_snr(spec),
        "fig13" => preset_theory_vs_sim(spec),
        "fig14" => preset_ber_vs_presence(spec),
        "table1" => preset_table1(spec),
        _ => Err(Error::InvalidSpec(format!(
            "unknown preset `{name}` (expected fig4|fig5|fig6|fig7|fig8|fig9|fig11|fig12|fig13|fig14|table1)"
        ))),
    }
}

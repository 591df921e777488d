use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riszf_core::harness::validate::{run_checks, ValidateOptions};
use riszf_core::harness::{
    builtin_names, design_phases, emit_report, resolve_config, run_experiment, write_design,
    ConfigOverrides, DesignAlgorithm, ExperimentSpec, Format, OutputKind, Sweep, SweepParam,
    DEFAULT_OUTAGE_TRIALS, DEFAULT_SE_TRIALS,
};
use riszf_core::stats::AsymptoticRegime;
use riszf_core::{CsiMode, Error, PhaseMode, Result, SystemConfig};

#[derive(Parser)]
#[command(name = "riszf", version, about = "Outage, spectral efficiency and phase design for surface-assisted ZF MIMO uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outage probability of one stream at the given SNR thresholds.
    Outage(OutageArgs),
    /// Average spectral efficiency per stream.
    Se(SeArgs),
    /// Average SE after pilot overhead, with and without the surface.
    EffectiveSe(EffectiveSeArgs),
    /// Design the surface phases and print the objective trace.
    PhaseDesign(PhaseDesignArgs),
    /// Run the fast self-check suite.
    Validate(ValidateArgs),
    /// Run a named built-in experiment or an experiment file.
    Run(RunArgs),
}

#[derive(Args)]
struct Common {
    /// Key-value config file (p_dB, kappa_dB, beta_UB_linear, ...).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, env = "RISZF_WORKERS")]
    workers: Option<usize>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

#[derive(Args, Default)]
struct Params {
    #[arg(long = "m")]
    m: Option<usize>,
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long = "l")]
    l: Option<usize>,
    /// Phase resolution in bits.
    #[arg(long)]
    q: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    p_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa_db: Option<f64>,
    #[arg(long)]
    beta_ub: Option<f64>,
    #[arg(long)]
    beta_lb: Option<f64>,
    #[arg(long)]
    beta_ul: Option<f64>,
    /// Coherence time in samples.
    #[arg(long)]
    ct: Option<u64>,
}

impl Params {
    fn overrides(&self, seed: Option<u64>) -> ConfigOverrides {
        ConfigOverrides {
            m: self.m,
            n: self.n,
            l: self.l,
            q: self.q,
            p_db: self.p_db,
            kappa_db: self.kappa_db,
            beta_ub: self.beta_ub,
            beta_lb: self.beta_lb,
            beta_ul: self.beta_ul,
            coherence_time: self.ct,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Sweep one parameter, e.g. `p_dB=0,10,20` or `L=64,256`.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    #[arg(long, default_value = "random")]
    phase_mode: PhaseMode,
    #[arg(long, default_value = "perfect")]
    csi: CsiMode,
}

#[derive(Args)]
struct OutageArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    params: Params,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Linear SNR thresholds.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    threshold: Vec<f64>,
    /// Also emit the large-L approximation.
    #[arg(long)]
    asymptotic: bool,
    /// general, q1, qinf or random_phase.
    #[arg(long, default_value = "general")]
    regime: String,
    /// Also estimate the CDF by Monte Carlo.
    #[arg(long)]
    empirical: bool,
}

#[derive(Args)]
struct SeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    params: Params,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Also estimate the SE by Monte Carlo.
    #[arg(long)]
    empirical: bool,
}

#[derive(Args)]
struct EffectiveSeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    params: Params,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct PhaseDesignArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    params: Params,
    /// instantaneous or statistical.
    #[arg(long, default_value = "instantaneous")]
    algorithm: String,
    #[arg(long, default_value = "perfect")]
    csi: CsiMode,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Offset added to the computed xi_1 (fault injection).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    perturb_xi1: f64,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in experiment name.
    name: Option<String>,
    /// Experiment file instead of a built-in name.
    #[arg(long, conflicts_with = "name")]
    spec_file: Option<PathBuf>,
    /// List the built-in experiments.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    params: Params,
}

fn parse_sweep(s: &str) -> Result<Sweep> {
    let (name, values) = s
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("sweep '{s}' is not of the form PARAM=v1,v2,...")))?;
    let param: SweepParam = name.trim().parse()?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad sweep value '{v}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { param, values })
}

fn parse_regime(s: &str) -> Result<AsymptoticRegime> {
    match s {
        "general" => Ok(AsymptoticRegime::General),
        "q1" => Ok(AsymptoticRegime::Q1),
        "qinf" => Ok(AsymptoticRegime::Qinf),
        "random_phase" => Ok(AsymptoticRegime::RandomPhase),
        other => Err(Error::Parse(format!("unknown regime '{other}'"))),
    }
}

fn resolve(common: &Common, params: &Params) -> Result<SystemConfig> {
    let file = common.config.as_deref().map(ConfigOverrides::from_path).transpose()?;
    resolve_config(file.as_ref(), &params.overrides(common.seed))
}

fn adhoc_spec(
    name: &str,
    common: &Common,
    params: &Params,
    exp: &ExperimentArgs,
    outputs: Vec<OutputKind>,
) -> Result<ExperimentSpec> {
    let cfg = resolve(common, params)?;
    let mut spec = ExperimentSpec::single(name, &cfg, outputs);
    if let Some(s) = &exp.sweep {
        spec.sweep = parse_sweep(s)?;
    }
    spec.phase_mode = exp.phase_mode;
    spec.csi_mode = exp.csi;
    Ok(spec)
}

fn run_and_emit(spec: &ExperimentSpec, common: &Common) -> Result<()> {
    let report = run_experiment(spec, common.workers())?;
    emit_report(&report, common.format, common.out.as_deref())
}

fn outage(a: &OutageArgs) -> Result<()> {
    let mut outputs = vec![OutputKind::AnalyticCdf];
    if a.asymptotic {
        outputs.push(OutputKind::AsymptoticCdf);
    }
    if a.empirical {
        outputs.push(OutputKind::EmpiricalCdf);
    }
    let mut spec = adhoc_spec("outage", &a.common, &a.params, &a.exp, outputs)?;
    spec.grid = a.threshold.clone();
    spec.regime = parse_regime(&a.regime)?;
    if a.empirical {
        spec.trials = a.common.trials.unwrap_or(DEFAULT_OUTAGE_TRIALS);
    }
    run_and_emit(&spec, &a.common)
}

fn se(a: &SeArgs) -> Result<()> {
    let mut spec = adhoc_spec("se", &a.common, &a.params, &a.exp, vec![OutputKind::AvgSe])?;
    if a.empirical {
        spec.trials = a.common.trials.unwrap_or(DEFAULT_SE_TRIALS);
    }
    run_and_emit(&spec, &a.common)
}

fn effective_se(a: &EffectiveSeArgs) -> Result<()> {
    let spec = adhoc_spec("effective-se", &a.common, &a.params, &a.exp, vec![OutputKind::EffectiveSe])?;
    run_and_emit(&spec, &a.common)
}

fn phase_design(a: &PhaseDesignArgs) -> Result<()> {
    let algorithm = match a.algorithm.as_str() {
        "instantaneous" | "1" => DesignAlgorithm::Instantaneous,
        "statistical" | "2" => DesignAlgorithm::Statistical,
        other => return Err(Error::Parse(format!("unknown algorithm '{other}'"))),
    };
    let cfg = resolve(&a.common, &a.params)?;
    let report = design_phases(&cfg, algorithm, a.csi)?;
    match &a.common.out {
        Some(p) => {
            let file = std::fs::File::create(p)
                .map_err(|e| Error::from(e).context(format!("creating {}", p.display())))?;
            write_design(&report, a.common.format, std::io::BufWriter::new(file))
        }
        None => write_design(&report, a.common.format, std::io::stdout().lock()),
    }
}

fn validate(a: &ValidateArgs) -> bool {
    let opts = ValidateOptions {
        xi1_perturbation: a.perturb_xi1,
        seed: a.seed,
    };
    let results = run_checks(&opts);
    for r in &results {
        println!("{r}");
    }
    results.iter().all(|r| r.passed)
}

fn run(a: &RunArgs) -> Result<()> {
    if a.list {
        for name in builtin_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let mut spec = match (&a.name, &a.spec_file) {
        (_, Some(path)) => ExperimentSpec::from_path(path)?,
        (Some(name), None) => ExperimentSpec::builtin(name)?,
        (None, None) => return Err(Error::Parse("give an experiment name or --spec-file".into())),
    };
    let file = a.common.config.as_deref().map(ConfigOverrides::from_path).transpose()?;
    let flags = a.params.overrides(a.common.seed);
    let overrides = match &file {
        Some(f) => f.merged_with(&flags),
        None => flags,
    };
    let (base, random_angles) = overrides.apply(&spec.base)?;
    spec.base = base;
    spec.random_angles = spec.random_angles && random_angles;
    if let Some(t) = a.common.trials {
        spec.trials = t;
    }
    run_and_emit(&spec, &a.common)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Outage(a) => outage(a),
        Command::Se(a) => se(a),
        Command::EffectiveSe(a) => effective_se(a),
        Command::PhaseDesign(a) => phase_design(a),
        Command::Validate(a) => {
            return if validate(a) { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
        Command::Run(a) => run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

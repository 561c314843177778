//! `gearshift` command-line driver.
//!
//! Exit codes: 0 on success, 2 on usage, configuration or input errors, 3 when
//! a simulation or optimization campaign fails. Failures also print one JSON
//! object on standard error.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gearshift::analysis::{
    compare_strategies, convergence_curve, crossing_iteration, mean_curve, validate_optimum, validation_rows,
    write_comparison_csv, write_convergence_csv, write_validation_csv, ComparisonRow, ValidationRow, MIN_VALIDATION_RUNS,
};
use gearshift::cbo::{read_log, run_campaign_with, write_record, CampaignState, ManeuverEvaluator, Mode};
use gearshift::config::{baseline_to_toml, load_baseline, FileConfig};
use gearshift::controller::ParamSet;
use gearshift::metrics::{qs_baseline_stats, shift_indices, MIN_BASELINE_RUNS};
use gearshift::sim::run_shift;
use gearshift::{BaselineStats, ShiftMetrics};

/// Reference quick-shift delays used for the baseline (s).
const QS_TAU_CUT: f64 = 0.028;
const QS_TAU_RESET: f64 = 0.038;
/// KL level that counts as converged in the analysis summary.
const KL_THRESHOLD: f64 = 0.5;

#[derive(Parser)]
#[command(name = "gearshift", version, about = "Gearshift simulation and constrained Bayesian calibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one upshift and write its telemetry and metrics.
    Simulate(SimulateArgs),
    /// Estimate the quick-shift reference statistics used to normalize the cost.
    CalibrateBaseline(BaselineArgs),
    /// Run a CBO or random-search calibration campaign.
    Optimize(OptimizeArgs),
    /// Convergence curves and strategy comparison from campaign logs.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Write into an existing non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Qs,
    Qscbw,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cbo,
    Rs,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cbo => Mode::Cbo,
            ModeArg::Rs => Mode::Rs,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// CBW step pressure (bar); QS-CBW only.
    #[arg(long)]
    p_high: Option<f64>,
    /// Torque-cut delay (s).
    #[arg(long)]
    tau_cut: Option<f64>,
    /// Torque-reset delay (s).
    #[arg(long)]
    tau_reset: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    common: Common,
    /// Number of quick-shift maneuvers.
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = QS_TAU_CUT)]
    tau_cut: f64,
    #[arg(long, default_value_t = QS_TAU_RESET)]
    tau_reset: f64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    /// Baseline statistics written by `calibrate-baseline`.
    #[arg(long)]
    baseline: PathBuf,
    /// Overrides `optimizer.mode`.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Overrides `optimizer.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Campaign logs (JSON lines).
    logs: Vec<PathBuf>,
    /// Baseline statistics; enables validation runs at every final optimum.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Validation maneuvers per campaign.
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Seed of the validation maneuvers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Self { code: 2, kind: "input", message: message.to_string() }
    }
    fn io(message: impl ToString) -> Self {
        Self { code: 2, kind: "io", message: message.to_string() }
    }
    fn runtime(message: impl ToString) -> Self {
        Self { code: 3, kind: "runtime", message: message.to_string() }
    }
}

type Outcome<T> = Result<T, Failure>;

#[derive(Serialize)]
struct Manifest {
    command: String,
    config: Option<String>,
    seed: u64,
    version: &'static str,
    out: String,
    started_unix_s: f64,
    finished_unix_s: Option<f64>,
    status: &'static str,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Run bookkeeping: owns the output directory and its manifest.
struct RunDir {
    path: PathBuf,
    manifest: Manifest,
}

impl RunDir {
    fn open(command: &str, common: &Common, seed: u64) -> Outcome<Self> {
        let path = common.out.clone();
        if path.exists() {
            let busy = fs::read_dir(&path).map_err(Failure::io)?.next().is_some();
            if busy && !common.force {
                return Err(Failure::input(format!(
                    "output directory {} is not empty; pass --force to reuse it",
                    path.display()
                )));
            }
        }
        fs::create_dir_all(&path).map_err(|e| Failure::io(format!("cannot create {}: {e}", path.display())))?;
        let dir = Self {
            manifest: Manifest {
                command: command.into(),
                config: common.config.as_ref().map(|p| p.display().to_string()),
                seed,
                version: env!("CARGO_PKG_VERSION"),
                out: path.display().to_string(),
                started_unix_s: unix_now(),
                finished_unix_s: None,
                status: "running",
            },
            path,
        };
        dir.write_manifest()?;
        Ok(dir)
    }

    fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    fn create(&self, name: &str) -> Outcome<BufWriter<File>> {
        let p = self.file(name);
        File::create(&p).map(BufWriter::new).map_err(|e| Failure::io(format!("cannot write {}: {e}", p.display())))
    }

    fn write(&self, name: &str, text: &str) -> Outcome<()> {
        fs::write(self.file(name), text).map_err(|e| Failure::io(format!("cannot write {name}: {e}")))
    }

    fn write_manifest(&self) -> Outcome<()> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        self.write("manifest.json", &(text + "\n"))
    }

    fn finish(mut self, status: &'static str) -> Outcome<()> {
        self.manifest.finished_unix_s = Some(unix_now());
        self.manifest.status = status;
        self.write_manifest()
    }
}

fn load_config(path: Option<&Path>) -> Outcome<FileConfig> {
    match path {
        Some(p) => FileConfig::load(p).map_err(Failure::input),
        None => Ok(FileConfig::default()),
    }
}

fn read_baseline(path: &Path) -> Outcome<BaselineStats> {
    load_baseline(path).map_err(Failure::input)
}

fn simulate(args: SimulateArgs) -> Outcome<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let schedule = match args.strategy {
        Strategy::Qs => {
            let (Some(cut), Some(reset)) = (args.tau_cut, args.tau_reset) else {
                return Err(Failure::input("strategy qs needs --tau-cut and --tau-reset"));
            };
            if args.p_high.is_some() {
                return Err(Failure::input("--p-high only applies to strategy qscbw"));
            }
            cfg.controller.qs(cut, reset)
        }
        Strategy::Qscbw => {
            let (Some(p), Some(cut), Some(reset)) = (args.p_high, args.tau_cut, args.tau_reset) else {
                return Err(Failure::input("strategy qscbw needs --p-high, --tau-cut and --tau-reset"));
            };
            cfg.controller.qscbw(&ParamSet::new(p, cut, reset))
        }
    }
    .map_err(Failure::input)?;

    let dir = RunDir::open("simulate", &args.common, args.seed)?;
    let sim = cfg.sim();
    let tel = run_shift(&sim, &schedule, args.seed).map_err(Failure::runtime)?;
    let idx = shift_indices(&tel, &sim, &cfg.metrics).map_err(Failure::runtime)?;
    tel.write_csv(dir.create("telemetry.csv")?).map_err(Failure::io)?;

    let strategy = match args.strategy {
        Strategy::Qs => "qs",
        Strategy::Qscbw => "qscbw",
    };
    let t_e = idx.t_e.map_or("none".to_string(), |v| format!("{v}"));
    let summary = format!(
        "strategy = {strategy}\nseed = {}\nt_a = {}\nt_c = {}\nt_e = {t_e}\ncompleted = {}\nJ_d = {}\nJ_s = {}\n",
        args.seed, tel.t_a, tel.t_c, idx.completed, idx.j_d, idx.j_s
    );
    dir.write("summary.txt", &summary)?;
    dir.finish("ok")
}

fn calibrate_baseline(args: BaselineArgs) -> Outcome<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    if args.runs < MIN_BASELINE_RUNS {
        return Err(Failure::input(format!("--runs must be at least {MIN_BASELINE_RUNS}")));
    }
    cfg.controller.qs(args.tau_cut, args.tau_reset).map_err(Failure::input)?;
    let dir = RunDir::open("calibrate-baseline", &args.common, args.seed)?;
    let stats = qs_baseline_stats(
        &cfg.sim(),
        &cfg.controller,
        args.tau_cut,
        args.tau_reset,
        args.runs,
        args.seed,
        &cfg.metrics,
    )
    .map_err(Failure::runtime)?;
    dir.write("baseline.toml", &baseline_to_toml(&stats))?;
    dir.finish("ok")
}

fn optimize(args: OptimizeArgs) -> Outcome<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let baseline = read_baseline(&args.baseline)?;
    let mut campaign = cfg.optimizer.clone();
    if let Some(m) = args.mode {
        campaign.mode = m.into();
    }
    if let Some(s) = args.seed {
        campaign.seed = s;
    }
    campaign.validate().map_err(Failure::input)?;

    let dir = RunDir::open("optimize", &args.common, campaign.seed)?;
    let mut evaluator = ManeuverEvaluator::new(cfg.sim(), baseline);
    evaluator.setup = cfg.controller.clone();
    evaluator.settings = cfg.metrics.clone();
    let mut log = dir.create("campaign.jsonl")?;
    let result = run_campaign_with(&mut evaluator, &campaign, |rec| {
        write_record(&mut log, rec)?;
        log.flush()?;
        Ok(())
    });
    drop(log);

    let state = match result {
        Ok(state) => state,
        Err(failure) => {
            dir.finish("failed")?;
            return Err(Failure::runtime(format!(
                "campaign stopped after {} iterations: {}",
                failure.state.len(),
                failure.error
            )));
        }
    };
    write_incumbent_csv(&dir, &state)?;
    let optimum = match state.incumbent() {
        Some(o) => format!(
            "feasible = true\nn = {}\np_high = {}\ntau_cut = {}\ntau_reset = {}\nJ = {}\nJ_s = {}\nJ_d = {}\n",
            o.n, o.theta.p_high, o.theta.tau_cut, o.theta.tau_reset, o.j, o.j_s, o.j_d
        ),
        None => "feasible = false\n".to_string(),
    };
    dir.write("optimum.toml", &optimum)?;
    dir.finish("ok")
}

fn write_incumbent_csv(dir: &RunDir, state: &CampaignState<f64>) -> Outcome<()> {
    let mut w = csv::Writer::from_writer(dir.create("incumbent.csv")?);
    let io = |e: csv::Error| Failure::io(e);
    w.write_record(["n", "J", "incumbent_J", "p_high", "tau_cut", "tau_reset"]).map_err(io)?;
    for r in &state.records {
        let o = &r.observation;
        let best = r.incumbent_j.map_or(String::new(), |v| v.to_string());
        let th = r.incumbent_theta.map_or([String::new(), String::new(), String::new()], |t| {
            [t.p_high.to_string(), t.tau_cut.to_string(), t.tau_reset.to_string()]
        });
        w.write_record([o.n.to_string(), o.j.to_string(), best, th[0].clone(), th[1].clone(), th[2].clone()])
            .map_err(io)?;
    }
    w.flush().map_err(Failure::io)
}

/// Logs grouped by mode, each group sorted by file name.
fn load_logs(paths: &[PathBuf]) -> Outcome<BTreeMap<String, Vec<(String, CampaignState<f64>)>>> {
    let mut sorted = paths.to_vec();
    sorted.sort();
    let mut groups: BTreeMap<String, Vec<(String, CampaignState<f64>)>> = BTreeMap::new();
    for p in &sorted {
        let file = File::open(p).map_err(|e| Failure::io(format!("cannot open {}: {e}", p.display())))?;
        let state =
            read_log(BufReader::new(file)).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
        // Every `optimize` run names its log campaign.jsonl, so the label keeps the directory.
        let label = p.with_extension("").display().to_string();
        groups.entry(state.config.mode.to_string()).or_default().push((label, state));
    }
    Ok(groups)
}

fn analyze(args: AnalyzeArgs) -> Outcome<()> {
    if args.logs.is_empty() {
        return Err(Failure::input("no campaign logs given"));
    }
    if args.baseline.is_some() && args.runs < MIN_VALIDATION_RUNS {
        return Err(Failure::input(format!("--runs must be at least {MIN_VALIDATION_RUNS}")));
    }
    let cfg = load_config(args.common.config.as_deref())?;
    let baseline = args.baseline.as_deref().map(read_baseline).transpose()?;
    let groups = load_logs(&args.logs)?;
    for (mode, runs) in &groups {
        let budgets: Vec<usize> = runs.iter().map(|(_, s)| s.len()).collect();
        if budgets.iter().any(|&b| b != budgets[0]) {
            return Err(Failure::input(format!("{mode} logs have different lengths {budgets:?}")));
        }
    }

    let dir = RunDir::open("analyze", &args.common, args.seed)?;
    let mut summary = String::new();
    for (mode, runs) in &groups {
        let labels: Vec<String> = runs.iter().map(|(l, _)| l.clone()).collect();
        let curves = runs
            .iter()
            .map(|(l, s)| convergence_curve(s).map_err(|e| Failure::input(format!("{l}: {e}"))))
            .collect::<Outcome<Vec<_>>>()?;
        write_convergence_csv(dir.create(&format!("convergence_{mode}.csv"))?, &labels, &curves)
            .map_err(Failure::io)?;
        let mean = mean_curve(&curves).map_err(Failure::input)?;
        let n_random = runs[0].1.config.n_random;
        let crossing = crossing_iteration(&mean, KL_THRESHOLD, n_random).map_or("none".into(), |n| n.to_string());
        summary += &format!("[{mode}]\ncampaigns = {}\nkl_crossing_{KL_THRESHOLD} = {crossing}\n", runs.len());
    }

    // Without a baseline the comparison uses each campaign's incumbent
    // observation; with one it uses validation maneuvers at every optimum.
    let mut samples: Vec<(String, Vec<ShiftMetrics>)> = Vec::new();
    let mut validation: Vec<ValidationRow> = Vec::new();
    match &baseline {
        None => {
            for (mode, runs) in &groups {
                let obs: Vec<ShiftMetrics> = runs
                    .iter()
                    .filter_map(|(_, s)| s.incumbent())
                    .map(|o| ShiftMetrics { j_d: o.j_d, j_s: o.j_s, j: o.j, t_e: None, completed: o.completed })
                    .collect();
                samples.push((mode.clone(), obs));
            }
        }
        Some(base) => {
            let sim = cfg.sim();
            let qs = qs_reference(&cfg, base, args.runs, args.seed)?;
            validation.extend(validation_rows("qs", &qs));
            samples.push(("qs".into(), qs));
            for (mode, runs) in &groups {
                let mut all = Vec::new();
                for (label, s) in runs {
                    let Some(inc) = s.incumbent() else { continue };
                    let v = validate_optimum(
                        &inc.theta,
                        &sim,
                        &cfg.controller,
                        &cfg.metrics,
                        base,
                        s.config.lambda,
                        args.runs,
                        args.seed,
                    )
                    .map_err(Failure::runtime)?;
                    validation.extend(validation_rows(&format!("{mode}:{label}"), &v.runs));
                    all.extend(v.runs);
                }
                samples.push((mode.clone(), all));
            }
        }
    }
    let present: Vec<(&str, &[ShiftMetrics])> =
        samples.iter().filter(|(_, v)| !v.is_empty()).map(|(k, v)| (k.as_str(), v.as_slice())).collect();
    let rows: Vec<ComparisonRow> = compare_strategies(&present).map_err(Failure::input)?;
    write_comparison_csv(dir.create("comparison.csv")?, &rows).map_err(Failure::io)?;
    if !validation.is_empty() {
        write_validation_csv(dir.create("validation.csv")?, &validation).map_err(Failure::io)?;
    }
    dir.write("summary.txt", &summary)?;
    dir.finish("ok")
}

fn qs_reference(cfg: &FileConfig, base: &BaselineStats, runs: usize, seed: u64) -> Outcome<Vec<ShiftMetrics>> {
    let sim = cfg.sim();
    let schedule = cfg.controller.qs(QS_TAU_CUT, QS_TAU_RESET).map_err(Failure::input)?;
    (0..runs as u64)
        .map(|i| {
            let tel = run_shift(&sim, &schedule, gearshift::seed::derive_seed(seed, i)).map_err(Failure::runtime)?;
            let idx = shift_indices(&tel, &sim, &cfg.metrics).map_err(Failure::runtime)?;
            Ok(idx.score(base, cfg.optimizer.lambda))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::CalibrateBaseline(a) => calibrate_baseline(a),
        Command::Optimize(a) => optimize(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let line = serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
            eprintln!("{line}");
            ExitCode::from(f.code)
        }
    }
}

//! Command-line front end.
//!
//! Verbs: `simulate`, `reproduce`, `advise` and `info`. Every file written is
//! JSON with a `schema_version` field, or comma-separated text with a header
//! row. Exit status is 0 on success, 2 for input or schema problems and 3 for
//! numeric failures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::adaptive::{initialize, ExperimentState, Mode, PendingRun, Response};
use crate::basis::Basis;
use crate::designs::{sample_design, BuiltinName, Criterion, CriterionKind, Design};
use crate::error::{parse_json, Error, Result};
use crate::error_models::{ErrorModel, MomentTable};
use crate::estimation::{mle_location, weighted_location};
use crate::information::{summarize, InfoSummary, SupportGroup};
use crate::montecarlo::{
    criterion_report, simulate, write_csv, CsvRow, DesignSpec, ScenarioConfig, SimulationReport, Strategy,
    SCHEMA_VERSION,
};
use crate::rng::{stream, substream_key, DESIGN_SLOT};

#[derive(Debug, Parser)]
#[command(name = "rsdesign", version, about = "Relevant-subset adaptive designs")]
pub struct Cli {
    /// Worker threads for Monte Carlo runs (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario (or a sweep over budgets) and write its report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Report path; a `.csv` with the same stem is written beside it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate the tables behind a published figure or table.
    Reproduce {
        #[arg(value_enum, required_unless_present = "target")]
        name: Option<Target>,
        #[arg(long, value_enum, conflicts_with = "name")]
        target: Option<Target>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Advise the next run of a live experiment.
    Advise {
        /// Saved experiment state.
        #[arg(long, required_unless_present = "config", conflicts_with = "config")]
        state: Option<PathBuf>,
        /// Start a new experiment from this configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Responses for the pending run.
        #[arg(long, requires = "state")]
        responses: Option<PathBuf>,
        /// Where to write the updated state.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Information measures of an error law, optionally for grouped data.
    Info {
        /// Error-law specification.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Fig1,
    Fig2,
    Table1,
}

/// Parse arguments, run, and map the outcome to an exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker threads: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let quiet = cli.quiet;
    match &cli.command {
        Command::Simulate { config, out, seed } => cmd_simulate(config, out, *seed, quiet),
        Command::Reproduce {
            name,
            target,
            out,
            seed,
            iterations,
        } => {
            let target = name.or(*target).expect("clap requires a target");
            cmd_reproduce(target, out, *seed, *iterations, quiet)
        }
        Command::Advise {
            state,
            config,
            responses,
            out,
        } => cmd_advise(state.as_deref(), config.as_deref(), responses.as_deref(), out.as_deref()),
        Command::Info { config, data, out } => cmd_info(config, data.as_deref(), out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub reports: Vec<SimulationReport>,
}

fn cmd_simulate(config: &Path, out: &Path, seed: Option<u64>, quiet: bool) -> Result<()> {
    let mut cfg = ScenarioConfig::from_json(&read(config)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let budgets = cfg.sweep.clone();
    let reports = match &budgets {
        Some(ns) => ns
            .iter()
            .map(|&n| simulate(&cfg.with_n(n)).map(|r| r.report))
            .collect::<Result<Vec<_>>>()?,
        None => vec![simulate(&cfg)?.report],
    };
    let rows: Vec<CsvRow> = reports.iter().flat_map(|r| r.csv_rows(cfg.strategy.label())).collect();
    let json = if budgets.is_some() {
        to_json(&SweepReport {
            schema_version: SCHEMA_VERSION,
            reports: reports.clone(),
        })
    } else {
        to_json(&reports[0])
    };
    write(out, &json)?;
    write(&out.with_extension("csv"), &write_csv(&rows))?;
    if !quiet {
        for r in &reports {
            eprintln!(
                "n = {}: {} of {} iterations used{}",
                r.n,
                r.r_effective,
                r.iterations,
                r.contrast
                    .as_ref()
                    .map(|c| format!(", lb_eff = {:.4} ± {:.4}", c.lb_eff, c.lb_eff_se))
                    .unwrap_or_default()
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// reproduce

pub const FIG1_SEED: u64 = 0x00F1_6001;
pub const FIG2_SEED: u64 = 0x00F1_6002;
pub const TABLE1_SEED: u64 = 0x007A_B1E1;
pub const PUBLISHED_ITERATIONS: usize = 2000;

/// Budgets plotted for the two-treatment heteroscedastic study.
pub const FIG1_BUDGETS: [usize; 9] = [20, 28, 36, 44, 52, 60, 72, 84, 100];
/// Shape/rate settings of the two panels.
pub const FIG1_SETTINGS: [f64; 2] = [0.25, 0.125];

pub fn fig2_budgets() -> Vec<usize> {
    std::iter::once(8).chain((10..=100).step_by(3)).collect()
}

/// Two-treatment comparison under the heteroscedastic normal/gamma law.
pub fn fig1_config(shape: f64, strategy: Strategy, n: usize, seed: u64, iterations: usize) -> Result<ScenarioConfig> {
    Ok(ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        model: ErrorModel::hetero_normal_gamma(shape, shape)?,
        design: DesignSpec::Builtin {
            name: BuiltinName::Balanced2,
            randomized: false,
        },
        basis: None,
        strategy,
        theta_true: vec![1.0, 0.0],
        n,
        n1: Some(4),
        first_run_counts: None,
        iterations,
        seed,
        contrast: Some(vec![0.0, 1.0]),
        criterion: None,
        sweep: None,
    })
}

/// `cᵀF⁻¹c / cᵀE[H⁻¹]c` for the fixed balanced design in closed form.
pub fn fig1_fixed_exact(shape: f64, n: usize) -> Option<f64> {
    let half = n as f64 / 2.0;
    let k = shape * half;
    (k > 1.0).then(|| {
        let bound = 2.0 / half;
        let expected = 2.0 * shape / (k - 1.0);
        bound / expected
    })
}

/// The four designs compared for the quadratic model on [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig2Design {
    /// Deterministic G-optimal allocation.
    Deterministic,
    /// Randomized G-optimal allocation.
    Randomized,
    /// DRSD started from the deterministic allocation.
    AdaptiveDeterministic,
    /// DRSD started from the randomized allocation.
    AdaptiveRandomized,
}

impl Fig2Design {
    pub const ALL: [Fig2Design; 4] = [
        Fig2Design::Deterministic,
        Fig2Design::Randomized,
        Fig2Design::AdaptiveDeterministic,
        Fig2Design::AdaptiveRandomized,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Fig2Design::Deterministic => "xi_g",
            Fig2Design::Randomized => "pi_g",
            Fig2Design::AdaptiveDeterministic => "drsd_xi_g",
            Fig2Design::AdaptiveRandomized => "drsd_pi_g",
        }
    }
}

pub fn fig2_config(design: Fig2Design, n: usize, seed: u64, iterations: usize) -> Result<ScenarioConfig> {
    let randomized = matches!(design, Fig2Design::Randomized | Fig2Design::AdaptiveRandomized);
    let adaptive = matches!(design, Fig2Design::AdaptiveDeterministic | Fig2Design::AdaptiveRandomized);
    Ok(ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        model: ErrorModel::generalized_normal(10.0, 1.0)?,
        design: DesignSpec::Builtin {
            name: BuiltinName::GOptimalQuadratic,
            randomized,
        },
        basis: None,
        strategy: if adaptive { Strategy::Drsd } else { Strategy::Fixed },
        theta_true: vec![1.0, 1.0, 1.0],
        n,
        n1: adaptive.then_some(6),
        first_run_counts: adaptive.then(|| vec![2, 2, 2]),
        iterations,
        seed,
        contrast: None,
        criterion: Some(Criterion::new(CriterionKind::G)),
        sweep: None,
    })
}

pub fn table1_config(strategy: Strategy, seed: u64, iterations: usize) -> Result<ScenarioConfig> {
    Ok(ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        model: ErrorModel::cauchy(1.0)?,
        design: DesignSpec::Builtin {
            name: BuiltinName::Factorial22,
            randomized: false,
        },
        basis: None,
        strategy,
        theta_true: vec![1.0; 4],
        n: 60,
        n1: Some(8),
        first_run_counts: None,
        iterations,
        seed,
        contrast: None,
        criterion: None,
        sweep: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub schema_version: u32,
    pub n: usize,
    pub seed: u64,
    pub iterations: usize,
    /// `n·F⁻¹` of the balanced factorial design.
    pub scaled_crlb: Vec<Vec<f64>>,
    pub blocks: Vec<Table1Block>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Block {
    pub strategy: Strategy,
    pub r_effective: usize,
    pub scaled_mean_hinv: Vec<Vec<f64>>,
    pub scaled_mean_hinv_se: Vec<Vec<f64>>,
    pub scaled_var_mle: Vec<Vec<f64>>,
    pub scaled_var_mle_se: Vec<Vec<f64>>,
}

fn scaled(m: &crate::linalg::Matrix, n: usize) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * n as f64).collect())
        .collect()
}

pub fn table1(seed: u64, iterations: usize) -> Result<Table1> {
    let mut blocks = Vec::new();
    let mut crlb = None;
    for s in [Strategy::Fixed, Strategy::Rrsd, Strategy::Drsd] {
        let r = simulate(&table1_config(s, seed, iterations)?)?.report;
        crlb.get_or_insert_with(|| scaled(&r.crlb, r.n));
        blocks.push(Table1Block {
            strategy: s,
            r_effective: r.r_effective,
            scaled_mean_hinv: scaled(&r.mean_hinv, r.n),
            scaled_mean_hinv_se: scaled(&r.mean_hinv_se, r.n),
            scaled_var_mle: scaled(&r.var_mle, r.n),
            scaled_var_mle_se: scaled(&r.var_mle_se, r.n),
        });
    }
    Ok(Table1 {
        schema_version: SCHEMA_VERSION,
        n: 60,
        seed,
        iterations,
        scaled_crlb: crlb.expect("three blocks"),
        blocks,
    })
}

fn format_matrix(out: &mut String, title: &str, m: &[Vec<f64>]) {
    let _ = writeln!(out, "{title}");
    for row in m {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:8.2}")).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
}

fn cmd_reproduce(target: Target, out: &Path, seed: Option<u64>, iterations: Option<usize>, quiet: bool) -> Result<()> {
    let iterations = iterations.unwrap_or(PUBLISHED_ITERATIONS);
    if iterations < 2 {
        return Err(Error::InvalidInput("--iterations must be at least 2".into()));
    }
    let progress = |msg: String| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    match target {
        Target::Fig1 => {
            let seed = seed.unwrap_or(FIG1_SEED);
            for shape in FIG1_SETTINGS {
                let mut rows = Vec::new();
                for n in FIG1_BUDGETS {
                    for s in [Strategy::Fixed, Strategy::Rrsd, Strategy::Drsd] {
                        let r = simulate(&fig1_config(shape, s, n, seed, iterations)?)?.report;
                        rows.extend(r.csv_rows(s.label()));
                    }
                    if let Some(v) = fig1_fixed_exact(shape, n) {
                        rows.push(CsvRow {
                            n,
                            strategy: "fixed_exact".into(),
                            metric: "lb_eff".into(),
                            value: v,
                            mc_se: 0.0,
                        });
                    }
                    progress(format!("fig1 shape {shape}: n = {n} done"));
                }
                write(&out.join(format!("fig1_shape_{shape}.csv")), &write_csv(&rows))?;
            }
        }
        Target::Fig2 => {
            let seed = seed.unwrap_or(FIG2_SEED);
            let mut rows = Vec::new();
            for n in fig2_budgets() {
                for design in Fig2Design::ALL {
                    let run = simulate(&fig2_config(design, n, seed, iterations)?)?;
                    for kind in [CriterionKind::G, CriterionKind::D] {
                        let c = criterion_report(&run, Criterion::new(kind))?;
                        let tag = format!("{kind:?}");
                        rows.push(CsvRow {
                            n,
                            strategy: design.label().into(),
                            metric: format!("var_eff_{tag}"),
                            value: c.var_eff,
                            mc_se: c.var_eff_se,
                        });
                        rows.push(CsvRow {
                            n,
                            strategy: design.label().into(),
                            metric: format!("lb_eff_{tag}"),
                            value: c.lb_eff,
                            mc_se: c.lb_eff_se,
                        });
                    }
                }
                progress(format!("fig2: n = {n} done"));
            }
            write(&out.join("fig2.csv"), &write_csv(&rows))?;
        }
        Target::Table1 => {
            let t = table1(seed.unwrap_or(TABLE1_SEED), iterations)?;
            write(&out.join("table1.json"), &to_json(&t))?;
            let mut text = String::new();
            format_matrix(&mut text, "n * CRLB", &t.scaled_crlb);
            for b in &t.blocks {
                format_matrix(&mut text, &format!("n * E[H^-1], {}", b.strategy.label()), &b.scaled_mean_hinv);
                format_matrix(&mut text, &format!("n * Var[theta_hat], {}", b.strategy.label()), &b.scaled_var_mle);
            }
            write(&out.join("table1.txt"), &text)?;
            if !quiet {
                print!("{text}");
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// advise

/// Starting configuration for a live experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdviseConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub model: ErrorModel,
    pub design: DesignSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Basis>,
    pub n: usize,
    pub n1: usize,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_run_counts: Option<Vec<usize>>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub schema_version: u32,
    pub state_hash: String,
    pub state: ExperimentState,
}

impl StateFile {
    pub fn new(state: ExperimentState) -> Self {
        StateFile {
            schema_version: SCHEMA_VERSION,
            state_hash: state.state_hash(),
            state,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: StateFile = parse_json(text)?;
        check_version(file.schema_version)?;
        if file.state.state_hash() != file.state_hash {
            return Err(Error::StaleState(
                "state_hash does not match the stored state; the file was edited or corrupted".into(),
            ));
        }
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponsesFile {
    pub schema_version: u32,
    /// Hash of the state whose pending run these responses answer.
    pub state_hash: String,
    pub responses: Vec<Response>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdviceStatus {
    AwaitingResponses,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub schema_version: u32,
    pub status: AdviceStatus,
    pub message: String,
    pub state_hash: String,
    pub remaining: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<PendingRun>,
}

impl Advice {
    pub fn for_state(state: &ExperimentState) -> Self {
        let pending = state.pending.clone();
        let (status, message) = match &pending {
            Some(p) => (
                AdviceStatus::AwaitingResponses,
                format!("run {}: observe {} response(s)", p.run, p.allocations.len()),
            ),
            None => (AdviceStatus::Complete, "experiment complete".to_string()),
        };
        Advice {
            schema_version: SCHEMA_VERSION,
            status,
            message,
            state_hash: state.state_hash(),
            remaining: state.remaining,
            pending,
        }
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::schema(
            "schema_version",
            format!("unsupported version {v}, expected {SCHEMA_VERSION}"),
        ));
    }
    Ok(())
}

/// Fresh experiment state from a starting configuration.
pub fn start_experiment(cfg: &AdviseConfig) -> Result<ExperimentState> {
    check_version(cfg.schema_version)?;
    let (_, random, _) = cfg.design.resolve(cfg.basis, cfg.n)?;
    let mut rng = stream(substream_key(cfg.seed, u64::MAX, 0), DESIGN_SLOT);
    let design: Design = sample_design(&random, &mut rng).clone();
    let mut state = initialize(design, cfg.model, cfg.n1, cfg.mode, cfg.seed).map_err(|e| e.under("n1"))?;
    if let Some(counts) = &cfg.first_run_counts {
        state.set_first_run(counts).map_err(|e| e.under("first_run_counts"))?;
    }
    Ok(state)
}

/// Apply a responses file to a saved state.
pub fn advance(file: &StateFile, responses: &ResponsesFile) -> Result<ExperimentState> {
    check_version(responses.schema_version)?;
    if responses.state_hash != file.state_hash {
        return Err(Error::StaleState(format!(
            "responses were prepared for state {}, but the current state is {}",
            responses.state_hash, file.state_hash
        )));
    }
    let mut state = file.state.clone();
    if state.is_complete() {
        return Err(Error::Precondition("the experiment is already complete".into()));
    }
    state.record_run(&responses.responses)?;
    Ok(state)
}

fn cmd_advise(state: Option<&Path>, config: Option<&Path>, responses: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let (next, changed) = match (state, config) {
        (_, Some(cfg)) => {
            let cfg: AdviseConfig = parse_json(&read(cfg)?)?;
            (start_experiment(&cfg)?, true)
        }
        (Some(path), None) => {
            let file = StateFile::parse(&read(path)?)?;
            match responses {
                Some(r) => {
                    let resp: ResponsesFile = parse_json(&read(r)?)?;
                    (advance(&file, &resp)?, true)
                }
                None => (file.state, false),
            }
        }
        (None, None) => return Err(Error::InvalidInput("give --state or --config".into())),
    };
    match out {
        Some(path) => write(path, &to_json(&StateFile::new(next.clone())))?,
        None if changed => {
            return Err(Error::InvalidInput("--out is required when the state changes".into()));
        }
        None => {}
    }
    print!("{}", to_json(&Advice::for_state(&next)));
    Ok(())
}

// ---------------------------------------------------------------------------
// info

/// Grouped observations at the support points of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoData {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub basis: Basis,
    pub groups: Vec<DataGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataGroup {
    pub responses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precisions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub schema_version: u32,
    pub model: ErrorModel,
    pub moments: MomentTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<InfoSummary>,
}

pub fn info_report(model: ErrorModel, data: Option<&InfoData>) -> Result<InfoReport> {
    let moments = model.moment_table();
    let summary = data
        .map(|d| {
            check_version(d.schema_version)?;
            let n = d.groups.iter().map(|g| g.responses.len()).sum();
            let design = Design::new(d.support.clone(), d.weights.clone(), n)?;
            let groups = d
                .groups
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let eta_hat = match &g.precisions {
                        Some(a) => weighted_location(&g.responses, a)?,
                        None => mle_location(&model, &g.responses)?,
                    };
                    Ok(SupportGroup {
                        support_index: i,
                        responses: g.responses.clone(),
                        precisions: g.precisions.clone(),
                        eta_hat,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.under("groups"))?;
            summarize(&model, &design, d.basis, &groups)
        })
        .transpose()?;
    Ok(InfoReport {
        schema_version: SCHEMA_VERSION,
        model,
        moments,
        summary,
    })
}

fn cmd_info(config: &Path, data: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let model: ErrorModel = parse_json(&read(config)?)?;
    let data: Option<InfoData> = data.map(|p| read(p).and_then(|t| parse_json(&t))).transpose()?;
    let text = to_json(&info_report(model, data.as_ref())?);
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

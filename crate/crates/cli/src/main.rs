use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use gmk_core::cutting::{solve_general, SchemeParams, SolveConfig, SubSolver};
use gmk_core::generators::{gen_from_2kp, gen_from_multidim_knapsack, gen_random, MultidimKnapsackInstance, RandomParams, Range};
use gmk_core::mkcp::{solve_mkcp_exact, solve_mkcp_greedy, MkcpConfig, DEFAULT_EXACT_BUDGET};
use gmk_core::numeric::{parse_ratio, ratio_to_string};
use gmk_core::oracle::{brute_force_gmk, DEFAULT_ORACLE_BUDGET};
use gmk_core::reduction::{reduce_view, verify_reduced_solution, ReducedInstance, DEFAULT_HORIZON_CAP};
use gmk_core::{
    check_feasible, profit_cost_ratio, validate_instance, GmkError, GmkInstance, InstanceDoc, MultistageSolution,
    Variant,
};
use num_rational::Ratio;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gmk", version, about = "Multistage d-knapsack solver and verification tools")]
struct Cli {
    /// Node budget for the exact solvers and the oracle.
    #[arg(long, global = true, env = "GMK_BUDGET")]
    budget: Option<u64>,

    /// Largest window the schedule reduction accepts.
    #[arg(long, global = true, env = "GMK_HORIZON_CAP", default_value_t = DEFAULT_HORIZON_CAP)]
    horizon_cap: usize,

    /// Seed for every random choice.
    #[arg(long, global = true, env = "GMK_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and print a summary.
    Validate { instance: PathBuf },

    /// Check a solution against its instance.
    ValidateSolution {
        #[arg(long = "instance")]
        instance: PathBuf,
        #[arg(long = "solution")]
        solution: PathBuf,
    },

    /// Generate an instance.
    Gen(GenArgs),

    /// Write the reduced (single-stage) instance.
    Reduce {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run the horizon-cutting scheme.
    Solve(SolveArgs),

    /// Solve a reduced instance.
    #[command(group(ArgGroup::new("mode").required(true).args(["exact", "greedy"])))]
    SolveMkcp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        greedy: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Exhaustive optimum of a small instance.
    Oracle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Solve, then compare with the exhaustive optimum.
    Compare {
        #[command(flatten)]
        solve: SolveArgs,
        /// Run the exhaustive oracle (always on).
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["from_kp", "from_2kp", "random"])))]
struct GenArgs {
    #[arg(long, value_name = "KP_JSON")]
    from_kp: Option<PathBuf>,
    #[arg(long = "from-2kp", value_name = "KP_JSON")]
    from_2kp: Option<PathBuf>,
    #[arg(long)]
    random: bool,
    #[arg(long, value_enum, default_value_t = VariantArg::Modular)]
    variant: VariantArg,
    #[arg(long, default_value_t = 3)]
    items: usize,
    #[arg(long, default_value_t = 4)]
    horizon: usize,
    #[arg(long, default_value_t = 1)]
    dimension: usize,
    #[arg(long, default_value_t = 1)]
    bins: usize,
    #[arg(long, value_parser = parse_range, default_value = "1..4")]
    weight: Range,
    #[arg(long, value_parser = parse_range, default_value = "2..8")]
    capacity: Range,
    #[arg(long, value_parser = parse_range, default_value = "1..5")]
    profit: Range,
    #[arg(long, value_parser = parse_range, default_value = "0..2")]
    gain: Range,
    #[arg(long, value_parser = parse_range, default_value = "0..2")]
    cost: Range,
    /// Bound on the profit-cost ratio, or `inf`.
    #[arg(long, default_value = "1")]
    target_phi: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Modular,
    Submodular,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubSolverArg {
    Exact,
    Greedy,
    Dp,
}

impl From<SubSolverArg> for SubSolver {
    fn from(s: SubSolverArg) -> Self {
        match s {
            SubSolverArg::Exact => SubSolver::Exact,
            SubSolverArg::Greedy => SubSolver::Greedy,
            SubSolverArg::Dp => SubSolver::Dp,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Accuracy in (0, 1/4), as a decimal or a fraction.
    #[arg(long, value_parser = parse_epsilon, default_value = "0.2")]
    eps: Ratio<u64>,
    #[arg(long, default_value_t = 1)]
    phi: u64,
    #[arg(long, value_enum, default_value_t = SubSolverArg::Exact)]
    sub_solver: SubSolverArg,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<Range, String> {
    let (lo, hi) = s.split_once("..").unwrap_or((s, s));
    let lo: u64 = lo.trim().parse().map_err(|_| format!("bad range {s:?}, expected LO..HI"))?;
    let hi: u64 = hi.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range {s:?}, expected LO..HI"))?;
    Ok(Range::new(lo, hi))
}

fn parse_epsilon(s: &str) -> Result<Ratio<u64>, String> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: u64 = n.trim().parse().map_err(|_| format!("bad fraction {s:?}"))?;
            let d: u64 = d.trim().parse().map_err(|_| format!("bad fraction {s:?}"))?;
            if d == 0 {
                return Err("zero denominator".into());
            }
            Ok(Ratio::new(n, d))
        }
        None => parse_ratio(s).map_err(|e| e.to_string()),
    }
}

/// Failures the CLI reports, with their exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<GmkError> for Failure {
    fn from(e: GmkError) -> Self {
        let code = match &e {
            GmkError::BudgetExceeded { .. } => 3,
            GmkError::Contract(_) | GmkError::Infeasible(_) => 4,
            _ => 2,
        };
        Failure { code, kind: e.kind().to_string(), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        GmkError::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        GmkError::from(e).into()
    }
}

type CliResult<T = ()> = Result<T, Failure>;

struct Settings {
    budget: Option<u64>,
    horizon_cap: usize,
    seed: u64,
}

impl Settings {
    fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            horizon_cap: self.horizon_cap,
            mkcp: self.mkcp_config(),
            oracle_budget: self.budget.unwrap_or(DEFAULT_ORACLE_BUDGET),
        }
    }

    fn mkcp_config(&self) -> MkcpConfig {
        MkcpConfig { exact_budget: self.budget.unwrap_or(DEFAULT_EXACT_BUDGET), ..MkcpConfig::default() }
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))?,
        None => writeln!(std::io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn validate(path: &Path) -> CliResult {
    let doc: InstanceDoc = serde_json::from_str(&fs::read_to_string(path)?)?;
    let report = validate_instance(&doc);
    if !report.is_ok() {
        return Err(GmkError::InvalidInstance(report).into());
    }
    let inst = GmkInstance::from_doc(&doc)?;
    let phi = match inst.variant {
        Variant::Modular => Some(profit_cost_ratio(&inst)?.to_string()),
        Variant::Submodular => None,
    };
    emit(
        None,
        &pretty(&json!({
            "valid": true,
            "variant": inst.variant,
            "items": inst.num_items(),
            "horizon": inst.horizon,
            "dimension": inst.dimension,
            "profit_cost_ratio": phi,
            "hash": inst.content_hash(),
        })),
    )
}

fn validate_solution(instance: &Path, solution: &Path) -> CliResult {
    let inst = GmkInstance::read(instance)?;
    let view = inst.full_view();
    let sol = MultistageSolution::from_json(&fs::read_to_string(solution)?, &view)?;
    let value = view.evaluate(&sol.sets)?;
    emit(None, &pretty(&json!({ "feasible": true, "value": value })))
}

fn generate(args: &GenArgs, settings: &Settings) -> CliResult {
    let inst = if let Some(path) = &args.from_kp {
        gen_from_multidim_knapsack(&MultidimKnapsackInstance::from_json(&fs::read_to_string(path)?)?)?
    } else if let Some(path) = &args.from_2kp {
        gen_from_2kp(&MultidimKnapsackInstance::from_json(&fs::read_to_string(path)?)?)?
    } else {
        let params = RandomParams {
            variant: match args.variant {
                VariantArg::Modular => Variant::Modular,
                VariantArg::Submodular => Variant::Submodular,
            },
            items: args.items,
            horizon: args.horizon,
            dimension: args.dimension,
            bins_per_mkc: args.bins,
            weight: args.weight,
            capacity: args.capacity,
            profit: args.profit,
            gain: args.gain,
            cost: args.cost,
            target_phi: (!args.target_phi.eq_ignore_ascii_case("inf")).then(|| args.target_phi.clone()),
        };
        gen_random(&params, settings.seed)?
    };
    emit(args.out.as_deref(), &inst.to_json())
}

fn reduce(input: &Path, out: Option<&Path>, settings: &Settings) -> CliResult {
    let inst = GmkInstance::read(input)?;
    let red = reduce_view(&inst.full_view(), settings.horizon_cap)?;
    emit(out, &red.to_json())
}

fn solve_mkcp(input: &Path, exact: bool, out: Option<&Path>, settings: &Settings) -> CliResult {
    let red = ReducedInstance::from_json(&fs::read_to_string(input)?)?;
    let config = settings.mkcp_config();
    let sol = if exact { solve_mkcp_exact(&red, &config)? } else { solve_mkcp_greedy(&red, &config)? };
    let report = verify_reduced_solution(&red, &sol);
    if !report.is_ok() {
        return Err(GmkError::Contract(format!("reduced solution failed verification: {report}")).into());
    }
    let value = red.value(&sol.chosen);
    emit(out, &pretty(&json!({ "value": value, "solution": sol })))
}

fn oracle(input: &Path, out: Option<&Path>, settings: &Settings) -> CliResult {
    let inst = GmkInstance::read(input)?;
    let view = inst.full_view();
    let r = brute_force_gmk(&inst, settings.solve_config().oracle_budget)?;
    let doc = serde_json::to_value(r.solution.to_doc(&view))?;
    emit(out, &pretty(&json!({ "value": r.value, "solution": doc })))
}

#[derive(Serialize)]
struct Params {
    epsilon: String,
    phi: u64,
    mu_inv: usize,
    sub_solver: SubSolver,
    horizon_cap: usize,
    budget: Option<u64>,
    seed: u64,
}

#[derive(Serialize)]
struct OracleSummary {
    value: i64,
    /// `value / oracle`, absent when the optimum is not positive.
    ratio: Option<f64>,
    /// Whether `value >= (1 - eps) * optimum`; only asserted for exact
    /// sub-solvers.
    guarantee_met: bool,
    guarantee_checked: bool,
}

#[derive(Serialize)]
struct Timings {
    load_ms: f64,
    solve_ms: f64,
    oracle_ms: Option<f64>,
    total_ms: f64,
}

#[derive(Serialize)]
struct RunReport {
    instance_hash: String,
    params: Params,
    bypassed: bool,
    shifts: Vec<gmk_core::cutting::ShiftReport>,
    selected_j: Option<usize>,
    /// Recomputed from the emitted solution.
    value: i64,
    oracle: Option<OracleSummary>,
    timings: Timings,
}

fn solve(args: &SolveArgs, with_oracle: bool, settings: &Settings) -> CliResult {
    let total = Instant::now();
    let params = SchemeParams::new(args.eps, args.phi)?;
    let solver: SubSolver = args.sub_solver.into();
    let config = settings.solve_config();

    let start = Instant::now();
    let inst = GmkInstance::read(&args.input)?;
    let load_ms = ms(start);

    let start = Instant::now();
    let outcome = solve_general(&inst, &params, solver, &config)?;
    let solve_ms = ms(start);

    let view = inst.full_view();
    let feasibility = check_feasible(&view, &outcome.solution);
    if !feasibility.is_ok() {
        return Err(GmkError::Infeasible(feasibility).into());
    }
    let value = view.evaluate(&outcome.solution.sets)?;
    if value != outcome.value {
        return Err(GmkError::Contract(format!("solver reported {} but the solution is worth {value}", outcome.value)).into());
    }

    let mut oracle_ms = None;
    let mut violation = None;
    let oracle_summary = if with_oracle {
        let start = Instant::now();
        let opt = brute_force_gmk(&inst, config.oracle_budget)?.value;
        oracle_ms = Some(ms(start));
        let (num, den) = (*params.epsilon.numer() as i128, *params.epsilon.denom() as i128);
        let met = value as i128 * den >= opt as i128 * (den - num);
        let checked = solver.is_exact();
        if checked && !met {
            violation = Some(format!(
                "value {value} is below (1 - {}) times the optimum {opt}",
                ratio_to_string(&params.epsilon)
            ));
        }
        Some(OracleSummary {
            value: opt,
            ratio: (opt > 0).then(|| value as f64 / opt as f64),
            guarantee_met: met,
            guarantee_checked: checked,
        })
    } else {
        None
    };

    let report = RunReport {
        instance_hash: inst.content_hash(),
        params: Params {
            epsilon: ratio_to_string(&params.epsilon),
            phi: params.phi,
            mu_inv: params.mu_inv,
            sub_solver: solver,
            horizon_cap: settings.horizon_cap,
            budget: settings.budget,
            seed: settings.seed,
        },
        bypassed: outcome.report.bypassed,
        shifts: outcome.report.shifts,
        selected_j: outcome.report.selected_j,
        value,
        oracle: oracle_summary,
        timings: Timings { load_ms, solve_ms, oracle_ms, total_ms: ms(total) },
    };

    // stdout carries one document: the solution, unless it went to a file
    let solution_json = outcome.solution.to_json(&view);
    let report_json = pretty(&report);
    match &args.out {
        Some(path) => fs::write(path, format!("{solution_json}\n"))?,
        None => emit(None, &solution_json)?,
    }
    match &args.report {
        Some(path) => fs::write(path, format!("{report_json}\n"))?,
        None if args.out.is_some() => emit(None, &report_json)?,
        None => {}
    }
    match violation {
        Some(message) => Err(Failure { code: 4, kind: "contract-violation".into(), message }),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> CliResult {
    let settings = Settings { budget: cli.budget, horizon_cap: cli.horizon_cap, seed: cli.seed };
    match &cli.command {
        Command::Validate { instance } => validate(instance),
        Command::ValidateSolution { instance, solution } => validate_solution(instance, solution),
        Command::Gen(args) => generate(args, &settings),
        Command::Reduce { input, out } => reduce(input, out.as_deref(), &settings),
        Command::Solve(args) => solve(args, false, &settings),
        Command::SolveMkcp { input, exact, out, .. } => solve_mkcp(input, *exact, out.as_deref(), &settings),
        Command::Oracle { input, out } => oracle(input, out.as_deref(), &settings),
        Command::Compare { solve: args, .. } => solve(args, true, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "kind": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}

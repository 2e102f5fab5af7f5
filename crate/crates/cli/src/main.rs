//! `fdrkit`: multiple-testing corrections from the command line.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for unreadable or
//! invalid data.

mod render;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fdrkit::simulate::{DESK_REALIZATIONS, DESK_TESTS, PAPER_REALIZATIONS, PAPER_TESTS, SCENARIOS};
use fdrkit::{
    adjust, apply_strategy, apply_uncorrected, bb_procedure, compute_thresholds, run_scenario,
    uncorrected_thresholds, DegreesOfFreedom, DirectionalInput, Method, PValueSet, Partition, ScenarioSpec, Simes,
    StrategyKind,
};
use serde_json::json;

use render::{flag, json_number, json_optional, number, optional};
use table::InputTable;

#[derive(Parser, Debug)]
#[command(name = "fdrkit", version, about = "FDR and FWER corrections, directional strategies and simulations")]
struct Cli {
    /// Significant digits for printed numbers.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,
    /// Emit a single JSON document instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Output file (standard output when omitted).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Adjust the `p` column of a table.
    Adjust(AdjustArgs),
    /// Run a directional strategy over the `z` column of a table.
    Strategy(StrategyArgs),
    /// Two-stage selective procedure over the sets in the `set` column.
    Bb(BbArgs),
    /// Empirical FDR and power on synthetic scenarios.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct AdjustArgs {
    /// Input file, comma or tab separated; `-` for standard input.
    file: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    q: f64,
}

#[derive(Args, Debug)]
struct StrategyArgs {
    file: PathBuf,
    #[arg(long, value_parser = parse_strategy, required_unless_present = "uncorrected")]
    strategy: Option<StrategyKind>,
    #[arg(long, value_parser = parse_method, default_value = "bh")]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    q: f64,
    /// Simes level for the first stage of the BB strategies.
    #[arg(long, default_value_t = 0.05)]
    screening_level: f64,
    /// Degrees of freedom of a t reference; normal when omitted.
    #[arg(long)]
    dof: Option<f64>,
    /// Threshold two-tailed p-values at `--q` with no correction.
    #[arg(long, conflicts_with = "strategy")]
    uncorrected: bool,
}

#[derive(Args, Debug)]
struct BbArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    q: f64,
    #[arg(long, default_value_t = 0.05)]
    screening_level: f64,
    #[arg(long, value_parser = parse_method, default_value = "bh")]
    second_stage: Method,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario `i`..`x`, or `all`.
    #[arg(long, value_parser = parse_scenario, default_value = "all")]
    scenario: Vec<String>,
    /// Method name, or `all` for BH and BKY.
    #[arg(long, default_value = "all")]
    method: String,
    /// Strategy name, or `all`.
    #[arg(long, default_value = "all")]
    strategy: String,
    /// `desk` (500 tests x 500 realizations), `full` (2000 x 2000), or a
    /// factor in (0, 1] applied to the full size.
    #[arg(long, value_parser = parse_scale, default_value = "desk")]
    scale: (usize, usize),
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    q: f64,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse()
}

fn parse_scenario(s: &str) -> Result<String, String> {
    let s = s.to_ascii_lowercase();
    if s == "all" || SCENARIOS.iter().any(|t| t.0 == s) {
        Ok(s)
    } else {
        Err(format!("unknown scenario `{s}`, expected i..x or all"))
    }
}

fn parse_scale(s: &str) -> Result<(usize, usize), String> {
    match s {
        "desk" => Ok((DESK_TESTS, DESK_REALIZATIONS)),
        "full" => Ok((PAPER_TESTS, PAPER_REALIZATIONS)),
        _ => match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f <= 1.0 => Ok((
                ((PAPER_TESTS as f64 * f).ceil() as usize).max(1),
                ((PAPER_REALIZATIONS as f64 * f).ceil() as usize).max(1),
            )),
            _ => Err(format!("scale `{s}` is not desk, full or a factor in (0, 1]")),
        },
    }
}

enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| dispatch(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("fdrkit: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("fdrkit: error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var("FDRKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("FDRKIT_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Adjust(a) => cmd_adjust(cli, a),
        Command::Strategy(a) => cmd_strategy(cli, a),
        Command::Bb(a) => cmd_bb(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
    }
}

fn with_columns(table: &InputTable, extra: &[&str]) -> Vec<String> {
    let mut h = table.headers.clone();
    h.extend(extra.iter().map(|s| s.to_string()));
    h
}

fn cmd_adjust(cli: &Cli, args: &AdjustArgs) -> Outcome {
    let table = InputTable::read(&args.file)?;
    if table.column("adjusted_p").is_some() {
        return Err(Failure::Data(anyhow!(
            "input already has an adjusted_p column; refusing to correct twice"
        )));
    }
    let p = table.probabilities(table.require("p", "p-values to adjust")?)?;
    let out = adjust(args.method, &PValueSet::new(p)?, args.q)?;
    let d = cli.precision;

    if cli.json {
        let rows: Vec<_> = (0..out.len())
            .map(|k| json!({ "row": k + 1, "adjusted_p": json_number(out.adjusted_p[k]), "rejected": out.rejected[k] }))
            .collect();
        let doc = json!({
            "method": args.method.name(),
            "q": args.q,
            "rejections": out.rejection_count(),
            "critical_p": json_optional(out.critical_p),
            "rows": rows,
        });
        render::write_json(cli.out.as_deref(), &doc)?;
        return Ok(());
    }
    let rows = table.rows.iter().enumerate().map(|(k, row)| {
        let mut r = row.clone();
        r.push(number(out.adjusted_p[k], d));
        r.push(flag(out.rejected[k]).into());
        r
    });
    let summary = [
        ("method", args.method.name().to_string()),
        ("q", number(args.q, d)),
        ("rejections", out.rejection_count().to_string()),
        ("critical_p", optional(out.critical_p, d)),
    ];
    render::write_table(
        cli.out.as_deref(),
        table.delimiter,
        &summary,
        &with_columns(&table, &["adjusted_p", "rejected"]),
        rows,
    )?;
    Ok(())
}

fn cmd_strategy(cli: &Cli, args: &StrategyArgs) -> Outcome {
    let table = InputTable::read(&args.file)?;
    let z = table.statistics(table.require("z", "every strategy needs the signed statistic")?)?;
    let dof = args.dof.map(DegreesOfFreedom::new).transpose()?;
    let input = match (table.column("p"), dof) {
        (Some(c), dof) => DirectionalInput::new(z, table.probabilities(c)?, dof)?,
        (None, Some(d)) => DirectionalInput::from_t(z, d)?,
        (None, None) => DirectionalInput::from_normal(z)?,
    };
    let out = match args.strategy {
        Some(s) => apply_strategy(&input, s, args.method, args.q, args.screening_level)?,
        None => apply_uncorrected(&input, args.q)?,
    };
    let parametric = if args.uncorrected {
        Some(uncorrected_thresholds(args.q, dof)?)
    } else {
        compute_thresholds(&input, &out).parametric
    };
    let d = cli.precision;
    let strategy = args.strategy.map_or("uncorrected", StrategyKind::name);
    let method = if args.uncorrected { "none" } else { args.method.name() };

    if cli.json {
        let rows: Vec<_> = (0..input.len())
            .map(|k| {
                json!({
                    "row": k + 1,
                    "adjusted_pos": json_optional(out.adjusted_pos[k]),
                    "adjusted_neg": json_optional(out.adjusted_neg[k]),
                    "rejected_pos": out.rejected_pos[k],
                    "rejected_neg": out.rejected_neg[k],
                })
            })
            .collect();
        let doc = json!({
            "strategy": strategy,
            "method": method,
            "q": args.q,
            "level": out.level,
            "rejections_pos": out.count_pos(),
            "rejections_neg": out.count_neg(),
            "sign_mismatches": out.sign_mismatches,
            "t_pos": json_number(out.t_pos),
            "t_neg": json_number(out.t_neg),
            "parametric_pos": json_optional(parametric.map(|t| t.0)),
            "parametric_neg": json_optional(parametric.map(|t| t.1)),
            "bb": out.bb.map(|b| json!({ "r": b.r, "s": b.s, "q_prime": b.q_prime })),
            "rows": rows,
        });
        render::write_json(cli.out.as_deref(), &doc)?;
        return Ok(());
    }

    let mut summary = vec![
        ("strategy", strategy.to_string()),
        ("method", method.to_string()),
        ("q", number(args.q, d)),
        ("level", number(out.level, d)),
        ("rejections_pos", out.count_pos().to_string()),
        ("rejections_neg", out.count_neg().to_string()),
        ("sign_mismatches", out.sign_mismatches.to_string()),
        ("t_pos", number(out.t_pos, d)),
        ("t_neg", number(out.t_neg, d)),
    ];
    if let Some((up, down)) = parametric {
        summary.push(("parametric_pos", number(up, d)));
        summary.push(("parametric_neg", number(down, d)));
    }
    if let Some(b) = out.bb {
        summary.push(("R", b.r.to_string()));
        summary.push(("S", b.s.to_string()));
        summary.push(("q_prime", number(b.q_prime, d)));
    }
    let rows = table.rows.iter().enumerate().map(|(k, row)| {
        let mut r = row.clone();
        r.push(optional(out.adjusted_pos[k], d));
        r.push(optional(out.adjusted_neg[k], d));
        r.push(flag(out.rejected_pos[k]).into());
        r.push(flag(out.rejected_neg[k]).into());
        r
    });
    render::write_table(
        cli.out.as_deref(),
        table.delimiter,
        &summary,
        &with_columns(&table, &["adjusted_pos", "adjusted_neg", "rejected_pos", "rejected_neg"]),
        rows,
    )?;
    Ok(())
}

fn cmd_bb(cli: &Cli, args: &BbArgs) -> Outcome {
    let table = InputTable::read(&args.file)?;
    let p = table.probabilities(table.require("p", "p-values to test")?)?;
    let labels = table.labels(table.require("set", "the partition into sets")?)?;
    let part = Partition::from_labels(&labels)?;
    let screen = Simes {
        level: args.screening_level,
    };
    let out = bb_procedure(&p, &part, args.q, &screen, args.second_stage)?;
    let d = cli.precision;
    let selected: Vec<bool> = part.membership().iter().map(|&s| out.selected[s]).collect();

    if cli.json {
        let sets: Vec<_> = part
            .names()
            .iter()
            .enumerate()
            .map(|(s, name)| json!({ "set": name, "selected": out.selected[s] }))
            .collect();
        let rows: Vec<_> = (0..p.len())
            .map(|k| {
                json!({
                    "row": k + 1,
                    "selected": selected[k],
                    "adjusted_p": json_optional(out.adjusted_p[k]),
                    "rejected": out.rejected[k],
                })
            })
            .collect();
        let doc = json!({
            "second_stage": args.second_stage.name(),
            "q": args.q,
            "screening_level": args.screening_level,
            "R": out.r,
            "S": out.s,
            "q_prime": out.q_prime,
            "rejections": out.rejection_count(),
            "sets": sets,
            "rows": rows,
        });
        render::write_json(cli.out.as_deref(), &doc)?;
        return Ok(());
    }
    let summary = [
        ("second_stage", args.second_stage.name().to_string()),
        ("q", number(args.q, d)),
        ("screening_level", number(args.screening_level, d)),
        ("R", out.r.to_string()),
        ("S", out.s.to_string()),
        ("q_prime", number(out.q_prime, d)),
        ("rejections", out.rejection_count().to_string()),
    ];
    let rows = table.rows.iter().enumerate().map(|(k, row)| {
        let mut r = row.clone();
        r.push(flag(selected[k]).into());
        r.push(optional(out.adjusted_p[k], d));
        r.push(flag(out.rejected[k]).into());
        r
    });
    render::write_table(
        cli.out.as_deref(),
        table.delimiter,
        &summary,
        &with_columns(&table, &["selected", "adjusted_p", "rejected"]),
        rows,
    )?;
    Ok(())
}

fn pick_methods(s: &str) -> Result<Vec<Method>, Failure> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(vec![Method::Bh, Method::Bky]);
    }
    s.split(',').map(|m| m.trim().parse().map_err(usage)).collect()
}

fn pick_strategies(s: &str) -> Result<Vec<StrategyKind>, Failure> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(StrategyKind::ALL.to_vec());
    }
    s.split(',').map(|m| m.trim().parse().map_err(usage)).collect()
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Outcome {
    let methods = pick_methods(&args.method)?;
    let strategies = pick_strategies(&args.strategy)?;
    let mut ids: Vec<&str> = Vec::new();
    for s in &args.scenario {
        if s == "all" {
            ids.extend(SCENARIOS.iter().map(|t| t.0));
        } else {
            ids.push(s);
        }
    }
    let (tests, realizations) = args.scale;
    let d = cli.precision;

    let mut reports = Vec::new();
    for id in ids {
        let mut spec = ScenarioSpec::named(id, args.seed).map_err(|e| usage(e.to_string()))?;
        spec = spec.with_scale(tests, realizations);
        spec.q = args.q;
        reports.push(run_scenario(&spec, &methods, &strategies)?);
    }

    if cli.json {
        let rows: Vec<_> = reports
            .iter()
            .flat_map(|rep| {
                rep.rows.iter().map(move |r| {
                    json!({
                        "scenario": rep.spec.name,
                        "method": r.method.name(),
                        "strategy": r.strategy.name(),
                        "view": r.view.name(),
                        "fdp": r.fdp.mean,
                        "fdp_lo": r.fdp.lo,
                        "fdp_hi": r.fdp.hi,
                        "power": r.power.map(|p| p.mean),
                        "power_lo": r.power.map(|p| p.lo),
                        "power_hi": r.power.map(|p| p.hi),
                    })
                })
            })
            .collect();
        let doc = json!({
            "tests": tests,
            "realizations": realizations,
            "seed": args.seed,
            "q": args.q,
            "rows": rows,
        });
        render::write_json(cli.out.as_deref(), &doc)?;
        return Ok(());
    }

    let headers: Vec<String> = [
        "scenario", "method", "strategy", "view", "fdp", "fdp_lo", "fdp_hi", "power", "power_lo", "power_hi",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::new();
    for rep in &reports {
        for r in &rep.rows {
            let p = |f: fn(&fdrkit::simulate::Estimate) -> f64| optional(r.power.as_ref().map(f), d);
            rows.push(vec![
                rep.spec.name.clone(),
                r.method.name().to_string(),
                r.strategy.name().to_string(),
                r.view.name().to_string(),
                number(r.fdp.mean, d),
                number(r.fdp.lo, d),
                number(r.fdp.hi, d),
                p(|e| e.mean),
                p(|e| e.lo),
                p(|e| e.hi),
            ]);
        }
    }
    let summary = [
        ("tests", tests.to_string()),
        ("realizations", realizations.to_string()),
        ("seed", args.seed.to_string()),
        ("q", number(args.q, d)),
    ];
    render::write_table(cli.out.as_deref(), b',', &summary, &headers, rows)?;
    Ok(())
}

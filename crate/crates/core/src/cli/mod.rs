//! Command-line front end.
//!
//! `famus run | sweep | validate | oracle-check`. Results are printed to
//! stdout as JSON and, for `run` and `sweep`, written under the output
//! directory (`--out`, else `$FAMUS_OUT`, else `famus-out`). Errors go to
//! stderr as one JSON object. Exit codes: 0 success, 1 the work ran but
//! failed (an oracle mismatch, a broken menu, an I/O error), 2 the request
//! itself was invalid.

pub mod emit;
pub mod oracle;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel;
use crate::contract::{check_feasible, optimal_contract, verify_ic_ir, ContractItem, ContractMenu, TypeGrid};
use crate::controller::{BranchAndBound, PolicyKind};
use crate::engine::{run, sweep, Axis, SimConfig};
use crate::error::{Error, Result};
use crate::mobility::{cluster_membership, init_ppp};
use crate::rng::{self, Stream};

use self::oracle::{run_oracles, OracleTrials};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "FAMUS_OUT";

#[derive(Debug, Parser)]
#[command(name = "famus", version, about = "Fairness-aware task delegation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config; fields left out take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "famus-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Policy name; `sweep` also takes a comma list or `all`.
    #[arg(long)]
    policy: Option<String>,
    /// Overwrite existing result files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// One run: slot stream CSV and summary JSON.
    Run(Common),
    /// One axis over several values, seeds and policies.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// m, n, gamma or v.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Seeds per point, counting up from the config seed.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Check a config and report derived quantities.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Also build the type grid from warm-up and verify the menu.
        #[arg(long)]
        menu: bool,
        /// Verify a hand-written menu instead: JSON with `grid` (type
        /// levels) and `items` (`participate`, `reward` per level).
        #[arg(long, value_name = "FILE", conflicts_with = "menu")]
        contract: Option<PathBuf>,
    },
    /// Brute-force self-checks of the solvers, contract and drift bound.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Trials per check (default: 1000 subset, 500 delegation,
        /// 10000 contract, 10000 drift).
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Run,
    Sweep {
        axis: Axis,
        values: Vec<f64>,
        seeds: Vec<u64>,
        policies: Vec<PolicyKind>,
    },
    Validate {
        menu: bool,
        contract: Option<ContractFile>,
    },
    OracleCheck {
        trials: OracleTrials,
        seed: u64,
    },
}

/// A menu and the grid it is meant for, as read by `validate --contract`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractFile {
    pub grid: Vec<f64>,
    pub items: Vec<ContractItem>,
}

impl ContractFile {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        TypeGrid::new(file.grid.clone())?;
        Ok(file)
    }
}

/// A parsed, validated request.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub command: Command,
    pub config: SimConfig,
    pub out: PathBuf,
    pub force: bool,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, or `--help` / `--version` (exit code 0).
    Usage(clap::Error),
    Sim(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Sim(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if e.exit_code() == 0 => 0,
            CliError::Usage(_) => 2,
            CliError::Sim(Error::Config(_) | Error::UnknownPolicy(_) | Error::Json { .. } | Error::InvalidGrid(_)) => 2,
            CliError::Sim(_) => 1,
        }
    }

    /// Machine-readable error summary.
    pub fn to_json(&self) -> Value {
        let (kind, message, violations) = match self {
            CliError::Usage(e) => ("usage", e.to_string(), Vec::new()),
            CliError::Sim(e) => {
                let kind = match e {
                    Error::Config(_) => "config",
                    Error::UnknownPolicy(_) | Error::InvalidGrid(_) => "config",
                    Error::Json { .. } => "config-parse",
                    Error::Io { .. } => "io",
                    Error::WouldOverwrite { .. } => "would-overwrite",
                    Error::Csv(_) => "io",
                    _ => "simulation",
                };
                let violations = match e {
                    Error::Config(v) => v.clone(),
                    _ => Vec::new(),
                };
                (kind, e.to_string(), violations)
            }
        };
        json!({
            "status": "error",
            "exit_code": self.exit_code(),
            "kind": kind,
            "message": message.trim_end(),
            "violations": violations,
        })
    }
}

fn parse_policies(text: &str) -> Result<Vec<PolicyKind>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(PolicyKind::ALL.to_vec());
    }
    text.split(',').map(str::parse).collect()
}

fn load_config(common: &Common) -> Result<SimConfig> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::from_json_file(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Parses `argv` (program name first) and validates the config it names.
pub fn parse_and_validate<I, T>(argv: I) -> Result<ExperimentSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Usage)?;
    let (common, command) = match cli.command {
        Cmd::Run(common) => (common, None),
        Cmd::Sweep {
            common,
            axis,
            values,
            seeds,
        } => {
            let axis: Axis = axis.parse()?;
            (common, Some((axis, values, seeds)))
        }
        Cmd::Validate { common, menu, contract } => {
            let mut cfg = load_config(&common)?;
            if let Some(p) = &common.policy {
                cfg.policy = p.parse()?;
            }
            cfg.validate()?;
            return Ok(ExperimentSpec {
                command: Command::Validate {
                    menu,
                    contract: contract.as_deref().map(ContractFile::from_json_file).transpose()?,
                },
                config: cfg,
                out: common.out,
                force: common.force,
            });
        }
        Cmd::OracleCheck { common, trials } => {
            return Ok(ExperimentSpec {
                command: Command::OracleCheck {
                    trials: trials.map_or_else(OracleTrials::default, OracleTrials::uniform),
                    seed: common.seed.unwrap_or(0),
                },
                config: SimConfig::default(),
                out: common.out,
                force: common.force,
            });
        }
    };
    let mut cfg = load_config(&common)?;
    let command = match command {
        None => {
            if let Some(p) = &common.policy {
                cfg.policy = p.parse()?;
            }
            Command::Run
        }
        Some((axis, values, seeds)) => {
            let policies = match &common.policy {
                Some(p) => parse_policies(p)?,
                None => vec![cfg.policy],
            };
            if seeds == 0 {
                return Err(Error::config("--seeds must be at least 1").into());
            }
            // every point must be valid before anything runs
            for &x in &values {
                axis.apply(&cfg, x)?.validate()?;
            }
            Command::Sweep {
                axis,
                values,
                seeds: (0..seeds).map(|i| cfg.seed.wrapping_add(i)).collect(),
                policies,
            }
        }
    };
    cfg.validate()?;
    Ok(ExperimentSpec {
        command,
        config: cfg,
        out: common.out,
        force: common.force,
    })
}

/// What a finished command reports.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    /// False when the work ran to completion but found a failure.
    pub success: bool,
}

fn quantiles(mut xs: Vec<f64>) -> Value {
    if xs.is_empty() {
        return Value::Null;
    }
    xs.sort_by(f64::total_cmp);
    let at = |q: f64| xs[((xs.len() - 1) as f64 * q).round() as usize];
    json!({ "min": at(0.0), "p10": at(0.1), "median": at(0.5), "p90": at(0.9), "max": at(1.0) })
}

/// Per-client SNR at the initial placement and each cluster's equal share.
fn snr_db(cfg: &SimConfig) -> Result<Vec<f64>> {
    let area = cfg.area()?;
    let clients = init_ppp(&area, cfg.clients, &cfg.mobility, cfg.seed)?;
    let link = &cfg.link;
    let mut out = Vec::with_capacity(clients.len());
    for (n, members) in cluster_membership(&clients, &area).iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let share = channel::bandwidth_share(link.bandwidth_per_cluster, members.len())?;
        for &m in members {
            let mut r = rng::stream(cfg.seed, Stream::Fading, m as u64, 0);
            let gain = channel::channel_gain(link, area.cluster_center(n), clients[m].position, &mut r);
            out.push(10.0 * channel::snr(share, link.tx_power, gain, link.noise_psd).log10());
        }
    }
    Ok(out)
}

/// Structural and exhaustive IC/IR verdicts on `menu` over `grid`.
fn verdicts(menu: &ContractMenu, grid: &TypeGrid) -> (Value, bool) {
    let structural = check_feasible(menu, grid);
    let ic_ir = verify_ic_ir(menu, grid);
    let passed = structural.is_ok() && ic_ir.passed();
    let report = json!({
        "structural": match &structural { Ok(()) => "pass".to_string(), Err(v) => v.to_string() },
        "ic_ir": ic_ir,
        "passed": passed,
    });
    (report, passed)
}

fn menu_report(cfg: &SimConfig) -> Result<(Value, bool)> {
    let warm = SimConfig {
        horizon: cfg.warmup,
        ..cfg.clone()
    };
    let grid = TypeGrid::new(run(warm)?.summary.grid)?;
    let menu = optimal_contract(&grid);
    let (checks, passed) = verdicts(&menu, &grid);
    let mut report = json!({
        "levels": grid.len(),
        "grid": grid.levels(),
        "top": grid.top(),
        "participating_items": menu.participating_items(),
        "top_reward": menu.items[grid.top_index()].reward,
    });
    for (k, v) in checks.as_object().expect("object") {
        report[k] = v.clone();
    }
    Ok((report, passed))
}

/// Runs a parsed request, writing any result files.
pub fn execute(req: &ExperimentSpec) -> Result<Outcome> {
    let cfg = &req.config;
    match &req.command {
        Command::Run => {
            let out = run(cfg.clone())?;
            let files = emit::emit_run(&out, &req.out, req.force)?;
            Ok(Outcome {
                report: json!({ "status": "ok", "files": files, "summary": out.summary }),
                success: true,
            })
        }
        Command::Sweep {
            axis,
            values,
            seeds,
            policies,
        } => {
            let points = sweep(cfg, *axis, values, policies, seeds)?;
            let files = emit::emit_sweep(*axis, &points, &req.out, req.force)?;
            Ok(Outcome {
                report: json!({
                    "status": "ok",
                    "files": files,
                    "rows": crate::engine::aggregate(&points),
                }),
                success: true,
            })
        }
        Command::Validate { menu, contract } => {
            let release_slots = if cfg.horizon == 0 {
                0
            } else {
                (cfg.horizon - 1) / cfg.slots_per_period() + 1
            };
            let (cols, rows) = cfg.area()?.grid();
            let mut report = json!({
                "status": "ok",
                "servers": cfg.servers,
                "clients": cfg.clients,
                "tasks": cfg.tasks,
                "type_levels": cfg.type_levels,
                "epsilon": cfg.epsilon(),
                "sigma0": cfg.sigma0(),
                "al_max": cfg.al_max(),
                "top_quantile": cfg.top_quantile(),
                "grid": [cols, rows],
                "release_slots": release_slots,
                "measured_slots": cfg.measured_slots(),
                "snr_db": quantiles(snr_db(cfg)?),
            });
            let mut success = true;
            if let Some(file) = contract {
                let grid = TypeGrid::new(file.grid.clone())?;
                let (m, passed) = verdicts(&ContractMenu { items: file.items.clone() }, &grid);
                report["contract"] = m;
                success = passed;
                if !passed {
                    report["status"] = "failed".into();
                }
            }
            if *menu {
                let (m, passed) = menu_report(cfg)?;
                report["menu"] = m;
                success = passed;
                if !passed {
                    report["status"] = "failed".into();
                }
            }
            Ok(Outcome { report, success })
        }
        Command::OracleCheck { trials, seed } => {
            let report = run_oracles(&BranchAndBound, *trials, *seed);
            let success = report.passed();
            let mut value = serde_json::to_value(&report).expect("report serialises");
            value["status"] = if success { "ok" } else { "failed" }.into();
            Ok(Outcome { report: value, success })
        }
    }
}

/// Full command-line entry point. Prints the report or the error and
/// returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_and_validate(argv).and_then(|req| execute(&req).map_err(CliError::from));
    match result {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.report).expect("report serialises"));
            if outcome.success {
                0
            } else {
                1
            }
        }
        Err(CliError::Usage(e)) if e.exit_code() == 0 => {
            print!("{e}");
            0
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("famus").chain(s.split_whitespace()).map(String::from).collect()
    }

    #[test]
    fn seed_override() {
        let req = parse_and_validate(argv("run --seed 7 --out x")).unwrap();
        assert_eq!(req.config.seed, 7);
        assert_eq!(req.command, Command::Run);
        assert_eq!(req.out, PathBuf::from("x"));
    }

    #[test]
    fn gamma_sweep_shape() {
        let req = parse_and_validate(argv("sweep --axis gamma --values 10,20,50,100 --seeds 3 --policy famus,ncf"))
            .unwrap();
        match req.command {
            Command::Sweep {
                axis,
                values,
                seeds,
                policies,
            } => {
                assert_eq!(axis, Axis::Gamma);
                assert_eq!(values, vec![10.0, 20.0, 50.0, 100.0]);
                assert_eq!(seeds, vec![1, 2, 3]);
                assert_eq!(policies, vec![PolicyKind::Famus, PolicyKind::Ncf]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_requests_exit_with_two() {
        let e = parse_and_validate(argv("run --bogus")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = parse_and_validate(argv("run --policy nope")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = parse_and_validate(argv("sweep --axis n --values 4")).unwrap_err();
        // N = 4 < K = 8
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_json()["violations"][0].as_str().unwrap().contains("K <= N"));
        assert_eq!(parse_and_validate(argv("--help")).unwrap_err().exit_code(), 0);
    }
}

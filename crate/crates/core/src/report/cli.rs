//! `coupon-lab` command line.
//!
//! Album parameters are resolved flag first, then the optional `--config`
//! file (`key = value` lines with keys `n`, `price_cents`, `seed`), then
//! built-in defaults. The simulation seed falls back to the `COUPON_LAB_SEED`
//! environment variable before the default of 0.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use super::output::{num, nums, Document, Format, Table};
use super::{cost_of, CostReport};
use crate::album::{build_transition_matrix, AlbumSpec};
use crate::bounds::{invert_confidence, tail_bound, BoundQuery};
use crate::error::Error;
use crate::exact::{
    completion_law, completion_quantile, exact_tail, expected_completion, expected_draws_for_next,
};
use crate::simulation::{run_simulation, SimulationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const SEED_ENV: &str = "COUPON_LAB_SEED";

/// Sticker price used when neither a flag nor the config file sets one.
pub const DEFAULT_PRICE_CENTS: u64 = 20;

#[derive(Debug, Parser)]
#[command(
    name = "coupon-lab",
    version,
    about = "How many single stickers complete an album, and what they cost"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Number of distinct stickers in the album
    #[arg(long)]
    n: Option<usize>,

    /// Price of one sticker in cents [default: 20]
    #[arg(long)]
    price_cents: Option<u64>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// key=value file presetting n, price_cents and seed
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transition matrix as sparse (row, col, value) triplets
    Matrix {
        #[command(flatten)]
        common: Common,
    },
    /// Exact PMF and CDF of the completion time up to a horizon
    Exact {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_max: u64,
    },
    /// Smallest purchase count completing the album with the target probability
    Quantile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: f64,
    },
    /// Threshold n ln n + cn and its e^{-c} tail bound
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(
            long,
            conflicts_with = "failure_prob",
            required_unless_present = "failure_prob"
        )]
        c: Option<f64>,
        /// Derive c = -ln(failure_prob)
        #[arg(long)]
        failure_prob: Option<f64>,
        /// Also compute the exact tail at the threshold
        #[arg(long)]
        exact: bool,
    },
    /// Purchases and budget that complete the album with a given confidence
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.9)]
        confidence: f64,
        /// Slack parameter; defaults to -ln(1 - confidence)
        #[arg(long)]
        c: Option<f64>,
        /// Skip the exact tail and exact quantile
        #[arg(long)]
        skip_exact: bool,
    },
    /// Expected purchases for the next new sticker or for the whole album
    Expect {
        #[command(flatten)]
        common: Common,
        /// Stickers still missing; omit for the full album
        #[arg(long)]
        missing: Option<usize>,
    },
    /// Monte Carlo completion times
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-trial purchase cap [default: 50 n ln n]
        #[arg(long)]
        t_cap: Option<u64>,
        /// Report the empirical P(tau > t); repeatable
        #[arg(long)]
        tail_at: Vec<u64>,
    },
    /// Price of a number of stickers
    Cost {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stickers: u64,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Matrix { common }
            | Command::Exact { common, .. }
            | Command::Quantile { common, .. }
            | Command::Bound { common, .. }
            | Command::Plan { common, .. }
            | Command::Expect { common, .. }
            | Command::Simulate { common, .. }
            | Command::Cost { common, .. } => common,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Compute(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Compute(msg) => write!(f, "error: {msg}"),
        }
    }
}

/// Rejected inputs are usage errors; anything failing after validation is a
/// computation error.
fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn compute(e: Error) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Debug, Default, PartialEq)]
struct FileConfig {
    n: Option<usize>,
    price_cents: Option<u64>,
    seed: Option<u64>,
}

fn parse_config(text: &str, origin: &Path) -> Result<FileConfig, CliError> {
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| {
            CliError::Usage(format!(
                "{}:{}: {what}: '{raw}'",
                origin.display(),
                lineno + 1
            ))
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        match key.replace('-', "_").as_str() {
            "n" => cfg.n = Some(value.parse().map_err(|_| bad("invalid n"))?),
            "price_cents" => {
                cfg.price_cents = Some(value.parse().map_err(|_| bad("invalid price_cents"))?)
            }
            "seed" => cfg.seed = Some(value.parse().map_err(|_| bad("invalid seed"))?),
            _ => return Err(bad("unknown key")),
        }
    }
    Ok(cfg)
}

struct Resolved {
    spec: AlbumSpec,
    file_seed: Option<u64>,
}

fn resolve(common: &Common) -> Result<Resolved, CliError> {
    let file = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config '{}': {e}", path.display()))
            })?;
            parse_config(&text, path)?
        }
        None => FileConfig::default(),
    };
    let n = common
        .n
        .or(file.n)
        .ok_or_else(|| CliError::Usage("--n is required (flag or config file)".into()))?;
    let price = common
        .price_cents
        .or(file.price_cents)
        .unwrap_or(DEFAULT_PRICE_CENTS);
    Ok(Resolved {
        spec: AlbumSpec::new(n, price).map_err(usage)?,
        file_seed: file.seed,
    })
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    if let Some(seed) = flag.or(file) {
        return Ok(seed);
    }
    match env {
        Some(raw) => raw.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{SEED_ENV}='{raw}' is not an unsigned 64-bit integer"
            ))
        }),
        None => Ok(0),
    }
}

fn cost_json(cost: &CostReport) -> Value {
    json!({
        "stickers": cost.stickers,
        "unit_price_cents": cost.unit_price_cents,
        "total_cents": cost.total_cents,
        "formatted": cost.formatted,
    })
}

fn album_inputs(spec: &AlbumSpec) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("n".into(), json!(spec.n()));
    m.insert("price_cents".into(), json!(spec.price_cents()));
    m
}

fn probability_arg(flag: &str, p: f64) -> Result<f64, CliError> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(CliError::Usage(format!(
            "--{flag} {p} must lie strictly between 0 and 1"
        )))
    }
}

fn execute(command: &Command, env_seed: Option<&str>) -> Result<Document, CliError> {
    let resolved = resolve(command.common())?;
    let spec = resolved.spec;
    let mut inputs = album_inputs(&spec);
    let mut results = Map::new();
    let mut seed = None;
    let mut table = None;

    let query = match command {
        Command::Matrix { .. } => {
            let matrix = build_transition_matrix(&spec);
            let triplets: Vec<_> = matrix.triplets().collect();
            results.insert("dim".into(), json!(matrix.dim()));
            results.insert("nonzeros".into(), json!(triplets.len()));
            results.insert(
                "entries".into(),
                Value::Array(
                    triplets
                        .iter()
                        .map(|&(i, j, v)| json!([i, j, num(v)]))
                        .collect(),
                ),
            );
            table = Some(Table {
                header: vec!["row", "col", "value"],
                rows: triplets
                    .iter()
                    .map(|&(i, j, v)| vec![json!(i), json!(j), num(v)])
                    .collect(),
            });
            "matrix"
        }
        Command::Exact { t_max, .. } => {
            inputs.insert("t_max".into(), json!(t_max));
            let law = completion_law(&spec, *t_max).map_err(usage)?;
            results.insert("tail_mass".into(), num(law.tail_mass));
            results.insert("truncated_mean".into(), num(law.truncated_mean()));
            results.insert("pmf".into(), nums(&law.pmf));
            results.insert("cdf".into(), nums(&law.cdf));
            table = Some(Table {
                header: vec!["t", "pmf", "cdf"],
                rows: (0..law.pmf.len())
                    .map(|t| vec![json!(t), num(law.pmf[t]), num(law.cdf[t])])
                    .collect(),
            });
            "exact"
        }
        Command::Quantile { target, .. } => {
            inputs.insert("target".into(), num(*target));
            let t = completion_quantile(&spec, *target).map_err(usage)?;
            let cost = cost_of(t, &spec).map_err(compute)?;
            results.insert("t".into(), json!(t));
            results.insert("tail_at_t".into(), num(exact_tail(&spec, t)));
            results.insert("cost".into(), cost_json(&cost));
            "quantile"
        }
        Command::Bound {
            c,
            failure_prob,
            exact,
            ..
        } => {
            let query = match (c, failure_prob) {
                (Some(c), _) => BoundQuery::new(spec.n(), *c).map_err(usage)?,
                (None, Some(p)) => {
                    inputs.insert("failure_prob".into(), num(*p));
                    invert_confidence(spec.n(), *p).map_err(usage)?
                }
                (None, None) => unreachable!("clap requires --c or --failure-prob"),
            };
            let bound = tail_bound(&query);
            results.insert("c".into(), num(query.c()));
            results.insert("threshold".into(), json!(bound.threshold_t));
            results.insert("bound".into(), num(bound.bound));
            results.insert("union_bound".into(), num(bound.union_bound));
            if *exact {
                results.insert(
                    "exact_tail".into(),
                    num(exact_tail(&spec, bound.threshold_t)),
                );
            }
            "bound"
        }
        Command::Plan {
            confidence,
            c,
            skip_exact,
            ..
        } => {
            let confidence = probability_arg("confidence", *confidence)?;
            inputs.insert("confidence".into(), num(confidence));
            let (query, c_source) = match c {
                Some(c) => (BoundQuery::new(spec.n(), *c).map_err(usage)?, "flag"),
                None => (
                    invert_confidence(spec.n(), 1.0 - confidence).map_err(usage)?,
                    "confidence",
                ),
            };
            let bound = tail_bound(&query);
            let cost = cost_of(bound.threshold_t, &spec).map_err(compute)?;
            results.insert("c".into(), num(query.c()));
            results.insert("c_source".into(), json!(c_source));
            results.insert("threshold".into(), json!(bound.threshold_t));
            results.insert("bound".into(), num(bound.bound));
            results.insert("union_bound".into(), num(bound.union_bound));
            results.insert("cost".into(), cost_json(&cost));
            if !*skip_exact {
                let tail = exact_tail(&spec, bound.threshold_t);
                let quantile = completion_quantile(&spec, confidence).map_err(compute)?;
                let quantile_cost = cost_of(quantile, &spec).map_err(compute)?;
                results.insert("exact_tail_at_threshold".into(), num(tail));
                results.insert("exact_quantile".into(), json!(quantile));
                results.insert("exact_quantile_cost".into(), cost_json(&quantile_cost));
            }
            "plan"
        }
        Command::Expect { missing, .. } => {
            let draws = match missing {
                Some(k) => {
                    inputs.insert("missing".into(), json!(k));
                    expected_draws_for_next(&spec, *k).map_err(usage)?
                }
                None => expected_completion(&spec),
            };
            let cents = draws * spec.price_cents() as f64;
            if cents.is_nan() || cents >= u64::MAX as f64 {
                return Err(compute(Error::CostOverflow {
                    stickers: draws.ceil() as u64,
                    unit_price_cents: spec.price_cents(),
                }));
            }
            let cents = cents.round() as u64;
            results.insert(
                "scope".into(),
                json!(if missing.is_some() { "next" } else { "album" }),
            );
            results.insert("expected_draws".into(), num(draws));
            results.insert(
                "expected_cost".into(),
                json!({
                    "unit_price_cents": spec.price_cents(),
                    "total_cents": cents,
                    "formatted": super::format_brl(cents),
                }),
            );
            "expect"
        }
        Command::Simulate {
            trials,
            seed: flag_seed,
            t_cap,
            tail_at,
            ..
        } => {
            let resolved_seed = resolve_seed(*flag_seed, resolved.file_seed, env_seed)?;
            seed = Some(resolved_seed);
            let config =
                SimulationConfig::new(spec, *trials, resolved_seed, *t_cap).map_err(usage)?;
            inputs.insert("trials".into(), json!(trials));
            inputs.insert("t_cap".into(), json!(config.t_cap()));
            let report = run_simulation(&config);
            let summary = report.summary.as_ref();
            results.insert("completed".into(), json!(report.samples.len()));
            results.insert("censored_count".into(), json!(report.censored.len()));
            results.insert("mean".into(), summary.map_or(Value::Null, |s| num(s.mean)));
            results.insert(
                "std_dev".into(),
                summary.map_or(Value::Null, |s| num(s.std_dev)),
            );
            results.insert("min".into(), json!(summary.map(|s| s.min)));
            results.insert("max".into(), json!(summary.map(|s| s.max)));
            results.insert(
                "empirical_tail".into(),
                Value::Array(
                    report
                        .tail_table(tail_at)
                        .into_iter()
                        .map(|(t, f)| json!({"t": t, "fraction_above": num(f)}))
                        .collect(),
                ),
            );
            results.insert("samples".into(), json!(report.samples));
            results.insert("censored".into(), json!(report.censored));

            let mut rows = Vec::with_capacity(report.trials as usize);
            let mut completed = report.samples.iter();
            let mut censored = report.censored.iter().peekable();
            for trial in 0..report.trials {
                if censored.peek() == Some(&&trial) {
                    censored.next();
                    rows.push(vec![json!(trial), Value::Null, json!(true)]);
                } else {
                    rows.push(vec![json!(trial), json!(completed.next()), json!(false)]);
                }
            }
            table = Some(Table {
                header: vec!["trial", "tau", "censored"],
                rows,
            });
            "simulate"
        }
        Command::Cost { stickers, .. } => {
            let cost = cost_of(*stickers, &spec).map_err(compute)?;
            inputs.insert("stickers".into(), json!(stickers));
            results.insert("cost".into(), cost_json(&cost));
            "cost"
        }
    };

    Ok(Document {
        query,
        inputs,
        results,
        seed,
        table,
    })
}

/// Runs one command line. Writes exactly one document to `out` on success
/// and diagnostics to `err`; returns the process exit code.
pub fn run_cli<I, T, O, E>(args: I, env_seed: Option<&str>, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let format = cli.command.common().format;
    match execute(&cli.command, env_seed) {
        Ok(doc) => match doc.write(format, out) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: failed to write output: {e}");
                EXIT_COMPUTE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "{e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Compute(_) => EXIT_COMPUTE,
            }
        }
    }
}

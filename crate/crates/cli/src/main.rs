use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ratpoints::asymptotics::{
    admissible_delta, bound_chain, choose_k, error_bound, error_term, main_term, regime, regime_threshold, RegimeParams,
    DEFAULT_EPSILON, DEFAULT_REGIME_C,
};
use ratpoints::harness::{self, AcceptOptions, SweepConfig};
use ratpoints::oscillatory::{exp_sum, index_bounds, osc_integral_with_error, small_lambda_census, stationary_point, sum_integral_compare};
use ratpoints::{count, count_exact, CountOptions, CountQuery, Curve, CurveSpec, Error, Mode, SelbergPolynomial64, Sign};

#[derive(Parser)]
#[command(name = "ratpoints", version, about = "Count rational points near planar curves and check their asymptotics")]
struct Cli {
    /// Sweep config file (TOML); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count pairs (a, q) with ||q f(a/q)|| < delta.
    Count {
        #[arg(long)]
        curve: String,
        #[arg(long = "Q")]
        q: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "full")]
        mode: Mode,
        /// Also write per-denominator counts to `<out>.per_q.csv`.
        #[arg(long)]
        per_q: bool,
        /// Decide every pair in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a Selberg majorant or minorant.
    Selberg {
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "plus")]
        sign: Sign,
        /// Check the extremal properties on a grid, given as `grid=N` or `N`.
        #[arg(long)]
        verify: Option<String>,
        #[arg(long)]
        dump_coeffs: Option<PathBuf>,
    },
    /// Exponential sums, oscillatory integrals and stationary points.
    Oscdiag {
        #[arg(long)]
        curve: String,
        #[arg(long, allow_hyphen_values = true)]
        k: i64,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        h: Option<i64>,
        #[arg(long)]
        op: OscOp,
    },
    /// Main terms, regimes, K selection, bounds and the bound chain.
    Analyze {
        #[arg(long)]
        curve: String,
        #[arg(long = "Q")]
        q: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_REGIME_C)]
        regime_c: f64,
        #[arg(long, default_value = "tilde")]
        mode: Mode,
        /// Degree for `chain`; chosen by the K rule when absent.
        #[arg(long = "K")]
        k: Option<u64>,
        #[arg(long)]
        op: AnalyzeOp,
    },
    /// Run a sweep described by `--config` and `key=value` overrides.
    Sweep {
        /// Overrides such as `delta=0.05` or `q_count=4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        curve: Option<String>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Run acceptance suites and print one line per criterion.
    Accept {
        /// Suite name or criterion number; `all` runs everything.
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// List the registered suites.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OscOp {
    Expsum,
    Integral,
    Stationary,
    Census,
    Compare,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "lower")]
enum AnalyzeOp {
    Mainterm,
    Error,
    Regime,
    #[value(name = "chooseK", alias = "choosek")]
    ChooseK,
    Bound,
    Chain,
}

/// Command outcome: `Ok(true)` passes, `Ok(false)` is a reported failure.
type Outcome = Result<bool, Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_)
                | Error::UnknownCurve(_)
                | Error::InvalidCurve { .. }
                | Error::UnknownSuite(_)
                | Error::Config(_)
                | Error::MissingExactForm(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn curve(spec: &str) -> Result<Curve, Error> {
    CurveSpec::parse(spec)?.build()
}

fn print_json(value: &Value) -> Outcome {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(true)
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Count { curve: spec, q, delta, mode, per_q, exact, workers, out } => {
            let c = curve(&spec)?;
            let query = CountQuery::new(q, delta, mode)?;
            let opts = CountOptions { workers, per_q };
            let result = if exact { count_exact(&c, &query, &opts)? } else { count(&c, &query, &opts)? };
            harness::write_count_csv(writer(out.as_deref())?, &result)?;
            if let (Some(rows), Some(out)) = (&result.per_q, &out) {
                let mut name = out.clone().into_os_string();
                name.push(".per_q.csv");
                harness::write_per_q_csv(File::create(name)?, rows)?;
            }
            Ok(true)
        }
        Command::Selberg { k, delta, sign, verify, dump_coeffs } => {
            let poly = SelbergPolynomial64::build(sign, k, delta)?;
            if let Some(path) = &dump_coeffs {
                poly.dump_csv(path)?;
            }
            let mut out = json!({ "sign": sign.to_string(), "K": k, "delta": delta, "mean": poly.coeff(0).re, "expected_mean": poly.expected_mean() });
            let mut passed = true;
            if let Some(arg) = verify {
                let grid: usize = arg
                    .trim_start_matches("grid=")
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("--verify expects grid=N, got `{arg}`")))?;
                let report = poly.verify(grid)?;
                passed = report.passed();
                out["verify"] = serde_json::to_value(&report)?;
                out["passed"] = json!(passed);
            }
            print_json(&out)?;
            Ok(passed)
        }
        Command::Oscdiag { curve: spec, k, q, h, op } => {
            let c = curve(&spec)?;
            let need_h = || h.ok_or_else(|| Error::InvalidArgument("this op needs --h".into()));
            let inputs = json!({ "curve": c.id(), "k": k, "q": q, "h": h });
            let (name, re, im, diagnostics) = match op {
                OscOp::Expsum => {
                    let v = exp_sum::<f64>(&c, k, q)?;
                    ("expsum", v.re, v.im, serde_json::to_value(index_bounds(&c, k)?)?)
                }
                OscOp::Integral => {
                    let r = osc_integral_with_error::<f64>(&c, k, need_h()?, q, c.eta(), c.xi())?;
                    ("integral", r.value.re, r.value.im, json!({ "error": r.error, "panels": r.panels }))
                }
                OscOp::Stationary => {
                    let p = stationary_point::<f64>(&c, k, need_h()?)?;
                    ("stationary", p.beta_h, 0.0, serde_json::to_value(p)?)
                }
                OscOp::Census => {
                    let n = small_lambda_census(&c, k.unsigned_abs(), q as f64)?;
                    ("census", n as f64, 0.0, json!({ "K": k.unsigned_abs(), "Q": q, "threshold": 1.0 / q as f64 }))
                }
                OscOp::Compare => {
                    let r = sum_integral_compare(&c, k, q)?;
                    ("compare", r.difference, 0.0, serde_json::to_value(r)?)
                }
            };
            print_json(&json!({ "op": name, "inputs": inputs, "value_re": re, "value_im": im, "diagnostics": diagnostics }))
        }
        Command::Analyze { curve: spec, q, delta, theta, epsilon, regime_c, mode, k, op } => {
            let c = curve(&spec)?;
            let params = RegimeParams::new(theta.unwrap_or(c.theta()), q, delta).with_epsilon(epsilon).with_regime_c(regime_c);
            let inputs = json!({ "curve": c.id(), "Q": q, "delta": delta, "theta": params.theta, "epsilon": epsilon, "regime_c": regime_c });
            let result = match op {
                AnalyzeOp::Mainterm => json!({ "mode": mode.to_string(), "main": main_term(c.eta(), c.xi(), q, delta, mode) }),
                AnalyzeOp::Error => {
                    let e = error_term(&c, q, delta, mode, &CountOptions::default())?;
                    json!({ "mode": mode.to_string(), "error": e, "main": main_term(c.eta(), c.xi(), q, delta, mode) })
                }
                AnalyzeOp::Regime => json!({
                    "regime": regime(&params)?.to_string(),
                    "threshold": regime_threshold(&params)?,
                    "admissible": admissible_delta(&params),
                }),
                AnalyzeOp::ChooseK => serde_json::to_value(choose_k(&params)?)?,
                AnalyzeOp::Bound => json!({ "regime": regime(&params)?.to_string(), "bound": error_bound(&params)? }),
                AnalyzeOp::Chain => {
                    let k = match k {
                        Some(k) => k,
                        None => choose_k(&params)?.k,
                    };
                    serde_json::to_value(bound_chain(&c, q, delta, k, epsilon)?)?
                }
            };
            let name = op.to_possible_value().map(|v| v.get_name().to_string());
            print_json(&json!({ "op": name, "inputs": inputs, "result": result }))
        }
        Command::Sweep { overrides, curve: spec, mode, workers, out, plot, cache_dir } => {
            let mut cfg = match &cli.config {
                Some(path) => SweepConfig::load(path)?,
                None => SweepConfig::default(),
            };
            for o in &overrides {
                cfg.set_override(o)?;
            }
            if let Some(spec) = spec {
                cfg.curve = CurveSpec::parse(&spec)?;
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if out.is_some() {
                cfg.output = out;
            }
            if plot.is_some() {
                cfg.plot = plot;
            }
            if cache_dir.is_some() {
                cfg.cache_dir = cache_dir;
            }
            let records = harness::run_sweep(&cfg)?;
            if cfg.output.is_none() {
                harness::write_records(io::stdout().lock(), &records)?;
            }
            let failed: Vec<_> = records.iter().filter(|r| r.count.is_none()).collect();
            for r in &failed {
                eprintln!("Q = {} delta = {}: {}", r.q, r.delta, r.note);
            }
            Ok(failed.is_empty())
        }
        Command::Accept { suite, workers, json, list } => {
            if list {
                for (name, id, about) in harness::SUITES {
                    println!("{id:>2} {name:<18} {about}");
                }
                return Ok(true);
            }
            let report = harness::acceptance(&suite, &AcceptOptions { workers })?;
            for c in &report.criteria {
                println!("{}", c.line());
            }
            if let Some(path) = json {
                std::fs::write(path, report.to_json()?)?;
            }
            Ok(report.passed)
        }
    }
}

//! Command-line front end for `causal-lab`.
//!
//! Every subcommand builds a [`Report`] that is rendered as JSON, CSV or text.
//! Exit codes: 0 success, 1 input error, 2 failed check.

pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use causal_lab::game::{
    classical_max, classical_max_exhaustive, empirical_success, quantum_game_value, rac_value, simulate, task_mask,
    CorrelationParams, GameValue,
};
use causal_lab::info::{
    efficiency, empirical_efficiency, prop1_equivalence_scan, prop1_sampled, strong_dpi_grid, task_mi, Prop1Scan,
};
use causal_lab::linalg::hermitian_eigenvalues;
use causal_lab::process::{
    ocb_alice_instrument, ocb_bob_instrument, validate_process, ProcessMatrix, OCB_FIXTURE_JSON,
};
use causal_lab::search::{find_onecon_supraquantum, optimize_protocol_with, sweep, OptimizeOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::format::{cell_f, cell_opt, key_value_csv, key_value_text, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

/// `(2+√2)/4`
pub const QUANTUM_VALUE: f64 = 0.8535533905932737;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] causal_lab::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "causal-lab", version, about = "Process-matrix causal game laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Value of the explicit qubit protocol on a process (default: built-in fixture).
    OcbDemo {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Best classical strategy with 1- or 2-bit messages.
    ClassicalBound {
        #[arg(long, default_value_t = 1)]
        message_bits: u8,
    },
    /// Positivity, trace and normalization checks for a process file.
    ValidateProcess {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Table of P_n, I(n) and its bounds for n = 1..n_max.
    Rac {
        #[command(flatten)]
        #[serde(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 10)]
        n_max: u32,
    },
    /// Region classification over a grid of [0,1]².
    Sweep {
        #[arg(long, default_value_t = 21)]
        resolution: usize,
        #[arg(long, default_value_t = 25)]
        n_max: u32,
    },
    /// Run-pair equivalence scan for one run-2 box, or for seeded samples.
    Prop1 {
        #[command(flatten)]
        #[serde(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        /// Boxes drawn on each side of the quantum boundary when no point is given.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Strong data-processing inequality over a bias grid.
    Dpi {
        #[arg(long, default_value_t = 100)]
        resolution: usize,
    },
    /// Supraquantum box that passes the one-shot condition.
    OneCon {
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Simplex search over local qubit protocols.
    Optimize {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also start one simplex at the known optimal angles.
        #[arg(long)]
        include_reference: bool,
    },
    /// Monte Carlo of the multi-run game against the closed forms.
    Simulate {
        #[command(flatten)]
        #[serde(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PointArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub e1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub e2: Option<f64>,
    /// Sets e1 = e2 = 2^(-1/2).
    #[arg(long, conflicts_with_all = ["e1", "e2"])]
    pub quantum_point: bool,
}

impl PointArgs {
    fn given(&self) -> bool {
        self.quantum_point || self.e1.is_some() || self.e2.is_some()
    }

    fn resolve(&self) -> Result<CorrelationParams, CliError> {
        if self.quantum_point {
            return Ok(CorrelationParams::quantum_point());
        }
        match (self.e1, self.e2) {
            (Some(e1), Some(e2)) => Ok(CorrelationParams::new(e1, e2)?),
            _ => Err(CliError::Input("pass both --e1 and --e2, or --quantum-point".into())),
        }
    }
}

/// Result of one subcommand, before rendering.
#[derive(Debug, Clone)]
pub struct Report {
    pub passed: bool,
    pub body: Value,
    /// Row data for CSV and text output.
    pub table: Option<Table>,
    /// Extra text appended after the summary.
    pub notes: String,
}

impl Report {
    fn summary(passed: bool, body: Value) -> Self {
        Self {
            passed,
            body,
            table: None,
            notes: String::new(),
        }
    }

    pub fn render(&self, format: OutputFormat, config: &Cli) -> Result<String, CliError> {
        Ok(match format {
            OutputFormat::Json => {
                let doc = json!({ "config": config, "passed": self.passed, "report": self.body });
                serde_json::to_string_pretty(&doc)? + "\n"
            }
            OutputFormat::Csv => match &self.table {
                Some(t) => t.to_csv()?,
                None => key_value_csv(&self.body)?,
            },
            OutputFormat::Text => {
                let mut out = match &self.table {
                    Some(t) => t.to_text(),
                    None => key_value_text(&self.body),
                };
                out += &self.notes;
                out
            }
        })
    }
}

fn load_process(input: Option<&Path>) -> Result<ProcessMatrix, CliError> {
    let text = match input {
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => OCB_FIXTURE_JSON.to_string(),
    };
    ProcessMatrix::from_json(&text).map_err(|e| CliError::Input(format!("process file: {e}")))
}

fn game_json(v: &GameValue) -> Value {
    json!({
        "p_success": v.p_success,
        "alice_guesses_b": v.alice_guesses_b,
        "bob_guesses_a": v.bob_guesses_a,
    })
}

/// Runs one subcommand.
pub fn run(config: &Cli) -> Result<Report, CliError> {
    match &config.command {
        Command::OcbDemo { input } => ocb_demo(input.as_deref()),
        Command::ClassicalBound { message_bits } => classical_bound(*message_bits),
        Command::ValidateProcess { input, samples, seed } => validate(input.as_deref(), *samples, *seed),
        Command::Rac { point, n_max } => rac(point.resolve()?, *n_max),
        Command::Sweep { resolution, n_max } => region_sweep(*resolution, *n_max),
        Command::Prop1 {
            point,
            resolution,
            samples,
            seed,
        } => prop1(point, *resolution, *samples, *seed),
        Command::Dpi { resolution } => {
            let r = strong_dpi_grid(*resolution)?;
            Ok(Report::summary(r.violations == 0, serde_json::to_value(r)?))
        }
        Command::OneCon { step } => {
            let p = find_onecon_supraquantum(*step)?;
            Ok(Report::summary(true, serde_json::to_value(p)?))
        }
        Command::Optimize {
            input,
            restarts,
            seed,
            include_reference,
        } => {
            let w = load_process(input.as_deref())?;
            let mut opts = OptimizeOptions::new(*restarts, *seed);
            opts.include_reference = *include_reference;
            let r = optimize_protocol_with(&w, opts)?;
            Ok(Report::summary(r.best_value <= 1.0, serde_json::to_value(r)?))
        }
        Command::Simulate { point, n, trials, seed } => simulate_report(point.resolve()?, *n, *trials, *seed),
    }
}

fn ocb_demo(input: Option<&Path>) -> Result<Report, CliError> {
    let v = match input {
        None => quantum_game_value(),
        Some(path) => {
            let w = load_process(Some(path))?;
            causal_lab::game::protocol_game_value(
                &w,
                |a| Ok(ocb_alice_instrument(a)),
                |b, bp| Ok(ocb_bob_instrument(b, bp)),
            )?
        }
    };
    let error = (v.p_success - QUANTUM_VALUE).abs();
    let balanced = (v.alice_guesses_b - v.bob_guesses_a).abs();
    let mut body = game_json(&v);
    body["quantum_value"] = json!(QUANTUM_VALUE);
    body["abs_error"] = json!(error);
    body["classical_bound"] = json!(0.75);
    Ok(Report::summary(error <= 1e-9 && balanced <= 1e-9, body))
}

fn classical_bound(message_bits: u8) -> Result<Report, CliError> {
    let bound = classical_max(message_bits)?;
    let mut body = json!({
        "message_bits": message_bits,
        "value": bound.value,
        "strategies": bound.strategies,
    });
    if message_bits == 1 {
        let (value, count) = classical_max_exhaustive(1)?;
        body["exhaustive_value"] = json!(value);
        body["exhaustive_strategies"] = json!(count);
    }
    body["argmax"] = json!({
        "order": bound.argmax.order.to_string(),
        "sender_output": bound.argmax.sender_output,
        "message": bound.argmax.message,
        "receiver_output": bound.argmax.receiver_output,
    });
    let mut report = Report::summary(bound.value <= 0.75, body);
    report.notes = format!("\n{}", bound.argmax);
    Ok(report)
}

fn validate(input: Option<&Path>, samples: usize, seed: u64) -> Result<Report, CliError> {
    let w = load_process(input)?;
    let r = validate_process(&w, samples, seed)?;
    let spectrum = if r.hermitian {
        Some(hermitian_eigenvalues(w.op())?)
    } else {
        None
    };
    let mut body = serde_json::to_value(&r)?;
    body["dims"] = json!(w.dims().as_array());
    body["spectrum"] = json!(spectrum);
    Ok(Report::summary(r.verdict, body))
}

fn rac(params: CorrelationParams, n_max: u32) -> Result<Report, CliError> {
    if n_max == 0 {
        return Err(CliError::Input("--n-max must be at least 1".into()));
    }
    let mut table = Table::new(vec!["n", "p_n", "i_n", "lower", "upper", "causal_ok"]);
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let p_n = rac_value(params, n)?;
        let e = efficiency(params, n)?;
        table.push(vec![
            n.to_string(),
            cell_f(p_n),
            cell_f(e.i_n),
            cell_f(e.lower),
            cell_f(e.upper),
            e.causal_ok.to_string(),
        ]);
        rows.push(json!({
            "n": n, "p_n": p_n, "i_n": e.i_n, "lower": e.lower, "upper": e.upper, "causal_ok": e.causal_ok,
        }));
    }
    let body = json!({ "e1": params.e1, "e2": params.e2, "rows": rows });
    Ok(Report {
        passed: true,
        body,
        table: Some(table),
        notes: String::new(),
    })
}

fn region_sweep(resolution: usize, n_max: u32) -> Result<Report, CliError> {
    let points = sweep(resolution, n_max)?;
    let mut table = Table::new(vec![
        "e1",
        "e2",
        "abs_sum",
        "sq_sum",
        "class",
        "one_con",
        "first_violating_n",
    ]);
    for p in &points {
        table.push(vec![
            cell_f(p.e1),
            cell_f(p.e2),
            cell_f(p.abs_sum),
            cell_f(p.sq_sum),
            p.class.to_string(),
            p.one_con.to_string(),
            cell_opt(p.first_violating_n),
        ]);
    }
    Ok(Report {
        passed: true,
        body: json!({ "resolution": resolution, "n_max": n_max, "points": points }),
        table: Some(table),
        notes: String::new(),
    })
}

fn prop1(point: &PointArgs, resolution: usize, samples: usize, seed: u64) -> Result<Report, CliError> {
    let mut table = Table::new(vec![
        "set",
        "e1",
        "e2",
        "condition_ii",
        "points_checked",
        "violation_e1",
        "violation_e2",
        "consistent",
    ]);
    let mut push = |set: &str, s: &Prop1Scan| {
        table.push(vec![
            set.to_string(),
            cell_f(s.run2.e1),
            cell_f(s.run2.e2),
            s.condition_ii.to_string(),
            s.points_checked.to_string(),
            cell_opt(s.violation.map(|v| cell_f(v.e1))),
            cell_opt(s.violation.map(|v| cell_f(v.e2))),
            s.consistent.to_string(),
        ]);
    };
    let (passed, body) = if point.given() {
        let scan = prop1_equivalence_scan(point.resolve()?, resolution)?;
        push("given", &scan);
        (scan.consistent, serde_json::to_value(scan)?)
    } else {
        if samples == 0 {
            return Err(CliError::Input("--samples must be at least 1".into()));
        }
        let r = prop1_sampled(samples, resolution, seed)?;
        r.inside.iter().for_each(|s| push("inside", s));
        r.outside.iter().for_each(|s| push("outside", s));
        (r.all_consistent(), serde_json::to_value(r)?)
    };
    Ok(Report {
        passed,
        body,
        table: Some(table),
        notes: String::new(),
    })
}

fn simulate_report(params: CorrelationParams, n: u32, trials: usize, seed: u64) -> Result<Report, CliError> {
    let batch = simulate(params, n, trials, seed)?;
    let p_emp = empirical_success(&batch);
    let p_exact = rac_value(params, n)?;
    let p_sigma = (p_exact * (1.0 - p_exact) / trials as f64).sqrt();
    let p_ok = (p_emp - p_exact).abs() <= 3.0 * p_sigma;

    let emp = empirical_efficiency(&batch)?;
    let mut table = Table::new(vec![
        "task",
        "bprime",
        "samples",
        "estimate",
        "bias",
        "sigma",
        "closed_form",
        "z",
    ]);
    let mut tasks = Vec::new();
    let mut all_ok = p_ok;
    for (i, m) in emp.per_task.iter().enumerate() {
        let i = i as u32;
        let exact = task_mi(params, n, i);
        let z = (m.estimate - m.bias - exact) / m.sigma();
        let ok = (m.estimate - m.bias - exact).abs() <= 3.0 * m.sigma();
        all_ok &= ok;
        let bprime = format!(
            "{:0width$b}",
            task_mask(i, n).reverse_bits() >> (32 - n),
            width = n as usize
        );
        table.push(vec![
            i.to_string(),
            bprime.clone(),
            m.samples.to_string(),
            cell_f(m.estimate),
            cell_f(m.bias),
            cell_f(m.sigma()),
            cell_f(exact),
            cell_f(z),
        ]);
        tasks.push(json!({
            "task": i, "bprime": bprime, "samples": m.samples, "estimate": m.estimate, "bias": m.bias,
            "sigma": m.sigma(), "closed_form": exact, "z": z, "within_3_sigma": ok,
        }));
    }
    let i_exact = efficiency(params, n)?.i_n;
    let body = json!({
        "e1": params.e1,
        "e2": params.e2,
        "n": n,
        "trials": trials,
        "seed": seed,
        "p_n": { "empirical": p_emp, "closed_form": p_exact, "sigma": p_sigma, "within_3_sigma": p_ok },
        "i_n": { "empirical": emp.i_n, "bias": emp.bias, "std_error": emp.std_error, "closed_form": i_exact },
        "tasks": tasks,
    });
    let notes = format!(
        "\np_n  empirical {}  closed form {}  sigma {}\ni_n  empirical {}  bias {}  closed form {}\n",
        cell_f(p_emp),
        cell_f(p_exact),
        cell_f(p_sigma),
        cell_f(emp.i_n),
        cell_f(emp.bias),
        cell_f(i_exact)
    );
    Ok(Report {
        passed: all_ok,
        body,
        table: Some(table),
        notes,
    })
}

/// Parses `args`, runs the command and writes its report. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(passed) if passed => EXIT_OK,
        Ok(_) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// Runs `cli` on a pool of the requested size and writes the rendered report.
pub fn execute(cli: &Cli) -> Result<bool, CliError> {
    let report = match cli.threads {
        Some(0) => return Err(CliError::Input("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run(cli))?,
        None => run(cli)?,
    };
    let text = report.render(cli.format, cli)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
        }
    }
    Ok(report.passed)
}

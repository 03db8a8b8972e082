use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use qlame::bethe::{solve_given_c, BetheRecord, SolverConfig};
use qlame::config::RunConfig;
use qlame::spectral::{collect_samples, fit_p, CWindow};
use qlame::verify::cmd_verify;
use qlame::{Complex64, Error};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qlame", version, about = "Verify and explore the elliptic q-Lamé operator and its spectral curve")]
#[command(after_help = "Thresholds can be overridden with --tol-<name> <value>, e.g. --tol-eigen 1e-9.")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// key=value configuration file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_re: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_im: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    tau_re: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    tau_im: Option<f64>,
    /// Comma-separated list of m values
    #[arg(long, global = true)]
    m: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Points per operator-equality sample set
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Multipliers per curve window
    #[arg(long, global = true)]
    curve_samples: Option<usize>,
    /// Output file (verify) or directory (curve)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every verification suite and emit a report
    Verify {
        /// Print the JSON report to stdout instead of one line per check
        #[arg(long)]
        json: bool,
    },
    /// Sample the spectral curve along a multiplier window and fit P
    Curve {
        #[arg(long, allow_hyphen_values = true, default_value_t = 4.0)]
        c_start_re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        c_start_im: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 4.0)]
        c_end_re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 11.0)]
        c_end_im: f64,
        /// Reach the window by continuation from this real multiplier
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.3)]
        approach: f64,
        /// Start the window with a fresh multistart solve instead
        #[arg(long)]
        no_approach: bool,
    },
    /// Solve the Bethe equations at one multiplier and print the solutions
    Bethe {
        #[arg(long, allow_hyphen_values = true)]
        c_re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        c_im: f64,
        /// Number of random Newton starts
        #[arg(long, default_value_t = 64)]
        starts: usize,
    },
}

type Overrides = Vec<(String, String)>;

/// Remove `--tol-<name> <v>` / `--tol-<name>=<v>` from argv.
fn split_tolerances(args: Vec<String>) -> Result<(Vec<String>, Overrides), String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut tols = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.strip_prefix("--tol-") {
            Some(flag) => {
                let (name, value) = match flag.split_once('=') {
                    Some((n, v)) => (n.to_string(), v.to_string()),
                    None => {
                        let v = it.next().ok_or_else(|| format!("--tol-{flag} needs a value"))?;
                        (flag.to_string(), v)
                    }
                };
                tols.push((name, value));
            }
            None => rest.push(a),
        }
    }
    Ok((rest, tols))
}

fn build_config(c: &Common, tols: &[(String, String)]) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &c.config {
        cfg.apply_file(p).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", p.display())),
            other => other,
        })?;
    }
    if let Some(v) = c.gamma_re {
        cfg.gamma.re = v;
    }
    if let Some(v) = c.gamma_im {
        cfg.gamma.im = v;
    }
    if let Some(v) = c.tau_re {
        cfg.tau.re = v;
    }
    if let Some(v) = c.tau_im {
        cfg.tau.im = v;
    }
    if let Some(v) = &c.m {
        cfg.set("m", v)?;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.samples {
        cfg.sample_count = v;
    }
    if let Some(v) = c.curve_samples {
        cfg.curve_samples = v;
    }
    if let Some(v) = &c.out {
        cfg.output_path = Some(v.clone());
    }
    for (name, value) in tols {
        cfg.set(&format!("tol-{name}"), value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_for(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn report_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if let Error::ContinuationStall { last_good: Some(p), .. } = e {
        if let Ok(s) = serde_json::to_string(p.as_ref()) {
            eprintln!("last good point: {s}");
        }
    }
    ExitCode::from(exit_for(e))
}

fn run_verify(cfg: &RunConfig, json: bool) -> Result<ExitCode, Error> {
    let report = cmd_verify(cfg)?;
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(p) = &cfg.output_path {
        fs::write(p, format!("{text}\n"))?;
    }
    let mut out = std::io::stdout().lock();
    if json {
        writeln!(out, "{text}")?;
    } else {
        for e in &report.entries {
            writeln!(out, "{}", e.line())?;
        }
        writeln!(
            out,
            "{} checks, {} passed, {} failed: {}",
            report.summary.total,
            report.summary.passed,
            report.summary.failed,
            if report.overall_pass { "PASS" } else { "FAIL" }
        )?;
    }
    Ok(if report.overall_pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAIL) })
}

fn write_curve(dir: &Path, m: u32, cfg: &RunConfig, window: &CWindow) -> Result<(), Error> {
    let md = Arc::new(cfg.modular()?);
    let solver = SolverConfig { seed: cfg.seed, ..SolverConfig::default() };
    let samples = collect_samples(m, &md, cfg.curve_samples, window, &solver)?;
    let fit = fit_p(&samples, m)?;

    let mut csv = String::from("re_x,im_x,re_y,im_y,partner\n");
    for s in &samples {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            s.x.re, s.x.im, s.y.re, s.y.im, s.partner as u8
        ));
    }
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("curve_m{m}.csv"));
    let fit_path = dir.join(format!("curve_m{m}_fit.json"));
    fs::write(&csv_path, csv)?;
    fs::write(&fit_path, serde_json::to_string_pretty(&fit.to_record(&md))? + "\n")?;

    println!("m={m}: {} samples -> {}", samples.len(), csv_path.display());
    println!(
        "m={m}: fit residual {:.2e}, validation residual {:.2e}, condition {:.2e} -> {}",
        fit.fit_residual,
        fit.validation_residual,
        fit.cond_estimate,
        fit_path.display()
    );
    for (k, p) in fit.coeffs.iter().enumerate() {
        println!("  p_{k} = {:.12e} {:+.12e}i", p.re, p.im);
    }
    Ok(())
}

fn run_bethe(cfg: &RunConfig, c: Complex64, starts: usize) -> Result<ExitCode, Error> {
    let md = cfg.modular()?;
    let solver = SolverConfig { seed: cfg.seed, starts, ..SolverConfig::default() };
    let mut records: Vec<BetheRecord> = Vec::new();
    for &m in &cfg.m_list {
        records.extend(solve_given_c(c, m, &md, &solver)?.iter().map(|p| p.to_record(&md)));
    }
    println!("{}", serde_json::to_string_pretty(&records)?);
    if records.is_empty() {
        eprintln!("no convergent solution at c = {c}");
        return Ok(ExitCode::from(EXIT_NUMERICAL));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let (args, tols) = match split_tolerances(std::env::args().collect()) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match build_config(&cli.common, &tols) {
        Ok(c) => c,
        Err(e) => return report_error(&e),
    };
    let result = match cli.command {
        Command::Verify { json } => run_verify(&cfg, json),
        Command::Curve { c_start_re, c_start_im, c_end_re, c_end_im, approach, no_approach } => {
            let mut window = CWindow::new(Complex64::new(c_start_re, c_start_im), Complex64::new(c_end_re, c_end_im));
            if !no_approach {
                window = window.approached_from(Complex64::new(approach, 0.0));
            }
            let dir = cfg.output_path.clone().unwrap_or_else(|| PathBuf::from("."));
            cfg.m_list
                .iter()
                .try_for_each(|&m| write_curve(&dir, m, &cfg, &window))
                .map(|_| ExitCode::SUCCESS)
        }
        Command::Bethe { c_re, c_im, starts } => run_bethe(&cfg, Complex64::new(c_re, c_im), starts),
    };
    result.unwrap_or_else(|e| report_error(&e))
}

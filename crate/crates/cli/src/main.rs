use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cv_entangler::certification::{
    certify, load_cm, monte_carlo_eigs, render_cm, render_report, CertificationReport, MeasuredCM,
    ReportFormat, MIN_DRAWS, REPORT_SCHEMA,
};
use cv_entangler::densecoding::{
    baseline_capacities, capacity_sweep, optimize_capacity, sweep_csv, SweepRow,
};
use cv_entangler::validation::{self, ValidationInputs};
use cv_entangler::{classify, init_thread_pool, ProtocolId};

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "cv-entangler",
    version,
    about = "Gaussian three-mode entanglers: PPT certification, protocol states and dense-coding capacity",
    after_help = "Exit codes: 0 ran, 1 validation failed, 2 usage or parse error.\n\
                  CV_ENTANGLER_THREADS caps worker threads (0 or unset = automatic)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Pre,
    Post,
}

#[derive(Subcommand)]
enum Command {
    /// PPT separability report for a measured covariance matrix.
    Certify {
        #[arg(long)]
        input: PathBuf,
        /// Monte Carlo draws for error propagation; 0 disables it. Skipped
        /// when the file has no SIGMA block.
        #[arg(long, default_value_t = 10_000)]
        mc_draws: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Theoretical state of a protocol, with its separability report.
    Simulate {
        #[arg(long, value_parser = parse_protocol)]
        protocol: ProtocolId,
        /// Squeezing parameter, > 0.
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        #[arg(long, value_enum, default_value = "post")]
        stage: Stage,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Optimized dense-coding capacity at one mean photon number, as JSON.
    Capacity {
        #[arg(long, value_parser = parse_protocol)]
        protocol: ProtocolId,
        #[arg(long, allow_negative_numbers = true)]
        nbar: f64,
    },
    /// Capacity over an evenly spaced photon-number grid, as CSV.
    Sweep {
        #[arg(long, value_parser = parse_protocol)]
        protocol: ProtocolId,
        #[arg(long, allow_negative_numbers = true)]
        nbar_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        nbar_max: f64,
        #[arg(long)]
        points: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the regression criteria and prints one line per criterion.
    Validate {
        /// Replacement for the bundled first measured matrix.
        #[arg(long)]
        gamma1: Option<PathBuf>,
        /// Replacement for the bundled second measured matrix.
        #[arg(long)]
        gamma2: Option<PathBuf>,
        /// Run only these criteria (repeatable).
        #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=9))]
        criteria: Vec<u8>,
    },
}

fn parse_protocol(s: &str) -> Result<ProtocolId, String> {
    s.parse::<u8>()
        .ok()
        .and_then(ProtocolId::from_number)
        .ok_or_else(|| format!("protocol must be 1, 2 or 3, got '{s}'"))
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

impl From<cv_entangler::Error> for Failure {
    fn from(e: cv_entangler::Error) -> Self {
        usage(e.to_string())
    }
}

fn load(path: &Path) -> Result<MeasuredCM, Failure> {
    load_cm(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| usage(format!("cannot write output: {e}")))
        }
    }
}

fn run_certify(input: &Path, mc_draws: usize, seed: u64, format: Format) -> Result<(), Failure> {
    let measured = load(input)?;
    if mc_draws != 0 && mc_draws < MIN_DRAWS {
        return Err(usage(format!(
            "--mc-draws must be 0 or at least {MIN_DRAWS}"
        )));
    }
    let report = if mc_draws == 0 {
        certify(&measured)?
    } else if measured.sigma.is_none() {
        let mut r = certify(&measured)?;
        r.warnings
            .push("no SIGMA block; Monte Carlo skipped".into());
        r
    } else if measured.cm.n_modes() != 3 {
        let mut r = certify(&measured)?;
        r.warnings
            .push("Monte Carlo needs a three-mode state; skipped".into());
        r
    } else {
        monte_carlo_eigs(&measured, mc_draws, seed)?
    };
    emit(&render_report(&report, format.into()), None)
}

fn run_simulate(protocol: ProtocolId, r: f64, stage: Stage, format: Format) -> Result<(), Failure> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(usage(format!("--r must be positive and finite, got {r}")));
    }
    let (cm, stage_name) = match stage {
        // protocol 1 is a two-mode state before the splitter
        Stage::Pre if protocol == ProtocolId::P1 => {
            (cv_entangler::protocols::protocol1_pre_bs(r)?, "pre")
        }
        Stage::Pre => (protocol.pre_bs(r)?, "pre"),
        Stage::Post => (protocol.state(r)?, "post"),
    };
    let label = format!("protocol {} r={r} {stage_name}", protocol.number());
    let separability = classify(&cm)?;
    let report = CertificationReport {
        schema: REPORT_SCHEMA.to_string(),
        label: label.clone(),
        warnings: separability.warnings.clone(),
        separability,
        uncertainty: None,
    };
    let text = match format {
        // a valid matrix file with the report as trailing comments
        Format::Text => {
            let mut out = render_cm(&MeasuredCM::new(cm, label));
            for line in render_report(&report, ReportFormat::Text).lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let m = cm.matrix();
            let rows: Vec<Vec<f64>> = m
                .row_iter()
                .map(|row| row.iter().copied().collect())
                .collect();
            let value = serde_json::json!({
                "protocol": protocol.number(),
                "r": r,
                "stage": stage_name,
                "cm": rows,
                "report": report,
            });
            let mut s = serde_json::to_string_pretty(&value).expect("serializable");
            s.push('\n');
            s
        }
        Format::Csv => render_report(&report, ReportFormat::Csv),
    };
    emit(&text, None)
}

fn check_nbar(name: &str, v: f64) -> Result<(), Failure> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!(
            "{name} must be nonnegative and finite, got {v}"
        )))
    }
}

fn run_capacity(protocol: ProtocolId, nbar: f64) -> Result<(), Failure> {
    check_nbar("--nbar", nbar)?;
    let row = SweepRow {
        nbar,
        result: optimize_capacity(protocol, nbar)?,
        baselines: baseline_capacities(nbar)?,
    };
    let mut s = serde_json::to_string_pretty(&row).expect("serializable");
    s.push('\n');
    emit(&s, None)
}

fn run_sweep(
    protocol: ProtocolId,
    lo: f64,
    hi: f64,
    points: usize,
    out: Option<&Path>,
) -> Result<(), Failure> {
    check_nbar("--nbar-min", lo)?;
    check_nbar("--nbar-max", hi)?;
    if hi <= lo {
        return Err(usage("--nbar-max must exceed --nbar-min"));
    }
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    if let Some(path) = out {
        let parent = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(usage(format!(
                "output directory {} does not exist",
                parent.display()
            )));
        }
    }
    let grid: Vec<f64> = (0..points)
        .map(|k| {
            if k + 1 == points {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (points - 1) as f64
            }
        })
        .collect();
    let rows = capacity_sweep(protocol, &grid)?;
    emit(&sweep_csv(&rows), out)
}

fn run_validate(
    gamma1: Option<&Path>,
    gamma2: Option<&Path>,
    criteria: &[u8],
) -> Result<(), Failure> {
    let mut inputs = ValidationInputs::default();
    if let Some(p) = gamma1 {
        inputs.gamma1 = load(p)?;
    }
    if let Some(p) = gamma2 {
        inputs.gamma2 = load(p)?;
    }
    let ids: Vec<u8> = if criteria.is_empty() {
        (1..=validation::N_CRITERIA).collect()
    } else {
        criteria.to_vec()
    };
    let mut outcomes = Vec::new();
    for id in ids {
        let outcome = validation::run_criterion(id, &inputs).expect("ids are range-checked");
        println!("{}", outcome.line());
        outcomes.push(outcome);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    if passed == outcomes.len() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_FAILED,
            message: String::new(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match &cli.command {
        Command::Certify {
            input,
            mc_draws,
            seed,
            format,
        } => run_certify(input, *mc_draws, *seed, *format),
        Command::Simulate {
            protocol,
            r,
            stage,
            format,
        } => run_simulate(*protocol, *r, *stage, *format),
        Command::Capacity { protocol, nbar } => run_capacity(*protocol, *nbar),
        Command::Sweep {
            protocol,
            nbar_min,
            nbar_max,
            points,
            out,
        } => run_sweep(*protocol, *nbar_min, *nbar_max, *points, out.as_deref()),
        Command::Validate {
            gamma1,
            gamma2,
            criteria,
        } => run_validate(gamma1.as_deref(), gamma2.as_deref(), criteria),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use symrh_cli::output::{emit_report, write_run};
use symrh_cli::{Command, ExperimentConfig, Overrides, Runner, EXIT_CONFIG, EXIT_ERROR, EXIT_FAILED, EXIT_OK};

#[derive(Parser)]
#[command(name = "symrh", version, about = "Symmetric power period polynomials and unit-circle zero certificates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Materialize symmetric power coefficient caches
    Coeffs(Common),
    /// Compute and cache critical L-values
    Lvalues(Common),
    /// Dump R, P/p, Q/q, H/h and M
    Polys(Common),
    /// Certify zeros of P on the circle and of Q in the disk
    VerifyRh(Common),
    /// Lemma bounds, comparison polynomials and Rouché margins
    VerifyLemmas(Common),
    /// Emit JSON, CSV and root scatter files from existing reports
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_name = "BITS")]
    precision: Option<u32>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    #[arg(long, value_name = "K")]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (cmd, common) = match cli.cmd {
        Cmd::Coeffs(c) => (Some(Command::Coeffs), c),
        Cmd::Lvalues(c) => (Some(Command::Lvalues), c),
        Cmd::Polys(c) => (Some(Command::Polys), c),
        Cmd::VerifyRh(c) => (Some(Command::VerifyRh), c),
        Cmd::VerifyLemmas(c) => (Some(Command::VerifyLemmas), c),
        Cmd::Report(c) => (None, c),
    };
    ExitCode::from(execute(cmd, &common) as u8)
}

fn execute(cmd: Option<Command>, c: &Common) -> i32 {
    let ov = Overrides { precision: c.precision, out: c.out.clone(), cache: c.cache.clone() };
    let cfg = match ExperimentConfig::load(&c.config, &ov) {
        Ok(cfg) => cfg,
        Err(e) => {
            error!("{e}");
            return EXIT_CONFIG;
        }
    };
    if c.jobs == Some(0) {
        error!("--jobs must be at least 1");
        return EXIT_CONFIG;
    }
    let Some(cmd) = cmd else {
        return match emit_report(&cfg) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                EXIT_OK
            }
            Err(e) => {
                error!("{e}");
                EXIT_ERROR
            }
        };
    };
    let jobs = c.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let (report, timings) = Runner::new(&cfg).run(cmd, jobs);
    if let Err(e) = write_run(&cfg.out_dir, &report, &timings) {
        error!("cannot write report: {e}");
        return EXIT_ERROR;
    }
    let s = &report.summary;
    println!("{}: {} ok, {} skipped, {} failed", cmd.name(), s.ok, s.skipped, s.failed);
    if report.any_failed() {
        EXIT_FAILED
    } else {
        EXIT_OK
    }
}

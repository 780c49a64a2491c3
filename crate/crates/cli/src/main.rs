use clap::{Parser, Subcommand};
use orthocube_cli::config::{self, Case, Overrides};
use orthocube_cli::report::{Artifacts, Check};
use orthocube_cli::{run, verify, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "orthocube", version, about = "Orthotropic diffusion in a cube: series, FD reference and GCI")]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides outputs.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_case)]
    case: Option<Case>,
    #[arg(long, global = true)]
    n_terms: Option<usize>,
    /// FD cells per L, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    grids: Option<Vec<usize>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Series moments, coefficients and fields.
    Solve,
    /// Reference finite-difference runs on every configured grid.
    Fd,
    /// GCI from three FD moment tables (default: the configured grids in the output directory).
    Gci { files: Vec<PathBuf> },
    /// Full consistency suite; exits 2 when a check fails.
    Verify,
    /// Equivalent-cube mapping report.
    Transform,
}

fn parse_case(s: &str) -> Result<Case, String> {
    Case::parse(s).ok_or_else(|| format!("unknown case {s:?} (delta, step, gaussian, plane)"))
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = config::load(cli.config.as_deref())?;
    cfg.apply(&Overrides { out: cli.out, case: cli.case, n_terms: cli.n_terms, grids: cli.grids });
    let r = cfg.resolve()?;
    let mut art = Artifacts::create(r.out_dir())?;
    let (name, checks): (&str, Vec<Check>) = match cli.command {
        Command::Solve => {
            run::solve(&r, &mut art)?;
            ("solve", Vec::new())
        }
        Command::Fd => {
            let runs = run::fd_all(&r, &mut art)?;
            let drift = runs.iter().flat_map(|x| x.mass_drift.iter().copied()).fold(0.0, f64::max);
            ("fd", vec![Check::at_most("fd_mass_drift", drift, 1e-12, "relative, all samples on all grids")])
        }
        Command::Gci { files } => {
            let files = if files.is_empty() {
                r.grids_fine_first().iter().map(|&n| r.out_dir().join(run::fd_file_name(r.case().name(), n))).collect()
            } else {
                files
            };
            let runs = files.iter().map(|p| run::read_fd_csv(p, &r)).collect::<Result<Vec<_>, _>>()?;
            let gcis = run::gci(&r, &runs, &mut art)?;
            let mu2 = gcis.iter().filter_map(|g| g.report.summary.mu2_max).fold(0.0, f64::max);
            ("gci", vec![Check::at_most("fd_mu2_max", mu2, 10.0, "percent")])
        }
        Command::Verify => ("verify", verify::verify(&r, &mut art)?),
        Command::Transform => {
            print!("{}", run::transform(&r, &mut art)?);
            ("transform", Vec::new())
        }
    };
    let report = art.finish(&r, name, checks)?;
    for c in &report.checks {
        eprintln!("[{}] {}: {:e} (limit {:e}) {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold, c.detail);
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

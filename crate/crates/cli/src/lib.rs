//! Front door for the workspace: twelve pipelines, one per artifact,
//! each reading a flat key/value config (file plus flags, flags win),
//! running exactly one computation, and writing a summary JSON next to
//! its CSV tables and region-mask files.
//!
//! Outputs are byte-deterministic for a fixed config and seed: rows are
//! produced in index order regardless of the rayon thread count, floats
//! are printed in shortest round-trip form, and JSON keys are sorted.
//! Errors leave a `{category, message}` object on stderr and a
//! category-specific exit code.

// Guards written as `!(x > 0.0)` are deliberate: unlike `x <= 0.0` they
// also catch NaN, which must fail validation rather than slip through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;
pub mod output;

use config::RunConfig;
use output::OutputWriter;

/// Error carrier for the whole binary: core errors keep their category,
/// everything the CLI itself can botch is usage or io.
#[derive(Debug)]
pub enum CliError {
    Core(umlab_core::Error),
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn category(&self) -> &str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code_for(self.category())
    }
}

impl From<umlab_core::Error> for CliError {
    fn from(e: umlab_core::Error) -> Self {
        CliError::Core(e)
    }
}

/// Stable category → exit code table; scripts can branch on either.
pub fn exit_code_for(category: &str) -> i32 {
    match category {
        "usage" => 2,
        "io" => 3,
        "parse" => 4,
        "validation" => 5,
        "capability" => 6,
        "resolution" => 7,
        "resource-limit" => 8,
        "infeasible-budget" => 9,
        "precision" => 10,
        "pole-proximity" => 11,
        "contour" => 12,
        "dominance" => 13,
        "undersampled" => 14,
        "geometry" => 15,
        "degree-limit" => 16,
        _ => 1,
    }
}

const USAGE: &str = "\
umlab <command> [--config FILE] [--out DIR] [--key value]...

Commands:
  zeta-eval       evaluate an L-function at one point with a certified bound
  lfun-check      axiom checks (series, Euler product, prime mean square,
                  growth) plus the functional-equation residual
  zeros-census    argument-principle zero count and the zero-free v(n)/n table
  rouche          Rouche certificate for a perturbed function on a rectangle
  scan            shift scan: sup-discrepancy density statistic on a disk
  scan-measure    shift scan with the measure-of-exceedance discrepancy
  sequence        shift sequence n = 1..n_max with composite 3/n verification
  self-approx     scan against the function's own restriction to a disk
  polyfree        zero-free polynomial approximation in measure
  dirichlet-build Dirichlet skeleton: truncation, disks, shells, budgets
  density         boundary density ratios of a marked set at shrinking radii
  harmonic-demo   fundamental-solution harmonic fit and mean-value probes

Every parameter is `--key value`; the same keys (dashes as underscores)
may sit in the --config file as `key = value` lines, with flags taking
precedence. `--out` names the output directory (default: current).
Each run writes summary.json, data.csv, and any region masks as
<name>.mask.txt. The RAYON_NUM_THREADS environment variable caps worker
threads; outputs do not depend on it.
";

/// Parse, dispatch, report. Returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    if args.is_empty() || args[0] == "--help" || args[0] == "help" || args[0] == "-h" {
        print!("{USAGE}");
        return if args.is_empty() { 2 } else { 0 };
    }
    match run_command(args) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            let payload = serde_json::json!({
                "category": e.category(),
                "message": e.message(),
            });
            eprintln!("{payload}");
            e.exit_code()
        }
    }
}

fn run_command(args: &[String]) -> Result<String, CliError> {
    let cfg = RunConfig::parse(args)?;
    let mut out = OutputWriter::new(cfg.out_dir())?;
    let (line, outputs) = match cfg.command() {
        "zeta-eval" => commands::lfun::zeta_eval(&cfg, &mut out)?,
        "lfun-check" => commands::lfun::lfun_check(&cfg, &mut out)?,
        "zeros-census" => commands::lfun::zeros_census(&cfg, &mut out)?,
        "rouche" => commands::lfun::rouche(&cfg, &mut out)?,
        "scan" => commands::scan::scan(&cfg, &mut out)?,
        "scan-measure" => commands::scan::scan_measure(&cfg, &mut out)?,
        "sequence" => commands::scan::sequence(&cfg, &mut out)?,
        "self-approx" => commands::scan::self_approx(&cfg, &mut out)?,
        "polyfree" => commands::plane::polyfree(&cfg, &mut out)?,
        "dirichlet-build" => commands::plane::dirichlet_build(&cfg, &mut out)?,
        "density" => commands::plane::density(&cfg, &mut out)?,
        "harmonic-demo" => commands::plane::harmonic_demo(&cfg, &mut out)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown command `{other}`; run `umlab --help` for the list"
            )))
        }
    };
    out.finish(cfg.command(), cfg.echoed_inputs(), outputs)?;
    Ok(line)
}

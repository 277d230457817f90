pub mod lfun;
pub mod plane;
pub mod scan;

use umlab_core::lfun::{parse_spec_text, DirichletSeriesSpec};

use crate::config::RunConfig;
use crate::CliError;

/// `--spec zeta|chi4|<path>`: the two built-in series or a spec file in
/// the series text format.
pub fn series_spec(cfg: &RunConfig) -> Result<DirichletSeriesSpec, CliError> {
    match cfg.str_or("spec", "zeta").as_str() {
        "zeta" => Ok(DirichletSeriesSpec::zeta()),
        "chi4" => Ok(DirichletSeriesSpec::dirichlet_chi4()),
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read spec file {path}: {e}")))?;
            parse_spec_text(&text).map_err(CliError::Core)
        }
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x}")
}

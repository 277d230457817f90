//! File outputs: CSV tables, region masks in the grid text format, and
//! the closing summary.json. Everything is written with plain `{}`
//! float formatting (shortest round-trip) and sorted JSON keys, which is
//! what makes reruns byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;
use umlab_core::grid::{mask_to_text, RegionMask};

use crate::CliError;

pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<OutputWriter, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len(), "ragged CSV row in {name}");
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, &text)
    }

    pub fn mask(&mut self, name: &str, mask: &RegionMask) -> Result<(), CliError> {
        self.write(name, &mask_to_text(mask))
    }

    /// Close the run: summary.json carries the echoed inputs, the
    /// pipeline outputs, the files written, and the crate versions.
    pub fn finish(
        self,
        command: &str,
        inputs: BTreeMap<String, String>,
        outputs: Value,
    ) -> Result<(), CliError> {
        let summary = serde_json::json!({
            "command": command,
            "inputs": inputs,
            "outputs": outputs,
            "files": self.files,
            "versions": {
                "umlab-cli": env!("CARGO_PKG_VERSION"),
                "umlab-core": umlab_core::VERSION,
            },
        });
        let path = self.dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(&summary)
            .map_err(|e| CliError::Io(format!("summary serialization failed: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

/// Reader half of the CSV contract: header plus rectangular rows.
/// Values never contain commas or quotes, so splitting is exact.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Io("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(CliError::Io(format!(
                "CSV row {} has {} fields, header has {}",
                i + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

//! Run configuration: a flat key/value map assembled from an optional
//! config file and `--key value` flags, flags winning. Keys are
//! dash/underscore-insensitive (`--t-max` and `t_max =` name the same
//! parameter). Every lookup records the resolved value — including
//! applied defaults — so the summary can echo exactly what the run used,
//! and unrecognized keys are rejected before any heavy work.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use umlab_core::grid::Rect;
use umlab_core::lfun::parse_complex;
use umlab_core::Complex64;

use crate::CliError;

pub struct RunConfig {
    command: String,
    out_dir: PathBuf,
    values: BTreeMap<String, String>,
    echo: RefCell<BTreeMap<String, String>>,
    unread: RefCell<BTreeSet<String>>,
}

fn norm_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl RunConfig {
    /// `args` starts at the subcommand. `--config` and `--out` are
    /// reserved; everything else lands in the parameter map.
    pub fn parse(args: &[String]) -> Result<RunConfig, CliError> {
        let command = args[0].clone();
        if command.starts_with('-') {
            return Err(CliError::Usage(format!(
                "expected a command before flags, got `{command}`"
            )));
        }
        let mut file: Option<PathBuf> = None;
        let mut out_dir = PathBuf::from(".");
        let mut flags = BTreeMap::new();
        let mut i = 1;
        while i < args.len() {
            let key = args[i]
                .strip_prefix("--")
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "expected `--key value` pairs after the command, got `{}`",
                        args[i]
                    ))
                })?
                .to_string();
            let value = args
                .get(i + 1)
                .ok_or_else(|| CliError::Usage(format!("flag `--{key}` is missing its value")))?;
            match key.as_str() {
                "config" => file = Some(PathBuf::from(value)),
                "out" => out_dir = PathBuf::from(value),
                _ => {
                    flags.insert(norm_key(&key), value.clone());
                }
            }
            i += 2;
        }

        let mut values = BTreeMap::new();
        if let Some(path) = file {
            for (k, v) in read_config_file(&path)? {
                values.insert(k, v);
            }
        }
        values.extend(flags); // flags override file entries

        let unread = values.keys().cloned().collect();
        Ok(RunConfig {
            command,
            out_dir,
            values,
            echo: RefCell::new(BTreeMap::new()),
            unread: RefCell::new(unread),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Every parameter the run resolved, defaults included, as strings.
    pub fn echoed_inputs(&self) -> BTreeMap<String, String> {
        self.echo.borrow().clone()
    }

    fn raw(&self, key: &str) -> Option<String> {
        let k = norm_key(key);
        self.unread.borrow_mut().remove(&k);
        self.values.get(&k).cloned()
    }

    fn record(&self, key: &str, value: String) {
        self.echo.borrow_mut().insert(norm_key(key), value);
    }

    /// Call after reading all parameters: leftover keys are typos.
    pub fn finish(&self) -> Result<(), CliError> {
        let unread = self.unread.borrow();
        if !unread.is_empty() {
            return Err(CliError::Usage(format!(
                "unknown parameter{} for `{}`: {}",
                if unread.len() > 1 { "s" } else { "" },
                self.command,
                unread.iter().cloned().collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(())
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        let v = self.raw(key).unwrap_or_else(|| default.to_string());
        self.record(key, v.clone());
        v
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = match self.raw(key) {
            Some(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(key, &s, "a number"))?,
            None => default,
        };
        self.record(key, format!("{v}"));
        Ok(v)
    }

    pub fn u32_or(&self, key: &str, default: u32) -> Result<u32, CliError> {
        let v = match self.raw(key) {
            Some(s) => s
                .trim()
                .parse::<u32>()
                .map_err(|_| bad(key, &s, "a nonnegative integer"))?,
            None => default,
        };
        self.record(key, format!("{v}"));
        Ok(v)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        let v = match self.raw(key) {
            Some(s) => s
                .trim()
                .parse::<u64>()
                .map_err(|_| bad(key, &s, "a nonnegative integer"))?,
            None => default,
        };
        self.record(key, format!("{v}"));
        Ok(v)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = match self.raw(key) {
            Some(s) => s
                .trim()
                .parse::<usize>()
                .map_err(|_| bad(key, &s, "a nonnegative integer"))?,
            None => default,
        };
        self.record(key, format!("{v}"));
        Ok(v)
    }

    pub fn complex_or(&self, key: &str, default: Complex64) -> Result<Complex64, CliError> {
        let v = match self.raw(key) {
            Some(s) => parse_complex(&s).map_err(CliError::Core)?,
            None => default,
        };
        self.record(key, format_complex(v));
        Ok(v)
    }

    /// Comma-separated floats.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let v = match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(key, part, "a comma-separated float list"))
                })
                .collect::<Result<Vec<f64>, CliError>>()?,
            None => default.to_vec(),
        };
        self.record(
            key,
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        Ok(v)
    }

    /// `x0,y0,x1,y1` rectangle.
    pub fn rect_or(&self, key: &str, default: [f64; 4]) -> Result<Rect, CliError> {
        let parts = self.f64_list_or(key, &default)?;
        if parts.len() != 4 {
            return Err(bad(key, &format!("{parts:?}"), "x0,y0,x1,y1"));
        }
        Rect::new(parts[0], parts[1], parts[2], parts[3]).map_err(CliError::Core)
    }

    /// `x,y` point.
    pub fn point_or(&self, key: &str, default: (f64, f64)) -> Result<Complex64, CliError> {
        let parts = self.f64_list_or(key, &[default.0, default.1])?;
        if parts.len() != 2 {
            return Err(bad(key, &format!("{parts:?}"), "x,y"));
        }
        Ok(Complex64::new(parts[0], parts[1]))
    }
}

fn bad(key: &str, got: &str, wanted: &str) -> CliError {
    CliError::Usage(format!("parameter `{key}`: expected {wanted}, got `{got}`"))
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected `key = value`, got `{line}`",
                path.display(),
                lineno + 1
            ))
        })?;
        pairs.push((norm_key(k), v.trim().to_string()));
    }
    Ok(pairs)
}

//! Plain-text config files: global key = value lines plus per-command sections.

use std::path::{Path, PathBuf};

use crate::{CliError, CommonArgs, Format, PurifyPath};

/// Keys every command understands, mirroring the shared flags.
const COMMON_KEYS: &[&str] = &[
    "r",
    "delta-sq",
    "transmittance",
    "eta",
    "target-vy",
    "dim",
    "max-iters",
    "conv-tol",
    "format",
    "out",
    "workers",
    "seed",
];

/// Command-specific keys allowed inside the matching section.
const COMMAND_EXTRAS: &[(&str, &[&str])] = &[
    ("distill", &["gaussify"]),
    ("optimize-sweep", &["targets", "target-start", "target-stop", "target-count"]),
    ("gaussify", &[]),
    ("purify", &["alpha", "t0", "vx", "vy", "path"]),
    ("two-mode", &[]),
    ("breed", &["x"]),
];

/// Values for one command: its section overrides the global keys.
pub struct FileValues {
    globals: toml::Table,
    section: toml::Table,
    path: String,
}

/// Canonical key spelling: underscores and hyphens are interchangeable.
fn normalize(key: &str) -> String {
    key.replace('_', "-")
}

/// Reads and validates the config file, keeping the section for `command`.
pub fn load(path: &Path, command: &str) -> Result<FileValues, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    let table: toml::Table = text.parse().map_err(|e| {
        CliError::Config(format!("cannot parse config {}: {e}", path.display()))
    })?;

    let mut globals = toml::Table::new();
    let mut section = toml::Table::new();
    for (raw_key, value) in table {
        let key = normalize(&raw_key);
        if let toml::Value::Table(entries) = value {
            let extras = COMMAND_EXTRAS
                .iter()
                .find(|(name, _)| *name == key)
                .map(|(_, keys)| *keys)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown section [{raw_key}] in {}",
                        path.display()
                    ))
                })?;
            for (raw_inner, inner_value) in entries {
                let inner = normalize(&raw_inner);
                if !COMMON_KEYS.contains(&inner.as_str()) && !extras.contains(&inner.as_str()) {
                    return Err(CliError::Config(format!(
                        "unknown key {raw_inner:?} in section [{raw_key}] of {}",
                        path.display()
                    )));
                }
                if key == command {
                    section.insert(inner, inner_value);
                }
            }
        } else {
            if !COMMON_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown key {raw_key:?} in {}",
                    path.display()
                )));
            }
            globals.insert(key, value);
        }
    }
    Ok(FileValues { globals, section, path: path.display().to_string() })
}

impl FileValues {
    fn get(&self, key: &str) -> Option<&toml::Value> {
        self.section.get(key).or_else(|| self.globals.get(key))
    }

    fn wrong_type(&self, key: &str, wanted: &str) -> CliError {
        CliError::Config(format!("key {key:?} in {} must be {wanted}", self.path))
    }

    /// Floating-point value, accepting integer literals.
    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(n)) => Ok(Some(*n as f64)),
            Some(_) => Err(self.wrong_type(key, "a number")),
        }
    }

    /// Non-negative integer value.
    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(n)) if *n >= 0 => Ok(Some(*n as usize)),
            Some(_) => Err(self.wrong_type(key, "a non-negative integer")),
        }
    }

    /// Unsigned 64-bit value.
    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(n)) if *n >= 0 => Ok(Some(*n as u64)),
            Some(_) => Err(self.wrong_type(key, "a non-negative integer")),
        }
    }

    /// Boolean value.
    pub fn flag(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(self.wrong_type(key, "true or false")),
        }
    }

    /// String value.
    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.wrong_type(key, "a string")),
        }
    }

    /// Offset value: a number or the literal "opt".
    pub fn delta_sq(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(x.to_string())),
            Some(toml::Value::Integer(n)) => Ok(Some(n.to_string())),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.wrong_type(key, "a number or \"opt\"")),
        }
    }

    /// Array of numbers.
    pub fn f64_array(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        toml::Value::Float(x) => out.push(*x),
                        toml::Value::Integer(n) => out.push(*n as f64),
                        _ => return Err(self.wrong_type(key, "an array of numbers")),
                    }
                }
                Ok(Some(out))
            }
            Some(_) => Err(self.wrong_type(key, "an array of numbers")),
        }
    }

    /// Output format name.
    pub fn format(&self, key: &str) -> Result<Option<Format>, CliError> {
        match self.string(key)?.as_deref() {
            None => Ok(None),
            Some("csv") => Ok(Some(Format::Csv)),
            Some("json") => Ok(Some(Format::Json)),
            Some(other) => {
                Err(CliError::Config(format!("format must be csv or json, got {other:?}")))
            }
        }
    }

    /// Purification path name.
    pub fn purify_path(&self, key: &str) -> Result<Option<PurifyPath>, CliError> {
        match self.string(key)?.as_deref() {
            None => Ok(None),
            Some("filter") => Ok(Some(PurifyPath::Filter)),
            Some("subtract") => Ok(Some(PurifyPath::Subtract)),
            Some(other) => {
                Err(CliError::Config(format!("path must be filter or subtract, got {other:?}")))
            }
        }
    }
}

/// Fills every shared flag the command line left unset from the file.
pub fn apply_common(args: &mut CommonArgs, file: &FileValues) -> Result<(), CliError> {
    if args.r.is_none() {
        args.r = file.f64("r")?;
    }
    if args.delta_sq.is_none() {
        args.delta_sq = file.delta_sq("delta-sq")?;
    }
    if args.transmittance.is_none() {
        args.transmittance = file.f64("transmittance")?;
    }
    if args.eta.is_none() {
        args.eta = file.f64("eta")?;
    }
    if args.target_vy.is_none() {
        args.target_vy = file.f64("target-vy")?;
    }
    if args.dim.is_none() {
        args.dim = file.usize("dim")?;
    }
    if args.max_iters.is_none() {
        args.max_iters = file.usize("max-iters")?;
    }
    if args.conv_tol.is_none() {
        args.conv_tol = file.f64("conv-tol")?;
    }
    if args.format.is_none() {
        args.format = file.format("format")?;
    }
    if args.out.is_none() {
        args.out = file.string("out")?.map(PathBuf::from);
    }
    if args.workers.is_none() {
        args.workers = file.usize("workers")?;
    }
    if args.seed.is_none() {
        args.seed = file.u64("seed")?;
    }
    Ok(())
}

//! Output directory handling: diagnostics log and SHA-256 manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::{Level, LevelFilter, Log, Metadata, Record};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.sha256";
pub const DIAGNOSTICS: &str = "diagnostics.log";

/// Echoes warnings and info to stderr and keeps them for `diagnostics.log`.
struct DiagnosticsLogger {
    lines: Mutex<Vec<String>>,
}

static LOGGER: DiagnosticsLogger = DiagnosticsLogger {
    lines: Mutex::new(Vec::new()),
};

impl Log for DiagnosticsLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= Level::Info
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = format!("{}: {}", record.level().as_str().to_lowercase(), record.args());
        eprintln!("{line}");
        self.lines.lock().expect("logger poisoned").push(line);
    }

    fn flush(&self) {}
}

pub fn install_logger() {
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(LevelFilter::Info);
    }
}

/// Adds a line to `diagnostics.log` without echoing it.
pub fn record(line: String) {
    LOGGER.lines.lock().expect("logger poisoned").push(line);
}

fn take_diagnostics() -> Vec<String> {
    std::mem::take(&mut *LOGGER.lines.lock().expect("logger poisoned"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.path(name), bytes)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", self.path(name).display())))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    /// Writes `diagnostics.log` and the manifest covering every file written.
    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        let mut diag = take_diagnostics().join("\n");
        if !diag.is_empty() {
            diag.push('\n');
        }
        self.write(DIAGNOSTICS, diag.as_bytes())?;
        let mut manifest = String::new();
        for name in &self.written {
            let bytes = fs::read(self.path(name))?;
            let _ = writeln!(manifest, "{}  {name}", sha256_hex(&bytes));
        }
        fs::write(self.path(MANIFEST), manifest)?;
        Ok(self.root)
    }
}

/// Re-reads a manifest and checks every listed file; returns the number checked.
pub fn verify(root: &Path) -> Result<usize, CliError> {
    let text = fs::read_to_string(root.join(MANIFEST))
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", root.join(MANIFEST).display())))?;
    let mut n = 0;
    for (i, line) in text.lines().enumerate() {
        let (hash, name) = line
            .split_once("  ")
            .ok_or_else(|| CliError::Config(format!("{MANIFEST} line {}: expected `<sha256>  <file>`", i + 1)))?;
        let bytes = fs::read(root.join(name))
            .map_err(|e| CliError::Config(format!("{MANIFEST} lists {name}: {e}")))?;
        if sha256_hex(&bytes) != hash {
            return Err(CliError::Config(format!("checksum mismatch for {name}")));
        }
        n += 1;
    }
    Ok(n)
}

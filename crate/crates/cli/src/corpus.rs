//! On-disk activity corpora.
//!
//! A corpus directory holds `<name>.csv` series, optional `<name>.truth.json`
//! or `<name>.spikes.json` spike lists, and the `manifest.json` of the run
//! that wrote it.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use hrspike::{HeartRateSeries, Spike};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::CliError;

pub const TRUTH_SUFFIX: &str = ".truth.json";
pub const SPIKES_SUFFIX: &str = ".spikes.json";
pub const MANIFEST: &str = "manifest.json";

/// Series files of a directory, sorted by name.
pub fn series_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.with_context(|| dir.display().to_string())?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "csv") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn read_series(path: &Path) -> anyhow::Result<HeartRateSeries> {
    let file = File::open(path).with_context(|| path.display().to_string())?;
    HeartRateSeries::read_csv(BufReader::new(file)).with_context(|| path.display().to_string())
}

pub fn write_series(path: &Path, series: &HeartRateSeries) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| path.display().to_string())?);
    series.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_spikes(path: &Path) -> Result<Vec<Spike>, CliError> {
    let file = File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| path.display().to_string())?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// The spike list stored beside `series` in `dir`: detections first, then
/// ground truth.
pub fn spike_file(dir: &Path, name: &str) -> Option<PathBuf> {
    [SPIKES_SUFFIX, TRUTH_SUFFIX]
        .iter()
        .map(|suffix| dir.join(format!("{name}{suffix}")))
        .find(|p| p.is_file())
}

pub fn read_manifest(dir: &Path) -> Option<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST)).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))
}

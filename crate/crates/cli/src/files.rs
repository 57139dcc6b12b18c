//! Profile CSV, fit JSON and run manifest files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hawkes_core::{FitRecord, FitResult, HawkesParams, IntradayProfile, KernelSpec, Theta};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Runs `write` against a fresh file and flushes it.
pub fn write_with(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut out = create(path)?;
    write(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_with(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::other)?;
        writeln!(out)
    })
}

pub fn write_profile(path: &Path, profile: &IntradayProfile) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "#bin_width={}", profile.bin_width())?;
        writeln!(out, "#period={}", profile.period())?;
        writeln!(out, "bin_start,rate,weight")?;
        for (i, (r, w)) in profile.rates().iter().zip(profile.weights()).enumerate() {
            writeln!(out, "{},{r},{w}", i as f64 * profile.bin_width())?;
        }
        Ok(())
    })
}

pub fn read_profile(path: &Path) -> Result<IntradayProfile> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let name = path.display().to_string();
    let err = |line: usize, message: String| CliError::Parse {
        path: name.clone(),
        line,
        message,
    };
    let (mut bin_width, mut period, mut rates) = (None, None, Vec::new());
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let no = i + 1;
        let line = line.map_err(|e| CliError::io(path, e))?;
        let line = line.trim();
        if let Some(header) = line.strip_prefix('#') {
            if let Some((k, v)) = header.split_once('=') {
                let v: f64 = v.trim().parse().map_err(|_| err(no, format!("invalid number '{v}'")))?;
                match k.trim() {
                    "bin_width" => bin_width = Some(v),
                    "period" => period = Some(v),
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() || line.starts_with("bin_start") {
            continue;
        }
        let rate = line
            .split(',')
            .nth(1)
            .and_then(|r| r.trim().parse::<f64>().ok())
            .ok_or_else(|| err(no, format!("expected bin_start,rate[,weight], got '{line}'")))?;
        rates.push(rate);
    }
    let (Some(bin_width), Some(period)) = (bin_width, period) else {
        return Err(err(0, "missing #bin_width or #period header".into()));
    };
    Ok(IntradayProfile::from_rates(bin_width, period, rates)?)
}

/// Stored fit: the flat record plus what is needed to rebuild the kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitFile {
    pub theta: Theta,
    pub record: FitRecord,
    pub spacing: f64,
    pub terms: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub restart_logliks: Vec<f64>,
}

impl FitFile {
    pub fn new(fit: &FitResult) -> Self {
        Self {
            theta: fit.theta,
            record: fit.record(),
            spacing: fit.spacing,
            terms: fit.terms,
            iterations: fit.iterations,
            evaluations: fit.evaluations,
            restart_logliks: fit.restarts.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn params(&self) -> Result<HawkesParams> {
        let kernel = match self.theta {
            Theta::PowerLaw { n, epsilon, tau0, .. } => {
                KernelSpec::approx_power_law(n, epsilon, tau0, self.spacing, self.terms)?
            }
            Theta::Exponential { alpha, beta, .. } => KernelSpec::exponential(alpha, beta)?,
        };
        Ok(HawkesParams::new(self.theta.mu(), kernel)?)
    }
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub outputs: Vec<PathBuf>,
    pub summary: serde_json::Value,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
}

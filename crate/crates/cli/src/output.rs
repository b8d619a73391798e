//! Deterministic result serialization: CSV data, JSON manifest + summary,
//! optional gnuplot script. Numbers print in shortest round-trip decimal
//! form with a '.' separator, so identical runs produce identical bytes.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Nats,
    Bits,
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }

    /// Converts a rate-valued quantity for serialization. Dimensionless
    /// quantities (weights, residual ratios, probabilities) are written
    /// unconverted.
    pub fn rate(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

/// Shortest round-trip decimal representation, locale-independent.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub spec_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub unit: String,
}

impl Manifest {
    pub fn new(command: &str, spec_hash: &str, seed: u64, unit: Unit) -> Self {
        Self {
            command: command.to_string(),
            spec_hash: spec_hash.to_string(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            unit: unit.name().to_string(),
        }
    }
}

pub struct OutputFiles {
    prefix: PathBuf,
}

impl OutputFiles {
    pub fn new(prefix: &str) -> Self {
        Self {
            prefix: PathBuf::from(prefix),
        }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.prefix.with_extension("csv")
    }

    pub fn write_csv(&self, header: &str, rows: &[String]) -> std::io::Result<PathBuf> {
        let path = self.csv_path();
        let mut f = std::fs::File::create(&path)?;
        writeln!(f, "{header}")?;
        for row in rows {
            writeln!(f, "{row}")?;
        }
        Ok(path)
    }

    pub fn write_json(&self, manifest: &Manifest, summary: serde_json::Value) -> std::io::Result<PathBuf> {
        let path = self.prefix.with_extension("json");
        let doc = serde_json::json!({
            "manifest": manifest,
            "summary": summary,
        });
        std::fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
        Ok(path)
    }

    /// Plain-text gnuplot script referencing the CSV.
    pub fn write_plot(&self, xlabel: &str, ylabel: &str, using: &str, title: &str) -> std::io::Result<PathBuf> {
        let path = self.prefix.with_extension("gnuplot");
        let csv = self.csv_path();
        let script = format!(
            "set datafile separator ','\n\
             set key autotitle columnhead\n\
             set xlabel '{xlabel}'\n\
             set ylabel '{ylabel}'\n\
             set grid\n\
             plot '{}' using {using} with linespoints title '{title}'\n",
            csv.display()
        );
        std::fs::write(&path, script)?;
        Ok(path)
    }
}

//! Configuration-driven runner for the VPEM phase-estimation simulations.

// negated comparisons double as NaN rejection
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod figures;
pub mod output;
pub mod pipeline;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::ScenarioConfig;
pub use error::{Failure, Result};

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cutoff: Option<usize>,
    pub shots: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ScenarioConfig) -> Result<()> {
        if let Some(s) = self.seed {
            config.seeds = vec![s];
        }
        if let Some(c) = self.cutoff {
            config.cutoff = Some(c);
        }
        if let Some(n) = self.shots {
            config.shots = n;
        }
        config.validate()
    }
}

pub fn load(path: &Path, overrides: Overrides) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut config = ScenarioConfig::parse(&text)?;
    overrides.apply(&mut config)?;
    Ok(config)
}

/// Records, the optional dominance table and contour surfaces.
pub fn run(config: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if !config.series.is_empty() {
        let prepared = pipeline::prepare(config)?;
        let refs = pipeline::resolve_references(config, &prepared)?;
        let records = pipeline::records(config, &prepared, &refs)?;
        let path = out_dir.join(config.records_file());
        output::write_records(&path, &records)?;
        written.push(path);
        if let Some(file) = &config.emit.dominance {
            let path = out_dir.join(file);
            output::write_dominance(&path, &pipeline::dominance(config, &records)?)?;
            written.push(path);
        }
    }
    if config.contour.is_some() {
        let scenario = pipeline::build_scenario(config)?;
        let prefix = config.emit.contour.clone().unwrap_or_else(|| config.name.clone());
        for (n, surface) in pipeline::contours(config, &scenario)? {
            let path = out_dir.join(format!("{prefix}_n{n}.csv"));
            output::write_surface(&path, &surface)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn refpoint(config: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if config.series.is_empty() {
        return Err(Failure::config("series", "refpoint needs at least one series"));
    }
    let prepared = pipeline::prepare(config)?;
    let refs = pipeline::resolve_references(config, &prepared)?;
    let path = out_dir.join(format!("{}_refpoint.csv", config.name));
    output::write_references(&path, &refs)?;
    Ok(vec![path])
}

pub fn coeffs(config: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let prepared = pipeline::prepare(config)?;
    let refs = pipeline::resolve_references(config, &prepared)?;
    let rows = pipeline::coefficients(config, &prepared, &refs)?;
    let path = out_dir.join(format!("{}_coeffs.csv", config.name));
    output::write_coefficients(&path, &rows)?;
    Ok(vec![path])
}

/// Writes the embedded configuration next to its outputs, then runs it.
pub fn figure(name: &str, overrides: Overrides, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = figures::config_text(name).ok_or_else(|| {
        Failure::config("figure", format!("unknown figure {name:?}; known: {}", figures::NAMES.join(", ")))
    })?;
    let mut config = ScenarioConfig::parse(text)?;
    overrides.apply(&mut config)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{name}.toml"));
    fs::write(&path, config.to_toml())?;
    let mut written = vec![path];
    written.extend(run(&config, out_dir)?);
    Ok(written)
}

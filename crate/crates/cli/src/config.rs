//! TOML scenario configuration.
//!
//! ```toml
//! schema_version = 1
//! name = "noon-phase"
//! shots = 10000000
//! seeds = [1]
//!
//! [probe]
//! kind = "noon"
//! photons = 5
//!
//! [noise]
//! kind = "phase-diffusion"
//! lambda = [0.9, 0.85, 0.8]
//!
//! [phi]
//! min = -0.01
//! max = 0.01
//! count = 21
//!
//! [[series]]
//! orders = [1, 2, 3]
//! reference = { kind = "optimal" }
//! ```

use serde::{Deserialize, Serialize};
use vpem_core::scenario::{NoiseFamily, Probe};

use crate::error::{Failure, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SHOTS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    pub probe: ProbeConfig,
    pub noise: NoiseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Grid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<CoeffsConfig>,
    #[serde(default)]
    pub emit: Emit,
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProbeConfig {
    Noon { photons: usize },
    CoherentSqueezed { coherent_photons: f64, squeezed_photons: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseName {
    PhaseDiffusion,
    PhotonLoss,
    AdditiveGaussian,
}

/// Noise family plus the strengths to evaluate, given either directly or as
/// dominant-eigenvalue targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// Squeezing that sets the additive-Gaussian widths; defaults to the probe's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezing: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        (0..self.count)
            .map(|j| self.min + (self.max - self.min) * j as f64 / (self.count - 1) as f64)
            .collect()
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Failure::config(field, "bounds must be finite"));
        }
        if self.min >= self.max {
            return Err(Failure::config(format!("{field}.min"), "must be below max"));
        }
        if self.count < 2 {
            return Err(Failure::config(format!("{field}.count"), "must be >= 2"));
        }
        Ok(())
    }
}

/// Estimator orders sharing one reference-point rule; order 1 is unmitigated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub orders: Vec<u32>,
    pub reference: Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Reference {
    Fixed {
        phi0: f64,
    },
    /// Minimizer of the zeroth-order bias at `delta`, or at each evaluated
    /// strength when `delta` is absent.
    Optimal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    /// Minimizer of the zeroth-order bias averaged over a uniform strength
    /// prior on `[delta_min, delta_max]`. `lambda_min` sets `delta_max` to
    /// the strength where the dominant eigenvalue falls to that value.
    AveragedOptimal {
        #[serde(default)]
        delta_min: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_min: Option<f64>,
    },
    /// Deliberately off-optimum reference kept for comparison.
    Detuned {
        phi0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub orders: Vec<u32>,
    pub phi0: Grid,
    pub delta: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffsConfig {
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    #[serde(default = "default_fit_points")]
    pub points: usize,
    /// Upper end of the fitting range before it is divided by four.
    pub delta_max: f64,
}

fn default_max_order() -> usize {
    3
}

fn default_fit_points() -> usize {
    11
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<String>,
    /// Per-phase comparison of each mitigated series with the unmitigated one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominance: Option<String>,
    /// Prefix for one matrix file per contour order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<String>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| format!("byte {}", s.start)).unwrap_or_else(|| "config".into());
            Failure::config(field, e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Failure::config(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Failure::config("name", "must be a non-empty file stem"));
        }
        if self.shots == 0 {
            return Err(Failure::config("shots", "must be >= 1"));
        }
        match self.probe {
            ProbeConfig::Noon { photons } => {
                if photons == 0 {
                    return Err(Failure::config("probe.photons", "must be >= 1"));
                }
                if let Some(c) = self.cutoff {
                    if photons > c {
                        return Err(Failure::config("cutoff", format!("must be >= photons ({photons})")));
                    }
                }
            }
            ProbeConfig::CoherentSqueezed {
                coherent_photons,
                squeezed_photons,
            } => {
                if !(coherent_photons >= 0.0 && squeezed_photons >= 0.0) {
                    return Err(Failure::config("probe", "photon numbers must be >= 0"));
                }
            }
        }
        self.validate_noise()?;
        if !self.series.is_empty() {
            match &self.phi {
                Some(g) => g.validate("phi")?,
                None => return Err(Failure::config("phi", "required when series are given")),
            }
            if self.noise.delta.is_none() && self.noise.lambda.is_none() {
                return Err(Failure::config("noise", "series need either delta or lambda values"));
            }
        }
        for (k, s) in self.series.iter().enumerate() {
            let field = format!("series[{k}]");
            validate_orders(&s.orders, &format!("{field}.orders"))?;
            validate_reference(&s.reference, &format!("{field}.reference"))?;
        }
        if let Some(c) = &self.contour {
            validate_orders(&c.orders, "contour.orders")?;
            c.phi0.validate("contour.phi0")?;
            c.delta.validate("contour.delta")?;
            if c.delta.min < 0.0 {
                return Err(Failure::config("contour.delta.min", "must be >= 0"));
            }
        }
        if let Some(c) = &self.coeffs {
            if c.max_order == 0 {
                return Err(Failure::config("coeffs.max_order", "must be >= 1"));
            }
            if c.points < 2 * c.max_order + 1 {
                return Err(Failure::config("coeffs.points", "must be >= 2 max_order + 1"));
            }
            if !(c.delta_max > 4e-4) {
                return Err(Failure::config("coeffs.delta_max", "must exceed 4e-4"));
            }
        }
        if self.series.is_empty() && self.contour.is_none() && self.coeffs.is_none() {
            return Err(Failure::config("series", "nothing to run: give series, contour or coeffs"));
        }
        Ok(())
    }

    fn validate_noise(&self) -> Result<()> {
        let n = &self.noise;
        if n.delta.is_some() && n.lambda.is_some() {
            return Err(Failure::config("noise", "give delta or lambda, not both"));
        }
        if let Some(d) = &n.delta {
            if d.is_empty() || d.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Failure::config("noise.delta", "must be a nonempty list of finite values >= 0"));
            }
        }
        if let Some(l) = &n.lambda {
            if l.is_empty() || l.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
                return Err(Failure::config("noise.lambda", "must be a nonempty list in (0, 1]"));
            }
        }
        if n.squeezing.is_some() && n.kind != NoiseName::AdditiveGaussian {
            return Err(Failure::config("noise.squeezing", "only used by additive-gaussian noise"));
        }
        Ok(())
    }

    pub fn probe(&self) -> Probe {
        match self.probe {
            ProbeConfig::Noon { photons } => Probe::Noon { photons },
            ProbeConfig::CoherentSqueezed {
                coherent_photons,
                squeezed_photons,
            } => Probe::CoherentSqueezed {
                coherent_photons,
                squeezed_photons,
            },
        }
    }

    pub fn family(&self) -> NoiseFamily {
        match self.noise.kind {
            NoiseName::PhaseDiffusion => NoiseFamily::PhaseDiffusion,
            NoiseName::PhotonLoss => NoiseFamily::PhotonLoss,
            NoiseName::AdditiveGaussian => NoiseFamily::AdditiveGaussian {
                squeezing: self.noise.squeezing,
            },
        }
    }

    pub fn records_file(&self) -> String {
        self.emit.records.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }
}

fn validate_orders(orders: &[u32], field: &str) -> Result<()> {
    if orders.is_empty() {
        return Err(Failure::config(field, "must not be empty"));
    }
    if orders.contains(&0) {
        return Err(Failure::config(field, "orders start at 1"));
    }
    Ok(())
}

fn validate_reference(r: &Reference, field: &str) -> Result<()> {
    match *r {
        Reference::Fixed { phi0 } | Reference::Detuned { phi0 } if !phi0.is_finite() => {
            Err(Failure::config(format!("{field}.phi0"), "must be finite"))
        }
        Reference::Optimal { delta: Some(d) } if !(d >= 0.0) => {
            Err(Failure::config(format!("{field}.delta"), "must be >= 0"))
        }
        Reference::AveragedOptimal {
            delta_min,
            delta_max,
            lambda_min,
        } => {
            if delta_max.is_some() == lambda_min.is_some() {
                return Err(Failure::config(field, "give exactly one of delta_max and lambda_min"));
            }
            if !(delta_min >= 0.0) {
                return Err(Failure::config(format!("{field}.delta_min"), "must be >= 0"));
            }
            if let Some(hi) = delta_max {
                if !(hi > delta_min) {
                    return Err(Failure::config(format!("{field}.delta_max"), "must exceed delta_min"));
                }
            }
            if let Some(l) = lambda_min {
                if !(l > 0.0 && l < 1.0) {
                    return Err(Failure::config(format!("{field}.lambda_min"), "must lie in (0, 1)"));
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
name = "t"
[probe]
kind = "noon"
photons = 3
[noise]
kind = "photon-loss"
delta = [0.01]
[phi]
min = -0.01
max = 0.01
count = 5
[[series]]
orders = [1, 2]
reference = { kind = "fixed", phi0 = 0.0 }
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.shots, DEFAULT_SHOTS);
        assert!(c.seeds.is_empty());
        assert_eq!(c.records_file(), "t.csv");
    }

    #[test]
    fn round_trip() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(ScenarioConfig::parse(&c.to_toml()).unwrap(), c);
    }

    fn field_of(text: &str) -> String {
        match ScenarioConfig::parse(text) {
            Err(Failure::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn field_level_errors() {
        assert_eq!(field_of(&MINIMAL.replace("count = 5", "count = 1")), "phi.count");
        assert_eq!(field_of(&MINIMAL.replace("min = -0.01", "min = 0.02")), "phi.min");
        assert_eq!(field_of(&MINIMAL.replace("orders = [1, 2]", "orders = []")), "series[0].orders");
        assert_eq!(field_of(&MINIMAL.replace("schema_version = 1", "schema_version = 7")), "schema_version");
        assert_eq!(field_of(&MINIMAL.replace("name = \"t\"", "name = \"t\"\ncutoff = 2")), "cutoff");
        assert_eq!(field_of(&MINIMAL.replace("delta = [0.01]", "delta = [0.01]\nlambda = [0.9]")), "noise");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ScenarioConfig::parse(&MINIMAL.replace("name = \"t\"", "name = \"t\"\nspeed = 3")),
            Err(Failure::Config { .. })
        ));
    }

    #[test]
    fn averaged_reference_needs_one_bound() {
        let text = MINIMAL.replace(
            "{ kind = \"fixed\", phi0 = 0.0 }",
            "{ kind = \"averaged-optimal\", delta_max = 0.1, lambda_min = 0.8 }",
        );
        assert_eq!(field_of(&text), "series[0].reference");
    }
}

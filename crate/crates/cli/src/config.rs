//! Experiment configuration: TOML with one table per concern.
//!
//! ```toml
//! [model]
//! dimension = 1
//! beta = 1.0
//! gamma = 0.5
//! profile = "indicator(a=0.5)"
//! # edge_density = 1.0   # sets beta = edge_density * (1 - gamma)
//!
//! [run]
//! horizons = [10000.0]
//! replicates = 20
//! seed = 1
//! output = "out"
//! ```
//!
//! Every key has a default, so an empty file is a valid configuration.

use std::fmt;
use std::str::FromStr;

use adrcm::{ModelParams, Profile, SamplerKind, Space};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },

    #[error("configuration syntax: {0}")]
    Syntax(String),

    #[error("reading configuration {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn field(path: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Field {
        path: path.to_string(),
        message: message.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Grow,
    Palm,
    ClusteringSweep,
    EdgeLength,
    Degree,
    Heatmap,
    Oracle,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Grow,
        Kind::Palm,
        Kind::ClusteringSweep,
        Kind::EdgeLength,
        Kind::Degree,
        Kind::Heatmap,
        Kind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Grow => "grow",
            Kind::Palm => "palm",
            Kind::ClusteringSweep => "clustering-sweep",
            Kind::EdgeLength => "edge-length",
            Kind::Degree => "degree",
            Kind::Heatmap => "heatmap",
            Kind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| field("experiment.kind", format!("unknown kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    Inverse,
    Rejection,
    Stratified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub kind: Kind,
}

impl Default for Experiment {
    fn default() -> Self {
        Self { kind: Kind::Grow }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Model {
    pub dimension: usize,
    pub beta: f64,
    pub gamma: f64,
    pub profile: String,
    /// Torus volume of the unscaled model.
    pub volume: f64,
    /// When set, overrides `beta` with `edge_density * (1 - gamma)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_density: Option<f64>,
}

impl Default for Model {
    fn default() -> Self {
        Self {
            dimension: 1,
            beta: 1.0,
            gamma: 0.5,
            profile: "indicator(a=0.5)".into(),
            volume: 1.0,
            edge_density: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Run {
    pub horizons: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub output: String,
    /// Also write every simulated graph in the text graph format.
    pub write_graphs: bool,
}

impl Default for Run {
    fn default() -> Self {
        Self {
            horizons: vec![1000.0],
            replicates: 1,
            seed: 1,
            output: "out".into(),
            write_graphs: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Palm {
    pub q: f64,
    pub sampler: Sampler,
    pub strata: usize,
    /// Neighbourhoods per replicate for `palm`, per root age for `heatmap`.
    pub samples: usize,
    /// Fixed root age; uniform when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_age: Option<f64>,
    /// Neighbour pairs per local clustering estimate.
    pub pairs: usize,
    /// Root ages drawn from π per average clustering estimate.
    pub roots: usize,
}

impl Default for Palm {
    fn default() -> Self {
        Self {
            q: adrcm::palm::DEFAULT_Q,
            sampler: Sampler::Inverse,
            strata: adrcm::palm::DEFAULT_STRATA,
            samples: 10_000,
            root_age: None,
            pairs: 200,
            roots: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    /// Indicator widths `a`.
    pub widths: Vec<f64>,
    pub gammas: Vec<f64>,
    pub edge_densities: Vec<f64>,
    /// Root ages for local clustering curves.
    pub root_ages: Vec<f64>,
    /// Truncation masses; each estimate is repeated for every value.
    pub q_values: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            widths: vec![1.0, 2.0, 4.0, 8.0],
            gammas: vec![0.3, 0.6],
            edge_densities: vec![1.0, 10.0],
            root_ages: (1..=20).map(|i| i as f64 / 20.0).collect(),
            q_values: vec![0.99, 0.999],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Heatmap {
    pub root_ages: Vec<f64>,
    pub position_bins: usize,
    pub age_bins: usize,
    /// Half-width of the position axis; the truncation radius when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
}

impl Default for Heatmap {
    fn default() -> Self {
        Self {
            root_ages: vec![0.2, 0.8],
            position_bins: 100,
            age_bins: 100,
            extent: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeLength {
    pub bins: usize,
    pub moment_a: f64,
    pub moment_b: f64,
    /// Points of the geometric grid for tail tables.
    pub tail_points: usize,
    pub tail_min: f64,
    pub tail_max: f64,
}

impl Default for EdgeLength {
    fn default() -> Self {
        Self {
            bins: 20,
            moment_a: 1.0,
            moment_b: 1.0,
            tail_points: 41,
            tail_min: 0.1,
            tail_max: 1e4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Degree {
    pub k_max: usize,
}

impl Default for Degree {
    fn default() -> Self {
        Self { k_max: 50 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    pub model: Model,
    pub run: Run,
    pub palm: Palm,
    pub sweep: Sweep,
    pub heatmap: Heatmap,
    pub edge_length: EdgeLength,
    pub degree: Degree,
}

/// Parses a bare override value as TOML, falling back to a plain string.
fn override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl Config {
    /// Parses `text`, applies `section.key=value` overrides, and validates.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| field(item, "override must look like section.key=value"))?;
            let (section, name) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| field(key.trim(), "override key must look like section.key"))?;
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(inner) = entry else {
                return Err(field(section, "is not a table"));
            };
            let mut value = override_value(value.trim());
            // numeric fields accept integer spellings such as `beta=1`
            if let toml::Value::Integer(i) = value {
                if Self::float_key(section, name) {
                    value = toml::Value::Float(i as f64);
                }
            }
            inner.insert(name.to_string(), value);
        }
        let config: Config = Config::deserialize(table).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn float_key(section: &str, name: &str) -> bool {
        matches!(
            (section, name),
            ("model", "beta" | "gamma" | "volume" | "edge_density")
                | ("palm", "q" | "root_age")
                | ("heatmap", "extent")
                | ("edge_length", "moment_a" | "moment_b" | "tail_min" | "tail_max")
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn profile(&self) -> Result<Profile, ConfigError> {
        self.model
            .profile
            .parse()
            .map_err(|e: adrcm::Error| field("model.profile", e))
    }

    pub fn space(&self) -> Result<Space, ConfigError> {
        Space::torus(self.model.dimension, self.model.volume).map_err(|e| field("model.dimension", e))
    }

    /// Model parameters with the configured profile.
    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        self.params_with(self.model.gamma, self.model.edge_density, self.profile()?)
    }

    /// Model parameters for a sweep point, honouring `edge_density`.
    pub fn params_with(&self, gamma: f64, edge_density: Option<f64>, profile: Profile) -> Result<ModelParams, ConfigError> {
        let space = self.space()?;
        let result = match edge_density {
            Some(c) => ModelParams::with_edge_density(c, gamma, profile, space),
            None => ModelParams::new(self.model.beta, gamma, profile, space),
        };
        result.map_err(|e| match e {
            adrcm::Error::InvalidParameter { name, reason } if name.contains('.') => field(name, reason),
            adrcm::Error::InvalidParameter { name, reason } => field(&format!("model.{name}"), reason),
            other => field("model", other),
        })
    }

    pub fn sampler_kind(&self) -> SamplerKind {
        match self.palm.sampler {
            Sampler::Inverse => SamplerKind::InverseTransform,
            Sampler::Rejection => SamplerKind::Rejection,
            Sampler::Stratified => SamplerKind::Stratified {
                strata: self.palm.strata,
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        let unit = |path: &str, x: f64, closed: bool| {
            let ok = x > 0.0 && (x < 1.0 || (closed && x == 1.0));
            if ok {
                Ok(())
            } else {
                Err(field(path, format!("must lie in (0, 1{}, got {x}", if closed { "]" } else { ")" })))
            }
        };
        let positive = |path: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(field(path, format!("must be positive and finite, got {x}")))
            }
        };
        if self.run.horizons.is_empty() {
            return Err(field("run.horizons", "need at least one horizon"));
        }
        for &t in &self.run.horizons {
            positive("run.horizons", t)?;
        }
        if self.run.replicates == 0 {
            return Err(field("run.replicates", "must be at least 1"));
        }
        unit("palm.q", self.palm.q, true)?;
        if let Some(u) = self.palm.root_age {
            unit("palm.root_age", u, true)?;
        }
        if self.palm.sampler == Sampler::Stratified && self.palm.strata == 0 {
            return Err(field("palm.strata", "must be at least 1"));
        }
        for (path, n) in [("palm.samples", self.palm.samples), ("palm.pairs", self.palm.pairs), ("palm.roots", self.palm.roots)] {
            if n == 0 {
                return Err(field(path, "must be at least 1"));
            }
        }
        for &a in &self.sweep.widths {
            if !(a >= 0.5) {
                return Err(field("sweep.widths", format!("indicator width must be >= 1/2, got {a}")));
            }
        }
        for &g in &self.sweep.gammas {
            unit("sweep.gammas", g, false)?;
        }
        for &c in &self.sweep.edge_densities {
            positive("sweep.edge_densities", c)?;
        }
        for &u in &self.sweep.root_ages {
            unit("sweep.root_ages", u, true)?;
        }
        for &q in &self.sweep.q_values {
            unit("sweep.q_values", q, true)?;
        }
        for &u in &self.heatmap.root_ages {
            unit("heatmap.root_ages", u, true)?;
        }
        if self.heatmap.position_bins == 0 || self.heatmap.age_bins == 0 {
            return Err(field("heatmap.position_bins", "bin counts must be at least 1"));
        }
        if let Some(e) = self.heatmap.extent {
            positive("heatmap.extent", e)?;
        }
        if self.edge_length.bins == 0 {
            return Err(field("edge_length.bins", "must be at least 1"));
        }
        positive("edge_length.moment_a", self.edge_length.moment_a)?;
        if !(self.edge_length.moment_b >= 0.0) {
            return Err(field("edge_length.moment_b", "must be nonnegative"));
        }
        positive("edge_length.tail_min", self.edge_length.tail_min)?;
        if !(self.edge_length.tail_max > self.edge_length.tail_min) {
            return Err(field("edge_length.tail_max", "must exceed edge_length.tail_min"));
        }
        if self.edge_length.tail_points < 2 {
            return Err(field("edge_length.tail_points", "must be at least 2"));
        }
        if self.experiment.kind == Kind::Heatmap && self.model.dimension != 1 {
            return Err(field("model.dimension", "heatmaps need dimension 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(Config::parse("", &[]).unwrap(), Config::default());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = Config::parse("[model]\ngamma = 0.3\n", &["model.beta=2".into(), "model.profile=polynomial(delta=2)".into()])
            .unwrap();
        assert_eq!(c.model.beta, 2.0);
        assert_eq!(c.model.gamma, 0.3);
        assert_eq!(c.model.profile, "polynomial(delta=2)");
    }

    #[test]
    fn errors_name_the_field() {
        let e = Config::parse("[model]\ngamma = 1.5\n", &[]).unwrap_err();
        assert!(e.to_string().starts_with("model.gamma"), "{e}");
        let e = Config::parse("", &["palm.q=0".into()]).unwrap_err();
        assert!(e.to_string().starts_with("palm.q"), "{e}");
        let e = Config::parse("[model]\nprofile = \"box(1)\"\n", &[]).unwrap_err();
        assert!(e.to_string().starts_with("model.profile"), "{e}");
        let e = Config::parse("[model]\nbogus = 1\n", &[]).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn heatmap_needs_one_dimension() {
        let e = Config::parse("[experiment]\nkind = \"heatmap\"\n[model]\ndimension = 2\n", &[]).unwrap_err();
        assert!(e.to_string().starts_with("model.dimension"), "{e}");
    }
}

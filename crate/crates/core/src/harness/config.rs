use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use super::generator::GridConfig;
use crate::error::{Error, Result};
use crate::kernels::TruncationMode;
use crate::krylov::{GmresConfig, RefactorPolicy};
use crate::numeric::{FactorOptions, Schedule};
use crate::symbolic::{AnalysisOptions, OrderingKind};

/// A compression threshold, or `none` for the uncompressed baseline.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Epsilon(pub Option<f64>);

impl Epsilon {
    pub const NONE: Epsilon = Epsilon(None);

    pub fn value(v: f64) -> Self {
        Epsilon(Some(v))
    }

    pub fn is_none(&self) -> bool {
        self.0.is_none()
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("none"),
            Some(0.0) => f.write_str("0"),
            Some(v) => write!(f, "{v:e}"),
        }
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(Epsilon::NONE);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("epsilon must be a number or `none`, got `{s}`")))?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Config(format!("epsilon must be >= 0, got {v}")));
        }
        Ok(Epsilon(Some(v)))
    }
}

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            None => s.serialize_str("none"),
            Some(v) => s.serialize_f64(v),
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Epsilon;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative number or \"none\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Epsilon, E> {
                Epsilon::from_str(&v.to_string()).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Epsilon, E> {
                Ok(Epsilon(Some(v as f64)))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Epsilon, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Epsilon, E> {
                Epsilon::from_str(v).map_err(E::custom)
            }

            fn visit_unit<E: de::Error>(self) -> std::result::Result<Epsilon, E> {
                Ok(Epsilon::NONE)
            }
        }
        d.deserialize_any(V)
    }
}

/// Factorisation settings of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlrSection {
    pub epsilon: Epsilon,
    pub mode: TruncationMode,
    pub schedule: Schedule,
    pub panel_min: usize,
    pub tile_size: usize,
    pub pivot_threshold: f64,
    pub ordering: OrderingChoice,
    pub relax: usize,
    pub max_width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingChoice {
    Natural,
    Amd,
    #[default]
    GridNd,
}

impl Default for BlrSection {
    fn default() -> Self {
        let f = FactorOptions::default();
        let a = AnalysisOptions::default();
        Self {
            epsilon: Epsilon::NONE,
            mode: f.mode,
            schedule: f.schedule,
            panel_min: f.panel_min,
            tile_size: f.tile_size,
            pivot_threshold: f.pivot_threshold,
            ordering: OrderingChoice::GridNd,
            relax: a.relax,
            max_width: a.max_width,
        }
    }
}

impl BlrSection {
    pub fn factor_options(&self, epsilon: Epsilon) -> FactorOptions {
        FactorOptions {
            blr: epsilon.0.is_some(),
            epsilon: epsilon.0.unwrap_or(0.0),
            mode: self.mode,
            schedule: self.schedule,
            panel_min: self.panel_min,
            tile_size: self.tile_size,
            pivot_threshold: self.pivot_threshold,
        }
    }

    /// Analysis options for a grid; dofs per node are set per block later.
    pub fn analysis_options(&self, grid: &GridConfig) -> AnalysisOptions {
        let ordering = match self.ordering {
            OrderingChoice::Natural => OrderingKind::Natural,
            OrderingChoice::Amd => OrderingKind::Amd,
            OrderingChoice::GridNd => OrderingKind::GridNd {
                n_flux: grid.n_flux,
                n_tht: grid.n_tht,
            },
        };
        AnalysisOptions {
            ordering,
            dofs_per_node: grid.dofs_per_node,
            relax: self.relax,
            max_width: self.max_width,
        }
    }
}

/// Which time-step protocol a scan cell runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    /// Refactorise at every step.
    #[default]
    Force,
    /// Follow the refactorisation policy across a coupling ramp.
    Ramp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub ladder: Vec<(usize, usize)>,
    pub epsilons: Vec<Epsilon>,
    pub steps: usize,
    pub workload: WorkloadKind,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            ladder: vec![(16, 20), (22, 28), (32, 40), (44, 56), (64, 80), (88, 112), (128, 160)],
            epsilons: vec![
                Epsilon::NONE,
                Epsilon::value(0.0),
                Epsilon::value(1e-16),
                Epsilon::value(1e-12),
                Epsilon::value(1e-8),
                Epsilon::value(1e-4),
            ],
            steps: 10,
            workload: WorkloadKind::Force,
        }
    }
}

/// The JSON configuration document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub grid: GridConfig,
    pub blr: BlrSection,
    pub gmres: GmresConfig,
    pub policy: RefactorPolicy,
    pub scan: ScanSection,
}

impl SolverConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SolverConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.gmres.validate()?;
        self.blr.factor_options(self.blr.epsilon).validate()?;
        if self.policy.threshold == 0 {
            return Err(Error::Config("policy threshold must be >= 1".into()));
        }
        if self.scan.steps == 0 {
            return Err(Error::Config("scan needs at least one step".into()));
        }
        if self.scan.ladder.iter().any(|&(f, t)| f < 2 || t < 2) {
            return Err(Error::Config("ladder rungs must be at least 2x2".into()));
        }
        Ok(())
    }
}

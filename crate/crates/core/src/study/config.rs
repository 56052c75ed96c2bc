use serde::{Deserialize, Serialize};

use super::{Method, SourceSpec};
use crate::density::GridConfig;
use crate::solver::SolverConfig;

/// A validation failure located by a JSON pointer into the study config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub pointer: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.pointer, self.message)
    }
}

impl std::error::Error for ConfigIssue {}

/// One distribution row of the study. Without `source`/`sources`, `id` names
/// a preset; `m` (default 2) copies of a single law form the source vector.
/// A bare string is shorthand for `{"id": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawEntry")]
pub struct DistributionEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<SourceSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FullEntry {
    id: String,
    #[serde(default)]
    source: Option<SourceSpec>,
    #[serde(default)]
    sources: Option<Vec<SourceSpec>>,
    #[serde(default)]
    m: Option<usize>,
}

struct RawEntry(DistributionEntry);

impl<'de> Deserialize<'de> for RawEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct Visitor;

        impl<'de> serde::de::Visitor<'de> for Visitor {
            type Value = RawEntry;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a preset id or a distribution object")
            }

            fn visit_str<E: serde::de::Error>(self, id: &str) -> Result<RawEntry, E> {
                Ok(RawEntry(DistributionEntry::preset(id)))
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(self, map: A) -> Result<RawEntry, A::Error> {
                let e = FullEntry::deserialize(serde::de::value::MapAccessDeserializer::new(map))?;
                Ok(RawEntry(DistributionEntry {
                    id: e.id,
                    source: e.source,
                    sources: e.sources,
                    m: e.m,
                }))
            }
        }

        d.deserialize_any(Visitor)
    }
}

impl From<RawEntry> for DistributionEntry {
    fn from(raw: RawEntry) -> Self {
        raw.0
    }
}

impl DistributionEntry {
    pub fn preset(id: &str) -> Self {
        Self {
            id: id.to_string(),
            source: None,
            sources: None,
            m: None,
        }
    }

    fn resolve(&self, at: &str) -> Result<Vec<SourceSpec>, ConfigIssue> {
        if self.sources.is_some() && (self.source.is_some() || self.m.is_some()) {
            return Err(ConfigIssue::new(
                format!("{at}/sources"),
                "`sources` cannot be combined with `source` or `m`",
            ));
        }
        let specs = if let Some(list) = &self.sources {
            for (k, s) in list.iter().enumerate() {
                s.validate()
                    .map_err(|e| ConfigIssue::new(format!("{at}/sources/{k}"), e.to_string()))?;
            }
            list.clone()
        } else {
            let m = self.m.unwrap_or(2);
            let single = match &self.source {
                Some(s) => {
                    s.validate()
                        .map_err(|e| ConfigIssue::new(format!("{at}/source"), e.to_string()))?;
                    s.clone()
                }
                None => SourceSpec::preset(&self.id).map_err(|_| {
                    ConfigIssue::new(
                        format!("{at}/id"),
                        format!(
                            "unknown distribution `{}` (presets: {})",
                            self.id,
                            SourceSpec::PRESETS.join(", ")
                        ),
                    )
                })?,
            };
            if m < 2 {
                return Err(ConfigIssue::new(format!("{at}/m"), "m must be >= 2"));
            }
            vec![single; m]
        };
        if specs.len() < 2 {
            return Err(ConfigIssue::new(format!("{at}/sources"), "at least 2 sources are required"));
        }
        Ok(specs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            max_outer_iters: d.max_outer_iters,
            max_inner_iters: d.max_inner_iters,
            tol: d.tol,
        }
    }
}

/// Study configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub methods: Vec<Method>,
    pub distributions: Vec<DistributionEntry>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub grid: GridConfig,
    pub solver: SolverSettings,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            distributions: ["uniform", "exponential", "laplace", "t5", "mix2-sym", "mix2-asym"]
                .into_iter()
                .map(DistributionEntry::preset)
                .collect(),
            n: 1000,
            reps: 100,
            seed: 0,
            grid: GridConfig::default(),
            solver: SolverSettings::default(),
        }
    }
}

impl StudyConfig {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_outer_iters: self.solver.max_outer_iters,
            max_inner_iters: self.solver.max_inner_iters,
            tol: self.solver.tol,
            grid: self.grid,
            ..SolverConfig::default()
        }
    }

    /// Validates every field and expands the distribution list.
    pub fn resolve(&self) -> Result<Vec<(String, Vec<SourceSpec>)>, ConfigIssue> {
        if self.methods.is_empty() {
            return Err(ConfigIssue::new("/methods", "at least one method is required"));
        }
        if self.distributions.is_empty() {
            return Err(ConfigIssue::new("/distributions", "at least one distribution is required"));
        }
        if self.reps == 0 {
            return Err(ConfigIssue::new("/reps", "reps must be >= 1"));
        }
        if self.grid.bins < 2 {
            return Err(ConfigIssue::new("/grid/bins", "bins must be >= 2"));
        }
        if !(self.grid.half_width > 0.0 && self.grid.half_width.is_finite()) {
            return Err(ConfigIssue::new("/grid/half_width", "half_width must be positive"));
        }
        if !(self.grid.ridge >= 0.0 && self.grid.ridge.is_finite()) {
            return Err(ConfigIssue::new("/grid/ridge", "ridge must be >= 0"));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol.is_finite()) {
            return Err(ConfigIssue::new("/solver/tol", "tol must be > 0"));
        }
        if self.solver.max_outer_iters == 0 {
            return Err(ConfigIssue::new("/solver/max_outer_iters", "must be >= 1"));
        }
        if self.solver.max_inner_iters == 0 {
            return Err(ConfigIssue::new("/solver/max_inner_iters", "must be >= 1"));
        }
        let mut out: Vec<(String, Vec<SourceSpec>)> = Vec::with_capacity(self.distributions.len());
        for (k, entry) in self.distributions.iter().enumerate() {
            let at = format!("/distributions/{k}");
            if out.iter().any(|(id, _)| id == &entry.id) {
                return Err(ConfigIssue::new(format!("{at}/id"), format!("duplicate id `{}`", entry.id)));
            }
            let specs = entry.resolve(&at)?;
            if self.n <= specs.len() {
                return Err(ConfigIssue::new(
                    "/n",
                    format!("n must exceed the number of sources ({})", specs.len()),
                ));
            }
            out.push((entry.id.clone(), specs));
        }
        Ok(out)
    }
}

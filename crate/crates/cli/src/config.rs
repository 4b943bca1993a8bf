//! Run configuration: one JSON document shared by all subcommands.

use serde::Deserialize;

use kramers_core::error::CoreError;
use kramers_core::potential::{catalog_entry, PotentialSource};
use kramers_core::{DomainGeometry, PotentialField};

/// Tunables with sensible defaults.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub resolution: Option<usize>,
    pub spectral_grid: Option<usize>,
    pub seeds_per_axis: Option<usize>,
    pub boundary_samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSource,
    #[serde(default)]
    pub domain: Option<DomainGeometry>,
    #[serde(default)]
    pub defaults: Defaults,
}

/// Everything the subcommands need, resolved from a config file.
pub struct RunContext {
    pub field: PotentialField,
    pub geom: DomainGeometry,
    pub defaults: Defaults,
}

impl RunConfig {
    pub fn load(path: &str) -> Result<RunConfig, CoreError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Config(format!("cannot read {path}: {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| CoreError::Config(format!("invalid config {path}: {e}")))
    }

    pub fn build(self) -> Result<RunContext, CoreError> {
        let field = PotentialField::from_source(&self.potential)?;
        let geom = match (self.domain, &self.potential) {
            (Some(d), _) => d,
            (None, PotentialSource::Catalog { catalog, .. }) => {
                catalog_entry(catalog)
                    .ok_or_else(|| CoreError::UnknownCatalogEntry(catalog.clone()))?
                    .domain
            }
            (None, PotentialSource::Expression { .. }) => {
                return Err(CoreError::Config(
                    "an explicit domain is required for expression potentials".into(),
                ))
            }
        };
        if field.dim() > geom.dim() {
            return Err(CoreError::Config(format!(
                "potential uses {} variables but the domain is {}-dimensional",
                field.dim(),
                geom.dim()
            )));
        }
        Ok(RunContext {
            field,
            geom,
            defaults: self.defaults,
        })
    }
}

impl RunContext {
    pub fn resolution(&self) -> usize {
        self.defaults
            .resolution
            .unwrap_or(if self.geom.dim() == 1 { 512 } else { 160 })
    }

    pub fn spectral_grid(&self) -> usize {
        self.defaults.spectral_grid.unwrap_or(2048)
    }

    pub fn seeds_per_axis(&self) -> usize {
        self.defaults
            .seeds_per_axis
            .unwrap_or(if self.geom.dim() == 1 { 64 } else { 32 })
    }

    pub fn boundary_samples(&self) -> usize {
        self.defaults.boundary_samples.unwrap_or(512)
    }
}

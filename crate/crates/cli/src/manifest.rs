use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use avmark_core::experiments::Condition;
use avmark_core::pipeline::{PipelineConfig, StageName, Stages};
use avmark_core::simulate::GenConfig;
use serde::{Deserialize, Serialize};

/// Everything a run needs, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub output_dir: Option<PathBuf>,
    pub stages: Vec<StageName>,
    pub benchmark: GenConfig,
    pub pipeline: PipelineConfig,
    pub conditions: Vec<Condition>,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            output_dir: None,
            stages: StageName::ALL.to_vec(),
            benchmark: GenConfig::default(),
            pipeline: PipelineConfig::default(),
            conditions: vec![Condition::new("clean", vec![])],
        }
    }
}

impl RunManifest {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let manifest = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::parse(&text).with_context(|| format!("in manifest {}", p.display()))?
            }
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            anyhow::anyhow!("line {line}: {}", e.message())
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.full_stages()?;
        self.benchmark.validate()?;
        self.pipeline.validate()?;
        for c in &self.conditions {
            for d in &c.distortions {
                d.validate()?;
            }
        }
        Ok(())
    }

    pub fn full_stages(&self) -> Result<Stages> {
        Ok(Stages::from_names(&self.stages)?)
    }
}

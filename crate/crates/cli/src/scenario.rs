//! Scenario files: a chain, its obstacles and one start/goal query.

use std::fs;
use std::path::Path;

use glsampler::workspace::DEFAULT_GAP_THRESHOLD;
use glsampler::{first_violation, ChainSpec, Circle, Configuration, World};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

fn default_gap() -> f64 {
    DEFAULT_GAP_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    pub chain: ChainSpec,
    pub obstacles: Vec<Circle>,
    pub start: Configuration,
    pub goal: Configuration,
    #[serde(default = "default_gap")]
    pub gap_threshold: f64,
}

impl Scenario {
    pub fn new(
        name: &str,
        chain: ChainSpec,
        obstacles: Vec<Circle>,
        start: Configuration,
        goal: Configuration,
    ) -> Self {
        Scenario {
            format_version: SCENARIO_FORMAT_VERSION,
            name: name.to_string(),
            chain,
            obstacles,
            start,
            goal,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }

    pub fn world(&self) -> World {
        World::new(self.chain.clone(), self.obstacles.clone())
    }

    /// Checks the chain, obstacles and both query configurations. Collision
    /// messages name the offending link and obstacle.
    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| CliError::InvalidScenario {
            name: self.name.clone(),
            message,
        };
        if self.format_version != SCENARIO_FORMAT_VERSION {
            return Err(invalid(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        self.chain.validate().map_err(|e| invalid(e.to_string()))?;
        for (i, c) in self.obstacles.iter().enumerate() {
            c.validate()
                .map_err(|e| invalid(format!("obstacle {i}: {e}")))?;
        }
        if !(self.gap_threshold > 0.0) {
            return Err(invalid("gap_threshold must be positive".into()));
        }
        for (which, q) in [("start", &self.start), ("goal", &self.goal)] {
            if q.dof() != self.chain.dof() {
                return Err(invalid(format!(
                    "{which} has {} angles, chain has {} links",
                    q.dof(),
                    self.chain.dof()
                )));
            }
            if let Some(v) = first_violation(&self.chain, q, &self.obstacles) {
                return Err(invalid(format!("{which} is invalid: {v}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Scenario::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(glsampler::experience::to_precise_json(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n").map_err(|e| CliError::io(path, e))
    }
}

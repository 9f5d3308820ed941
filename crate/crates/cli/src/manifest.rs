//! Run manifests: the resolved inputs of one command and the files it wrote.
//!
//! A manifest holds no timestamps or absolute output paths, so re-running it
//! reproduces both the data files and the manifest byte for byte.

use std::path::Path;

use anyhow::{bail, Context, Result};
use lorarep_core::NetworkScenario;
use serde::{Deserialize, Serialize};

use crate::args::Command;

pub const TOOL: &str = "lorarep";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Canonical argument vector; replaying parses exactly this.
    pub args: Vec<String>,
    pub scenario_path: Option<String>,
    /// The scenario after every flag was applied.
    pub scenario: NetworkScenario,
    pub seed: u64,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &Command, scenario: &NetworkScenario, outputs: Vec<String>) -> Self {
        let common = command.common();
        RunManifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.name().into(),
            args: command.to_args(),
            scenario_path: common.and_then(|c| c.scenario.as_ref()).map(|p| p.display().to_string()),
            scenario: scenario.clone(),
            seed: common.map_or(0, |c| c.seed),
            outputs,
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if m.tool != TOOL {
            bail!("{} was not written by {TOOL}", path.display());
        }
        Ok(m)
    }

    /// The command to replay, checked against the manifest's own name.
    pub fn command(&self) -> Result<Command> {
        let cmd = Command::from_args(&self.args).map_err(|e| anyhow::anyhow!("manifest arguments: {e}"))?;
        if cmd.name() != self.command {
            bail!("manifest names '{}' but its arguments run '{}'", self.command, cmd.name());
        }
        if matches!(cmd, Command::Replay(_)) {
            bail!("a manifest cannot replay another manifest");
        }
        Ok(cmd)
    }
}

//! Front end for `lorarep-core`: turns subcommands into CSV/JSON data files
//! plus a manifest that replays them.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod output;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lorarep_core::NetworkScenario;

use args::{Cli, Command, CommonArgs};
use manifest::RunManifest;
use output::{json_artifact, Artifact};

/// Everything a command produced, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub artifacts: Vec<Artifact>,
    pub manifest: RunManifest,
    pub stdout: String,
    pub exit_code: i32,
}

pub fn load_scenario(common: &CommonArgs) -> Result<NetworkScenario> {
    let mut s = match &common.scenario {
        Some(p) => NetworkScenario::load(p).with_context(|| format!("loading scenario {}", p.display()))?,
        None => NetworkScenario::default(),
    };
    if common.theta_linear {
        s.theta_linear = true;
    }
    s.validate()?;
    Ok(s)
}

/// Runs a data command in memory. [`Command::Replay`] is rejected; use [`run`].
pub fn execute(cmd: &Command) -> Result<RunOutcome> {
    let Some(common) = cmd.common() else { bail!("replay cannot be executed directly") };
    let scenario = load_scenario(common)?;
    let mut stdout = String::new();
    let mut exit_code = 0;
    let artifacts = match cmd {
        Command::Outage(a) => commands::cmd_outage(&scenario, a)?,
        Command::Capacity(a) => commands::cmd_capacity(&scenario, a)?,
        Command::Energy(a) => commands::cmd_energy(&scenario, a, common.energy_formula)?,
        Command::Simulate(a) => commands::cmd_simulate(&scenario, a, common.seed)?,
        Command::Verify(a) => {
            let report = verify::run(&scenario, &a.suites, a.level, common.seed);
            stdout = report.human();
            if !report.passed {
                exit_code = 1;
            }
            vec![json_artifact("verify.json", &report)?]
        }
        Command::Replay(_) => unreachable!(),
    };
    let names = artifacts.iter().map(|a| a.name.clone()).collect();
    let manifest = RunManifest::new(cmd, &scenario, names);
    Ok(RunOutcome { artifacts, manifest, stdout, exit_code })
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

/// Writes the artifacts and the manifest into `dir`; returns the paths written.
pub fn write_outcome(dir: &Path, outcome: &RunOutcome) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for a in &outcome.artifacts {
        let p = dir.join(&a.name);
        std::fs::write(&p, &a.bytes).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
    }
    let p = dir.join(RunManifest::file_name(&outcome.manifest.command));
    std::fs::write(&p, outcome.manifest.to_json()?).with_context(|| format!("writing {}", p.display()))?;
    written.push(p);
    Ok(written)
}

/// Full command-line behaviour; returns the process exit code.
pub fn run(cli: Cli) -> Result<(RunOutcome, Vec<PathBuf>)> {
    match &cli.command {
        Command::Replay(r) => {
            let recorded = RunManifest::load(&r.manifest)?;
            let cmd = recorded.command()?;
            let threads = cmd.common().map_or(0, |c| c.threads);
            let outcome = in_pool(threads, || execute(&cmd))??;
            if outcome.manifest.scenario != recorded.scenario {
                bail!("scenario no longer matches the one recorded in {}", r.manifest.display());
            }
            let dir = match &r.out {
                Some(d) => d.clone(),
                None => r.manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let written = write_outcome(&dir, &outcome)?;
            Ok((outcome, written))
        }
        cmd => {
            let common = cmd.common().expect("data command");
            let outcome = in_pool(common.threads, || execute(cmd))??;
            let written = write_outcome(&common.out, &outcome)?;
            Ok((outcome, written))
        }
    }
}

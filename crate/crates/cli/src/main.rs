use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pxp::runner::{
    collision_preset, preset_text, run_collision_pair, run_scenario_with, run_sweep, scenario_preset, sweep_preset,
    CollisionConfig, ConfigError, PresetKind, RunError, ScenarioConfig, SweepConfig, PRESETS,
};

/// Domain-wall dynamics in the Rydberg-blockaded PXP chain.
#[derive(Parser)]
#[command(name = "pxp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one scenario and write its tables.
    Run(Source),
    /// Repeat a scenario over a grid of drive frequencies.
    Sweep(Source),
    /// Run a two-wall scenario next to its one-wall baseline.
    Collide(Source),
    /// Check a configuration without running it.
    Validate(Source),
    /// List the built-in presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct Source {
    /// Config file (flat `key = value` text).
    config: Option<PathBuf>,
    /// Use a built-in preset instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent runs for sweeps and collision pairs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Print every sample while running.
    #[arg(long, short)]
    verbose: bool,
}

impl Source {
    fn text(&self) -> Result<String, RunError> {
        match (&self.config, &self.preset) {
            (Some(path), _) => fs::read_to_string(path).map_err(|e| {
                ConfigError::Invalid(format!("cannot read {}: {e}", path.display())).into()
            }),
            (None, Some(name)) => {
                preset_text(name).map(str::to_string).ok_or_else(|| ConfigError::UnknownPreset(name.clone()).into())
            }
            (None, None) => Err(ConfigError::Invalid("give a config file or --preset".into()).into()),
        }
    }

    fn scenario(&self) -> Result<ScenarioConfig, RunError> {
        let mut c = match &self.preset {
            Some(name) if self.config.is_none() => scenario_preset(name)?,
            _ => ScenarioConfig::parse(&self.text()?)?,
        };
        if let Some(out) = &self.out {
            c.output = out.clone();
        }
        Ok(c)
    }

    fn sweep(&self) -> Result<SweepConfig, RunError> {
        let mut c = match &self.preset {
            Some(name) if self.config.is_none() => sweep_preset(name)?,
            _ => SweepConfig::parse(&self.text()?)?,
        };
        if let Some(out) = &self.out {
            c.base.output = out.clone();
        }
        Ok(c)
    }

    fn collision(&self) -> Result<CollisionConfig, RunError> {
        let mut c = match &self.preset {
            Some(name) if self.config.is_none() => collision_preset(name)?,
            _ => CollisionConfig::parse(&self.text()?)?,
        };
        if let Some(out) = &self.out {
            c.base.output = out.clone();
        }
        Ok(c)
    }

    /// Preset kind, or for a file the kind implied by its keys.
    fn kind(&self) -> Result<PresetKind, RunError> {
        if let (None, Some(name)) = (&self.config, &self.preset) {
            return PRESETS
                .iter()
                .find(|p| p.0 == name)
                .map(|p| p.1)
                .ok_or_else(|| ConfigError::UnknownPreset(name.clone()).into());
        }
        let text = self.text()?;
        Ok(if has_key(&text, "gammas") {
            PresetKind::Sweep
        } else if has_key(&text, "baseline") {
            PresetKind::Collision
        } else {
            PresetKind::Scenario
        })
    }
}

fn has_key(text: &str, key: &str) -> bool {
    text.lines().any(|l| l.split('#').next().unwrap_or("").split('=').next().is_some_and(|k| k.trim() == key))
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run(src) => {
            let config = src.scenario()?;
            let verbose = src.verbose;
            let result = run_scenario_with(&config, |s| {
                if verbose {
                    let entropy = s.entropy.map_or(String::new(), |e| format!(" S={e:.6}"));
                    eprintln!("t={:.3}{entropy} chi={} discarded={:.3e}", s.t, s.bond_dim, s.discarded);
                }
            })?;
            println!(
                "wrote {} samples to {} ({:.1} s, discarded weight {:.3e})",
                result.samples.len(),
                config.output.display(),
                result.wall_clock_seconds,
                result.discarded_weight()
            );
        }
        Command::Sweep(src) => {
            let sweep = src.sweep()?;
            let report = run_sweep(&sweep, src.workers)?;
            for p in &report.points {
                let last = p.entropy.last().map_or(f64::NAN, |e| e.1);
                match &p.error {
                    None => println!("gamma={:<6} S(t_max)={last:.6}", p.gamma),
                    Some(e) => println!("gamma={:<6} failed: {e}", p.gamma),
                }
            }
            let failed = report.failures();
            if failed > 0 {
                return Err(RunError::PartialFailure { failed, total: report.points.len() });
            }
        }
        Command::Collide(src) => {
            let pair = src.collision()?;
            let report = run_collision_pair(&pair, src.workers)?;
            println!(
                "wrote {} samples per run to {}",
                report.times.len(),
                pair.base.output.display()
            );
        }
        Command::Validate(src) => {
            let text = match src.kind()? {
                PresetKind::Scenario => src.scenario()?.to_text(),
                PresetKind::Sweep => src.sweep()?.to_text(),
                PresetKind::Collision => src.collision()?.to_text(),
            };
            print!("{text}");
            eprintln!("configuration is valid");
        }
        Command::Presets { name: None } => {
            for (name, kind, _) in PRESETS {
                println!("{name:<18} {}", kind.name());
            }
        }
        Command::Presets { name: Some(name) } => {
            print!("{}", preset_text(&name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

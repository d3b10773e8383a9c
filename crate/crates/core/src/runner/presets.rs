//! Named configurations. Desk-scale presets finish in minutes on one core;
//! the others use the 96-site chain and take hours.

use super::config::{CollisionConfig, ConfigError, ScenarioConfig, SweepConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetKind {
    Scenario,
    Sweep,
    Collision,
}

impl PresetKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Scenario => "scenario",
            Self::Sweep => "sweep",
            Self::Collision => "collision",
        }
    }
}

/// `(name, kind, config text)`.
pub const PRESETS: &[(&str, PresetKind, &str)] = &[
    (
        "wall_desk",
        PresetKind::Scenario,
        "sites = 48\ninitial = single_dw(24)\ngamma = 0\ndt = 0.05\nchi_max = 128\nt_max = 50\nstride = 0.1\n\
         observables = profile, inhomogeneity, entropy, amplitudes, blockade, discarded, bond_dim\n",
    ),
    (
        "pinned_desk",
        PresetKind::Scenario,
        "sites = 48\ninitial = single_dw(24)\ngamma = 4\ndt = 0.05\nchi_max = 128\nt_max = 50\nstride = 0.1\n\
         observables = profile, inhomogeneity, entropy, amplitudes, blockade, discarded, bond_dim\n",
    ),
    (
        "drive_sweep_desk",
        PresetKind::Sweep,
        "sites = 32\ninitial = single_dw(16)\ndt = 0.05\nchi_max = 64\nt_max = 50\nstride = 0.5\n\
         observables = entropy, discarded, bond_dim\n\
         gammas = 0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1, 1.1, 1.2, 2, 4\n\
         report_times = 10, 20, 30, 40, 50\n",
    ),
    (
        "collision_desk",
        PresetKind::Collision,
        "sites = 64\ninitial = double_dw(28, 9)\nbaseline = single_dw(28)\ngamma = 0\ndt = 0.05\nchi_max = 64\n\
         t_max = 24\nstride = 0.25\nblock = 31-35\nobservables = profile, inhomogeneity, entropy, trace_distance, blockade\n",
    ),
    (
        "wall",
        PresetKind::Scenario,
        "sites = 96\ninitial = single_dw(48)\ngamma = 0\ndt = 0.05\nchi_max = 256\nt_max = 50\nstride = 0.1\n\
         observables = profile, inhomogeneity, entropy, amplitudes, blockade, discarded, bond_dim\n",
    ),
    (
        "pinned",
        PresetKind::Scenario,
        "sites = 96\ninitial = single_dw(48)\ngamma = 4\ndt = 0.05\nchi_max = 256\nt_max = 50\nstride = 0.1\n\
         observables = profile, inhomogeneity, entropy, amplitudes, blockade, discarded, bond_dim\n",
    ),
    (
        "pinned_long",
        PresetKind::Scenario,
        "sites = 96\ninitial = single_dw(48)\ngamma = 4\ndt = 0.05\nchi_max = 256\nt_max = 800\nstride = 1\n\
         observables = entropy, inhomogeneity, discarded, bond_dim\n",
    ),
    (
        "drive_sweep",
        PresetKind::Sweep,
        "sites = 96\ninitial = single_dw(48)\ndt = 0.05\nchi_max = 256\nt_max = 50\nstride = 0.5\n\
         observables = entropy, discarded, bond_dim\n\
         gammas = 0, 0.2, 0.4, 0.6, 0.8, 1, 1.2, 1.6, 2, 2.4, 2.8, 3.2, 3.6, 4\n\
         report_times = 10, 20, 30, 40, 50\n",
    ),
    (
        "collision",
        PresetKind::Collision,
        "sites = 96\ninitial = double_dw(40, 13)\nbaseline = single_dw(40)\ngamma = 0\ndt = 0.05\nchi_max = 256\n\
         t_max = 30\nstride = 0.25\nblock = 42-46\nobservables = profile, inhomogeneity, entropy, trace_distance, blockade\n",
    ),
];

fn lookup(name: &str, expected: PresetKind) -> Result<&'static str, ConfigError> {
    let (_, kind, text) = PRESETS
        .iter()
        .find(|p| p.0 == name)
        .ok_or_else(|| ConfigError::UnknownPreset(name.into()))?;
    if *kind != expected {
        return Err(ConfigError::WrongPresetKind { name: name.into(), found: kind.name(), expected: expected.name() });
    }
    Ok(text)
}

/// Text of a preset, in the config file format.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.2)
}

pub fn scenario_preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    ScenarioConfig::parse(lookup(name, PresetKind::Scenario)?)
}

pub fn sweep_preset(name: &str) -> Result<SweepConfig, ConfigError> {
    SweepConfig::parse(lookup(name, PresetKind::Sweep)?)
}

pub fn collision_preset(name: &str) -> Result<CollisionConfig, ConfigError> {
    CollisionConfig::parse(lookup(name, PresetKind::Collision)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for (name, kind, _) in PRESETS {
            let ok = match kind {
                PresetKind::Scenario => scenario_preset(name).map(|_| ()),
                PresetKind::Sweep => sweep_preset(name).map(|_| ()),
                PresetKind::Collision => collision_preset(name).map(|_| ()),
            };
            assert!(ok.is_ok(), "{name}: {ok:?}");
        }
        assert!(matches!(scenario_preset("drive_sweep_desk"), Err(ConfigError::WrongPresetKind { .. })));
        assert!(matches!(scenario_preset("no_such_preset"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn desk_geometry() {
        let c = scenario_preset("wall_desk").unwrap();
        assert_eq!((c.sites, c.chi_max, c.dt), (48, 128, 0.05));
        let s = sweep_preset("drive_sweep_desk").unwrap();
        assert_eq!(s.gammas.len(), 15);
        assert_eq!(s.base.sites, 32);
        let pair = collision_preset("collision_desk").unwrap();
        assert_eq!(pair.base.initial.wall_ks(), vec![14, 19]);
        assert_eq!(collision_preset("collision").unwrap().base.initial.wall_ks(), vec![20, 27]);
    }
}

//! Strict JSON run configuration and its resolution into an experiment plan.

use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use mqcavity_core::dynamics::SolverSettings;
use mqcavity_core::experiments::{
    EvolveSettings, HoldSettings, IswapSettings, ProbeSettings, RampSettings, RamseySettings,
    SpectrumSettings, SweepSpec,
};
use mqcavity_core::model::SystemParams;
use mqcavity_core::pulses::Segment;

use crate::error::CliError;

/// Experiment tags accepted on the command line and in the `experiment` key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    QubitSpectrum,
    Iswap,
    HoldSweep,
    RampSweep,
    Contour,
    Probe,
    Ramsey,
    Stark,
    Evolve,
}

impl Experiment {
    pub fn tag(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::QubitSpectrum => "qubit-spectrum",
            Experiment::Iswap => "iswap",
            Experiment::HoldSweep => "hold-sweep",
            Experiment::RampSweep => "ramp-sweep",
            Experiment::Contour => "contour",
            Experiment::Probe => "probe",
            Experiment::Ramsey => "ramsey",
            Experiment::Stark => "stark",
            Experiment::Evolve => "evolve",
        }
    }

    /// Whether the experiment can run with the collapse operators switched on.
    pub fn supports_losses(self) -> bool {
        matches!(
            self,
            Experiment::Iswap
                | Experiment::HoldSweep
                | Experiment::Ramsey
                | Experiment::Stark
                | Experiment::Evolve
        )
    }

    /// Sweep parameters the experiment reads.
    fn sweep_parameters(self) -> &'static [&'static str] {
        match self {
            Experiment::Spectrum => &["g_f"],
            Experiment::QubitSpectrum => &["nu_q"],
            Experiment::Iswap | Experiment::Evolve => &[],
            Experiment::HoldSweep => &["t_hold"],
            Experiment::RampSweep | Experiment::Contour => &["ramp"],
            Experiment::Probe => &["nu_probe"],
            Experiment::Ramsey => &["tau"],
            Experiment::Stark => &["nu_q2", "tau"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Per-qubit excursion lists (free-form evolution only).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Pulses {
    pub q1: Vec<Segment>,
    pub q2: Vec<Segment>,
}

/// Where output files go: every file name is `prefix` followed by the table name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub prefix: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            prefix: "out/".into(),
        }
    }
}

/// Contents of a configuration file. After [`load_config`] every optional field
/// holds its resolved value, so serializing it reproduces the run exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub system: SystemParams,
    /// Simulate with the collapse operators of `system`.
    #[serde(default)]
    pub losses: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulses: Option<Pulses>,
    #[serde(default)]
    pub sweeps: Vec<SweepSpec>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputSpec,
    /// Experiment-specific options; the accepted keys depend on the experiment.
    #[serde(default)]
    pub settings: Value,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub out: Option<String>,
    pub losses: Option<bool>,
}

/// Typed, validated work order for one experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum Plan {
    Spectrum {
        g_f: Option<SweepSpec>,
    },
    QubitSpectrum {
        settings: SpectrumSettings,
        nu_q: SweepSpec,
    },
    Iswap(IswapSettings),
    Hold {
        settings: HoldSettings,
        t_hold: SweepSpec,
    },
    Ramp {
        settings: RampSettings,
        ramp: SweepSpec,
    },
    Contour {
        settings: RampSettings,
        ramp: SweepSpec,
    },
    Probe {
        settings: ProbeSettings,
        nu_probe: SweepSpec,
    },
    Ramsey {
        settings: RamseySettings,
        tau: SweepSpec,
    },
    Stark {
        settings: RamseySettings,
        nu_q2: SweepSpec,
        tau: SweepSpec,
    },
    Evolve(EvolveSettings),
}

/// A resolved configuration together with the plan it describes.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub config: RunConfig,
    pub experiment: Experiment,
    pub plan: Plan,
}

/// Sweep used when the configuration names none.
pub fn default_sweep(parameter: &str, params: &SystemParams) -> Option<SweepSpec> {
    let modes = params.filter_modes();
    let (lo, hi) = (modes[0], modes[modes.len() - 1]);
    let s = match parameter {
        "nu_q" => SweepSpec::linear("nu_q", lo - 0.5, hi + 0.5, 401),
        "t_hold" => SweepSpec::linear("t_hold", 0.0, 100.0, 101),
        "ramp" => SweepSpec::linear("ramp", 0.0, 55.0, 56),
        "nu_probe" => SweepSpec::linear("nu_probe", lo - 0.5, hi + 0.5, 201),
        "tau" => SweepSpec::linear("tau", 0.0, 250.0, 500),
        "nu_q2" => SweepSpec::linear("nu_q2", params.nu_q2_idle, hi + 4.0 * params.g_f, 20),
        _ => return None,
    };
    Some(s)
}

fn parse_error(path: &Path, err: serde_json::Error) -> CliError {
    // serde_json messages already end in "at line L column C"
    CliError::Config(format!("{}: {err}", path.display()))
}

/// Reads, validates and resolves a configuration file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let raw: RunConfig = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
    resolve(raw, overrides)
}

fn settings_as<T>(value: &Value, field_hint: &str) -> Result<T, CliError>
where
    T: for<'de> Deserialize<'de> + Default,
{
    match value {
        Value::Null => Ok(T::default()),
        Value::Object(map) => {
            if map.contains_key("with_losses") {
                return Err(CliError::Config(
                    "settings.with_losses is not accepted; use the top-level \"losses\" key".into(),
                ));
            }
            serde_json::from_value(value.clone())
                .map_err(|e| CliError::Config(format!("settings ({field_hint}): {e}")))
        }
        _ => Err(CliError::Config("settings must be an object".into())),
    }
}

fn to_value<T: Serialize>(settings: &T) -> Value {
    let mut v = serde_json::to_value(settings).expect("settings serialize to JSON");
    if let Value::Object(map) = &mut v {
        map.remove("with_losses");
    }
    v
}

fn core(e: mqcavity_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Applies overrides, fills every default, and validates the result.
pub fn resolve(mut cfg: RunConfig, overrides: &Overrides) -> Result<Resolved, CliError> {
    let experiment = match (overrides.experiment, cfg.experiment) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config(format!(
                "experiment tag \"{a}\" on the command line disagrees with \"{b}\" in the config"
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::Config("no experiment tag given".into())),
    };
    cfg.experiment = Some(experiment);
    if let Some(out) = &overrides.out {
        cfg.output.prefix = out.clone();
    }
    if let Some(l) = overrides.losses {
        cfg.losses = l;
    }
    if cfg.output.prefix.is_empty() {
        return Err(CliError::Config("output.prefix must be non-empty".into()));
    }
    if cfg.losses && !experiment.supports_losses() {
        return Err(CliError::Config(format!(
            "losses cannot be enabled for the closed-system experiment \"{experiment}\""
        )));
    }
    if cfg.pulses.is_some() && experiment != Experiment::Evolve {
        return Err(CliError::Config(
            "pulses are only accepted by the evolve experiment".into(),
        ));
    }

    cfg.system.validate().map_err(core)?;
    cfg.solver.validate().map_err(core)?;

    let allowed = experiment.sweep_parameters();
    for (i, s) in cfg.sweeps.iter().enumerate() {
        if !allowed.contains(&s.parameter.as_str()) {
            return Err(CliError::Config(format!(
                "sweeps[{i}].parameter \"{}\" is not used by \"{experiment}\" (expected one of {allowed:?})",
                s.parameter
            )));
        }
        if cfg.sweeps[..i].iter().any(|o| o.parameter == s.parameter) {
            return Err(CliError::Config(format!(
                "sweep \"{}\" given more than once",
                s.parameter
            )));
        }
        s.validate().map_err(core)?;
    }
    let params = cfg.system.clone();
    let sweep = |name: &str| -> SweepSpec {
        cfg.sweeps
            .iter()
            .find(|s| s.parameter == name)
            .cloned()
            .or_else(|| default_sweep(name, &params))
            .expect("every sweep parameter has a default")
    };

    let (plan, settings) = match experiment {
        Experiment::Spectrum => {
            if !matches!(&cfg.settings, Value::Null)
                && !matches!(&cfg.settings, Value::Object(m) if m.is_empty())
            {
                return Err(CliError::Config("spectrum takes no settings".into()));
            }
            let g_f = cfg.sweeps.iter().find(|s| s.parameter == "g_f").cloned();
            (Plan::Spectrum { g_f }, Value::Object(Default::default()))
        }
        Experiment::QubitSpectrum => {
            let s =
                settings_as::<SpectrumSettings>(&cfg.settings, "qubit-spectrum")?.resolved(&params);
            s.validate().map_err(core)?;
            let v = to_value(&s);
            (
                Plan::QubitSpectrum {
                    settings: s,
                    nu_q: sweep("nu_q"),
                },
                v,
            )
        }
        Experiment::Iswap => {
            let s = settings_as::<IswapSettings>(&cfg.settings, "iswap")?.resolved(&params);
            s.validate().map_err(core)?;
            let v = to_value(&s);
            (Plan::Iswap(s), v)
        }
        Experiment::HoldSweep => {
            let mut s = settings_as::<HoldSettings>(&cfg.settings, "hold-sweep")?;
            s.with_losses = cfg.losses;
            s.validate().map_err(core)?;
            let v = to_value(&s);
            (
                Plan::Hold {
                    settings: s,
                    t_hold: sweep("t_hold"),
                },
                v,
            )
        }
        Experiment::RampSweep | Experiment::Contour => {
            let base = if experiment == Experiment::Contour {
                RampSettings::contour()
            } else {
                RampSettings::default()
            };
            let s: RampSettings = match &cfg.settings {
                Value::Null => base,
                Value::Object(map) => {
                    // merge user keys over the experiment's own defaults
                    let mut merged = serde_json::to_value(&base).expect("serializable");
                    if let Value::Object(m) = &mut merged {
                        for (k, v) in map {
                            if !m.contains_key(k) {
                                return Err(CliError::Config(format!(
                                    "settings: unknown field `{k}`"
                                )));
                            }
                            m.insert(k.clone(), v.clone());
                        }
                    }
                    serde_json::from_value(merged)
                        .map_err(|e| CliError::Config(format!("settings ({experiment}): {e}")))?
                }
                _ => return Err(CliError::Config("settings must be an object".into())),
            };
            s.validate().map_err(core)?;
            let v = to_value(&s);
            let ramp = sweep("ramp");
            let plan = if experiment == Experiment::Contour {
                Plan::Contour { settings: s, ramp }
            } else {
                Plan::Ramp { settings: s, ramp }
            };
            (plan, v)
        }
        Experiment::Probe => {
            let s = settings_as::<ProbeSettings>(&cfg.settings, "probe")?;
            s.validate().map_err(core)?;
            let v = to_value(&s);
            (
                Plan::Probe {
                    settings: s,
                    nu_probe: sweep("nu_probe"),
                },
                v,
            )
        }
        Experiment::Ramsey | Experiment::Stark => {
            let mut s =
                settings_as::<RamseySettings>(&cfg.settings, experiment.tag())?.resolved(&params);
            s.with_losses = cfg.losses;
            s.validate().map_err(core)?;
            let v = to_value(&s);
            let tau = sweep("tau");
            let plan = if experiment == Experiment::Stark {
                Plan::Stark {
                    settings: s,
                    nu_q2: sweep("nu_q2"),
                    tau,
                }
            } else {
                Plan::Ramsey { settings: s, tau }
            };
            (plan, v)
        }
        Experiment::Evolve => {
            let mut s = settings_as::<EvolveSettings>(&cfg.settings, "evolve")?;
            if !s.q1_segments.is_empty() || !s.q2_segments.is_empty() {
                return Err(CliError::Config(
                    "evolve segments go in the top-level \"pulses\" key".into(),
                ));
            }
            let pulses = cfg.pulses.clone().unwrap_or_default();
            s.q1_segments = pulses.q1;
            s.q2_segments = pulses.q2;
            s.with_losses = cfg.losses;
            s.validate().map_err(core)?;
            for seg in s.q1_segments.iter().chain(&s.q2_segments) {
                seg.validate().map_err(core)?;
            }
            let s = s.resolved(&params);
            cfg.pulses = Some(Pulses {
                q1: s.q1_segments.clone(),
                q2: s.q2_segments.clone(),
            });
            let mut v = to_value(&s);
            if let Value::Object(map) = &mut v {
                map.insert("q1_segments".into(), Value::Array(vec![]));
                map.insert("q2_segments".into(), Value::Array(vec![]));
            }
            (Plan::Evolve(s), v)
        }
    };

    // record every sweep the plan uses, in a fixed order
    cfg.sweeps = match &plan {
        Plan::Spectrum { g_f } => g_f.iter().cloned().collect(),
        Plan::QubitSpectrum { nu_q, .. } => vec![nu_q.clone()],
        Plan::Iswap(_) | Plan::Evolve(_) => vec![],
        Plan::Hold { t_hold, .. } => vec![t_hold.clone()],
        Plan::Ramp { ramp, .. } | Plan::Contour { ramp, .. } => vec![ramp.clone()],
        Plan::Probe { nu_probe, .. } => vec![nu_probe.clone()],
        Plan::Ramsey { tau, .. } => vec![tau.clone()],
        Plan::Stark { nu_q2, tau, .. } => vec![nu_q2.clone(), tau.clone()],
    };
    cfg.settings = settings;
    Ok(Resolved {
        config: cfg,
        experiment,
        plan,
    })
}

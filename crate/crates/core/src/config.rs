//! Run configuration: a flat JSON document plus per-field overrides.
//!
//! [`RawConfig`] is what a file or the command line supplies (every key
//! optional); [`RunConfig`] is the resolved, validated form. A serialized
//! `RunConfig` is itself a valid config file, which is how sidecar metadata
//! reproduces a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{DqdError, Result};
use crate::lindblad::SystemParams;
use crate::lyapunov::ControlConfig;
use crate::lzs::LzsPulseParams;
use crate::quantum::{PhysConstants, HBAR_UEV_PS};
use crate::sweep::{SweepAxis, SweepBase, SweepMetric, SweepMode, SweepParam, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RunMode {
    #[default]
    #[serde(rename = "lyapunov")]
    Lyapunov,
    #[serde(rename = "lzs")]
    Lzs,
    #[serde(rename = "analytic-lzs", alias = "analytic_lzs")]
    AnalyticLzs,
    #[serde(rename = "sweep")]
    Sweep,
}

impl std::str::FromStr for RunMode {
    type Err = DqdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lyapunov" => Ok(Self::Lyapunov),
            "lzs" => Ok(Self::Lzs),
            "analytic-lzs" | "analytic_lzs" => Ok(Self::AnalyticLzs),
            "sweep" => Ok(Self::Sweep),
            other => Err(DqdError::invalid(
                "mode",
                format!("unknown mode {other:?} (lyapunov, lzs, analytic-lzs, sweep)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = DqdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(DqdError::invalid(
                "format",
                format!("unknown format {other:?} (csv, json)"),
            )),
        }
    }
}

/// Coherence time in ps; JSON accepts a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceTime(pub f64);

impl Serialize for CoherenceTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for CoherenceTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(Self(x)),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity") => Ok(Self(f64::INFINITY)),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    pub metric: SweepMetric,
    #[serde(default = "default_sweep_mode")]
    pub base_mode: SweepMode,
    #[serde(default)]
    pub p_l_floor: Option<f64>,
}

fn default_sweep_mode() -> SweepMode {
    SweepMode::Lyapunov
}

/// Unresolved configuration. Every key is optional; later layers override
/// earlier ones through [`RawConfig::merge`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub mode: Option<RunMode>,
    pub eps0: Option<f64>,
    pub delta: Option<f64>,
    pub t1: Option<CoherenceTime>,
    pub t2: Option<CoherenceTime>,
    pub hbar: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub theta: Option<f64>,
    pub f_max: Option<f64>,
    pub hold_dt: Option<f64>,
    pub substeps: Option<usize>,
    pub deadpoint_kick: Option<f64>,
    pub v_tolerance: Option<f64>,
    pub gain_unit: Option<f64>,
    pub t_end: Option<f64>,
    pub amplitude_a: Option<f64>,
    pub t_r: Option<f64>,
    pub cycles: Option<u32>,
    pub t_p_min: Option<f64>,
    pub t_p_max: Option<f64>,
    pub t_p_steps: Option<usize>,
    pub sweep: Option<SweepSection>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RawConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| DqdError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DqdError::io(path, e))?;
        Self::from_json(&text).map_err(|e| DqdError::Config(format!("{}: {e}", path.display())))
    }

    /// Overlay `other` on `self`; keys set in `other` win.
    pub fn merge(mut self, other: RawConfig) -> Self {
        merge_fields!(self, other;
            mode, eps0, delta, t1, t2, hbar, g1, g2, theta, f_max, hold_dt, substeps,
            deadpoint_kick, v_tolerance, gain_unit, t_end, amplitude_a, t_r, cycles,
            t_p_min, t_p_max, t_p_steps, sweep, out, format,
        );
        self
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let d = RunConfig::defaults();
        let sweep_sets = |p: SweepParam| {
            self.sweep.and_then(|s| {
                [s.axis1, s.axis2]
                    .into_iter()
                    .find(|a| a.param == p)
                    .map(|a| a.min)
            })
        };
        let mode = self.mode.unwrap_or(d.mode);
        let delta = match (self.delta, sweep_sets(SweepParam::Delta)) {
            (Some(x), _) | (None, Some(x)) => x,
            (None, None) => return Err(missing("delta")),
        };
        let cfg = RunConfig {
            mode,
            eps0: self.eps0.unwrap_or(d.eps0),
            delta,
            t1: self.t1.unwrap_or(d.t1),
            t2: self.t2.unwrap_or(d.t2),
            hbar: self.hbar.unwrap_or(d.hbar),
            g1: self.g1.unwrap_or(d.g1),
            g2: self.g2.unwrap_or(d.g2),
            theta: self.theta.unwrap_or(d.theta),
            f_max: self.f_max.unwrap_or(d.f_max),
            hold_dt: self.hold_dt.unwrap_or(d.hold_dt),
            substeps: self.substeps.unwrap_or(d.substeps),
            deadpoint_kick: self.deadpoint_kick.unwrap_or(d.deadpoint_kick),
            v_tolerance: self.v_tolerance.unwrap_or(d.v_tolerance),
            gain_unit: self.gain_unit.or(d.gain_unit),
            t_end: self.t_end.unwrap_or(d.t_end),
            amplitude_a: self.amplitude_a.or(sweep_sets(SweepParam::AmplitudeA)),
            t_r: self
                .t_r
                .or(sweep_sets(SweepParam::RiseTime))
                .or(sweep_sets(SweepParam::TEnd).map(|t| 0.5 * t)),
            cycles: self.cycles.unwrap_or(d.cycles),
            t_p_min: self.t_p_min.unwrap_or(d.t_p_min),
            t_p_max: self.t_p_max.unwrap_or(d.t_p_max),
            t_p_steps: self.t_p_steps.unwrap_or(d.t_p_steps),
            sweep: self.sweep,
            out: self.out,
            format: self.format.unwrap_or(d.format),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn missing(key: &str) -> DqdError {
    DqdError::invalid(key, "required key is missing")
}

/// Resolved configuration for one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: RunMode,
    pub eps0: f64,
    pub delta: f64,
    pub t1: CoherenceTime,
    pub t2: CoherenceTime,
    pub hbar: f64,
    pub g1: f64,
    pub g2: f64,
    pub theta: f64,
    pub f_max: f64,
    pub hold_dt: f64,
    pub substeps: usize,
    pub deadpoint_kick: f64,
    pub v_tolerance: f64,
    pub gain_unit: Option<f64>,
    /// Lyapunov run length (ps).
    pub t_end: f64,
    pub amplitude_a: Option<f64>,
    pub t_r: Option<f64>,
    pub cycles: u32,
    /// Pulse-duration grid for analytic curves (ps).
    pub t_p_min: f64,
    pub t_p_max: f64,
    pub t_p_steps: usize,
    pub sweep: Option<SweepSection>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    /// Defaults for every key except `delta`, which has none.
    fn defaults() -> Self {
        let c = ControlConfig::default();
        Self {
            mode: RunMode::Lyapunov,
            eps0: 90.0,
            delta: f64::NAN,
            t1: CoherenceTime(5000.0),
            t2: CoherenceTime(5000.0),
            hbar: HBAR_UEV_PS,
            g1: c.g1,
            g2: c.g2,
            theta: c.theta,
            f_max: c.f_max,
            hold_dt: c.hold_dt,
            substeps: c.substeps,
            deadpoint_kick: c.deadpoint_kick,
            v_tolerance: c.v_tolerance,
            gain_unit: c.gain_unit,
            t_end: 150.0,
            amplitude_a: None,
            t_r: None,
            cycles: 1,
            t_p_min: 0.0,
            t_p_max: 200.0,
            t_p_steps: 401,
            sweep: None,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        SystemParams::from_coherence_times(self.eps0, self.delta, self.t1.0, self.t2.0)?
            .with_hbar(self.hbar)
    }

    pub fn control_config(&self) -> ControlConfig {
        ControlConfig {
            g1: self.g1,
            g2: self.g2,
            theta: self.theta,
            f_max: self.f_max,
            hold_dt: self.hold_dt,
            substeps: self.substeps,
            deadpoint_kick: self.deadpoint_kick,
            v_tolerance: self.v_tolerance,
            gain_unit: self.gain_unit,
        }
    }

    pub fn pulse(&self) -> Result<LzsPulseParams> {
        let p = LzsPulseParams {
            amplitude_a: self.amplitude_a.ok_or_else(|| missing("amplitude_a"))?,
            t_r: self.t_r.ok_or_else(|| missing("t_r"))?,
            cycles: self.cycles,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let s = self.sweep.ok_or_else(|| missing("sweep"))?;
        let pulse = match s.base_mode {
            SweepMode::Lzs => self.pulse()?,
            // unused by Lyapunov cells
            SweepMode::Lyapunov => LzsPulseParams {
                amplitude_a: self.amplitude_a.unwrap_or(1.0),
                t_r: self.t_r.unwrap_or(1.0),
                cycles: self.cycles,
            },
        };
        let spec = SweepSpec {
            axis1: s.axis1,
            axis2: s.axis2,
            metric: s.metric,
            base: SweepBase {
                mode: s.base_mode,
                params: self.system_params()?,
                control: self.control_config(),
                pulse,
                t_end: self.t_end,
            },
            p_l_floor: s.p_l_floor,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(DqdError::invalid(name, "must be finite"))
            }
        };
        finite("eps0", self.eps0)?;
        finite("delta", self.delta)?;
        if self.delta < 0.0 {
            return Err(DqdError::invalid("delta", "must be >= 0"));
        }
        if !(self.t1.0 > 0.0) {
            return Err(DqdError::invalid("T1", "must be > 0"));
        }
        if !(self.t2.0 > 0.0) {
            return Err(DqdError::invalid("T2", "must be > 0"));
        }
        PhysConstants::new(self.hbar)?;
        self.control_config().validate()?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(DqdError::invalid("t_end", "must be finite and > 0"));
        }
        match self.mode {
            RunMode::Lyapunov => {}
            RunMode::Lzs => {
                self.pulse()?;
            }
            RunMode::AnalyticLzs => {
                let a = self.amplitude_a.ok_or_else(|| missing("amplitude_a"))?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(DqdError::invalid("amplitude_a", "must be finite and > 0"));
                }
                if !(self.t_p_min >= 0.0 && self.t_p_max > self.t_p_min) {
                    return Err(DqdError::invalid(
                        "t_p_min/t_p_max",
                        "need 0 <= t_p_min < t_p_max",
                    ));
                }
                if self.t_p_steps < 2 {
                    return Err(DqdError::invalid("t_p_steps", "must be >= 2"));
                }
            }
            RunMode::Sweep => {
                self.sweep_spec()?;
            }
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| DqdError::Serialization(e.to_string()))
    }
}

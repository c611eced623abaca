//! Run configuration: a TOML file with optional sections, then command-line
//! overrides on top.
//!
//! ```toml
//! [selection]
//! phi = "pi/6"
//! delta = "5pi/12"
//!
//! [pointer]
//! r = 2.0
//! theta = "pi/6"
//! sigma = 1.0
//!
//! [coupling]
//! Gamma = 1.0
//!
//! [run]
//! N = 1
//! step = 1e-4
//!
//! [truncation]
//! max_n_max = 2048
//!
//! [sweep]
//! axis = "Gamma"
//! start = 0.05
//! stop = 1.0
//! count = 101
//! outputs = ["dx", "chi"]
//! ```
//!
//! Angles accept plain numbers or multiples of pi: `"pi"`, `"pi/6"`,
//! `"5pi/12"`, `"5*pi/12"`, `"-pi/2"`, `"0.25pi"`.

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fock::TruncationPolicy;
use crate::metrology::DEFAULT_STEP;

use super::{Axis, Output, ParameterRecord, SweepSpec};

pub fn parse_angle(text: &str) -> Result<f64> {
    let bad = || {
        Error::invalid(
            "angle",
            format!("cannot parse `{text}` (examples: 0.5, pi/6, 5pi/12)"),
        )
    };
    let s: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase();
    if s.is_empty() {
        return Err(bad());
    }
    let Some(pos) = s.find("pi") else {
        return s
            .parse::<f64>()
            .map_err(|_| bad())
            .and_then(|v| finite(v).ok_or_else(bad));
    };
    let coeff = match s[..pos].trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let divisor = match &s[pos + 2..] {
        "" => 1.0,
        rest => {
            let d = rest
                .strip_prefix('/')
                .ok_or_else(bad)?
                .parse::<f64>()
                .map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            d
        }
    };
    finite(coeff * PI / divisor).ok_or_else(bad)
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
enum Angle {
    Number(f64),
    Text(String),
}

impl Angle {
    fn value(&self) -> Result<f64> {
        match self {
            Angle::Number(v) => Ok(*v),
            Angle::Text(s) => parse_angle(s),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    selection: SelectionSection,
    #[serde(default)]
    pointer: PointerSection,
    #[serde(default)]
    coupling: CouplingSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    truncation: TruncationSection,
    #[serde(default)]
    sweep: SweepSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionSection {
    phi: Option<Angle>,
    delta: Option<Angle>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointerSection {
    r: Option<f64>,
    theta: Option<Angle>,
    sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingSection {
    #[serde(rename = "Gamma", alias = "gamma")]
    gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(rename = "N", alias = "n_trials")]
    n_trials: Option<u64>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncationSection {
    initial_n_max: Option<usize>,
    growth_factor: Option<usize>,
    tail_tolerance: Option<f64>,
    guard_band: Option<usize>,
    max_n_max: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub preset: Option<String>,
    pub points: Option<usize>,
    pub axis: Option<String>,
    pub start: Option<Endpoint>,
    pub stop: Option<Endpoint>,
    pub count: Option<usize>,
    pub outputs: Option<Vec<String>>,
}

/// Range endpoint; a number or a pi expression (for phi sweeps).
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct Endpoint(Angle);

impl Endpoint {
    pub fn parse(text: &str) -> Result<Self> {
        parse_angle(text).map(|v| Endpoint(Angle::Number(v)))
    }

    pub fn value(&self) -> Result<f64> {
        self.0.value()
    }
}

/// Command-line overrides; `None` leaves the file (or default) value.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Overrides {
    pub phi: Option<String>,
    pub delta: Option<String>,
    pub r: Option<f64>,
    pub theta: Option<String>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub n_trials: Option<u64>,
    pub step: Option<f64>,
    pub max_n_max: Option<usize>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub point: ParameterRecord,
    pub step: f64,
    pub policy: TruncationPolicy,
    pub sweep: SweepSection,
}

/// Defaults: the fig1 preset pointer (`r = 2, theta = delta = pi/6`, unit width)
/// with `phi = pi/6`, `Gamma = 1`, `N = 1`.
const DEFAULTS: (f64, f64, f64, f64, f64, f64, u64) =
    (PI / 6.0, PI / 6.0, 2.0, PI / 6.0, 1.0, 1.0, 1);

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self> {
        let file: FileConfig =
            toml::from_str(text).map_err(|e| Error::invalid("config", e.message().to_owned()))?;
        Self::resolve(file, overrides)
    }

    pub fn from_path(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn from_overrides(overrides: &Overrides) -> Result<Self> {
        Self::resolve(FileConfig::default(), overrides)
    }

    fn resolve(file: FileConfig, o: &Overrides) -> Result<Self> {
        let (d_phi, d_delta, d_r, d_theta, d_sigma, d_gamma, d_n) = DEFAULTS;
        let angle = |cli: &Option<String>, file: &Option<Angle>, default: f64| -> Result<f64> {
            match (cli, file) {
                (Some(s), _) => parse_angle(s),
                (None, Some(a)) => a.value(),
                (None, None) => Ok(default),
            }
        };
        let phi = angle(&o.phi, &file.selection.phi, d_phi)?;
        let delta = angle(&o.delta, &file.selection.delta, d_delta)?;
        let theta = angle(&o.theta, &file.pointer.theta, d_theta)?;
        let r = o.r.or(file.pointer.r).unwrap_or(d_r);
        let sigma = o.sigma.or(file.pointer.sigma).unwrap_or(d_sigma);
        let gamma = o.gamma.or(file.coupling.gamma).unwrap_or(d_gamma);
        let n_trials = o.n_trials.or(file.run.n_trials).unwrap_or(d_n);
        let step = o.step.or(file.run.step).unwrap_or(DEFAULT_STEP);
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid(
                "step",
                format!("must be positive and finite, got {step}"),
            ));
        }

        let t = &file.truncation;
        let base = TruncationPolicy::default();
        let policy = TruncationPolicy {
            initial_n_max: t.initial_n_max.unwrap_or(base.initial_n_max),
            growth_factor: t.growth_factor.unwrap_or(base.growth_factor),
            tail_tolerance: t.tail_tolerance.unwrap_or(base.tail_tolerance),
            guard_band: t.guard_band.unwrap_or(base.guard_band),
            max_n_max: o.max_n_max.or(t.max_n_max).unwrap_or(base.max_n_max),
        };
        policy.validate()?;

        Ok(Self {
            point: ParameterRecord::new(phi, delta, r, theta, sigma, gamma, n_trials)?,
            step,
            policy,
            sweep: file.sweep,
        })
    }

    /// The custom sweep described by the `[sweep]` section, if it names an axis.
    pub fn custom_sweep(&self) -> Result<Option<SweepSpec>> {
        let s = &self.sweep;
        let Some(axis) = &s.axis else {
            return Ok(None);
        };
        let axis: Axis = axis.parse()?;
        let start = s
            .start
            .as_ref()
            .ok_or_else(|| Error::invalid("sweep.start", "missing"))?
            .value()?;
        let stop = s
            .stop
            .as_ref()
            .ok_or_else(|| Error::invalid("sweep.stop", "missing"))?
            .value()?;
        let count = s.count.unwrap_or(super::DEFAULT_POINTS);
        let outputs = match &s.outputs {
            Some(list) => list
                .iter()
                .map(|o| o.parse())
                .collect::<Result<Vec<Output>>>()?,
            None => vec![Output::Dx, Output::Dp],
        };
        SweepSpec::new(
            axis.name().to_owned(),
            axis,
            start,
            stop,
            count,
            self.point,
            outputs,
        )
        .map(Some)
    }
}

//! Parameter sweeps, figure presets, CSV/SVG emission and the `verify` suite.

pub mod audit;
pub mod config;
pub mod output;
pub mod verify;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analytic::{self, ShiftResult};
use crate::error::{Error, Result};
use crate::fock::{self, TruncationPolicy};
use crate::metrology::{self, FisherReport, SnrReport};
use crate::model::{ComplexValue, Coupling, PointerParams, SelectionParams};

/// Default grid density for presets.
pub const DEFAULT_POINTS: usize = 201;

/// A full parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterRecord {
    pub sel: SelectionParams,
    pub pointer: PointerParams,
    pub coupling: Coupling,
    pub n_trials: u64,
}

impl ParameterRecord {
    pub fn new(
        phi: f64,
        delta: f64,
        r: f64,
        theta: f64,
        sigma: f64,
        gamma: f64,
        n_trials: u64,
    ) -> Result<Self> {
        if n_trials == 0 {
            return Err(Error::invalid("N", "number of trials must be at least 1"));
        }
        Ok(Self {
            sel: SelectionParams::new(phi, delta)?,
            pointer: PointerParams::new(r, theta, sigma)?,
            coupling: Coupling::new(gamma)?,
            n_trials,
        })
    }

    /// Copy with one axis coordinate replaced.
    pub fn with(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut out = *self;
        match axis {
            Axis::Phi => out.sel = SelectionParams::new(value, self.sel.delta())?,
            Axis::Gamma => out.coupling = Coupling::new(value)?,
            Axis::R => {
                out.pointer = PointerParams::new(value, self.pointer.theta(), self.pointer.sigma())?
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Phi,
    Gamma,
    R,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Phi => "phi",
            Axis::Gamma => "Gamma",
            Axis::R => "r",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(Axis::Phi),
            "Gamma" | "gamma" => Ok(Axis::Gamma),
            "r" => Ok(Axis::R),
            other => Err(Error::invalid(
                "axis",
                format!("unknown axis `{other}` (phi, Gamma, r)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Dx,
    Dp,
    Transition,
    Chi,
    Qfi,
    Crb,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::Dx,
        Output::Dp,
        Output::Transition,
        Output::Chi,
        Output::Qfi,
        Output::Crb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Dx => "dx",
            Output::Dp => "dp",
            Output::Transition => "transition",
            Output::Chi => "chi",
            Output::Qfi => "qfi",
            Output::Crb => "crb",
        }
    }
}

impl FromStr for Output {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Output::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::invalid("outputs", format!("unknown output `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig1,
        Preset::Fig3a,
        Preset::Fig3b,
        Preset::Fig4,
        Preset::Fig5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
        }
    }

    /// One spec per plotted series.
    pub fn specs(self, points: usize) -> Result<Vec<SweepSpec>> {
        let sixth = PI / 6.0;
        let weak_series = [PI / 12.0, PI / 6.0, PI / 4.0, PI / 3.0];
        let build =
            |axis, start, stop, fixed: ParameterRecord, series: String, outputs: &[Output]| {
                SweepSpec::new(series, axis, start, stop, points, fixed, outputs.to_vec())
            };
        let mut specs = Vec::new();
        match self {
            Preset::Fig1 => {
                for g in [0.01, 0.5, 1.0, 2.0, 5.0, 20.0] {
                    let fixed = ParameterRecord::new(0.0, sixth, 2.0, sixth, 1.0, g, 1)?;
                    specs.push(build(
                        Axis::Phi,
                        0.0,
                        PI,
                        fixed,
                        format!("Gamma={g}"),
                        &[Output::Dx, Output::Dp],
                    )?);
                }
            }
            Preset::Fig3a => {
                for (k, phi) in weak_series.into_iter().enumerate() {
                    let fixed =
                        ParameterRecord::new(phi, 5.0 * PI / 12.0, 5.0, PI / 2.0, 1.0, 0.05, 1)?;
                    let label = format!("phi={}pi/12", k + 1);
                    specs.push(build(
                        Axis::Gamma,
                        0.05,
                        1.0,
                        fixed,
                        label,
                        &[Output::Dx, Output::Chi],
                    )?);
                }
            }
            Preset::Fig3b => {
                for (k, phi) in weak_series.into_iter().enumerate() {
                    let fixed =
                        ParameterRecord::new(phi, 5.0 * PI / 12.0, 0.0, PI / 2.0, 1.0, 0.3, 1)?;
                    let label = format!("phi={}pi/12", k + 1);
                    specs.push(build(
                        Axis::R,
                        0.0,
                        10.0,
                        fixed,
                        label,
                        &[Output::Dx, Output::Chi],
                    )?);
                }
            }
            Preset::Fig4 => {
                for (k, phi) in weak_series.into_iter().chain([PI / 2.0]).enumerate() {
                    let fixed = ParameterRecord::new(phi, sixth, 2.0, sixth, 1.0, 0.05, 1)?;
                    let label = format!("phi={}pi/12", if k < 4 { k + 1 } else { 6 });
                    specs.push(build(
                        Axis::Gamma,
                        0.05,
                        3.0,
                        fixed,
                        label,
                        &[Output::Qfi, Output::Crb],
                    )?);
                }
            }
            Preset::Fig5 => {
                for g in [0.1, 0.5, 1.0, 2.0] {
                    let fixed = ParameterRecord::new(sixth, sixth, 0.0, sixth, 1.0, g, 1)?;
                    specs.push(build(
                        Axis::R,
                        0.0,
                        5.0,
                        fixed,
                        format!("Gamma={g}"),
                        &[Output::Qfi, Output::Crb],
                    )?);
                }
            }
        }
        Ok(specs)
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("preset", format!("unknown preset `{s}`")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub series: String,
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub fixed: ParameterRecord,
    /// Sorted, deduplicated.
    pub outputs: Vec<Output>,
}

impl SweepSpec {
    pub fn new(
        series: String,
        axis: Axis,
        start: f64,
        stop: f64,
        count: usize,
        fixed: ParameterRecord,
        mut outputs: Vec<Output>,
    ) -> Result<Self> {
        outputs.sort();
        outputs.dedup();
        let spec = Self {
            series,
            axis,
            start,
            stop,
            count,
            fixed,
            outputs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::invalid("count", "a sweep needs at least 2 points"));
        }
        if self.outputs.is_empty() {
            return Err(Error::invalid("outputs", "no outputs requested"));
        }
        // Both endpoints must be valid coordinates; the domains are intervals.
        self.fixed.with(self.axis, self.start)?;
        self.fixed.with(self.axis, self.stop)?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last
                }
            })
            .collect()
    }

    pub fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }

    fn wants_shifts(&self) -> bool {
        self.wants(Output::Dx) || self.wants(Output::Dp) || self.wants(Output::Transition)
    }

    fn wants_fisher(&self) -> bool {
        self.wants(Output::Qfi) || self.wants(Output::Crb)
    }
}

/// Closed-form and oracle shift values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftColumns {
    pub analytic: ShiftResult,
    pub oracle_dx: f64,
    pub oracle_dp: f64,
    pub oracle_transition: ComplexValue,
    pub oracle_beta_inv_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub index: usize,
    pub series: String,
    pub axis_value: f64,
    pub point: Option<ParameterRecord>,
    pub shifts: Option<ShiftColumns>,
    pub snr: Option<SnrReport>,
    pub fisher: Option<FisherReport>,
    pub n_max: Option<usize>,
    pub tail_mass: Option<f64>,
    /// Failures at this point, as `Kind: message`; empty when all outputs succeeded.
    pub errors: Vec<String>,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn status(&self) -> String {
        if self.errors.is_empty() {
            "ok".to_owned()
        } else {
            self.errors.join("; ")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub outputs: Vec<Output>,
    pub rows: Vec<Row>,
}

fn flag(errors: &mut Vec<String>, e: &Error) {
    errors.push(format!("{}: {e}", e.kind()));
}

fn evaluate_row(
    spec: &SweepSpec,
    index: usize,
    value: f64,
    policy: &TruncationPolicy,
    step: f64,
) -> Row {
    let mut row = Row {
        index,
        series: spec.series.clone(),
        axis_value: value,
        point: None,
        shifts: None,
        snr: None,
        fisher: None,
        n_max: None,
        tail_mass: None,
        errors: Vec::new(),
    };
    let point = match spec.fixed.with(spec.axis, value) {
        Ok(p) => p,
        Err(e) => {
            flag(&mut row.errors, &e);
            return row;
        }
    };
    row.point = Some(point);
    let (sel, pointer, coupling) = (&point.sel, &point.pointer, &point.coupling);

    if spec.wants_shifts() {
        let closed = analytic::pointer_shifts(sel, pointer, coupling);
        let oracle = fock::evaluate(sel, pointer, coupling, policy);
        match (closed, oracle) {
            (Ok(closed), Ok(oracle)) => {
                row.n_max = Some(oracle.n_max);
                row.tail_mass = Some(oracle.tail_mass);
                row.shifts = Some(ShiftColumns {
                    analytic: closed,
                    oracle_dx: oracle.dx,
                    oracle_dp: oracle.dp,
                    oracle_transition: oracle.transition_value,
                    oracle_beta_inv_sq: oracle.final_state.beta_inv_sq,
                });
            }
            (Err(e), _) | (_, Err(e)) => flag(&mut row.errors, &e),
        }
    }
    if spec.wants(Output::Chi) {
        match metrology::snr_ratio(sel, pointer, coupling, point.n_trials, policy) {
            Ok(r) => row.snr = Some(r),
            Err(e) => flag(&mut row.errors, &e),
        }
    }
    if spec.wants_fisher() {
        match metrology::qfi(sel, pointer, coupling, step, point.n_trials, policy) {
            Ok(r) => {
                row.n_max = Some(row.n_max.map_or(r.n_max, |n| n.max(r.n_max)));
                row.fisher = Some(r);
            }
            Err(e) => flag(&mut row.errors, &e),
        }
    }
    if row.n_max.is_none() && row.errors.is_empty() {
        // chi only: certify with the oracle's truncation at this point
        if let Ok(ev) = fock::evaluate(sel, pointer, coupling, policy) {
            row.n_max = Some(ev.n_max);
            row.tail_mass = Some(ev.tail_mass);
        }
    }
    row
}

/// Evaluates every grid point of every spec. Rows come back in spec order and
/// grid order whatever the thread count; per-point failures become flagged rows.
pub fn run_sweep(specs: &[SweepSpec], policy: &TruncationPolicy, step: f64) -> Result<SweepTable> {
    policy.validate()?;
    if specs.is_empty() {
        return Err(Error::invalid("specs", "nothing to sweep"));
    }
    let mut outputs: Vec<Output> = Vec::new();
    for spec in specs {
        spec.validate()?;
        outputs.extend(&spec.outputs);
    }
    outputs.sort();
    outputs.dedup();

    let jobs: Vec<(usize, usize, f64)> = specs
        .iter()
        .enumerate()
        .flat_map(|(s, spec)| {
            spec.grid()
                .into_iter()
                .enumerate()
                .map(move |(i, v)| (s, i, v))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, i, v)| evaluate_row(&specs[s], i, v, policy, step))
        .collect();
    Ok(SweepTable { outputs, rows })
}

/// Applies the `SPAC_THREADS` override to the global rayon pool. Returns the
/// thread count requested, if any.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var("SPAC_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::invalid("SPAC_THREADS", format!("not a thread count: `{raw}`")))?;
    if n == 0 {
        return Err(Error::invalid("SPAC_THREADS", "must be at least 1"));
    }
    // A pool may already exist (tests, repeated calls); keep it.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(Some(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed() -> ParameterRecord {
        ParameterRecord::new(PI / 3.0, PI / 6.0, 2.0, PI / 6.0, 1.0, 0.5, 1).unwrap()
    }

    #[test]
    fn degenerate_range_gives_identical_rows() {
        let spec = SweepSpec::new(
            "s".into(),
            Axis::Gamma,
            0.5,
            0.5,
            2,
            fixed(),
            vec![Output::Dx, Output::Transition],
        )
        .unwrap();
        let table = run_sweep(
            &[spec],
            &TruncationPolicy::default(),
            metrology::DEFAULT_STEP,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 2);
        let (a, b) = (&table.rows[0], &table.rows[1]);
        assert_eq!(a.shifts, b.shifts);
        assert_eq!(a.point, b.point);
    }

    #[test]
    fn spec_validation() {
        let f = fixed();
        assert!(SweepSpec::new("s".into(), Axis::Phi, 0.0, PI, 1, f, vec![Output::Dx]).is_err());
        assert!(SweepSpec::new("s".into(), Axis::Phi, 0.0, 4.0, 5, f, vec![Output::Dx]).is_err());
        assert!(SweepSpec::new("s".into(), Axis::R, -1.0, 1.0, 5, f, vec![Output::Dx]).is_err());
        assert!(SweepSpec::new("s".into(), Axis::Gamma, 0.0, 1.0, 5, f, vec![]).is_err());
        let spec = SweepSpec::new(
            "s".into(),
            Axis::Gamma,
            0.0,
            1.0,
            5,
            f,
            vec![Output::Crb, Output::Dx, Output::Dx],
        )
        .unwrap();
        assert_eq!(spec.outputs, vec![Output::Dx, Output::Crb]);
        assert_eq!(spec.grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn per_point_failures_are_flagged() {
        // cos(delta) = 0 makes the reference shift vanish; phi = pi is orthogonal
        let f = ParameterRecord::new(PI / 3.0, PI / 2.0, 1.0, 0.0, 1.0, 0.5, 1).unwrap();
        let spec = SweepSpec::new(
            "s".into(),
            Axis::Phi,
            PI / 2.0,
            PI,
            3,
            f,
            vec![Output::Dx, Output::Chi],
        )
        .unwrap();
        let table = run_sweep(
            &[spec],
            &TruncationPolicy::default(),
            metrology::DEFAULT_STEP,
        )
        .unwrap();
        assert!(table.rows[0].status().starts_with("DegenerateReference"));
        assert!(table.rows[0].shifts.is_some());
        assert!(table.rows[2].status().starts_with("OrthogonalSelection"));
    }

    #[test]
    fn preset_shapes() {
        for preset in Preset::ALL {
            let specs = preset.specs(11).unwrap();
            assert!(!specs.is_empty());
            assert!(specs.iter().all(|s| s.count == 11));
            assert_eq!(preset.name().parse::<Preset>().unwrap(), preset);
        }
        let fig1 = Preset::Fig1.specs(DEFAULT_POINTS).unwrap();
        assert_eq!(fig1.len(), 6);
        assert_eq!(fig1[0].fixed.pointer.r(), 2.0);
        assert_eq!(
            Preset::Fig3b.specs(5).unwrap()[0].fixed.coupling.strength(),
            0.3
        );
    }
}

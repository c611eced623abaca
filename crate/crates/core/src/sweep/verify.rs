//! Invariant suites behind `spacmeter verify`.
//!
//! Checks compare the closed forms with the Fock oracle or with exact values
//! and decide the exit status. Findings (figure trends, the printed-formula
//! audit) are reported but never fail a run.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::analytic;
use crate::error::{Error, Result};
use crate::fock::{self, safe_subspace_dim, TruncationPolicy};
use crate::metrology;
use crate::model::{weak_value, ComplexValue, Coupling, PointerParams, SelectionParams};
use crate::relative_residual;

use super::audit::{audit_table, default_points, AuditRecord};
use super::ParameterRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(Error::invalid(
                "level",
                format!("unknown level `{other}` (fast, full)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst deviation seen (the check's own metric).
    pub worst: f64,
    pub tolerance: f64,
    pub points: usize,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} worst {:.3e} (tol {:.0e}, {} pts, {:.2} s){}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.points,
            self.seconds,
            if self.detail.is_empty() { "" } else { "  " },
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub name: &'static str,
    /// Whether the qualitative expectation holds.
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<CheckResult>,
    pub findings: Vec<Finding>,
    pub audit: Vec<AuditRecord>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Selection/pointer grid on which engine-agreement checks run.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub gammas: Vec<f64>,
    pub phis: Vec<f64>,
    pub deltas: Vec<f64>,
    pub rs: Vec<f64>,
    pub theta: f64,
}

impl Grid {
    /// Gamma 0..3 step 0.1, phi 0.05pi..0.95pi (10 points),
    /// delta in {0, pi/6, 5pi/12}, r in {0, 1, 2, 5}, theta = pi/6.
    pub fn standard() -> Self {
        Self {
            gammas: (0..=30).map(|k| k as f64 / 10.0).collect(),
            phis: (0..10).map(|k| (0.05 + 0.1 * k as f64) * PI).collect(),
            deltas: vec![0.0, PI / 6.0, 5.0 * PI / 12.0],
            rs: vec![0.0, 1.0, 2.0, 5.0],
            theta: PI / 6.0,
        }
    }

    pub fn reduced() -> Self {
        Self {
            gammas: vec![0.0, 0.5, 1.5, 3.0],
            phis: vec![0.05 * PI, 0.35 * PI, 0.65 * PI, 0.95 * PI],
            ..Self::standard()
        }
    }

    pub fn for_level(level: Level) -> Self {
        match level {
            Level::Fast => Self::reduced(),
            Level::Full => Self::standard(),
        }
    }

    pub fn points(&self) -> Vec<ParameterRecord> {
        let mut out = Vec::new();
        for &r in &self.rs {
            for &delta in &self.deltas {
                for &phi in &self.phis {
                    for &g in &self.gammas {
                        out.push(
                            ParameterRecord::new(phi, delta, r, self.theta, 1.0, g, 1)
                                .expect("grid points are valid"),
                        );
                    }
                }
            }
        }
        out
    }
}

/// Selection grid of the endpoint checks: phi in {pi/12, pi/6, pi/3, pi/2},
/// delta in {0, pi/6, pi/2}, r in {0, 2} (theta = pi/6).
pub fn endpoint_grid(gamma: f64) -> Vec<ParameterRecord> {
    let mut out = Vec::new();
    for phi in [PI / 12.0, PI / 6.0, PI / 3.0, PI / 2.0] {
        for delta in [0.0, PI / 6.0, PI / 2.0] {
            for r in [0.0, 2.0] {
                out.push(
                    ParameterRecord::new(phi, delta, r, PI / 6.0, 1.0, gamma, 1).expect("valid"),
                );
            }
        }
    }
    out
}

struct Tally {
    worst: f64,
    points: usize,
    failure: Option<String>,
}

/// Folds per-point deviations; evaluation errors count as failures.
fn tally<I>(items: I) -> Tally
where
    I: IntoParallelIterator<Item = Result<f64>>,
{
    let collected: Vec<Result<f64>> = items.into_par_iter().collect();
    let mut t = Tally {
        worst: 0.0,
        points: collected.len(),
        failure: None,
    };
    for item in collected {
        match item {
            Ok(v) if v.is_nan() => t.worst = f64::NAN,
            Ok(v) => t.worst = t.worst.max(v),
            Err(e) => {
                t.failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    t
}

fn check(
    name: &'static str,
    tolerance: f64,
    started: Instant,
    t: Tally,
    extra: String,
) -> CheckResult {
    let passed = t.failure.is_none() && t.worst <= tolerance;
    let detail = match t.failure {
        Some(e) => format!("error: {e}"),
        None => extra,
    };
    CheckResult {
        name,
        passed,
        worst: t.worst,
        tolerance,
        points: t.points,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

fn complex_residual(a: ComplexValue, b: ComplexValue) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

pub fn weak_endpoint(policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let t = tally(endpoint_grid(1e-4).into_par_iter().map(|p| {
        let a = weak_value(&p.sel)?;
        let closed = analytic::transition_value(&p.sel, &p.pointer, &p.coupling)?;
        let oracle = fock::transition_value(&p.sel, &p.pointer, &p.coupling, policy)?;
        Ok((closed - a).norm().max((oracle - a).norm()))
    }));
    check("weak-endpoint", 1e-3, t0, t, String::new())
}

/// `|sigma_T - cos(delta) sin(phi)| <= 1e-8`, `|dx - g cos(delta) sin(phi)| <= 1e-6 g`
/// and `|dp| <= 1e-6` at Gamma = 20 on both engines; reported as the worst
/// deviation over its tolerance.
pub fn strong_endpoint(policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let t = tally(endpoint_grid(20.0).into_par_iter().map(|p| {
        let abl = p.sel.delta().cos() * p.sel.phi().sin();
        let g = p.coupling.g(&p.pointer);
        let closed = analytic::pointer_shifts(&p.sel, &p.pointer, &p.coupling)?;
        let oracle = fock::evaluate(&p.sel, &p.pointer, &p.coupling, policy)?;
        let sigma_t = [closed.transition_value, oracle.transition_value]
            .map(|t| (t - abl).norm())
            .into_iter()
            .fold(0.0, f64::max);
        let dx = [closed.dx, oracle.dx]
            .map(|d| (d - g * abl).abs() / g)
            .into_iter()
            .fold(0.0, f64::max);
        let dp = closed.dp.abs().max(oracle.dp.abs());
        Ok((sigma_t / 1e-8).max(dx / 1e-6).max(dp / 1e-6))
    }));
    check(
        "strong-endpoint",
        1.0,
        t0,
        t,
        "worst deviation / tolerance (1e-8 sigma_T, 1e-6 dx/g and dp)".into(),
    )
}

pub fn cross_engine(grid: &Grid, policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let t = tally(grid.points().into_par_iter().map(|p| {
        let closed = analytic::pointer_shifts(&p.sel, &p.pointer, &p.coupling)?;
        let oracle = fock::evaluate(&p.sel, &p.pointer, &p.coupling, policy)?;
        Ok(relative_residual(closed.dx, oracle.dx)
            .max(relative_residual(closed.dp, oracle.dp))
            .max(complex_residual(
                closed.transition_value,
                oracle.transition_value,
            ))
            .max(relative_residual(
                closed.beta_sq_inv,
                oracle.final_state.beta_inv_sq,
            )))
    }));
    check("cross-engine", 1e-8, t0, t, String::new())
}

/// Fitted log-log slope of the weak-limit residual over Gamma in
/// {1e-3, 3e-3, 1e-2}; reported value is `2 - min(slope_x, slope_p)`.
pub fn weak_series(policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let sel = SelectionParams::new(PI / 6.0, PI / 6.0).expect("valid");
    let pointer = PointerParams::unit_width(2.0, PI / 6.0).expect("valid");
    let gammas = [1e-3, 3e-3, 1e-2];
    let residuals: Result<Vec<(f64, f64)>> = gammas
        .iter()
        .map(|&g| {
            let c = Coupling::new(g)?;
            let (wx, wp) = analytic::weak_limit_shifts(&sel, &pointer, &c)?;
            let ev = fock::evaluate(&sel, &pointer, &c, policy)?;
            Ok(((ev.dx - wx).abs(), (ev.dp - wp).abs()))
        })
        .collect();
    let t = match residuals {
        Ok(res) => {
            let sx = fit_slope(&gammas, &res.iter().map(|r| r.0).collect::<Vec<_>>());
            let sp = fit_slope(&gammas, &res.iter().map(|r| r.1).collect::<Vec<_>>());
            let extra = format!("exponents dx {sx:.4}, dp {sp:.4}");
            return check(
                "weak-series",
                0.1,
                t0,
                Tally {
                    worst: 2.0 - sx.min(sp),
                    points: 3,
                    failure: None,
                },
                extra,
            );
        }
        Err(e) => Tally {
            worst: f64::NAN,
            points: 3,
            failure: Some(e.to_string()),
        },
    };
    check("weak-series", 0.1, t0, t, String::new())
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

pub fn variances(grid: &Grid, policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let mut pointers: Vec<PointerParams> = Vec::new();
    for &r in &grid.rs {
        for theta in [0.0, grid.theta, PI / 2.0, 2.0] {
            for sigma in [0.5, 1.0, 2.0] {
                pointers.push(PointerParams::new(r, theta, sigma).expect("valid"));
            }
        }
    }
    let t = tally(pointers.into_par_iter().map(|p| {
        let (vx, vp) = analytic::initial_variances(&p);
        let m = fock::moments(&fock::spac_state(&p, policy)?, &p);
        let mut worst = relative_residual(vx, m.var_x()).max(relative_residual(vp, m.var_p()));
        if p.r() == 0.0 {
            let s2 = p.sigma() * p.sigma();
            worst = worst.max((vx - 3.0 * s2).abs()).max((vp - 0.75 / s2).abs());
        }
        Ok(worst)
    }));
    check("variances", 1e-10, t0, t, String::new())
}

pub fn nonpostselected(grid: &Grid, policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let t = tally(grid.points().into_par_iter().map(|p| {
        let (mean_x, _) = fock::nonpostselected_moments(&p.sel, &p.pointer, &p.coupling, policy)?;
        let initial = fock::moments(&fock::spac_state(&p.pointer, policy)?, &p.pointer).mean_x;
        let expected = p.coupling.g(&p.pointer) * p.sel.phi().sin() * p.sel.delta().cos();
        Ok((mean_x - initial - expected).abs())
    }));
    check("nonpostselected-shift", 1e-10, t0, t, String::new())
}

pub fn normalization(grid: &Grid, policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let t = tally(grid.points().into_par_iter().map(|p| {
        let ev = fock::evaluate(&p.sel, &p.pointer, &p.coupling, policy)?;
        Ok((ev.final_state.state.norm_sq().sqrt() - 1.0).abs())
    }));
    check("normalization", 1e-10, t0, t, String::new())
}

pub fn unitarity(level: Level) -> CheckResult {
    let t0 = Instant::now();
    let (dim, mus): (usize, Vec<f64>) = match level {
        Level::Fast => (200, vec![0.1, 1.0, 2.5, 5.0]),
        Level::Full => (400, vec![0.05, 0.1, 0.5, 1.0, 1.5, 2.5, 5.0, 7.5, 10.0]),
    };
    let t = tally(
        mus.into_par_iter()
            .flat_map_iter(|m| [0.0, 0.7, 2.0].map(move |phase| ComplexValue::from_polar(m, phase)))
            .map(|mu| {
                let d = fock::displacement_operator(mu, dim)?;
                Ok(d.unitarity_defect(safe_subspace_dim(mu, dim, 8)))
            }),
    );
    check("unitarity", 1e-10, t0, t, format!("dim {dim}"))
}

pub fn truncation_doubling(grid: &Grid, policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    // every third point: doubling is the most expensive check
    let points: Vec<ParameterRecord> = grid.points().into_iter().step_by(3).collect();
    let t = tally(
        points
            .into_par_iter()
            .map(|p| fock::convergence_certificate(&p.sel, &p.pointer, &p.coupling, policy)),
    );
    check("truncation-doubling", 1e-10, t0, t, String::new())
}

/// Single-photon benchmark (`phi = pi/2, delta = 0, alpha = 0`): F = 3,
/// F_Q = 3/2, crb(N = 1) = 2/3; plus estimator agreement on fig4/fig5 preset points.
pub fn qfi(policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let bench_sel = SelectionParams::new(PI / 2.0, 0.0).expect("valid");
    let vacuum = PointerParams::unit_width(0.0, 0.0).expect("valid");
    let mut jobs: Vec<(SelectionParams, PointerParams, f64, bool)> = [0.2, 1.0, 2.0]
        .map(|g| (bench_sel, vacuum, g, true))
        .to_vec();
    let sixth = SelectionParams::new(PI / 6.0, PI / 6.0).expect("valid");
    for r in [0.0, 1.0, 2.0, 3.0] {
        for g in [0.1, 1.0] {
            jobs.push((
                sixth,
                PointerParams::unit_width(r, PI / 6.0).expect("valid"),
                g,
                false,
            ));
        }
    }
    let t = tally(jobs.into_par_iter().map(|(sel, pointer, g, bench)| {
        let rep = metrology::qfi(
            &sel,
            &pointer,
            &Coupling::new(g)?,
            metrology::DEFAULT_STEP,
            1,
            policy,
        )?;
        let agreement = (rep.f - rep.f_fidelity).abs() / rep.f.abs().max(1.0);
        if bench {
            Ok(agreement
                .max((rep.f - 3.0).abs())
                .max((rep.f_q - 1.5).abs())
                .max((rep.crb - 2.0 / 3.0).abs()))
        } else {
            Ok(agreement)
        }
    }));
    check("qfi", 1e-4, t0, t, String::new())
}

pub fn chi_n_independence(policy: &TruncationPolicy) -> CheckResult {
    let t0 = Instant::now();
    let pointer = PointerParams::unit_width(5.0, PI / 2.0).expect("valid");
    let jobs: Vec<(f64, f64)> = [PI / 12.0, PI / 6.0, PI / 3.0]
        .into_iter()
        .flat_map(|phi| [0.1, 0.3, 0.8].map(|g| (phi, g)))
        .collect();
    let t = tally(jobs.into_par_iter().map(|(phi, g)| {
        let sel = SelectionParams::new(phi, 5.0 * PI / 12.0)?;
        let c = Coupling::new(g)?;
        let base = metrology::snr_ratio(&sel, &pointer, &c, 1, policy)?.chi;
        let mut worst: f64 = 0.0;
        for n in [10, 1_000, 1_000_000] {
            let chi = metrology::snr_ratio(&sel, &pointer, &c, n, policy)?.chi;
            worst = worst.max((chi - base).abs() / base.abs().max(1.0));
        }
        Ok(worst)
    }));
    check("chi-N-independence", 1e-12, t0, t, String::new())
}

/// Number of sign changes of successive differences.
pub fn slope_sign_changes(values: &[f64]) -> usize {
    let slopes: Vec<f64> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .collect();
    slopes
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count()
}

/// chi(r) at Gamma = 0.3, delta = 5pi/12, theta = pi/2 on r in [0, 10].
pub fn chi_trace(phi: f64, points: usize, policy: &TruncationPolicy) -> Result<Vec<(f64, f64)>> {
    let sel = SelectionParams::new(phi, 5.0 * PI / 12.0)?;
    let c = Coupling::new(0.3)?;
    (0..points)
        .into_par_iter()
        .map(|i| {
            let r = 10.0 * i as f64 / (points - 1) as f64;
            let p = PointerParams::unit_width(r, PI / 2.0)?;
            Ok((r, metrology::snr_ratio(&sel, &p, &c, 1, policy)?.chi))
        })
        .collect()
}

/// F_Q at `delta = phi = theta = pi/6` for each `(r, Gamma)`.
pub fn fq_trace(points: &[(f64, f64)], policy: &TruncationPolicy) -> Result<Vec<f64>> {
    let sel = SelectionParams::new(PI / 6.0, PI / 6.0)?;
    points
        .par_iter()
        .map(|&(r, g)| {
            let p = PointerParams::unit_width(r, PI / 6.0)?;
            Ok(metrology::qfi(
                &sel,
                &p,
                &Coupling::new(g)?,
                metrology::DEFAULT_STEP,
                1,
                policy,
            )?
            .f_q)
        })
        .collect()
}

fn findings(policy: &TruncationPolicy, audit: &[AuditRecord]) -> Vec<Finding> {
    let mut out = Vec::new();

    let sel = SelectionParams::new(PI / 12.0, 5.0 * PI / 12.0).expect("valid");
    let p = PointerParams::unit_width(5.0, PI / 2.0).expect("valid");
    let chi = Coupling::new(0.3).and_then(|c| metrology::snr_ratio(&sel, &p, &c, 1, policy));
    out.push(match chi {
        Ok(rep) => Finding {
            name: "chi-above-one",
            holds: rep.chi > 1.0,
            detail: format!("chi(phi=pi/12, Gamma=0.3, r=5) = {:.6}", rep.chi),
        },
        Err(e) => Finding {
            name: "chi-above-one",
            holds: false,
            detail: e.to_string(),
        },
    });

    out.push(match chi_trace(PI / 12.0, 401, policy) {
        Ok(trace) => {
            let values: Vec<f64> = trace.iter().map(|t| t.1).collect();
            let changes = slope_sign_changes(&values);
            Finding {
                name: "chi-r-oscillation",
                holds: changes >= 4,
                detail: format!("phi=pi/12: {changes} sign changes of dchi/dr over r in [0, 10] (oscillation needs >= 4)"),
            }
        }
        Err(e) => Finding { name: "chi-r-oscillation", holds: false, detail: e.to_string() },
    });

    let grid: Vec<(f64, f64)> = vec![(2.0, 0.1), (2.0, 1.0), (0.0, 1.0), (1.0, 1.0), (3.0, 1.0)];
    out.push(match fq_trace(&grid, policy) {
        Ok(fq) => {
            let peak = fq[1] > fq[0];
            let mono = fq[2] < fq[3] && fq[3] < fq[1] && fq[1] < fq[4];
            Finding {
                name: "qfi-trends",
                holds: peak && mono,
                detail: format!(
                    "F_Q(r=2): Gamma=0.1 {:.6}, Gamma=1 {:.6}; F_Q(Gamma=1) over r=0..3: {:.6} {:.6} {:.6} {:.6}",
                    fq[0], fq[1], fq[2], fq[3], fq[1], fq[4]
                ),
            }
        }
        Err(e) => Finding { name: "qfi-trends", holds: false, detail: e.to_string() },
    });

    let dp_large: Vec<&AuditRecord> = audit
        .iter()
        .filter(|r| r.quantity == "dp" && r.point.coupling.strength() >= 10.0)
        .collect();
    let diverges = dp_large.len() >= 2
        && dp_large.iter().all(|r| r.oracle.abs() < 1e-6)
        && dp_large
            .windows(2)
            .all(|w| w[1].printed.abs() > w[0].printed.abs());
    out.push(Finding {
        name: "printed-dp-divergence",
        holds: diverges,
        detail: dp_large
            .iter()
            .map(|r| {
                format!(
                    "Gamma={}: printed {:.4e}, oracle {:.1e}",
                    r.point.coupling.strength(),
                    r.printed,
                    r.oracle
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    });
    out
}

pub fn verify(level: Level, policy: &TruncationPolicy) -> Result<VerifyReport> {
    policy.validate()?;
    let grid = Grid::for_level(level);
    let suites: Vec<Box<dyn Fn() -> CheckResult + Sync + Send>> = vec![
        Box::new(|| weak_endpoint(policy)),
        Box::new(|| strong_endpoint(policy)),
        Box::new(|| cross_engine(&grid, policy)),
        Box::new(|| weak_series(policy)),
        Box::new(|| variances(&grid, policy)),
        Box::new(|| nonpostselected(&grid, policy)),
        Box::new(|| normalization(&grid, policy)),
        Box::new(|| unitarity(level)),
        Box::new(|| truncation_doubling(&grid, policy)),
        Box::new(|| qfi(policy)),
        Box::new(|| chi_n_independence(policy)),
    ];
    let (checks, audit) = rayon::join(
        || suites.par_iter().map(|s| s()).collect::<Vec<_>>(),
        || audit_table(&default_points(), policy),
    );
    let audit = audit?;
    let findings = findings(policy, &audit);
    Ok(VerifyReport {
        level,
        checks,
        findings,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit_and_sign_changes() {
        let x = [1e-3, 3e-3, 1e-2];
        let y: Vec<f64> = x.iter().map(|v| 5.0 * v * v).collect();
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-12);
        assert_eq!(slope_sign_changes(&[0.0, 1.0, 2.0, 1.0, 0.0, 1.0]), 2);
        assert_eq!(slope_sign_changes(&[1.0, 1.0, 1.0]), 0);
    }

    #[test]
    fn grids() {
        assert_eq!(Grid::standard().points().len(), 31 * 10 * 3 * 4);
        assert_eq!(endpoint_grid(1.0).len(), 24);
        assert_eq!("full".parse::<Level>().unwrap(), Level::Full);
        assert!("slow".parse::<Level>().is_err());
    }
}

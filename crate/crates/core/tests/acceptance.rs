//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Criteria whose claim is only qualitative print FINDING
//! lines where the criterion says so.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use spac_core::analytic;
use spac_core::fock::{self, safe_subspace_dim, TruncationPolicy};
use spac_core::metrology;
use spac_core::model::{weak_value, ComplexValue, Coupling, PointerParams, SelectionParams};
use spac_core::relative_residual;
use spac_core::sweep::verify::{verify, Level};
use spac_core::sweep::{run_sweep, Preset};

type Point = (SelectionParams, PointerParams, Coupling);

enum Outcome {
    Pass(String),
    Fail(String),
    Finding(String),
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    run: fn(&TruncationPolicy) -> Outcome,
}

fn point(phi: f64, delta: f64, r: f64, theta: f64, gamma: f64) -> Point {
    (
        SelectionParams::new(phi, delta).unwrap(),
        PointerParams::unit_width(r, theta).unwrap(),
        Coupling::new(gamma).unwrap(),
    )
}

fn endpoint_grid(gamma: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for phi in [PI / 12.0, PI / 6.0, PI / 3.0, PI / 2.0] {
        for delta in [0.0, PI / 6.0, PI / 2.0] {
            for r in [0.0, 2.0] {
                out.push(point(phi, delta, r, PI / 6.0, gamma));
            }
        }
    }
    out
}

/// Gamma in {0, 0.1, ..., 3}, phi in {0.05pi, ..., 0.95pi}, delta in
/// {0, pi/6, 5pi/12}, r in {0, 1, 2, 5}; theta fixed at pi/6.
fn standard_grid() -> Vec<Point> {
    let mut out = Vec::new();
    for r in [0.0, 1.0, 2.0, 5.0] {
        for delta in [0.0, PI / 6.0, 5.0 * PI / 12.0] {
            for k in 0..10 {
                let phi = (0.05 + 0.1 * k as f64) * PI;
                for j in 0..=30 {
                    out.push(point(phi, delta, r, PI / 6.0, j as f64 / 10.0));
                }
            }
        }
    }
    out
}

fn max_over<F>(points: &[Point], f: F) -> Result<f64, String>
where
    F: Fn(&Point) -> Result<f64, spac_core::Error> + Sync,
{
    points
        .par_iter()
        .map(|p| f(p).map_err(|e| e.to_string()))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn c1_weak_endpoint(policy: &TruncationPolicy) -> Outcome {
    let worst = max_over(&endpoint_grid(1e-4), |(s, p, c)| {
        let a = weak_value(s)?;
        let closed = analytic::transition_value(s, p, c)?;
        let oracle = fock::transition_value(s, p, c, policy)?;
        Ok((closed - a).norm().max((oracle - a).norm()))
    });
    match worst {
        Ok(w) => verdict(w <= 1e-3, format!("max |sigma_T - A| = {w:.3e} (tol 1e-3)")),
        Err(e) => Outcome::Fail(e),
    }
}

fn c2_strong_endpoint(policy: &TruncationPolicy) -> Outcome {
    let grid = endpoint_grid(20.0);
    let res: Result<Vec<(f64, f64, f64)>, String> = grid
        .par_iter()
        .map(|(s, p, c)| {
            let abl = s.delta().cos() * s.phi().sin();
            let g = c.g(p);
            let closed = analytic::pointer_shifts(s, p, c).map_err(|e| e.to_string())?;
            let oracle = fock::evaluate(s, p, c, policy).map_err(|e| e.to_string())?;
            let st = (closed.transition_value - abl)
                .norm()
                .max((oracle.transition_value - abl).norm());
            let dx = ((closed.dx - g * abl).abs().max((oracle.dx - g * abl).abs())) / g;
            let dp = closed.dp.abs().max(oracle.dp.abs());
            Ok((st, dx, dp))
        })
        .collect();
    match res {
        Ok(v) => {
            let st = v.iter().map(|t| t.0).fold(0.0, f64::max);
            let dx = v.iter().map(|t| t.1).fold(0.0, f64::max);
            let dp = v.iter().map(|t| t.2).fold(0.0, f64::max);
            verdict(
                st <= 1e-8 && dx <= 1e-6 && dp <= 1e-6,
                format!("|sigma_T - ABL| {st:.2e} (1e-8), |dx - g ABL|/g {dx:.2e} (1e-6), |dp| {dp:.2e} (1e-6)"),
            )
        }
        Err(e) => Outcome::Fail(e),
    }
}

fn complex_rel(a: ComplexValue, b: ComplexValue) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn c3_cross_engine(policy: &TruncationPolicy) -> Outcome {
    let grid = standard_grid();
    let worst = max_over(&grid, |(s, p, c)| {
        let closed = analytic::pointer_shifts(s, p, c)?;
        let oracle = fock::evaluate(s, p, c, policy)?;
        Ok(relative_residual(closed.dx, oracle.dx)
            .max(relative_residual(closed.dp, oracle.dp))
            .max(complex_rel(
                closed.transition_value,
                oracle.transition_value,
            ))
            .max(relative_residual(
                closed.beta_sq_inv,
                oracle.final_state.beta_inv_sq,
            )))
    });
    match worst {
        Ok(w) => verdict(
            w <= 1e-8,
            format!(
                "{} points, max relative residual {w:.3e} (tol 1e-8)",
                grid.len()
            ),
        ),
        Err(e) => Outcome::Fail(e),
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

fn c4_weak_series(policy: &TruncationPolicy) -> Outcome {
    let gammas = [1e-3, 3e-3, 1e-2];
    let cases = [
        (PI / 6.0, PI / 6.0, 2.0, PI / 6.0),
        (PI / 3.0, 5.0 * PI / 12.0, 1.0, PI / 2.0),
        (PI / 3.0, 0.0, 5.0, 0.3),
    ];
    let mut min_exp = f64::INFINITY;
    let mut parts = Vec::new();
    for (phi, delta, r, theta) in cases {
        let mut rx = Vec::new();
        let mut rp = Vec::new();
        for g in gammas {
            let (s, p, c) = point(phi, delta, r, theta, g);
            let (wx, wp) = analytic::weak_limit_shifts(&s, &p, &c).unwrap();
            let ev = match fock::evaluate(&s, &p, &c, policy) {
                Ok(ev) => ev,
                Err(e) => return Outcome::Fail(e.to_string()),
            };
            rx.push((ev.dx - wx).abs());
            rp.push((ev.dp - wp).abs());
        }
        let (ex, ep) = (slope(&gammas, &rx), slope(&gammas, &rp));
        min_exp = min_exp.min(ex).min(ep);
        parts.push(format!("{ex:.3}/{ep:.3}"));
    }
    verdict(
        min_exp >= 1.9,
        format!("fitted exponents dx/dp: {} (need >= 1.9)", parts.join(", ")),
    )
}

fn c5_variances(policy: &TruncationPolicy) -> Outcome {
    let mut worst: f64 = 0.0;
    for r in [0.0, 0.5, 1.0, 2.0, 5.0] {
        for theta in [0.0, PI / 6.0, PI / 2.0, 2.5] {
            for sigma in [0.5, 1.0, 3.0] {
                let p = PointerParams::new(r, theta, sigma).unwrap();
                let (vx, vp) = analytic::initial_variances(&p);
                let m = match fock::spac_state(&p, policy) {
                    Ok(state) => fock::moments(&state, &p),
                    Err(e) => return Outcome::Fail(e.to_string()),
                };
                worst = worst
                    .max(relative_residual(vx, m.var_x()))
                    .max(relative_residual(vp, m.var_p()));
            }
        }
    }
    let mut exact = true;
    for sigma in [0.5, 1.0, 2.0] {
        let (vx, vp) = analytic::initial_variances(&PointerParams::new(0.0, 0.0, sigma).unwrap());
        exact &= vx == 3.0 * sigma * sigma && vp == 3.0 / (4.0 * sigma * sigma);
    }
    verdict(
        worst <= 1e-10 && exact,
        format!("max relative residual {worst:.3e} (tol 1e-10); alpha = 0 exact: {exact}"),
    )
}

fn c6_nonpostselected(policy: &TruncationPolicy) -> Outcome {
    let worst = max_over(&standard_grid(), |(s, p, c)| {
        let (mean_x, _) = fock::nonpostselected_moments(s, p, c, policy)?;
        let initial = fock::moments(&fock::spac_state(p, policy)?, p).mean_x;
        Ok((mean_x - initial - c.g(p) * s.phi().sin() * s.delta().cos()).abs())
    });
    match worst {
        Ok(w) => verdict(
            w <= 1e-10,
            format!("max |dx' - g sin(phi) cos(delta)| = {w:.3e} (tol 1e-10)"),
        ),
        Err(e) => Outcome::Fail(e),
    }
}

fn slope_sign_changes(values: &[f64]) -> usize {
    let d: Vec<f64> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|v| *v != 0.0)
        .collect();
    d.windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count()
}

fn c7_snr(policy: &TruncationPolicy) -> Outcome {
    let (s, p, c) = point(PI / 12.0, 5.0 * PI / 12.0, 5.0, PI / 2.0, 0.3);
    let chi = match metrology::snr_ratio(&s, &p, &c, 1, policy) {
        Ok(r) => r.chi,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut n_spread: f64 = 0.0;
    for n in [1u64, 7, 100, 10_000, 1_000_000_000] {
        let other = metrology::snr_ratio(&s, &p, &c, n, policy).unwrap().chi;
        n_spread = n_spread.max((other - chi).abs());
    }

    let specs = Preset::Fig3b.specs(401).unwrap();
    let table = match run_sweep(&specs, policy, metrology::DEFAULT_STEP) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut counts = Vec::new();
    for spec in &specs {
        let trace: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.series == spec.series)
            .filter_map(|r| r.snr.map(|s| s.chi))
            .collect();
        counts.push((spec.series.clone(), trace.len(), slope_sign_changes(&trace)));
    }
    let complete = counts.iter().all(|c| c.1 == 401);
    let oscillates = counts.iter().any(|c| c.2 >= 4);
    let detail = format!(
        "chi(pi/12, Gamma=0.3) = {chi:.4} (> 1); N-spread {n_spread:.1e} (tol 1e-12); fig3b dchi/dr sign changes {} (need >= 4)",
        counts.iter().map(|c| format!("{}: {}", c.0, c.2)).collect::<Vec<_>>().join(", ")
    );
    verdict(
        chi > 1.0 && n_spread <= 1e-12 && complete && oscillates,
        detail,
    )
}

fn c8_qfi_benchmark(policy: &TruncationPolicy) -> Outcome {
    let s = SelectionParams::new(PI / 2.0, 0.0).unwrap();
    let p = PointerParams::unit_width(0.0, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for g in [0.2, 1.0, 2.0] {
        let rep = match metrology::qfi(
            &s,
            &p,
            &Coupling::new(g).unwrap(),
            metrology::DEFAULT_STEP,
            1,
            policy,
        ) {
            Ok(r) => r,
            Err(e) => return Outcome::Fail(e.to_string()),
        };
        worst = worst
            .max((rep.f - 3.0).abs())
            .max((rep.f_q - 1.5).abs())
            .max((rep.crb - 2.0 / 3.0).abs());
        parts.push(format!(
            "Gamma={g}: F={:.8} F_Q={:.8} crb={:.8}",
            rep.f, rep.f_q, rep.crb
        ));
    }
    verdict(
        worst <= 1e-4,
        format!("{} (max deviation {worst:.2e}, tol 1e-4)", parts.join("; ")),
    )
}

fn c9_qfi_trends(policy: &TruncationPolicy) -> Outcome {
    let fq = |r: f64, g: f64| {
        let (s, p, c) = point(PI / 6.0, PI / 6.0, r, PI / 6.0, g);
        metrology::qfi(&s, &p, &c, metrology::DEFAULT_STEP, 1, policy).map(|rep| rep.f_q)
    };
    let (low, high) = match (fq(2.0, 0.1), fq(2.0, 1.0)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::Fail(e.to_string()),
    };
    let trace: Result<Vec<f64>, _> = [0.0, 1.0, 2.0, 3.0]
        .into_iter()
        .map(|r| fq(r, 1.0))
        .collect();
    let trace = match trace {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let monotone = trace.windows(2).all(|w| w[1] > w[0]);
    let detail = format!(
        "F_Q(Gamma=1) = {high:.6} > F_Q(Gamma=0.1) = {low:.6}; F_Q(Gamma=1, r=0..3) = {}",
        trace
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    if high <= low {
        Outcome::Fail(detail)
    } else if !monotone {
        Outcome::Finding(format!("{detail} (not monotone in r)"))
    } else {
        Outcome::Pass(detail)
    }
}

fn c10_audit(policy: &TruncationPolicy) -> Outcome {
    let report = match verify(Level::Fast, policy) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let has_both = report.audit.iter().any(|r| r.quantity == "dx")
        && report.audit.iter().any(|r| r.quantity == "dp");
    let consistent = report
        .audit
        .iter()
        .all(|r| r.discrepancy == (r.printed - r.oracle).abs());
    let strong: Vec<_> = report
        .audit
        .iter()
        .filter(|r| r.point.coupling.strength() >= 20.0)
        .collect();
    let limits = !strong.is_empty()
        && strong.iter().all(|r| {
            let (s, p, c) = (&r.point.sel, &r.point.pointer, &r.point.coupling);
            match r.quantity {
                "dp" => r.oracle.abs() <= 1e-6,
                _ => (r.oracle - c.g(p) * s.delta().cos() * s.phi().sin()).abs() <= 1e-6 * c.g(p),
            }
        });
    let printed_dp: Vec<String> = report
        .audit
        .iter()
        .filter(|r| r.quantity == "dp")
        .map(|r| format!("{}:{:.3}", r.point.coupling.strength(), r.printed))
        .collect();
    verdict(
        has_both && consistent && limits,
        format!(
            "{} audit rows; oracle strong limits hold: {limits}; printed dp by Gamma {}",
            report.audit.len(),
            printed_dp.join(" ")
        ),
    )
}

fn c11_hygiene(policy: &TruncationPolicy) -> Outcome {
    let grid: Vec<Point> = standard_grid().into_iter().step_by(4).collect();
    let doubling = max_over(&grid, |(s, p, c)| {
        fock::convergence_certificate(s, p, c, policy)
    });
    let norms = max_over(&grid, |(s, p, c)| {
        let ev = fock::evaluate(s, p, c, policy)?;
        Ok((ev.final_state.state.norm_sq().sqrt() - 1.0).abs())
    });
    let dim = 300;
    let unitarity: Result<f64, String> = [0.05, 0.5, 1.0, 2.0, 4.0, 8.0]
        .into_par_iter()
        .flat_map_iter(|m| [0.0, 1.1, 2.9].map(move |ph| ComplexValue::from_polar(m, ph)))
        .map(|mu| {
            fock::displacement_operator(mu, dim)
                .map(|d| d.unitarity_defect(safe_subspace_dim(mu, dim, 8)))
                .map_err(|e| e.to_string())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)));
    match (doubling, norms, unitarity) {
        (Ok(d), Ok(n), Ok(u)) => verdict(
            d < 1e-10 && n <= 1e-10 && u <= 1e-10,
            format!("doubling change {d:.2e}, norm defect {n:.2e}, unitarity defect {u:.2e} (all tol 1e-10)"),
        ),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => Outcome::Fail(e),
    }
}

fn main() -> ExitCode {
    let policy = TruncationPolicy::default();
    let criteria = [
        Criterion {
            id: "1",
            title: "weak-limit endpoint",
            budget: Duration::from_secs(5),
            run: c1_weak_endpoint,
        },
        Criterion {
            id: "2",
            title: "strong-limit endpoints",
            budget: Duration::from_secs(10),
            run: c2_strong_endpoint,
        },
        Criterion {
            id: "3",
            title: "cross-engine equivalence",
            budget: Duration::from_secs(60),
            run: c3_cross_engine,
        },
        Criterion {
            id: "4",
            title: "weak-regime series",
            budget: Duration::MAX,
            run: c4_weak_series,
        },
        Criterion {
            id: "5",
            title: "variance identities",
            budget: Duration::MAX,
            run: c5_variances,
        },
        Criterion {
            id: "6",
            title: "nonpostselected shift",
            budget: Duration::MAX,
            run: c6_nonpostselected,
        },
        Criterion {
            id: "7",
            title: "SNR reproduction",
            budget: Duration::MAX,
            run: c7_snr,
        },
        Criterion {
            id: "8",
            title: "QFI benchmark",
            budget: Duration::MAX,
            run: c8_qfi_benchmark,
        },
        Criterion {
            id: "9",
            title: "QFI trends",
            budget: Duration::MAX,
            run: c9_qfi_trends,
        },
        Criterion {
            id: "10",
            title: "printed-formula audit",
            budget: Duration::MAX,
            run: c10_audit,
        },
        Criterion {
            id: "11",
            title: "numerical hygiene",
            budget: Duration::MAX,
            run: c11_hygiene,
        },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)(&policy);
        let elapsed = start.elapsed();
        let over = elapsed > c.budget;
        let (tag, detail) = match outcome {
            Outcome::Pass(d) if over => (
                "FAIL",
                format!("{d}; runtime {elapsed:.2?} over budget {:?}", c.budget),
            ),
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Finding(d) => ("FINDING", d),
        };
        if tag == "FAIL" {
            failed.push(c.id);
        }
        println!(
            "{tag:<7} [{:>2}] {:<26} ({:.2?}) {detail}",
            c.id, c.title, elapsed
        );
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {}", failed.join(", "));
        ExitCode::FAILURE
    }
}

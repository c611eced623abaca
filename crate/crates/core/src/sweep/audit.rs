//! Discrepancy report for the printed closed-form shifts.
//!
//! The printed expressions for `dx`, `dp` and `beta^-2` are transcribed here
//! term by term and compared with the kernel-assembled shifts and the Fock
//! oracle. They are known to disagree: the printed `beta^-2` lacks a factor
//! `Gamma` on its `2i Im(alpha)` term, `f(Gamma)` lacks a `-Gamma^3` term,
//! and the `+-Gamma/gamma^2` terms make the printed `dp` grow linearly in
//! `Gamma`. Large discrepancies are expected and never fatal.

use crate::analytic::{self, damped, f_kernel_signed};
use crate::error::Result;
use crate::fock::{self, TruncationPolicy};
use crate::model::{weak_value, Coupling, PointerParams, SelectionParams};

use super::ParameterRecord;

/// `beta^-2` exactly as printed (imaginary term without the `Gamma` factor).
pub fn printed_beta_inverse_sq(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
) -> Result<f64> {
    let a = weak_value(sel)?;
    let alpha = pointer.alpha();
    let gam = coupling.strength();
    let g2 = pointer.gamma_sq();
    let bracket = num_complex::Complex64::new(1.0 / g2 - gam * gam, 2.0 * alpha.im)
        * num_complex::Complex64::from_polar(1.0, 2.0 * gam * alpha.im);
    let cross = (1.0 + a).conj() * (1.0 - a) * bracket;
    Ok(1.0 + a.norm_sqr() + g2 * damped(-gam * gam / 2.0) * cross.re)
}

/// `(dx, dp)` from the printed closed forms.
pub fn printed_shifts(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
) -> Result<(f64, f64)> {
    let a = weak_value(sel)?;
    let alpha = pointer.alpha();
    let gam = coupling.strength();
    let sigma = pointer.sigma();
    let g2 = pointer.gamma_sq();
    let r2 = alpha.norm_sqr();
    let beta_sq = 1.0 / printed_beta_inverse_sq(sel, pointer, coupling)?;

    let plus_w = (1.0 + a).norm_sqr();
    let minus_w = (1.0 - a).norm_sqr();
    let cross_pm = (1.0 + a).conj() * (1.0 - a) * f_kernel_signed(pointer, -gam);
    let cross_mp = (1.0 - a).conj() * (1.0 + a) * f_kernel_signed(pointer, gam);

    let drift = gam / g2;
    let x_part = 4.0 * alpha.re + 2.0 * alpha.re * r2;
    let p_part = 4.0 * alpha.im + 2.0 * alpha.im * r2;

    let dx = sigma
        * beta_sq
        * g2
        * (plus_w * (drift + x_part) + minus_w * (-drift + x_part) + cross_pm.re + cross_mp.re)
        - 2.0 * sigma * g2 * (2.0 + r2) * alpha.re;
    let dp = beta_sq * g2 / (2.0 * sigma)
        * (plus_w * (drift + p_part) + minus_w * (-drift + p_part) + cross_pm.im + cross_mp.im)
        - g2 * (2.0 + r2) * alpha.im / sigma;
    Ok((dx, dp))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub point: ParameterRecord,
    pub quantity: &'static str,
    pub printed: f64,
    pub first_principles: f64,
    pub oracle: f64,
    /// `|printed - oracle|`.
    pub discrepancy: f64,
    /// `|first_principles - oracle|`; this one is authoritative.
    pub engine_residual: f64,
}

pub fn audit_point(point: &ParameterRecord, policy: &TruncationPolicy) -> Result<[AuditRecord; 2]> {
    let (sel, pointer, coupling) = (&point.sel, &point.pointer, &point.coupling);
    let (px, pp) = printed_shifts(sel, pointer, coupling)?;
    let closed = analytic::pointer_shifts(sel, pointer, coupling)?;
    let oracle = fock::evaluate(sel, pointer, coupling, policy)?;
    let record = |quantity, printed: f64, first: f64, oracle: f64| AuditRecord {
        point: *point,
        quantity,
        printed,
        first_principles: first,
        oracle,
        discrepancy: (printed - oracle).abs(),
        engine_residual: (first - oracle).abs(),
    };
    Ok([
        record("dx", px, closed.dx, oracle.dx),
        record("dp", pp, closed.dp, oracle.dp),
    ])
}

/// Default audit points: the fig1 preset pointer (`r = 2, theta = delta = pi/6`)
/// at `phi = pi/3` for couplings from 0 through the strong regime.
pub fn default_points() -> Vec<ParameterRecord> {
    use std::f64::consts::PI;
    let sel = SelectionParams::new(PI / 3.0, PI / 6.0).expect("valid selection");
    let pointer = PointerParams::unit_width(2.0, PI / 6.0).expect("valid pointer");
    [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0]
        .into_iter()
        .map(|g| ParameterRecord {
            sel,
            pointer,
            coupling: Coupling::new(g).expect("valid coupling"),
            n_trials: 1,
        })
        .collect()
}

pub fn audit_table(
    points: &[ParameterRecord],
    policy: &TruncationPolicy,
) -> Result<Vec<AuditRecord>> {
    use rayon::prelude::*;
    let chunks: Vec<[AuditRecord; 2]> = points
        .par_iter()
        .map(|p| audit_point(p, policy))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn printed_dp_grows_linearly() {
        let points = default_points();
        let table = audit_table(&points, &TruncationPolicy::default()).unwrap();
        let dp_at = |g: f64| {
            table
                .iter()
                .find(|r| r.quantity == "dp" && r.point.coupling.strength() == g)
                .unwrap()
                .clone()
        };
        let (a, b) = (dp_at(10.0), dp_at(20.0));
        assert!(b.oracle.abs() < 1e-6 && a.oracle.abs() < 1e-6);
        let slope = (b.printed - a.printed) / 10.0;
        // printed dp -> Gamma sin(phi) cos(delta) / sigma at large Gamma
        let expected = points[0].sel.phi().sin() * points[0].sel.delta().cos();
        assert!((slope - expected).abs() < 1e-6, "slope {slope}");
        assert!(table.iter().all(|r| r.engine_residual < 1e-8));
    }

    #[test]
    fn printed_dx_vanishes_at_zero_coupling_for_imaginary_alpha() {
        let point = ParameterRecord {
            sel: SelectionParams::new(1.0, 0.2).unwrap(),
            pointer: PointerParams::unit_width(1.5, PI / 2.0).unwrap(),
            coupling: Coupling::new(0.0).unwrap(),
            n_trials: 1,
        };
        let [dx, _] = audit_point(&point, &TruncationPolicy::default()).unwrap();
        assert!(dx.printed.abs() < 1e-12 && dx.oracle.abs() < 1e-12);
    }
}

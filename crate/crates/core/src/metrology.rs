//! Signal-to-noise ratios and quantum Fisher information.
//!
//! Both figures of merit use the bare postselection probability
//! `P_s = cos^2(phi/2)`; the exact coupling-dependent probability is carried
//! along as a diagnostic only.

use crate::analytic;
use crate::error::{Error, Result};
use crate::fock::{self, FockVector, TruncationPolicy};
use crate::model::{
    abl_conditional, postselection_probability, weak_value, ComplexValue, Coupling, PointerParams,
    SelectionParams,
};
use crate::relative_residual;

/// Default finite-difference step for the coupling derivative.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Required agreement between the two Fisher-information estimators.
pub const ESTIMATOR_AGREEMENT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    pub r_p: f64,
    pub r_n: f64,
    pub chi: f64,
    pub n_trials: u64,
    pub p_s: f64,
    /// Postselected shift (oracle) and spread.
    pub dx: f64,
    pub dx_spread: f64,
    /// Nonpostselected shift and spread.
    pub dx_reference: f64,
    pub dx_reference_spread: f64,
    /// Relative residual between oracle and closed-form `dx`.
    pub dx_residual: f64,
}

pub fn snr_ratio(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    n_trials: u64,
    policy: &TruncationPolicy,
) -> Result<SnrReport> {
    if n_trials == 0 {
        return Err(Error::invalid("N", "must be positive"));
    }
    weak_value(sel)?;
    let reference = sel.phi().sin() * sel.delta().cos();
    if reference.abs() < 1e-12 || coupling.strength() == 0.0 {
        return Err(Error::DegenerateReference {
            value: reference * coupling.strength(),
        });
    }

    let oracle = fock::evaluate(sel, pointer, coupling, policy)?;
    let closed = analytic::pointer_shifts(sel, pointer, coupling)?;
    let dx = oracle.dx;
    let dx_spread = oracle.postselected.var_x().sqrt();

    let (mean_x, mean_x2) = fock::nonpostselected_moments(sel, pointer, coupling, policy)?;
    let dx_reference = mean_x - oracle.initial.mean_x;
    let dx_reference_spread = (mean_x2 - mean_x * mean_x).sqrt();

    let p_s = postselection_probability(sel);
    let n = n_trials as f64;
    let r_p = (n * p_s).sqrt() * dx / dx_spread;
    let r_n = n.sqrt() * dx_reference / dx_reference_spread;
    let report = SnrReport {
        r_p,
        r_n,
        chi: r_p / r_n,
        n_trials,
        p_s,
        dx,
        dx_spread,
        dx_reference,
        dx_reference_spread,
        dx_residual: relative_residual(dx, closed.dx),
    };
    if !report.chi.is_finite() {
        return Err(Error::NonFinite("snr_ratio"));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherReport {
    /// QFI per postselected event (derivative form).
    pub f: f64,
    /// `P_s F`.
    pub f_q: f64,
    /// `1 / (N F_Q)`.
    pub crb: f64,
    pub step: f64,
    /// Fidelity-form estimate of `F`.
    pub f_fidelity: f64,
    pub n_trials: u64,
    pub p_s: f64,
    pub exact_success_probability: f64,
    pub n_max: usize,
}

/// Both QFI estimators for a state family `gamma -> |Phi_gamma>` at `gamma`.
///
/// Derivative form: central difference of the neighbours after rotating each
/// so its overlap with the centre is real and positive, then
/// `F = 4 (<dPhi|dPhi> - |<Phi|dPhi>|^2)`. Fidelity form:
/// `F = 4 (2 - |<Phi|Phi_+>| - |<Phi|Phi_->|) / step^2`.
pub fn qfi_estimates<F>(family: F, gamma: f64, step: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<FockVector>,
{
    let center = family(gamma)?;
    let plus = family(gamma + step)?;
    let minus = family(gamma - step)?;
    let ov_plus = center.inner(&plus);
    let ov_minus = center.inner(&minus);
    let plus = plus.rotated(-ov_plus.arg());
    let minus = minus.rotated(-ov_minus.arg());

    let inv = ComplexValue::new(1.0 / (2.0 * step), 0.0);
    let deriv = FockVector::combine(inv, &plus, -inv, &minus);
    let overlap = center.inner(&deriv);
    let f_deriv = 4.0 * (deriv.norm_sq() - overlap.norm_sqr());
    let f_fid = 4.0 * (2.0 - ov_plus.norm() - ov_minus.norm()) / (step * step);
    Ok((f_deriv, f_fid))
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= ESTIMATOR_AGREEMENT * a.abs().max(b.abs()).max(1e-12)
}

/// Cross-checked `(F, F_fidelity, step)`; refines once with a Richardson
/// step on the derivative form before giving up.
pub fn checked_qfi<F>(family: F, gamma: f64, step: f64) -> Result<(f64, f64, f64)>
where
    F: Fn(f64) -> Result<FockVector>,
{
    let (f, fid) = qfi_estimates(&family, gamma, step)?;
    if agree(f, fid) {
        return Ok((f, fid, step));
    }
    let half = step / 2.0;
    let (f_half, fid_half) = qfi_estimates(&family, gamma, half)?;
    let extrapolated = (4.0 * f_half - f) / 3.0;
    if agree(extrapolated, fid_half) {
        Ok((extrapolated, fid_half, half))
    } else {
        Err(Error::StepTooCoarse {
            step,
            derivative: extrapolated,
            fidelity: fid_half,
        })
    }
}

pub fn qfi(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    step: f64,
    n_trials: u64,
    policy: &TruncationPolicy,
) -> Result<FisherReport> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", "must be positive"));
    }
    if n_trials == 0 {
        return Err(Error::invalid("N", "must be positive"));
    }
    let gamma = coupling.strength();
    if gamma < step {
        return Err(Error::invalid(
            "Gamma",
            format!("{gamma} below finite-difference step {step}"),
        ));
    }
    weak_value(sel)?;
    let b = fock::Branches::resolve(pointer, gamma + step, policy)?;
    let n_max = b.n_max;
    let guard = policy.guard_band;
    let family = |g: f64| fock::final_state_at(sel, pointer, g, n_max, guard).map(|f| f.state);
    let (f, f_fidelity, used_step) = checked_qfi(family, gamma, step)?;
    let exact = fock::final_state_at(sel, pointer, gamma, n_max, guard)?;

    let p_s = postselection_probability(sel);
    let f = f.max(0.0);
    let f_q = p_s * f;
    Ok(FisherReport {
        f,
        f_q,
        crb: 1.0 / (n_trials as f64 * f_q),
        step: used_step,
        f_fidelity,
        n_trials,
        p_s,
        exact_success_probability: exact.success_probability,
        n_max,
    })
}

/// Both engines side by side at one parameter point.
#[derive(Debug, Clone)]
pub struct MeasurementReport {
    pub weak_value: ComplexValue,
    pub abl_conditional: f64,
    pub analytic: analytic::ShiftResult,
    pub weak_limit: (f64, f64),
    pub oracle_dx: f64,
    pub oracle_dp: f64,
    pub oracle_transition_value: ComplexValue,
    pub oracle_beta_inv_sq: f64,
    pub dx_residual: f64,
    pub dp_residual: f64,
    pub transition_residual: f64,
    pub beta_residual: f64,
    pub n_max: usize,
    pub tail_mass: f64,
    pub snr: Result<SnrReport>,
    pub fisher: Result<FisherReport>,
}

pub fn measure(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    n_trials: u64,
    step: f64,
    policy: &TruncationPolicy,
) -> Result<MeasurementReport> {
    let a = weak_value(sel)?;
    let closed = analytic::pointer_shifts(sel, pointer, coupling)?;
    let oracle = fock::evaluate(sel, pointer, coupling, policy)?;
    let tv = oracle.transition_value;
    Ok(MeasurementReport {
        weak_value: a,
        abl_conditional: abl_conditional(sel),
        weak_limit: analytic::weak_limit_shifts(sel, pointer, coupling)?,
        oracle_dx: oracle.dx,
        oracle_dp: oracle.dp,
        oracle_transition_value: tv,
        oracle_beta_inv_sq: oracle.final_state.beta_inv_sq,
        dx_residual: relative_residual(closed.dx, oracle.dx),
        dp_residual: relative_residual(closed.dp, oracle.dp),
        transition_residual: (closed.transition_value - tv).norm()
            / closed.transition_value.norm().max(tv.norm()).max(1.0),
        beta_residual: relative_residual(closed.beta_sq_inv, oracle.final_state.beta_inv_sq),
        analytic: closed,
        n_max: oracle.n_max,
        tail_mass: oracle.tail_mass,
        snr: snr_ratio(sel, pointer, coupling, n_trials, policy),
        fisher: qfi(sel, pointer, coupling, step, n_trials, policy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sel(phi: f64, delta: f64) -> SelectionParams {
        SelectionParams::new(phi, delta).unwrap()
    }
    fn ptr(r: f64, theta: f64) -> PointerParams {
        PointerParams::unit_width(r, theta).unwrap()
    }
    fn cpl(g: f64) -> Coupling {
        Coupling::new(g).unwrap()
    }

    #[test]
    fn single_branch_snr() {
        let p = ptr(1.5, 0.8);
        for &gam in &[0.3, 1.0, 2.5] {
            let rep = snr_ratio(
                &sel(PI / 2.0, 0.0),
                &p,
                &cpl(gam),
                50,
                &TruncationPolicy::default(),
            )
            .unwrap();
            assert!((rep.dx - gam).abs() < 1e-12);
            assert!((rep.dx_reference - gam).abs() < 1e-12);
            assert!((rep.chi - 0.5f64.sqrt()).abs() < 1e-12, "chi {}", rep.chi);
        }
    }

    #[test]
    fn snr_degenerate_reference() {
        let err = snr_ratio(
            &sel(1.0, PI / 2.0),
            &ptr(1.0, 0.0),
            &cpl(0.5),
            10,
            &TruncationPolicy::default(),
        );
        assert!(matches!(err, Err(Error::DegenerateReference { .. })));
        let err = snr_ratio(
            &sel(0.0, 0.0),
            &ptr(1.0, 0.0),
            &cpl(0.5),
            10,
            &TruncationPolicy::default(),
        );
        assert!(matches!(err, Err(Error::DegenerateReference { .. })));
    }

    #[test]
    fn chi_independent_of_trials() {
        let s = sel(PI / 12.0, 5.0 * PI / 12.0);
        let p = ptr(5.0, PI / 2.0);
        let a = snr_ratio(&s, &p, &cpl(0.3), 1, &TruncationPolicy::default()).unwrap();
        let b = snr_ratio(&s, &p, &cpl(0.3), 1000, &TruncationPolicy::default()).unwrap();
        assert!((a.chi - b.chi).abs() <= 1e-12 * a.chi.abs());
    }

    #[test]
    fn single_photon_qfi() {
        for &gam in &[0.2, 1.0, 2.0] {
            let rep = qfi(
                &sel(PI / 2.0, 0.0),
                &ptr(0.0, 0.0),
                &cpl(gam),
                DEFAULT_STEP,
                1,
                &TruncationPolicy::default(),
            )
            .unwrap();
            assert!((rep.f - 3.0).abs() < 1e-4, "F = {}", rep.f);
            assert!((rep.f_q - 1.5).abs() < 1e-4);
            assert!((rep.crb - 2.0 / 3.0).abs() < 1e-4);
        }
    }

    #[test]
    fn qfi_rejects_small_coupling() {
        assert!(qfi(
            &sel(1.0, 0.0),
            &ptr(1.0, 0.0),
            &cpl(0.0),
            DEFAULT_STEP,
            1,
            &TruncationPolicy::default()
        )
        .is_err());
    }

    #[test]
    fn qfi_phase_invariant() {
        let s = sel(PI / 6.0, PI / 6.0);
        let p = ptr(2.0, PI / 6.0);
        let gam = 1.0;
        let n = fock::Branches::resolve(&p, gam + 0.1, &TruncationPolicy::default())
            .unwrap()
            .n_max;
        let plain = |g: f64| fock::final_state_at(&s, &p, g, n, 8).map(|f| f.state);
        let twisted = |g: f64| plain(g).map(|v| v.rotated(3.0 * g * g + (5.0 * g).sin()));
        let (a, _) = qfi_estimates(plain, gam, DEFAULT_STEP).unwrap();
        let (b, _) = qfi_estimates(twisted, gam, DEFAULT_STEP).unwrap();
        assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
    }

    #[test]
    fn crb_decreases_with_trials() {
        let s = sel(PI / 6.0, PI / 6.0);
        let p = ptr(2.0, PI / 6.0);
        let mut last = f64::INFINITY;
        for n in [1, 2, 10, 100] {
            let rep = qfi(
                &s,
                &p,
                &cpl(1.0),
                DEFAULT_STEP,
                n,
                &TruncationPolicy::default(),
            )
            .unwrap();
            assert!(rep.crb < last);
            last = rep.crb;
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn snr_components_consistent(
            phi in 0.1..2.9f64, delta in 0.0..1.4f64, r in 0.0..4.0f64, th in 0.0..6.3f64,
            gam in 0.05..3.0f64, n in 1u64..10_000,
        ) {
            let (s, p, c) = (sel(phi, delta), ptr(r, th), cpl(gam));
            let one = snr_ratio(&s, &p, &c, 1, &TruncationPolicy::default()).unwrap();
            let many = snr_ratio(&s, &p, &c, n, &TruncationPolicy::default()).unwrap();
            let rebuilt = (n as f64 * many.p_s).sqrt() * many.dx / many.dx_spread;
            proptest::prop_assert!((many.r_p - rebuilt).abs() <= 1e-12 * rebuilt.abs().max(1.0));
            proptest::prop_assert!((many.chi - many.r_p / many.r_n).abs() <= 1e-12 * many.chi.abs().max(1.0));
            proptest::prop_assert!((one.chi - many.chi).abs() <= 1e-12 * one.chi.abs().max(1.0));
        }

        #[test]
        fn fisher_ordering(
            phi in 0.1..2.9f64, delta in 0.0..6.3f64, r in 0.0..3.0f64, th in 0.0..6.3f64, gam in 0.1..3.0f64,
        ) {
            let rep = qfi(&sel(phi, delta), &ptr(r, th), &cpl(gam), DEFAULT_STEP, 1, &TruncationPolicy::default()).unwrap();
            proptest::prop_assert!(rep.f >= 0.0);
            proptest::prop_assert!(rep.f_q <= rep.f);
            if rep.f_q > 0.0 {
                proptest::prop_assert!(rep.crb > 0.0);
            }
        }
    }
}

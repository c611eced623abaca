//! Closed-form engine.
//!
//! Everything here is assembled from two displaced-state kernels of the SPAC
//! pointer `|phi> = gamma a^dag |alpha>`:
//!
//! ```text
//! K0(mu) = <phi| D(mu) |phi>
//! K1(mu) = <phi| D(mu) a |phi>
//! ```
//!
//! Normal ordering against the coherent overlap
//! `<alpha|D(mu)|alpha> = exp(-|mu|^2/2 + alpha* mu - alpha mu*)` gives
//!
//! ```text
//! B(mu)  = 1 + (alpha - mu)* (alpha + mu)
//! K0(mu) = gamma^2 E(mu) B(mu)
//! K1(mu) = gamma^2 E(mu) [(alpha + mu) + alpha B(mu)]
//! ```
//!
//! The postselected pointer is
//! `(beta/sqrt2) [(1+A) D(Gamma/2) + (1-A) D(-Gamma/2)] |phi>` with `A` the weak
//! value, so every cross term reduces to a kernel evaluated at `mu = +-Gamma`.

use crate::error::Result;
use crate::model::{weak_value, ComplexValue, Coupling, PointerParams, SelectionParams};

/// Gaussian factors below this are flushed to zero.
const FLUSH_BELOW: f64 = 1e-300;

/// `exp(exponent)`, flushed to zero when the result would drop below 1e-300.
pub(crate) fn damped(exponent: f64) -> f64 {
    if exponent < FLUSH_BELOW.ln() {
        0.0
    } else {
        exponent.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSet {
    pub mu: ComplexValue,
    pub k0: ComplexValue,
    pub k1: ComplexValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftResult {
    /// Position shift, position units.
    pub dx: f64,
    /// Momentum shift, momentum units.
    pub dp: f64,
    pub transition_value: ComplexValue,
    pub beta_sq_inv: f64,
}

/// `<alpha|D(mu)|alpha>`.
fn coherent_overlap(alpha: ComplexValue, mu: ComplexValue) -> ComplexValue {
    let magnitude = damped(-mu.norm_sqr() / 2.0);
    if magnitude == 0.0 {
        return ComplexValue::new(0.0, 0.0);
    }
    let phase = (alpha.conj() * mu - alpha * mu.conj()).im;
    ComplexValue::from_polar(magnitude, phase)
}

pub fn displaced_kernels(pointer: &PointerParams, mu: ComplexValue) -> KernelSet {
    let alpha = pointer.alpha();
    let g2 = pointer.gamma_sq();
    let e = coherent_overlap(alpha, mu);
    let b = 1.0 + (alpha - mu).conj() * (alpha + mu);
    KernelSet {
        mu,
        k0: g2 * e * b,
        k1: g2 * e * ((alpha + mu) + alpha * b),
    }
}

/// `<phi|a|phi> = gamma^2 alpha (2 + |alpha|^2)`.
pub fn initial_mean_annihilation(pointer: &PointerParams) -> ComplexValue {
    let alpha = pointer.alpha();
    pointer.gamma_sq() * alpha * (2.0 + alpha.norm_sqr())
}

/// `h(Gamma) = e^{-Gamma^2/2} (1 + (alpha* + Gamma)(alpha - Gamma)) e^{2 i Gamma Im alpha}`.
pub fn h_kernel(pointer: &PointerParams, coupling: &Coupling) -> ComplexValue {
    let alpha = pointer.alpha();
    let gam = coupling.strength();
    let envelope = damped(-gam * gam / 2.0);
    if envelope == 0.0 {
        return ComplexValue::new(0.0, 0.0);
    }
    let bracket = 1.0 + (alpha.conj() + gam) * (alpha - gam);
    envelope * bracket * ComplexValue::from_polar(1.0, 2.0 * gam * alpha.im)
}

/// Kernel `f(Gamma)` in its printed closed form:
///
/// ```text
/// f = e^{-2 i Gamma Im alpha} [2 alpha (2+|alpha|^2) + 3 Gamma/gamma^2
///     - 2 alpha^2 Gamma + Gamma^2 (alpha* - 3 alpha)] e^{-Gamma^2/2}
/// ```
///
/// It equals `2/gamma^2 [K1(Gamma) + Gamma/2 K0(Gamma)]` up to a missing
/// `-Gamma^3` term, so it only feeds [`crate::sweep::audit`].
pub fn f_kernel(pointer: &PointerParams, coupling: &Coupling) -> ComplexValue {
    f_kernel_signed(pointer, coupling.strength())
}

/// [`f_kernel`] at a signed coupling; the printed shifts also need `f(-Gamma)`.
pub(crate) fn f_kernel_signed(pointer: &PointerParams, gam: f64) -> ComplexValue {
    let alpha = pointer.alpha();
    let envelope = damped(-gam * gam / 2.0);
    if envelope == 0.0 {
        return ComplexValue::new(0.0, 0.0);
    }
    let inv_g2 = 1.0 / pointer.gamma_sq();
    let bracket = 2.0 * alpha * (2.0 + alpha.norm_sqr()) + 3.0 * gam * inv_g2
        - 2.0 * alpha * alpha * gam
        + gam * gam * (alpha.conj() - 3.0 * alpha);
    envelope * bracket * ComplexValue::from_polar(1.0, -2.0 * gam * alpha.im)
}

/// `beta^-2 = 1 + |A|^2 + gamma^2 Re[(1+A)* (1-A) h(Gamma)]`.
pub fn beta_inverse_sq(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
) -> Result<f64> {
    let a = weak_value(sel)?;
    let cross = (1.0 + a).conj() * (1.0 - a) * h_kernel(pointer, coupling);
    Ok(1.0 + a.norm_sqr() + pointer.gamma_sq() * cross.re)
}

pub fn transition_value(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
) -> Result<ComplexValue> {
    let a = weak_value(sel)?;
    let g2 = pointer.gamma_sq();
    let h = h_kernel(pointer, coupling);
    let beta_sq = 1.0 / beta_inverse_sq(sel, pointer, coupling)?;
    let bracket = 4.0 * a.re - g2 * (1.0 + a).conj() * (1.0 - a) * h
        + g2 * (1.0 - a).conj() * (1.0 + a) * h.conj();
    Ok(0.5 * beta_sq * bracket)
}

/// Exact pointer shifts for any coupling strength.
pub fn pointer_shifts(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
) -> Result<ShiftResult> {
    let a = weak_value(sel)?;
    let gam = coupling.strength();
    let sigma = pointer.sigma();
    let m = initial_mean_annihilation(pointer);

    let fwd = displaced_kernels(pointer, ComplexValue::new(gam, 0.0));
    let back = displaced_kernels(pointer, ComplexValue::new(-gam, 0.0));
    let plus_w = (1.0 + a).norm_sqr();
    let minus_w = (1.0 - a).norm_sqr();
    let cross_pm = (1.0 + a).conj() * (1.0 - a);
    let cross_mp = (1.0 - a).conj() * (1.0 + a);

    // <phi|[(1+A)* D+^dag + (1-A)* D-^dag][(1+A) D+ + (1-A) D-]|phi> / 2
    let beta_sq_inv = 1.0 + a.norm_sqr() + (cross_pm * back.k0).re;

    let half = gam / 2.0;
    let weighted = plus_w * (m + half)
        + minus_w * (m - half)
        + cross_pm * (back.k1 - half * back.k0)
        + cross_mp * (fwd.k1 + half * fwd.k0);
    // <Phi|a|Phi> - <phi|a|phi>, with beta^2/2 = 1/(2 beta^-2)
    let shift = weighted / (2.0 * beta_sq_inv) - m;

    let transition_value = transition_value(sel, pointer, coupling)?;
    let result = ShiftResult {
        dx: 2.0 * sigma * shift.re,
        dp: shift.im / sigma,
        transition_value,
        beta_sq_inv,
    };
    if !(result.dx.is_finite() && result.dp.is_finite()) {
        return Err(crate::error::Error::NonFinite("pointer_shifts"));
    }
    Ok(result)
}

/// First-order (weak-coupling) shifts `(W_x, W_p)`.
///
/// `W_x = g Re A - g dVar(X)/dtheta / (2 sigma^2) Im A` and
/// `W_p = 2 g Var(P) Im A`, with `dVar(X)/dtheta = 4 sigma^2 gamma^4 r^2 sin(2 theta)`.
pub fn weak_limit_shifts(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
) -> Result<(f64, f64)> {
    let a = weak_value(sel)?;
    let g = coupling.g(pointer);
    let sigma2 = pointer.sigma() * pointer.sigma();
    let g4 = pointer.gamma_sq() * pointer.gamma_sq();
    let r2 = pointer.r() * pointer.r();
    let dvar_x = 4.0 * sigma2 * g4 * r2 * (2.0 * pointer.theta()).sin();
    let (_, var_p) = initial_variances(pointer);
    let wx = g * a.re - g * dvar_x / (2.0 * sigma2) * a.im;
    let wp = 2.0 * g * var_p * a.im;
    Ok((wx, wp))
}

/// `(Var X, Var P)` of the initial SPAC pointer.
pub fn initial_variances(pointer: &PointerParams) -> (f64, f64) {
    let sigma2 = pointer.sigma() * pointer.sigma();
    let g4 = pointer.gamma_sq() * pointer.gamma_sq();
    let r2 = pointer.r() * pointer.r();
    let (s, c) = pointer.theta().sin_cos();
    let var_x = sigma2 * g4 * (3.0 + 4.0 * r2 * s * s + r2 * r2);
    let var_p = g4 * (3.0 + 4.0 * r2 * c * c + r2 * r2) / (4.0 * sigma2);
    (var_x, var_p)
}

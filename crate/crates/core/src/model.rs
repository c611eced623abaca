//! Parameter types and the qubit-side formulas.
//!
//! The measured system is a qubit preselected in
//! `cos(phi/2)|up> + e^{i delta} sin(phi/2)|down>` and postselected in `|up>`.
//! The pointer is a single-photon-added coherent (SPAC) state
//! `gamma a^dag |alpha>` with `alpha = r e^{i theta}`. Units have hbar = 1.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// All complex intermediates (weak values, kernels, amplitudes).
pub type ComplexValue = Complex64;

/// Postselection is rejected when `cos^2(phi/2)` falls below this.
pub const ORTHOGONALITY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    phi: f64,
    delta: f64,
}

impl SelectionParams {
    /// `phi` must lie in `[0, pi]`; `delta` is wrapped into `[0, 2 pi)`.
    pub fn new(phi: f64, delta: f64) -> Result<Self> {
        if !phi.is_finite() || !(0.0..=PI).contains(&phi) {
            return Err(Error::invalid("phi", format!("{phi} not in [0, pi]")));
        }
        if !delta.is_finite() {
            return Err(Error::invalid("delta", "not finite"));
        }
        let mut delta = delta.rem_euclid(TAU);
        if delta >= TAU {
            delta = 0.0;
        }
        Ok(Self { phi, delta })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Amplitudes `(<up|psi_i>, <down|psi_i>)` of the preselected state.
    pub fn preselected_amplitudes(&self) -> (ComplexValue, ComplexValue) {
        let (s, c) = (self.phi / 2.0).sin_cos();
        (
            ComplexValue::new(c, 0.0),
            ComplexValue::from_polar(s, self.delta),
        )
    }

    /// `<psi_f|psi_i> = cos(phi/2)`.
    pub fn postselection_overlap(&self) -> f64 {
        (self.phi / 2.0).cos()
    }

    pub(crate) fn ensure_postselectable(&self) -> Result<()> {
        let probability = postselection_probability(self);
        if probability < ORTHOGONALITY_GUARD {
            Err(Error::OrthogonalSelection { probability })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerParams {
    r: f64,
    theta: f64,
    sigma: f64,
}

impl PointerParams {
    pub fn new(r: f64, theta: f64, sigma: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::invalid("r", format!("{r} must be finite and >= 0")));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta", "not finite"));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::invalid("sigma", format!("{sigma} must be > 0")));
        }
        Ok(Self { r, theta, sigma })
    }

    /// Pointer with unit beam width.
    pub fn unit_width(r: f64, theta: f64) -> Result<Self> {
        Self::new(r, theta, 1.0)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Coherent amplitude `alpha = r e^{i theta}`.
    pub fn alpha(&self) -> ComplexValue {
        ComplexValue::from_polar(self.r, self.theta)
    }

    /// `gamma^2 = 1 / (1 + |alpha|^2)`.
    pub fn gamma_sq(&self) -> f64 {
        1.0 / (1.0 + self.r * self.r)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_sq().sqrt()
    }
}

/// Dimensionless measurement strength `Gamma = g / sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    strength: f64,
}

impl Coupling {
    pub fn new(strength: f64) -> Result<Self> {
        if !strength.is_finite() || strength < 0.0 {
            return Err(Error::invalid(
                "Gamma",
                format!("{strength} must be finite and >= 0"),
            ));
        }
        Ok(Self { strength })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// Coupling constant `g = Gamma sigma` in position units.
    pub fn g(&self, pointer: &PointerParams) -> f64 {
        self.strength * pointer.sigma()
    }
}

/// Weak value `<psi_f|sigma_x|psi_i> / <psi_f|psi_i> = e^{i delta} tan(phi/2)`.
pub fn weak_value(sel: &SelectionParams) -> Result<ComplexValue> {
    sel.ensure_postselectable()?;
    Ok(ComplexValue::from_polar((sel.phi / 2.0).tan(), sel.delta))
}

pub fn postselection_probability(sel: &SelectionParams) -> f64 {
    let c = (sel.phi / 2.0).cos();
    c * c
}

/// Conditional expectation of `sigma_x` under strong measurement (ABL rule):
/// `cos(delta) sin(phi)`.
pub fn abl_conditional(sel: &SelectionParams) -> f64 {
    sel.delta.cos() * sel.phi.sin()
}

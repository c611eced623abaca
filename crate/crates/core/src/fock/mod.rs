//! Truncated Fock-space oracle.
//!
//! States are built by explicit linear algebra on photon-number amplitudes;
//! nothing from [`crate::analytic`] is used here. The qubit side is handled
//! with the raw preselected amplitudes, so even the weak value never enters:
//! projecting `exp(-i g sigma_x P)` onto `<up|` gives
//!
//! ```text
//! <up|Psi> = (u + d)/2 D(Gamma/2)|phi> + (u - d)/2 D(-Gamma/2)|phi>
//! ```
//!
//! with `(u, d)` the `|up>`, `|down>` amplitudes of the preselected qubit.

mod operator;
mod vector;

pub use operator::{safe_subspace_dim, FockOperator, OperatorLabel};
pub use vector::FockVector;

use crate::error::{Error, Result};
use crate::model::{ComplexValue, Coupling, PointerParams, SelectionParams, ORTHOGONALITY_GUARD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Lower bound for the starting dimension; the point heuristic may raise it.
    pub initial_n_max: usize,
    pub growth_factor: usize,
    pub tail_tolerance: f64,
    pub guard_band: usize,
    pub max_n_max: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            initial_n_max: 64,
            growth_factor: 2,
            tail_tolerance: 1e-14,
            guard_band: 8,
            max_n_max: 2048,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.initial_n_max < 8 {
            return Err(Error::invalid("initial_n_max", "must be >= 8"));
        }
        if self.growth_factor < 2 {
            return Err(Error::invalid("growth_factor", "must be >= 2"));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance <= 1e-6) {
            return Err(Error::invalid("tail_tolerance", "must lie in (0, 1e-6]"));
        }
        if self.guard_band >= self.initial_n_max {
            return Err(Error::invalid(
                "guard_band",
                "must be smaller than initial_n_max",
            ));
        }
        Ok(())
    }

    /// Starting dimension `max(initial, ceil((r + Gamma/2 + 6)^2))`.
    pub fn starting_n_max(&self, pointer: &PointerParams, gamma: f64) -> usize {
        let reach = pointer.r() + gamma / 2.0 + 6.0;
        self.initial_n_max.max((reach * reach).ceil() as usize)
    }
}

/// SPAC amplitudes `gamma e^{-|alpha|^2/2} alpha^{n-1} sqrt(n) / sqrt((n-1)!)`
/// for `n < n_max`, plus the exact weight of the levels beyond.
fn spac_amplitudes(pointer: &PointerParams, n_max: usize) -> (Vec<ComplexValue>, f64) {
    let alpha = pointer.alpha();
    let mut amps = vec![ComplexValue::new(0.0, 0.0); n_max];
    let mut c = ComplexValue::new(pointer.gamma() * (-alpha.norm_sqr() / 2.0).exp(), 0.0);
    let peak = alpha.norm_sqr() + 1.0;
    let mut tail = 0.0;
    let mut n = 1usize;
    loop {
        if n < n_max {
            amps[n] = c;
        } else {
            let w = c.norm_sqr();
            tail += w;
            if (n as f64 > peak && w < 1e-40) || n > n_max + 100_000 {
                break;
            }
        }
        c *= alpha * ((n + 1) as f64).sqrt() / n as f64;
        n += 1;
    }
    (amps, tail)
}

/// `|phi> = gamma a^dag |alpha>`, grown until the tail weight meets the policy.
pub fn spac_state(pointer: &PointerParams, policy: &TruncationPolicy) -> Result<FockVector> {
    policy.validate()?;
    let mut n_max = policy.starting_n_max(pointer, 0.0).min(policy.max_n_max);
    loop {
        let (amps, tail) = spac_amplitudes(pointer, n_max);
        let v = FockVector::from_amplitudes(amps, tail);
        if tail < policy.tail_tolerance {
            return Ok(v.normalized()?.0.with_tail_mass(tail));
        }
        let next = n_max * policy.growth_factor;
        if next > policy.max_n_max {
            return Err(Error::TruncationInsufficient {
                n_max,
                tail_mass: tail,
            });
        }
        n_max = next;
    }
}

pub fn displacement_operator(mu: ComplexValue, n_max: usize) -> Result<FockOperator> {
    if n_max < 8 {
        return Err(Error::invalid("n_max", "must be >= 8"));
    }
    Ok(FockOperator::displacement(mu, n_max))
}

/// Initial pointer and its two displaced images `D(+-Gamma/2)|phi>` at a fixed
/// dimension.
#[derive(Debug, Clone)]
pub struct Branches {
    pub initial: FockVector,
    pub plus: FockVector,
    pub minus: FockVector,
    pub n_max: usize,
    pub tail_mass: f64,
}

impl Branches {
    pub fn at(pointer: &PointerParams, gamma: f64, n_max: usize, guard: usize) -> Result<Self> {
        if n_max < 8 {
            return Err(Error::invalid("n_max", "must be >= 8"));
        }
        let (amps, spac_tail) = spac_amplitudes(pointer, n_max);
        let initial = FockVector::from_amplitudes(amps, spac_tail);
        let (initial, _) = initial.normalized()?;
        let d = FockOperator::displacement(ComplexValue::new(gamma / 2.0, 0.0), n_max);
        // D(-x) = D(x)^dag for real x
        let plus = d.apply(&initial);
        let minus = d.apply_adjoint(&initial);
        // The norm deficit only flags gross loss; below 1e-10 it is roundoff.
        let lost = |v: &FockVector| {
            let deficit = (1.0 - v.norm_sq()).abs();
            v.guard_band_mass(guard) + if deficit > 1e-10 { deficit } else { 0.0 }
        };
        let tail_mass = spac_tail + lost(&plus).max(lost(&minus));
        Ok(Self {
            initial: initial.with_tail_mass(spac_tail),
            plus: plus.with_tail_mass(tail_mass),
            minus: minus.with_tail_mass(tail_mass),
            n_max,
            tail_mass,
        })
    }

    /// Grows `n_max` until the tail weight meets the policy.
    pub fn resolve(pointer: &PointerParams, gamma: f64, policy: &TruncationPolicy) -> Result<Self> {
        policy.validate()?;
        let mut n_max = policy.starting_n_max(pointer, gamma).min(policy.max_n_max);
        loop {
            let b = Self::at(pointer, gamma, n_max, policy.guard_band)?;
            if b.tail_mass < policy.tail_tolerance {
                return Ok(b);
            }
            let next = n_max * policy.growth_factor;
            if next > policy.max_n_max {
                return Err(Error::TruncationInsufficient {
                    n_max,
                    tail_mass: b.tail_mass,
                });
            }
            n_max = next;
        }
    }
}

fn branch_weights(sel: &SelectionParams) -> (ComplexValue, ComplexValue) {
    let (u, d) = sel.preselected_amplitudes();
    ((u + d) / 2.0, (u - d) / 2.0)
}

fn ensure_postselectable(sel: &SelectionParams) -> Result<()> {
    let (u, _) = sel.preselected_amplitudes();
    let probability = u.norm_sqr();
    if probability < ORTHOGONALITY_GUARD {
        Err(Error::OrthogonalSelection { probability })
    } else {
        Ok(())
    }
}

/// Normalized postselected pointer with its normalization data.
#[derive(Debug, Clone)]
pub struct FinalState {
    pub state: FockVector,
    /// `beta^-2`, recovered from the norm of the unnormalized pointer.
    pub beta_inv_sq: f64,
    /// Exact (coupling-dependent) postselection probability `||<up|Psi>||^2`.
    pub success_probability: f64,
}

/// Unnormalized postselected pointer `<up|Psi>`.
fn postselected_pointer(sel: &SelectionParams, b: &Branches) -> FockVector {
    let (wp, wm) = branch_weights(sel);
    FockVector::combine(wp, &b.plus, wm, &b.minus)
}

fn final_state_from(sel: &SelectionParams, b: &Branches) -> Result<FinalState> {
    ensure_postselectable(sel)?;
    let (u, _) = sel.preselected_amplitudes();
    let (state, success_probability) = postselected_pointer(sel, b).normalized()?;
    Ok(FinalState {
        state: state.with_tail_mass(b.tail_mass),
        beta_inv_sq: 2.0 * success_probability / u.norm_sqr(),
        success_probability,
    })
}

fn sigma_branch_from(sel: &SelectionParams, b: &Branches) -> FockVector {
    let (wp, wm) = branch_weights(sel);
    FockVector::combine(wp, &b.plus, -wm, &b.minus)
}

pub fn assemble_final_state(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    policy: &TruncationPolicy,
) -> Result<FinalState> {
    ensure_postselectable(sel)?;
    let b = Branches::resolve(pointer, coupling.strength(), policy)?;
    final_state_from(sel, &b)
}

/// Normalized postselected pointer at a fixed dimension; used where several
/// couplings must share one basis (finite differences in the coupling).
pub fn final_state_at(
    sel: &SelectionParams,
    pointer: &PointerParams,
    gamma: f64,
    n_max: usize,
    guard: usize,
) -> Result<FinalState> {
    ensure_postselectable(sel)?;
    let b = Branches::at(pointer, gamma, n_max, guard)?;
    final_state_from(sel, &b)
}

/// `<up| sigma_x |Psi>` (unnormalized).
pub fn sigma_branch_state(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    policy: &TruncationPolicy,
) -> Result<FockVector> {
    ensure_postselectable(sel)?;
    let b = Branches::resolve(pointer, coupling.strength(), policy)?;
    Ok(sigma_branch_from(sel, &b))
}

/// Quadrature moments of a normalized state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub mean_x2: f64,
    pub mean_p2: f64,
    /// `<XP + PX>`.
    pub mean_xp_sym: f64,
}

impl Moments {
    pub fn var_x(&self) -> f64 {
        self.mean_x2 - self.mean_x * self.mean_x
    }

    pub fn var_p(&self) -> f64 {
        self.mean_p2 - self.mean_p * self.mean_p
    }

    /// `<XP + PX> - 2<X><P>`.
    pub fn covariance(&self) -> f64 {
        self.mean_xp_sym - 2.0 * self.mean_x * self.mean_p
    }
}

/// Moments from the ladder sums `<a>`, `<a^2>`, `<a^dag a>`.
pub fn moments(state: &FockVector, pointer: &PointerParams) -> Moments {
    let c = state.amplitudes();
    let mut a1 = ComplexValue::new(0.0, 0.0);
    let mut a2 = ComplexValue::new(0.0, 0.0);
    let mut num = 0.0;
    for n in 1..c.len() {
        let nf = n as f64;
        a1 += c[n - 1].conj() * c[n] * nf.sqrt();
        num += nf * c[n].norm_sqr();
        if n >= 2 {
            a2 += c[n - 2].conj() * c[n] * (nf * (nf - 1.0)).sqrt();
        }
    }
    let sigma = pointer.sigma();
    // X = sigma(a + a^dag), P = i/(2 sigma)(a^dag - a)
    Moments {
        mean_x: 2.0 * sigma * a1.re,
        mean_p: a1.im / sigma,
        mean_x2: sigma * sigma * (2.0 * a2.re + 2.0 * num + 1.0),
        mean_p2: (2.0 * num + 1.0 - 2.0 * a2.re) / (4.0 * sigma * sigma),
        mean_xp_sym: 2.0 * a2.im,
    }
}

/// `<psi|[X, P]|psi>` with the truncated ladder operators; `i` up to the
/// weight in the top level.
pub fn commutator_expectation(state: &FockVector, pointer: &PointerParams) -> ComplexValue {
    let sigma = pointer.sigma();
    let a = state.annihilate();
    let ad = state.create();
    let x = FockVector::combine(sigma.into(), &a, sigma.into(), &ad);
    let k = ComplexValue::new(0.0, 1.0 / (2.0 * sigma));
    let p = FockVector::combine(-k, &a, k, &ad);
    x.inner(&p) - p.inner(&x)
}

/// Everything the oracle reports for one parameter point.
#[derive(Debug, Clone)]
pub struct OracleEvaluation {
    pub final_state: FinalState,
    pub sigma_branch: FockVector,
    pub initial: Moments,
    pub postselected: Moments,
    pub transition_value: ComplexValue,
    pub dx: f64,
    pub dp: f64,
    pub n_max: usize,
    pub tail_mass: f64,
}

fn evaluate_branches(
    sel: &SelectionParams,
    pointer: &PointerParams,
    b: &Branches,
) -> Result<OracleEvaluation> {
    let final_state = final_state_from(sel, b)?;
    let unnormalized = postselected_pointer(sel, b);
    let sigma_branch = sigma_branch_from(sel, b);
    let transition_value = unnormalized.inner(&sigma_branch) / unnormalized.norm_sq();
    let initial = moments(&b.initial, pointer);
    let postselected = moments(&final_state.state, pointer);
    Ok(OracleEvaluation {
        dx: postselected.mean_x - initial.mean_x,
        dp: postselected.mean_p - initial.mean_p,
        final_state,
        sigma_branch,
        initial,
        postselected,
        transition_value,
        n_max: b.n_max,
        tail_mass: b.tail_mass,
    })
}

pub fn evaluate(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    policy: &TruncationPolicy,
) -> Result<OracleEvaluation> {
    ensure_postselectable(sel)?;
    let b = Branches::resolve(pointer, coupling.strength(), policy)?;
    evaluate_branches(sel, pointer, &b)
}

/// Same as [`evaluate`] at a fixed dimension, with no convergence guarantee.
pub fn evaluate_at(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    n_max: usize,
    guard: usize,
) -> Result<OracleEvaluation> {
    ensure_postselectable(sel)?;
    let b = Branches::at(pointer, coupling.strength(), n_max, guard)?;
    evaluate_branches(sel, pointer, &b)
}

/// Transition value `<Phi~|Psi'> / <Phi~|Phi~>` with `Phi~ = <up|Psi>` and
/// `Psi' = <up|sigma_x|Psi>`.
pub fn transition_value(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    policy: &TruncationPolicy,
) -> Result<ComplexValue> {
    Ok(evaluate(sel, pointer, coupling, policy)?.transition_value)
}

/// `(<X>, <X^2>)` of the pointer without postselection: an incoherent mixture
/// of the two sigma_x branches weighted by `|<+-x|psi_i>|^2`.
pub fn nonpostselected_moments(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    policy: &TruncationPolicy,
) -> Result<(f64, f64)> {
    let b = Branches::resolve(pointer, coupling.strength(), policy)?;
    Ok(nonpostselected_from(sel, pointer, &b))
}

fn nonpostselected_from(
    sel: &SelectionParams,
    pointer: &PointerParams,
    b: &Branches,
) -> (f64, f64) {
    let (u, d) = sel.preselected_amplitudes();
    let w_plus = (u + d).norm_sqr() / 2.0;
    let w_minus = (u - d).norm_sqr() / 2.0;
    let mp = moments(&b.plus, pointer);
    let mm = moments(&b.minus, pointer);
    (
        w_plus * mp.mean_x + w_minus * mm.mean_x,
        w_plus * mp.mean_x2 + w_minus * mm.mean_x2,
    )
}

/// Largest relative change (floored at unit scale) of `dx`, `dp`, the
/// transition value and `beta^-2` when the resolved dimension is doubled.
pub fn convergence_certificate(
    sel: &SelectionParams,
    pointer: &PointerParams,
    coupling: &Coupling,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let base = evaluate(sel, pointer, coupling, policy)?;
    let doubled = evaluate_at(sel, pointer, coupling, 2 * base.n_max, policy.guard_band)?;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    Ok([
        rel(base.dx, doubled.dx),
        rel(base.dp, doubled.dp),
        rel(base.transition_value.re, doubled.transition_value.re),
        rel(base.transition_value.im, doubled.transition_value.im),
        rel(
            base.final_state.beta_inv_sq,
            doubled.final_state.beta_inv_sq,
        ),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

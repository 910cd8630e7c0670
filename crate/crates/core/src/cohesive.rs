//! Mixed-mode cohesive law derived from a weighted energy-release-rate
//! surface.
//!
//! Separations are expressed in the face frame: `u_n` is the opening along
//! the face normal (positive when the faces move apart) and `u_t` the sliding
//! along the tangent. With critical separations `u_nc`, `u_tc` the law uses
//!
//! * the effective separation `lambda = sqrt((u_n/u_nc)^2 + (u_t/u_tc)^2)`,
//! * the mode mix `phi = atan(u_nc u_n / (u_tc |u_t|))` (`pi/2` is pure opening),
//! * the surface `Gamma(lambda, phi) = f(phi) G_I(lambda u_nc) + (1 - f(phi)) G_II(lambda u_tc)`
//!   where `G_I`, `G_II` integrate the pure-mode traction curves,
//!
//! and tractions are the gradient of `Gamma` with respect to `(u_n, u_t)`.
//! The interface stiffness fed to the discretization is the secant
//! `S_T`, its inverse `K_T`, and the Nitsche blend `S_h = (h_F/gamma I + K_T)^-1`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use thiserror::Error;

/// Effective separations below this value are treated as the rigid branch.
pub const RIGID_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohesiveError {
    #[error("cohesive strength must be positive, got {0}")]
    Strength(f64),
    #[error("critical separation must be positive and finite, got {0}")]
    CriticalSeparation(f64),
    #[error("secant stiffness {0:?} is singular")]
    Singular(Matrix2<f64>),
    #[error("secant stiffness has a negative diagonal entry {0:e}")]
    Negative(f64),
}

/// Initially rigid, linearly softening pure-mode law:
/// `t(d) = sigma_max (1 - d/u_c)` for `0 <= d <= u_c`, zero beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureModeLaw {
    pub sigma_max: f64,
    pub u_c: f64,
}

impl PureModeLaw {
    pub fn new(sigma_max: f64, u_c: f64) -> Result<Self, CohesiveError> {
        if !(sigma_max > 0.0) {
            return Err(CohesiveError::Strength(sigma_max));
        }
        if !(u_c > 0.0 && u_c.is_finite()) {
            return Err(CohesiveError::CriticalSeparation(u_c));
        }
        Ok(Self { sigma_max, u_c })
    }

    pub fn traction(&self, d: f64) -> f64 {
        if d >= self.u_c {
            0.0
        } else {
            self.sigma_max * (1.0 - d.max(0.0) / self.u_c)
        }
    }

    /// Energy release rate, the integral of the traction curve up to `d`.
    pub fn energy(&self, d: f64) -> f64 {
        let d = d.clamp(0.0, self.u_c);
        self.sigma_max * (d - 0.5 * d * d / self.u_c)
    }

    pub fn fracture_energy(&self) -> f64 {
        0.5 * self.sigma_max * self.u_c
    }
}

/// Mode-mix weight `f(phi)` with `f(0) = 0` and `f(pi/2) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightFunction {
    /// `f = sin^2(phi)`
    #[default]
    SinSquared,
}

impl WeightFunction {
    pub fn value(&self, phi: f64) -> f64 {
        match self {
            WeightFunction::SinSquared => phi.sin().powi(2),
        }
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        match self {
            WeightFunction::SinSquared => (2.0 * phi).sin(),
        }
    }

    /// `f'(phi) / (sin(phi) cos(phi))`, bounded at both pure modes.
    fn reduced_derivative(&self, _phi: f64) -> f64 {
        match self {
            WeightFunction::SinSquared => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecantVariant {
    /// `S_T = (t_n/u_n) n⊗n + (t_t/u_t) t⊗t`, which reproduces the tractions.
    #[default]
    Diagonal,
    /// Adds the cross terms `(t_t/u_n) n⊗t + (t_n/u_t) t⊗n`. Rank one, so it
    /// cannot be inverted into a compliance; kept for comparison only.
    CrossTerms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohesiveParams {
    pub normal: PureModeLaw,
    pub tangential: PureModeLaw,
    pub weight: WeightFunction,
    pub secant_variant: SecantVariant,
}

impl CohesiveParams {
    pub fn new(normal: PureModeLaw, tangential: PureModeLaw) -> Self {
        Self {
            normal,
            tangential,
            weight: WeightFunction::default(),
            secant_variant: SecantVariant::default(),
        }
    }

    pub fn u_nc(&self) -> f64 {
        self.normal.u_c
    }

    pub fn u_tc(&self) -> f64 {
        self.tangential.u_c
    }
}

/// Damage history of one face.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaceState {
    pub lambda_max: f64,
    pub failed: bool,
}

impl FaceState {
    pub fn intact() -> Self {
        Self::default()
    }

    /// Traction-free from the start, e.g. an initial crack.
    pub fn pre_failed() -> Self {
        Self {
            lambda_max: 1.0,
            failed: true,
        }
    }
}

pub fn update_state(state: &FaceState, lambda: f64) -> FaceState {
    let lambda_max = state.lambda_max.max(lambda);
    FaceState {
        lambda_max,
        failed: state.failed || lambda_max >= 1.0,
    }
}

/// Mode mix in `[0, pi/2]`, `None` when both separations vanish. Closing
/// (negative) openings map to pure sliding.
pub fn mode_mix(u_n: f64, u_t: f64, params: &CohesiveParams) -> Option<f64> {
    if u_n == 0.0 && u_t == 0.0 {
        return None;
    }
    Some((params.u_nc() * u_n.max(0.0)).atan2(params.u_tc() * u_t.abs()))
}

pub fn effective_separation(u_n: f64, u_t: f64, params: &CohesiveParams) -> f64 {
    (u_n / params.u_nc()).hypot(u_t / params.u_tc())
}

/// Effective separation entering the damage history: the full `lambda` when
/// opening, the sliding part alone in contact.
pub fn history_separation(u_n: f64, u_t: f64, params: &CohesiveParams) -> f64 {
    if u_n >= 0.0 {
        effective_separation(u_n, u_t, params)
    } else {
        u_t.abs() / params.u_tc()
    }
}

pub fn gamma_surface(lambda: f64, phi: f64, params: &CohesiveParams) -> f64 {
    let f = params.weight.value(phi);
    f * params.normal.energy(lambda * params.u_nc())
        + (1.0 - f) * params.tangential.energy(lambda * params.u_tc())
}

/// `(dGamma/dlambda, G_I - G_II)` at `lambda`.
fn surface_terms(lambda: f64, phi: f64, params: &CohesiveParams) -> (f64, f64) {
    let (a, b) = (params.u_nc(), params.u_tc());
    let f = params.weight.value(phi);
    let d_lambda = f * a * params.normal.traction(lambda * a)
        + (1.0 - f) * b * params.tangential.traction(lambda * b);
    let diff = params.normal.energy(lambda * a) - params.tangential.energy(lambda * b);
    (d_lambda, diff)
}

/// Tractions on the loading surface by the chain rule through `(lambda, phi)`.
fn loading_tractions(u_n: f64, u_t: f64, params: &CohesiveParams) -> (f64, f64) {
    let (a, b) = (params.u_nc(), params.u_tc());
    let lambda = effective_separation(u_n, u_t, params);
    let phi = (a * u_n).atan2(b * u_t.abs());
    let (g_lambda, diff) = surface_terms(lambda, phi, params);
    let d = a * a * u_n * u_n + b * b * u_t * u_t;
    // f'(phi) through sin(phi) cos(phi) = a u_n b |u_t| / d, exact at the pure modes
    let g_phi = params.weight.reduced_derivative(phi) * (a * u_n) * (b * u_t.abs()) / d * diff;
    let sign_t = if u_t == 0.0 { 0.0 } else { u_t.signum() };
    let dlam_dn = u_n / (a * a * lambda);
    let dlam_dt = u_t / (b * b * lambda);
    let dphi_dn = a * b * u_t.abs() / d;
    let dphi_dt = -a * b * u_n * sign_t / d;
    (
        g_lambda * dlam_dn + g_phi * dphi_dn,
        g_lambda * dlam_dt + g_phi * dphi_dt,
    )
}

/// Diagonal secant `(t_n/u_n, t_t/u_t)` on the loading surface, in a form
/// without 0/0 at the pure modes.
fn loading_secant(u_n: f64, u_t: f64, params: &CohesiveParams) -> (f64, f64) {
    let (a, b) = (params.u_nc(), params.u_tc());
    let lambda = effective_separation(u_n, u_t, params);
    let phi = (a * u_n).atan2(b * u_t.abs());
    let (g_lambda, diff) = surface_terms(lambda, phi, params);
    let d = a * a * u_n * u_n + b * b * u_t * u_t;
    let coupling = params.weight.reduced_derivative(phi) * a * a * b * b * diff / (d * d);
    (
        g_lambda / (a * a * lambda) + coupling * u_t * u_t,
        g_lambda / (b * b * lambda) - coupling * u_n * u_n,
    )
}

/// Point on the loading surface governing the response at `(u_n, u_t)`:
/// the separation itself when loading, its radial projection to
/// `lambda_max` when unloading. Returns the point and the traction scale.
fn governing_point(u_n: f64, u_t: f64, lambda: f64, lambda_max: f64, params: &CohesiveParams) -> (f64, f64, f64) {
    if lambda >= lambda_max {
        (u_n, u_t, 1.0)
    } else if lambda < RIGID_THRESHOLD {
        (lambda_max * params.u_nc(), 0.0, 0.0)
    } else {
        let s = lambda_max / lambda;
        (u_n * s, u_t * s, lambda / lambda_max)
    }
}

/// Cohesive tractions `(t_n, t_t)`; `None` on the rigid branch where the law
/// carries no traction of its own and the face stays bonded.
///
/// In contact (`u_n < 0`) only the sliding law acts and `t_n` is reported as
/// zero: the normal reaction comes from the contact constraint.
pub fn tractions(u_n: f64, u_t: f64, state: &FaceState, params: &CohesiveParams) -> Option<(f64, f64)> {
    if state.failed {
        return Some((0.0, 0.0));
    }
    if u_n < 0.0 {
        let lam = u_t.abs() / params.u_tc();
        let gov = lam.max(state.lambda_max);
        if gov < RIGID_THRESHOLD {
            return None;
        }
        if gov >= 1.0 {
            return Some((0.0, 0.0));
        }
        let d = gov * params.u_tc();
        let secant = params.tangential.traction(d) / d;
        return Some((0.0, secant * u_t));
    }
    let lambda = effective_separation(u_n, u_t, params);
    if lambda.max(state.lambda_max) < RIGID_THRESHOLD {
        return None;
    }
    if lambda >= 1.0 {
        return Some((0.0, 0.0));
    }
    let (pn, pt, scale) = governing_point(u_n, u_t, lambda, state.lambda_max, params);
    let (tn, tt) = loading_tractions(pn, pt, params);
    Some((tn * scale, tt * scale))
}

/// Secant stiffness in the `(n, t)` frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecantStiffness {
    /// Unbounded stiffness: no cohesive compliance yet.
    Rigid,
    /// Closing face: rigid normal contact, sliding secant (zero once failed).
    Contact { tangential: f64 },
    Matrix(Matrix2<f64>),
}

pub fn secant_stiffness(u_n: f64, u_t: f64, state: &FaceState, params: &CohesiveParams) -> SecantStiffness {
    if u_n < 0.0 {
        if state.failed {
            return SecantStiffness::Contact { tangential: 0.0 };
        }
        let gov = (u_t.abs() / params.u_tc()).max(state.lambda_max);
        if gov < RIGID_THRESHOLD {
            return SecantStiffness::Rigid;
        }
        if gov >= 1.0 {
            return SecantStiffness::Contact { tangential: 0.0 };
        }
        let d = gov * params.u_tc();
        return SecantStiffness::Contact {
            tangential: params.tangential.traction(d) / d,
        };
    }
    if state.failed {
        return SecantStiffness::Matrix(Matrix2::zeros());
    }
    let lambda = effective_separation(u_n, u_t, params);
    if lambda.max(state.lambda_max) < RIGID_THRESHOLD {
        return SecantStiffness::Rigid;
    }
    if lambda >= 1.0 {
        return SecantStiffness::Matrix(Matrix2::zeros());
    }
    let (pn, pt, _) = governing_point(u_n, u_t, lambda, state.lambda_max, params);
    match params.secant_variant {
        SecantVariant::Diagonal => {
            let (sn, st) = loading_secant(pn, pt, params);
            SecantStiffness::Matrix(Matrix2::new(sn, 0.0, 0.0, st))
        }
        SecantVariant::CrossTerms => {
            let (tn, tt) = loading_tractions(pn, pt, params);
            // rows: n-row carries 1/u_n, t-row carries 1/u_t
            SecantStiffness::Matrix(Matrix2::new(tn / pn, tt / pn, tn / pt, tt / pt))
        }
    }
}

/// Secant compliance in the `(n, t)` frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecantCompliance {
    Zero,
    /// Per-direction compliance; `None` is unbounded (traction-free direction).
    Diagonal {
        normal: Option<f64>,
        tangential: Option<f64>,
    },
    Full(Matrix2<f64>),
}

impl SecantCompliance {
    /// Fully separated face.
    pub const FREE: SecantCompliance = SecantCompliance::Diagonal {
        normal: None,
        tangential: None,
    };

    pub fn is_free(&self) -> bool {
        *self == Self::FREE
    }

    /// Matrix form when every direction is bounded.
    pub fn matrix(&self) -> Option<Matrix2<f64>> {
        match *self {
            SecantCompliance::Zero => Some(Matrix2::zeros()),
            SecantCompliance::Diagonal {
                normal: Some(n),
                tangential: Some(t),
            } => Some(Matrix2::new(n, 0.0, 0.0, t)),
            SecantCompliance::Diagonal { .. } => None,
            SecantCompliance::Full(k) => Some(k),
        }
    }

    /// `(1 - w) self + w other`, taking `other` wherever either side is
    /// unbounded.
    pub fn relax(&self, other: &SecantCompliance, w: f64) -> SecantCompliance {
        let blend = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => Some((1.0 - w) * a + w * b),
            _ => b,
        };
        match (self.diagonal(), other.diagonal()) {
            (Some((an, at)), Some((bn, bt))) => {
                let (n, t) = (blend(an, bn), blend(at, bt));
                if n == Some(0.0) && t == Some(0.0) {
                    SecantCompliance::Zero
                } else {
                    SecantCompliance::Diagonal { normal: n, tangential: t }
                }
            }
            _ => match (self.matrix(), other.matrix()) {
                (Some(a), Some(b)) => SecantCompliance::Full(a * (1.0 - w) + b * w),
                _ => *other,
            },
        }
    }

    fn diagonal(&self) -> Option<(Option<f64>, Option<f64>)> {
        match *self {
            SecantCompliance::Zero => Some((Some(0.0), Some(0.0))),
            SecantCompliance::Diagonal { normal, tangential } => Some((normal, tangential)),
            SecantCompliance::Full(_) => None,
        }
    }
}

/// `K_T = S_T^-1`, with zero and unbounded directions made explicit.
pub fn secant_compliance(stiffness: &SecantStiffness) -> Result<SecantCompliance, CohesiveError> {
    let inv = |s: f64| -> Result<Option<f64>, CohesiveError> {
        if s < 0.0 {
            Err(CohesiveError::Negative(s))
        } else if s == 0.0 {
            Ok(None)
        } else {
            Ok(Some(1.0 / s))
        }
    };
    match *stiffness {
        SecantStiffness::Rigid => Ok(SecantCompliance::Zero),
        SecantStiffness::Contact { tangential } => Ok(SecantCompliance::Diagonal {
            normal: Some(0.0),
            tangential: inv(tangential)?,
        }),
        SecantStiffness::Matrix(s) if s[(0, 1)] == 0.0 && s[(1, 0)] == 0.0 => {
            Ok(SecantCompliance::Diagonal {
                normal: inv(s[(0, 0)])?,
                tangential: inv(s[(1, 1)])?,
            })
        }
        SecantStiffness::Matrix(s) => {
            let scale = s.abs().max();
            if s.determinant().abs() <= 1e-12 * scale * scale {
                return Err(CohesiveError::Singular(s));
            }
            s.try_inverse()
                .map(SecantCompliance::Full)
                .ok_or(CohesiveError::Singular(s))
        }
    }
}

/// `S_h = (h_F/gamma I + K)^-1` in the frame of `K`; unbounded directions
/// contribute no stiffness.
pub fn interface_stiffness(k: &SecantCompliance, h_f: f64, gamma: f64) -> Matrix2<f64> {
    let eps = h_f / gamma;
    match *k {
        SecantCompliance::Zero => Matrix2::identity() / eps,
        SecantCompliance::Diagonal { normal, tangential } => {
            let s = |c: Option<f64>| c.map_or(0.0, |c| 1.0 / (eps + c));
            Matrix2::new(s(normal), 0.0, 0.0, s(tangential))
        }
        SecantCompliance::Full(k) => (Matrix2::identity() * eps + k)
            .try_inverse()
            .unwrap_or_else(Matrix2::zeros),
    }
}

/// Energy per unit area dissipated once the history reaches `lambda_max` at
/// mode mix `phi`: the surface value minus the energy recoverable along the
/// secant unloading path.
pub fn dissipated_energy(lambda_max: f64, phi: f64, params: &CohesiveParams) -> f64 {
    if lambda_max <= 0.0 {
        return 0.0;
    }
    let lambda = lambda_max.min(1.0);
    let (g_lambda, _) = surface_terms(lambda, phi, params);
    let recoverable = if lambda_max >= 1.0 { 0.0 } else { 0.5 * lambda * g_lambda };
    gamma_surface(lambda, phi, params) - recoverable
}

/// Strength envelope check for an intact face: `<t_n>^2/s_n^2 + t_t^2/s_t^2 >= 1`.
pub fn exceeds_strength(t_n: f64, t_t: f64, params: &CohesiveParams) -> bool {
    strength_ratio(t_n, t_t, params) >= 1.0
}

pub fn strength_ratio(t_n: f64, t_t: f64, params: &CohesiveParams) -> f64 {
    (t_n.max(0.0) / params.normal.sigma_max).hypot(t_t / params.tangential.sigma_max)
}

/// Pure mode I mix angle.
pub const PURE_OPENING: f64 = FRAC_PI_2;

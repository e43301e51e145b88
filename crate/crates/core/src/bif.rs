//! Byrnes–Isidori coordinates `(y, y_dot, eta1, eta2)` for end-effector
//! tracking (`s = l`, output weight 1/2) and the resulting internal dynamics.
//!
//! The internal coordinates are `eta1 = beta` and
//! `eta2 = (1/3 + cos(beta)/2) alpha_dot + beta_dot / 3`; both annihilate the
//! input vector field, so the internal dynamics are input-free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ManipulatorParams, PlantState, COS_BETA_BOUND};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BifCoords {
    pub y: f64,
    pub y_dot: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl BifCoords {
    pub const fn new(y: f64, y_dot: f64, eta1: f64, eta2: f64) -> Self {
        Self { y, y_dot, eta1, eta2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.y, self.y_dot, self.eta1, self.eta2]
    }
}

fn check_beta(beta: f64) -> Result<()> {
    let cos_beta = beta.cos();
    if cos_beta > COS_BETA_BOUND {
        Ok(())
    } else {
        Err(Error::Domain { beta, cos_beta })
    }
}

/// Row weight `1/3 + cos(beta)/2` shared by `eta2` and the mass matrix.
fn coupling(beta: f64) -> f64 {
    1.0 / 3.0 + 0.5 * beta.cos()
}

/// First internal coordinate, `phi1(x) = beta`.
pub fn phi1(x: &PlantState) -> f64 {
    x.beta
}

/// Second internal coordinate, `phi2(x) = (1/3 + cos(beta)/2) alpha_dot + beta_dot/3`.
pub fn phi2(x: &PlantState) -> f64 {
    coupling(x.beta) * x.alpha_dot + x.beta_dot / 3.0
}

pub fn phi1_gradient(_x: &PlantState) -> [f64; 4] {
    [0.0, 1.0, 0.0, 0.0]
}

pub fn phi2_gradient(x: &PlantState) -> [f64; 4] {
    [0.0, -0.5 * x.beta.sin() * x.alpha_dot, coupling(x.beta), 1.0 / 3.0]
}

/// `Phi(x)`.
pub fn phi_forward(_p: &ManipulatorParams, x: &PlantState) -> Result<BifCoords> {
    check_beta(x.beta)?;
    Ok(BifCoords::new(
        x.alpha + 0.5 * x.beta,
        x.alpha_dot + 0.5 * x.beta_dot,
        phi1(x),
        phi2(x),
    ))
}

/// `Phi^{-1}(z)`: solves the two 2x2 linear systems relating positions and
/// velocities to `(y, eta1)` and `(y_dot, eta2)`.
pub fn phi_inverse(_p: &ManipulatorParams, z: &BifCoords) -> Result<PlantState> {
    check_beta(z.eta1)?;
    let beta = z.eta1;
    let alpha = z.y - 0.5 * beta;
    let (alpha_dot, beta_dot) = velocities(beta, z.eta2, z.y_dot);
    Ok(PlantState::new(alpha, beta, alpha_dot, beta_dot))
}

/// Joint rates from `(eta2, y_dot)` at angle `beta`.
///
/// The system matrix `[[1, 1/2], [a, 1/3]]` has determinant `(2 - 3 cos b)/12`,
/// nonzero whenever `cos b != 2/3`.
fn velocities(beta: f64, eta2: f64, y_dot: f64) -> (f64, f64) {
    let den = 2.0 - 3.0 * beta.cos();
    let alpha_dot = (4.0 * y_dot - 6.0 * eta2) / den;
    let beta_dot = 12.0 * (eta2 - coupling(beta) * y_dot) / den;
    (alpha_dot, beta_dot)
}

/// Coefficient functions of the internal dynamics
///
/// ```text
/// eta1' = g10 + g11 y_dot
/// eta2' = g20 + g21 y_dot + g22 y_dot^2
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalCoefficients {
    pub g10: f64,
    pub g11: f64,
    pub g20: f64,
    pub g21: f64,
    pub g22: f64,
}

/// Closed-form `g_{i,j}(eta1, eta2)`.
///
/// With `D = 2 - 3 cos(eta1)`, `a = 1/3 + cos(eta1)/2` and `k = l^2 m`:
///
/// ```text
/// g10 =  12 eta2 / D
/// g11 = -12 a / D
/// g20 = -(c/k) eta1 - 12 (d/k) eta2 / D + 18 sin(eta1) eta2^2 / D^2
/// g21 =  12 (d/k) a / D - 6 sin(eta1) (2 + 3 cos(eta1)) eta2 / D^2
/// g22 =  12 sin(eta1) cos(eta1) / D^2
/// ```
///
/// Obtained from `eta2' = -(sin b / 2) alpha_dot beta_dot + f2 / k` (the second
/// row of `M / k` is the `eta2` weight vector) with the joint rates eliminated
/// through [`phi_inverse`]. Validated pointwise against
/// [`internal_rhs_oracle`].
pub fn internal_coefficients(p: &ManipulatorParams, eta1: f64, eta2: f64) -> InternalCoefficients {
    let k = p.l2m();
    let (s, c) = eta1.sin_cos();
    let den = 2.0 - 3.0 * c;
    let den2 = den * den;
    let a = 1.0 / 3.0 + 0.5 * c;
    InternalCoefficients {
        g10: 12.0 * eta2 / den,
        g11: -12.0 * a / den,
        g20: -p.c / k * eta1 - 12.0 * p.d / k * eta2 / den + 18.0 * s * eta2 * eta2 / den2,
        g21: 12.0 * p.d / k * a / den - 6.0 * s * (2.0 + 3.0 * c) * eta2 / den2,
        g22: 12.0 * s * c / den2,
    }
}

/// Internal dynamics `(eta1', eta2')` driven by `y_dot`.
pub fn internal_rhs(p: &ManipulatorParams, eta: (f64, f64), y_dot: f64) -> Result<(f64, f64)> {
    check_beta(eta.0)?;
    let g = internal_coefficients(p, eta.0, eta.1);
    Ok((g.g10 + g.g11 * y_dot, g.g20 + (g.g21 + g.g22 * y_dot) * y_dot))
}

/// Chain rule `grad(phi_i)(x) . x_dot` along the plant vector field with zero input.
pub fn internal_rhs_oracle(p: &ManipulatorParams, x: &PlantState) -> Result<(f64, f64)> {
    internal_rhs_oracle_with_input(p, x, 0.0)
}

/// As [`internal_rhs_oracle`] with an explicit input torque; the result does
/// not depend on `u_d`.
pub fn internal_rhs_oracle_with_input(p: &ManipulatorParams, x: &PlantState, u_d: f64) -> Result<(f64, f64)> {
    check_beta(x.beta)?;
    let dx = model::plant_rhs(p, x, u_d).to_array();
    Ok((model::dot4(&phi1_gradient(x), &dx), model::dot4(&phi2_gradient(x), &dx)))
}

/// `(L_g phi1, L_g phi2)` at `x`.
pub fn input_coupling(p: &ManipulatorParams, x: &PlantState) -> (f64, f64) {
    let g = model::input_field(p, x.beta);
    (model::dot4(&phi1_gradient(x), &g), model::dot4(&phi2_gradient(x), &g))
}

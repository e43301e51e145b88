//! Two-link rotational manipulator with a passive spring-damper joint.
//!
//! State `x = (alpha, beta, alpha_dot, beta_dot)`, input torque on the first
//! link, output `y = alpha + s/(s+l) * beta`. No gravity term.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `cos(beta)` must exceed this for the relative degree to be well defined.
pub const COS_BETA_BOUND: f64 = 2.0 / 3.0;

/// Physical constants of the arm (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManipulatorParams {
    /// Link mass (kg).
    pub m: f64,
    /// Link length (m).
    pub l: f64,
    /// Spring constant of the passive joint (N m / rad).
    pub c: f64,
    /// Damping coefficient of the passive joint (N m s / rad).
    pub d: f64,
    /// Tracking-point offset on the passive link (m), `0 <= s <= l`.
    pub s: f64,
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        Self::case_study()
    }
}

impl ManipulatorParams {
    /// `l = 1 m, m = 1 kg, c = 1 N m/rad, d = 0.25 N m s/rad`, end-effector tracking.
    pub fn case_study() -> Self {
        Self {
            m: 1.0,
            l: 1.0,
            c: 1.0,
            d: 0.25,
            s: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m, self.l, self.c, self.d, self.s].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite manipulator parameter".into()));
        }
        if self.m <= 0.0 || self.l <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mass and length must be positive (m = {}, l = {})",
                self.m, self.l
            )));
        }
        if self.c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spring constant must be positive (c = {})",
                self.c
            )));
        }
        if self.d < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "damping must be non-negative (d = {})",
                self.d
            )));
        }
        if !(0.0..=self.l).contains(&self.s) {
            return Err(Error::InvalidParameter(format!(
                "tracking point must satisfy 0 <= s <= l (s = {}, l = {})",
                self.s, self.l
            )));
        }
        Ok(())
    }

    /// Link inertia `l^2 m / 12`.
    pub fn inertia(&self) -> f64 {
        self.l * self.l * self.m / 12.0
    }

    /// The recurring factor `l^2 m`.
    pub fn l2m(&self) -> f64 {
        self.l * self.l * self.m
    }

    /// Output weight `s / (s + l)` on `beta`.
    pub fn output_weight(&self) -> f64 {
        self.s / (self.s + self.l)
    }
}

/// Joint angles and rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
}

impl PlantState {
    pub const fn new(alpha: f64, beta: f64, alpha_dot: f64, beta_dot: f64) -> Self {
        Self {
            alpha,
            beta,
            alpha_dot,
            beta_dot,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.alpha, self.beta, self.alpha_dot, self.beta_dot]
    }

    /// Returns `Error::Domain` unless `cos(beta) > 2/3`.
    pub fn check_domain(&self) -> Result<()> {
        if in_domain(self) {
            Ok(())
        } else {
            Err(Error::Domain {
                beta: self.beta,
                cos_beta: self.beta.cos(),
            })
        }
    }
}

/// `M(beta) = l^2 m [[5/3 + cos b, 1/3 + cos b / 2], [1/3 + cos b / 2, 1/3]]`.
pub fn mass_matrix(p: &ManipulatorParams, beta: f64) -> Matrix2<f64> {
    let cb = beta.cos();
    let off = 1.0 / 3.0 + 0.5 * cb;
    p.l2m() * Matrix2::new(5.0 / 3.0 + cb, off, off, 1.0 / 3.0)
}

/// Closed-form inverse of [`mass_matrix`].
///
/// `det(M) = (l^2 m)^2 (16 - 9 cos^2 b) / 36`, so the scalar prefactor of the
/// adjugate carries a single power of `l^2 m`.
pub fn mass_matrix_inverse(p: &ManipulatorParams, beta: f64) -> Matrix2<f64> {
    let cb = beta.cos();
    let scale = 36.0 / (p.l2m() * (16.0 - 9.0 * cb * cb));
    let off = -1.0 / 3.0 - 0.5 * cb;
    scale * Matrix2::new(1.0 / 3.0, off, off, 5.0 / 3.0 + cb)
}

/// Generalized forces `(f1, f2)`: Coriolis/centrifugal terms plus the
/// spring-damper torque on the passive joint.
pub fn generalized_forces(p: &ManipulatorParams, x: &PlantState) -> (f64, f64) {
    let k = p.l2m();
    let sb = x.beta.sin();
    let f1 = 0.5 * k * x.beta_dot * (2.0 * x.alpha_dot + x.beta_dot) * sb;
    let f2 = -p.c * x.beta - p.d * x.beta_dot - 0.5 * k * x.alpha_dot * x.alpha_dot * sb;
    (f1, f2)
}

/// Joint accelerations `M^{-1} ((f1, f2) + (u_d, 0))`.
pub fn accelerations(p: &ManipulatorParams, x: &PlantState, u_d: f64) -> Vector2<f64> {
    let (f1, f2) = generalized_forces(p, x);
    mass_matrix_inverse(p, x.beta) * Vector2::new(f1 + u_d, f2)
}

/// First-order right-hand side `x_dot = f(x) + g(x) u_d`.
pub fn plant_rhs(p: &ManipulatorParams, x: &PlantState, u_d: f64) -> PlantState {
    let acc = accelerations(p, x, u_d);
    PlantState::new(x.alpha_dot, x.beta_dot, acc[0], acc[1])
}

/// Drift vector field `f(x)`.
pub fn drift(p: &ManipulatorParams, x: &PlantState) -> [f64; 4] {
    plant_rhs(p, x, 0.0).to_array()
}

/// Input vector field `g(x) = (0, 0, M^{-1} e_1)`.
pub fn input_field(p: &ManipulatorParams, beta: f64) -> [f64; 4] {
    let col = mass_matrix_inverse(p, beta).column(0).into_owned();
    [0.0, 0.0, col[0], col[1]]
}

/// Output `y` and its time derivative `y_dot`.
pub fn output(p: &ManipulatorParams, x: &PlantState) -> (f64, f64) {
    let w = p.output_weight();
    (x.alpha + w * x.beta, x.alpha_dot + w * x.beta_dot)
}

/// High-frequency gain `Gamma(beta) = [1, s/(s+l)] M^{-1} [1, 0]^T`.
pub fn gamma(p: &ManipulatorParams, beta: f64) -> f64 {
    let cb = beta.cos();
    let w = p.output_weight();
    36.0 / (p.l2m() * (16.0 - 9.0 * cb * cb)) * (1.0 / 3.0 - w * (1.0 / 3.0 + 0.5 * cb))
}

/// `(L_g h)(x)`: gradient of the output map applied to the input field.
pub fn lie_g_h(p: &ManipulatorParams, x: &PlantState) -> f64 {
    let grad = [1.0, p.output_weight(), 0.0, 0.0];
    dot4(&grad, &input_field(p, x.beta))
}

/// `(L_g L_f h)(x)`. `L_f h = x3 + w x4` has gradient `(0, 0, 1, w)`.
pub fn lie_g_lie_f_h(p: &ManipulatorParams, x: &PlantState) -> f64 {
    let grad = [0.0, 0.0, 1.0, p.output_weight()];
    dot4(&grad, &input_field(p, x.beta))
}

/// `true` iff `cos(beta) > 2/3`.
pub fn in_domain(x: &PlantState) -> bool {
    x.beta.cos() > COS_BETA_BOUND
}

/// Kinetic plus spring energy `1/2 q_dot^T M q_dot + 1/2 c beta^2`.
pub fn mechanical_energy(p: &ManipulatorParams, x: &PlantState) -> f64 {
    let v = Vector2::new(x.alpha_dot, x.beta_dot);
    0.5 * (v.transpose() * mass_matrix(p, x.beta) * v)[0] + 0.5 * p.c * x.beta * x.beta
}

pub(crate) fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> ManipulatorParams {
        ManipulatorParams {
            m: 1.0,
            l: 1.0,
            c: 1.0,
            d: 0.25,
            s: 1.0,
        }
    }

    // Generic 2x2 inverse, independent of the closed form.
    fn inv2(a: &Matrix2<f64>) -> Matrix2<f64> {
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        Matrix2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]) / det
    }

    #[test]
    fn mass_matrix_examples() {
        let p = unit();
        let m0 = mass_matrix(&p, 0.0);
        assert_abs_diff_eq!(
            m0,
            Matrix2::new(8.0 / 3.0, 5.0 / 6.0, 5.0 / 6.0, 1.0 / 3.0),
            epsilon = 1e-15
        );
        let m1 = mass_matrix(&p, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(
            m1,
            Matrix2::new(5.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
            epsilon = 1e-15
        );

        let heavy = ManipulatorParams { m: 2.0, ..p };
        let c = 0.5f64.cos();
        let expected = 2.0 * Matrix2::new(5.0 / 3.0 + c, 1.0 / 3.0 + c / 2.0, 1.0 / 3.0 + c / 2.0, 1.0 / 3.0);
        let mm = mass_matrix(&heavy, 0.5);
        assert_abs_diff_eq!(mm, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(
            mm * mass_matrix_inverse(&heavy, 0.5),
            Matrix2::identity(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn inverse_examples() {
        let p = unit();
        let inv = mass_matrix_inverse(&p, 0.0);
        assert_abs_diff_eq!(
            inv,
            Matrix2::new(12.0 / 7.0, -30.0 / 7.0, -30.0 / 7.0, 96.0 / 7.0),
            epsilon = 1e-13
        );
        let oracle = inv2(&mass_matrix(&p, 0.3));
        assert_abs_diff_eq!(mass_matrix_inverse(&p, 0.3), oracle, epsilon = 1e-12);
    }

    #[test]
    fn inverse_on_grid() {
        let p = ManipulatorParams {
            m: 0.7,
            l: 1.3,
            ..unit()
        };
        let bound = COS_BETA_BOUND.acos();
        for i in 0..1001 {
            let beta = -bound + 2.0 * bound * (i as f64) / 1000.0;
            let m = mass_matrix(&p, beta);
            assert_eq!(m[(0, 1)], m[(1, 0)]);
            assert_abs_diff_eq!(m * mass_matrix_inverse(&p, beta), Matrix2::identity(), epsilon = 1e-12);
        }
    }

    #[test]
    fn forces_examples() {
        let p = unit();
        assert_eq!(generalized_forces(&p, &PlantState::zero()), (0.0, 0.0));
        let (f1, f2) = generalized_forces(&p, &PlantState::new(0.0, 0.1, 0.0, 0.0));
        assert_eq!(f1, 0.0);
        assert_abs_diff_eq!(f2, -0.1, epsilon = 1e-15);
        let (f1, f2) = generalized_forces(&p, &PlantState::new(0.0, 0.5, 1.0, 1.0));
        let s = 0.5f64.sin();
        assert_abs_diff_eq!(f1, 1.5 * s, epsilon = 1e-15);
        assert_abs_diff_eq!(f2, -0.5 - 0.25 - 0.5 * s, epsilon = 1e-15);
    }

    #[test]
    fn rhs_examples() {
        let p = unit();
        assert_eq!(plant_rhs(&p, &PlantState::zero(), 0.0), PlantState::zero());
        let dx = plant_rhs(&p, &PlantState::zero(), 1.0);
        assert_abs_diff_eq!(dx.alpha_dot, 12.0 / 7.0, epsilon = 1e-13);
        assert_abs_diff_eq!(dx.beta_dot, -30.0 / 7.0, epsilon = 1e-13);
        assert_eq!((dx.alpha, dx.beta), (0.0, 0.0));
    }

    #[test]
    fn output_examples() {
        let p = unit();
        assert_eq!(output(&p, &PlantState::zero()), (0.0, 0.0));
        assert_eq!(output(&p, &PlantState::new(1.0, 2.0, 3.0, 4.0)), (2.0, 5.0));
        let half = ManipulatorParams { s: 0.5, ..p };
        let (y, yd) = output(&half, &PlantState::new(1.0, 3.0, 0.0, 0.0));
        assert_abs_diff_eq!(y, 2.0, epsilon = 1e-15);
        assert_eq!(yd, 0.0);
    }

    #[test]
    fn gamma_examples() {
        let p = unit();
        assert_abs_diff_eq!(gamma(&p, 0.0), -3.0 / 7.0, epsilon = 1e-12);
        let edge = COS_BETA_BOUND.acos();
        assert_abs_diff_eq!(gamma(&p, edge), 0.0, epsilon = 1e-14);
        assert!(gamma(&p, 0.8) < 0.0);
    }

    #[test]
    fn domain_examples() {
        assert!(in_domain(&PlantState::zero()));
        assert!(!in_domain(&PlantState::new(0.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0)));
        let edge = COS_BETA_BOUND.acos();
        assert!(!in_domain(&PlantState::new(0.0, edge, 0.0, 0.0)));
        assert!(!in_domain(&PlantState::new(0.0, -edge, 0.0, 0.0)));
        assert!(PlantState::new(0.0, 1.0, 0.0, 0.0).check_domain().is_err());
    }

    #[test]
    fn params_validation() {
        assert!(unit().validate().is_ok());
        assert!(ManipulatorParams { m: 0.0, ..unit() }.validate().is_err());
        assert!(ManipulatorParams { c: -1.0, ..unit() }.validate().is_err());
        assert!(ManipulatorParams { d: -0.1, ..unit() }.validate().is_err());
        assert!(ManipulatorParams { s: 1.5, ..unit() }.validate().is_err());
        assert_abs_diff_eq!(unit().inertia(), 1.0 / 12.0);
    }

    #[test]
    fn analytic_lie_derivatives() {
        let p = unit();
        for beta in [-0.8, -0.3, 0.0, 0.2, 0.7] {
            let x = PlantState::new(0.3, beta, -1.0, 2.0);
            assert_abs_diff_eq!(lie_g_h(&p, &x), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(lie_g_lie_f_h(&p, &x), gamma(&p, beta), epsilon = 1e-12);
        }
    }
}

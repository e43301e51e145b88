//! Linearized internal dynamics at the origin, their stable/unstable split,
//! and the auxiliary output `y_new` with its derivative surrogates.

use nalgebra::{Matrix2, Vector2};

use crate::bif;
use crate::error::{Error, Result};
use crate::model::{ManipulatorParams, PlantState};

/// Eigen-split of the linearized internal dynamics `eta' = Q eta + P y_dot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinData {
    pub q: Matrix2<f64>,
    pub p: Vector2<f64>,
    /// Stable eigenvalue.
    pub lambda1: f64,
    /// Unstable eigenvalue.
    pub lambda2: f64,
    /// Columns are eigenvectors of `q` for `lambda1`, `lambda2`.
    pub v: Matrix2<f64>,
    pub v_inv: Matrix2<f64>,
    pub p1: f64,
    pub p2: f64,
    /// `det(v)`.
    pub det_v: f64,
}

/// Jacobians of the internal dynamics at `(eta, y_dot) = 0`.
pub fn linearize(p: &ManipulatorParams) -> (Matrix2<f64>, Vector2<f64>) {
    let k = p.l2m();
    let q = Matrix2::new(0.0, -12.0, -p.c / k, 12.0 * p.d / k);
    let pv = Vector2::new(10.0, -10.0 * p.d / k);
    (q, pv)
}

/// Closed-form eigenvalues `6d/k -+ 2 sqrt((3d/k)^2 + 3c/k)`.
pub fn eigenvalues(p: &ManipulatorParams) -> (f64, f64) {
    let k = p.l2m();
    let centre = 6.0 * p.d / k;
    let radius = 2.0 * ((3.0 * p.d / k).powi(2) + 3.0 * p.c / k).sqrt();
    (centre - radius, centre + radius)
}

/// Eigenvector of `q` for `lambda`, scaled so its second component is `tail`.
fn eigenvector(q: &Matrix2<f64>, lambda: f64, tail: f64) -> Vector2<f64> {
    // First row: (q11 - lambda) v1 + q12 v2 = 0.
    Vector2::new(-q[(0, 1)] * tail / (q[(0, 0)] - lambda), tail)
}

/// Diagonalizes the linearized internal dynamics.
///
/// The stable eigenvector is scaled to second component `+1`, the unstable one
/// to `-1`. With this orientation `lambda2 * p2 * Gamma < 0` on the domain, so
/// the funnel law `u = k2 e2` has the correct sign for the auxiliary output.
pub fn eigensplit(p: &ManipulatorParams) -> Result<LinData> {
    if !(p.c > 0.0) {
        return Err(Error::NotHyperbolic { c: p.c });
    }
    let (q, pv) = linearize(p);
    let (lambda1, lambda2) = eigenvalues(p);
    let v1 = eigenvector(&q, lambda1, 1.0);
    let v2 = eigenvector(&q, lambda2, -1.0);
    let v = Matrix2::from_columns(&[v1, v2]);
    let det_v = v.determinant();
    let v_inv = Matrix2::new(v[(1, 1)], -v[(0, 1)], -v[(1, 0)], v[(0, 0)]) / det_v;
    let pp = v_inv * pv;
    Ok(LinData {
        q,
        p: pv,
        lambda1,
        lambda2,
        v,
        v_inv,
        p1: pp[0],
        p2: pp[1],
        det_v,
    })
}

impl LinData {
    pub fn new(p: &ManipulatorParams) -> Result<Self> {
        eigensplit(p)
    }

    /// `V^{-1} (eta1, eta2)`.
    pub fn modal(&self, eta1: f64, eta2: f64) -> Vector2<f64> {
        self.v_inv * Vector2::new(eta1, eta2)
    }
}

/// End-effector output `alpha + beta/2` and its rate.
fn end_effector(x: &PlantState) -> (f64, f64) {
    (x.alpha + 0.5 * x.beta, x.alpha_dot + 0.5 * x.beta_dot)
}

/// `Psi(x) = [0, 1] V^{-1} (phi1(x), phi2(x)) - p2 (alpha + beta/2)`.
pub fn psi(_p: &ManipulatorParams, lin: &LinData, x: &PlantState) -> Result<f64> {
    x.check_domain()?;
    Ok(psi_unchecked(lin, x))
}

pub(crate) fn psi_unchecked(lin: &LinData, x: &PlantState) -> f64 {
    let hat = lin.modal(bif::phi1(x), bif::phi2(x));
    hat[1] - lin.p2 * end_effector(x).0
}

/// `y_new` and its surrogate derivatives `y_new^[1]`, `y_new^[2]`.
///
/// The surrogates follow the linear unstable mode
/// `eta_bar2' = lambda2 eta_bar2 + lambda2 p2 y`; they are not time derivatives
/// of `Psi` along the nonlinear flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YNew {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

pub fn ynew_derivatives(p: &ManipulatorParams, lin: &LinData, x: &PlantState) -> Result<YNew> {
    let value = psi(p, lin, x)?;
    let (y, y_dot) = end_effector(x);
    let l2 = lin.lambda2;
    let first = l2 * value + l2 * lin.p2 * y;
    let second = l2 * l2 * value + l2 * l2 * lin.p2 * y + l2 * lin.p2 * y_dot;
    Ok(YNew { value, first, second })
}

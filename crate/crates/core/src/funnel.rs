//! Funnel functions, the relative-degree-three error/gain cascade, the
//! high-gain observer and the two complete control laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linid::{self, LinData, YNew};
use crate::model::{ManipulatorParams, PlantState};
use crate::reference::{NewRefSample, NewReference};

/// Weight of the gain-derivative term in `k0^[1]`. With 1 the term is the
/// exact time derivative of `k0 = 1 / (1 - phi0^2 e0^2)`.
pub const KAPPA0: f64 = 1.0;

/// `phi(t) = 1 / (a exp(-b t) + eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunnelSpec {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
}

impl FunnelSpec {
    pub const fn new(a: f64, b: f64, eps: f64) -> Self {
        Self { a, b, eps }
    }

    /// `phi0 = phi1 = (1.5 e^{-0.8 t} + 0.001)^{-1}`, `phi2 = (60 e^{-0.2 t} + 0.001)^{-1}`.
    pub fn case_study() -> [FunnelSpec; 3] {
        let inner = FunnelSpec::new(1.5, 0.8, 0.001);
        [inner, inner, FunnelSpec::new(60.0, 0.2, 0.001)]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.b > 0.0 && self.eps > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "funnel needs a >= 0, b > 0, eps > 0 (got a = {}, b = {}, eps = {})",
                self.a, self.b, self.eps
            )));
        }
        Ok(())
    }

    /// `(phi(t), phi'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let decay = self.a * (-self.b * t).exp();
        let phi = 1.0 / (decay + self.eps);
        (phi, self.b * decay * phi * phi)
    }

    /// Funnel half-width `1 / phi(t)`.
    pub fn boundary(&self, t: f64) -> f64 {
        self.a * (-self.b * t).exp() + self.eps
    }
}

pub fn phi_eval(f: &FunnelSpec, t: f64) -> (f64, f64) {
    f.eval(t)
}

/// `k = 1 / (1 - phi^2 e^2)`; a funnel violation when `phi |e| >= 1`.
pub fn gain(phi: f64, e: f64) -> Result<f64> {
    level_gain(0, phi, e)
}

fn level_gain(level: usize, phi: f64, e: f64) -> Result<f64> {
    let scaled = phi * e.abs();
    if scaled >= 1.0 || !scaled.is_finite() {
        return Err(Error::FunnelViolation {
            level,
            phi,
            error: e,
            scaled_error: scaled,
        });
    }
    Ok(1.0 / (1.0 - scaled * scaled))
}

/// All intermediate quantities of one cascade evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CascadeOutput {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub u: f64,
    pub e0_1: f64,
    pub e0_2: f64,
    pub k0_1: f64,
    pub e1_1: f64,
    /// `phi_i(t)` for the three levels.
    pub phi: [f64; 3],
}

impl CascadeOutput {
    /// `max_i phi_i |e_i|`.
    pub fn max_scaled_error(&self) -> f64 {
        [self.e0, self.e1, self.e2]
            .iter()
            .zip(&self.phi)
            .map(|(e, p)| p * e.abs())
            .fold(0.0, f64::max)
    }
}

/// Funnel cascade for the relative-degree-three auxiliary output.
///
/// ```text
/// e0 = y_new - y_bar          k0 = 1 / (1 - phi0^2 e0^2)
/// e1 = e0^[1] + k0 e0         k1 = 1 / (1 - phi1^2 e1^2)
/// e2 = e1^[1] + k1 e1         k2 = 1 / (1 - phi2^2 e2^2)
/// u  = k2 e2
/// ```
///
/// with `e1^[1] = e0^[2] + k0 e0^[1] + k0^[1] e0` and
/// `k0^[1] = 2 kappa0 phi0 e0 (phi0' e0 + phi0 e0^[1]) / (1 - phi0^2 e0^2)^2`.
pub fn cascade(specs: &[FunnelSpec; 3], t: f64, y_new: &YNew, reference: &NewRefSample) -> Result<CascadeOutput> {
    let (phi0, phi0_dot) = specs[0].eval(t);
    let (phi1, _) = specs[1].eval(t);
    let (phi2, _) = specs[2].eval(t);

    let e0 = y_new.value - reference.value;
    let e0_1 = y_new.first - reference.first;
    let e0_2 = y_new.second - reference.second;

    let k0 = level_gain(0, phi0, e0)?;
    let den = 1.0 - phi0 * phi0 * e0 * e0;
    let k0_1 = 2.0 * KAPPA0 * phi0 * e0 / (den * den) * (phi0_dot * e0 + phi0 * e0_1);

    let e1 = e0_1 + k0 * e0;
    let k1 = level_gain(1, phi1, e1)?;
    let e1_1 = e0_2 + k0 * e0_1 + k0_1 * e0;

    let e2 = e1_1 + k1 * e1;
    let k2 = level_gain(2, phi2, e2)?;

    Ok(CascadeOutput {
        e0,
        e1,
        e2,
        k0,
        k1,
        k2,
        u: k2 * e2,
        e0_1,
        e0_2,
        k0_1,
        e1_1,
        phi: [phi0, phi1, phi2],
    })
}

/// Observer gains `L = (l1, l2, l3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverGains {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl Default for ObserverGains {
    fn default() -> Self {
        Self::case_study()
    }
}

impl ObserverGains {
    /// `l1 = 1e2, l2 = 1e5, l3 = 1e6`.
    pub fn case_study() -> Self {
        Self {
            l1: 1e2,
            l2: 1e5,
            l3: 1e6,
        }
    }
}

/// Estimates of `y_new` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObserverState {
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta3: f64,
}

impl ObserverState {
    pub const fn new(zeta1: f64, zeta2: f64, zeta3: f64) -> Self {
        Self { zeta1, zeta2, zeta3 }
    }
}

/// `zeta' = L (y_new - zeta1) + Z zeta`, `Z` the 3x3 upper shift.
pub fn observer_rhs(gains: &ObserverGains, zeta: &ObserverState, y_new: f64) -> ObserverState {
    let innovation = y_new - zeta.zeta1;
    ObserverState {
        zeta1: gains.l1 * innovation + zeta.zeta2,
        zeta2: gains.l2 * innovation + zeta.zeta3,
        zeta3: gains.l3 * innovation,
    }
}

/// Everything both control laws need, assembled once per scenario.
#[derive(Debug, Clone)]
pub struct Controller {
    pub params: ManipulatorParams,
    pub lin: LinData,
    pub funnels: [FunnelSpec; 3],
    pub reference: NewReference,
    pub observer: ObserverGains,
}

impl Controller {
    /// Control law with `y_new` derivatives from the linear surrogate ladder.
    pub fn evaluate_lin(&self, t: f64, x: &PlantState) -> Result<CascadeOutput> {
        let y_new = linid::ynew_derivatives(&self.params, &self.lin, x)?;
        cascade(&self.funnels, t, &y_new, &self.reference.eval(t))
    }

    /// Control law with `y_new` derivatives from the observer. Also returns the
    /// observer derivative for co-integration.
    pub fn evaluate_hg(&self, t: f64, x: &PlantState, zeta: &ObserverState) -> Result<(CascadeOutput, ObserverState)> {
        let value = linid::psi(&self.params, &self.lin, x)?;
        let y_new = YNew {
            value,
            first: zeta.zeta2,
            second: zeta.zeta3,
        };
        let out = cascade(&self.funnels, t, &y_new, &self.reference.eval(t))?;
        Ok((out, observer_rhs(&self.observer, zeta, value)))
    }

    /// Observer start `(Psi(x0), 0, 0)`.
    pub fn observer_init(&self, x0: &PlantState) -> Result<ObserverState> {
        Ok(ObserverState::new(linid::psi(&self.params, &self.lin, x0)?, 0.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn phi_examples() {
        let f = FunnelSpec::case_study()[0];
        let (phi, _) = f.eval(0.0);
        assert_abs_diff_eq!(phi, 1.0 / 1.501, epsilon = 1e-15);
        assert_abs_diff_eq!(phi, 0.666223, epsilon = 1e-6);
        assert_abs_diff_eq!(f.eval(100.0).0, 1000.0, epsilon = 1e-9);
        let mut last = 0.0;
        for i in 0..100 {
            let (p, pd) = f.eval(0.1 * i as f64);
            assert!(p > last && pd > 0.0);
            last = p;
        }
    }

    #[test]
    fn gain_examples() {
        assert_eq!(gain(1.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(gain(1.0, 0.6).unwrap(), 1.5625, epsilon = 1e-15);
        assert!(matches!(gain(1.0, 1.0), Err(Error::FunnelViolation { .. })));
        assert!(matches!(gain(1.0, -1.2), Err(Error::FunnelViolation { .. })));
    }

    #[test]
    fn zero_cascade() {
        let out = cascade(
            &FunnelSpec::case_study(),
            0.3,
            &YNew {
                value: 0.0,
                first: 0.0,
                second: 0.0,
            },
            &NewRefSample::default(),
        )
        .unwrap();
        assert_eq!((out.e0, out.e1, out.e2), (0.0, 0.0, 0.0));
        assert_eq!((out.k0, out.k1, out.k2, out.u), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn matched_output_kills_gain_derivative() {
        let specs = FunnelSpec::case_study();
        let y = YNew {
            value: 0.3,
            first: 0.2,
            second: -0.1,
        };
        let r = NewRefSample {
            value: 0.3,
            first: 0.15,
            second: -0.12,
        };
        let out = cascade(&specs, 1.0, &y, &r).unwrap();
        let e01 = 0.05;
        let e02 = 0.02;
        assert_abs_diff_eq!(out.e0, 0.0);
        assert_abs_diff_eq!(out.e1, e01, epsilon = 1e-15);
        assert_abs_diff_eq!(out.u, out.k2 * (e02 + out.k0 * e01 + out.k1 * e01), epsilon = 1e-14);
    }

    #[test]
    fn violation_names_level() {
        let specs = FunnelSpec::case_study();
        let y = YNew {
            value: 0.0,
            first: 5.0,
            second: 0.0,
        };
        match cascade(&specs, 0.0, &y, &NewRefSample::default()) {
            Err(Error::FunnelViolation { level, .. }) => assert_eq!(level, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn observer_fixed_points() {
        let g = ObserverGains::case_study();
        assert_eq!(
            observer_rhs(&g, &ObserverState::default(), 0.0),
            ObserverState::default()
        );
        assert_eq!(
            observer_rhs(&g, &ObserverState::new(0.7, 0.0, 0.0), 0.7),
            ObserverState::default()
        );
    }
}

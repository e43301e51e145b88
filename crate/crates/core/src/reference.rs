//! Transition reference `y_ref` and the bounded auxiliary reference
//! `y_bar_ref` solving `x' = lambda2 x + lambda2 p2 y_ref(t)`.
//!
//! Because `lambda2 > 0` the auxiliary ODE is unstable forward in time. The
//! bounded solution is the backward convolution
//! `x(t) = -int_t^inf exp(lambda2 (t - s)) lambda2 p2 y_ref(s) ds`,
//! which is what [`NewReference`] evaluates.

use nalgebra::{DMatrix, DVector, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linid::LinData;
use crate::ode::{self, IntegratorSettings};
use crate::quad;

const MAX_INTERVALS: usize = 2000;

/// Smooth rest-to-rest transition from `y0` at `t0` to `yf` at `tf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRef {
    pub y0: f64,
    pub yf: f64,
    pub t0: f64,
    pub tf: f64,
}

impl TransitionRef {
    /// `0 -> pi/4` rad within 3 s.
    pub fn case_study() -> Self {
        Self {
            y0: 0.0,
            yf: std::f64::consts::FRAC_PI_4,
            t0: 0.0,
            tf: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.y0, self.yf, self.t0, self.tf].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite reference parameter".into()));
        }
        if self.tf < self.t0 || self.t0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reference needs 0 <= t0 <= tf (t0 = {}, tf = {})",
                self.t0, self.tf
            )));
        }
        Ok(())
    }

    /// Value and derivative. Holds `y0` before `t0` and `yf` from `tf` on; a
    /// degenerate `t0 == tf` is a step at `t0`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if t >= self.tf {
            return (self.yf, 0.0);
        }
        if t <= self.t0 {
            return (self.y0, 0.0);
        }
        let span = self.tf - self.t0;
        let s = (t - self.t0) / span;
        let dy = self.yf - self.y0;
        let shape = s.powi(5) * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + s * 70.0))));
        let slope = s.powi(4) * (630.0 + s * (-2520.0 + s * (3780.0 + s * (-2520.0 + s * 630.0))));
        (self.y0 + shape * dy, slope * dy / span)
    }
}

/// Free function form of [`TransitionRef::eval`].
pub fn yref_eval(r: &TransitionRef, t: f64) -> (f64, f64) {
    r.eval(t)
}

/// How `y_ref` is continued outside `[t0, tf]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    #[default]
    HoldFinalValue,
}

/// Parameters of the auxiliary reference generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewRefConfig {
    pub lambda2: f64,
    pub p2: f64,
    pub quadrature_abs_tol: f64,
    #[serde(default)]
    pub extension_mode: Extension,
}

impl NewRefConfig {
    pub fn from_lin(lin: &LinData) -> Self {
        Self {
            lambda2: lin.lambda2,
            p2: lin.p2,
            quadrature_abs_tol: 1e-12,
            extension_mode: Extension::HoldFinalValue,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "auxiliary reference needs lambda2 > 0 (got {})",
                self.lambda2
            )));
        }
        if !(self.quadrature_abs_tol > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// `int_a^b exp(lambda2 (anchor - s)) lambda2 p2 y_ref(s) ds`, split at `t0`
/// where the held reference has a kink.
fn weighted_integral(cfg: &NewRefConfig, r: &TransitionRef, anchor: f64, a: f64, b: f64) -> f64 {
    let integrand = |s: f64| (cfg.lambda2 * (anchor - s)).exp() * cfg.lambda2 * cfg.p2 * r.eval(s).0;
    let tol = cfg.quadrature_abs_tol;
    let mut total = 0.0;
    let mut lo = a;
    for cut in [r.t0, r.tf] {
        if cut > lo && cut < b {
            total += quad::integrate(integrand, lo, cut, tol, 0.0, MAX_INTERVALS).value;
            lo = cut;
        }
    }
    total + quad::integrate(integrand, lo, b, tol, 0.0, MAX_INTERVALS).value
}

/// Bounded solution at `t` by direct quadrature plus the analytic tail.
fn bounded_value(cfg: &NewRefConfig, r: &TransitionRef, t: f64) -> f64 {
    let hold = -cfg.p2 * r.yf;
    if t >= r.tf {
        return hold;
    }
    // Tail beyond tf: -lambda2 p2 yf int_tf^inf exp(lambda2 (t - s)) ds.
    let tail = hold * (cfg.lambda2 * (t - r.tf)).exp();
    -weighted_integral(cfg, r, t, t, r.tf) + tail
}

/// Initial value making the auxiliary reference bounded:
/// `-int_0^inf exp(-lambda2 s) lambda2 p2 y_ref(s) ds`.
pub fn new_ref_ic(cfg: &NewRefConfig, r: &TransitionRef) -> Result<f64> {
    cfg.validate()?;
    r.validate()?;
    Ok(bounded_value(cfg, r, 0.0))
}

/// Auxiliary reference and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NewRefSample {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Bounded auxiliary reference, tabulated on a uniform grid over `[0, tf]`.
///
/// Nodes come from a backward recursion
/// `x_i = exp(-lambda2 h) x_{i+1} - int_{t_i}^{t_{i+1}} exp(lambda2 (t_i - s)) lambda2 p2 y_ref(s) ds`
/// starting from the hold value at `tf`; the recursion damps rather than
/// amplifies local quadrature errors. Values between nodes use cubic Hermite
/// interpolation with node slopes taken from the ODE, and derivatives are
/// recovered through the ODE relation.
#[derive(Debug, Clone)]
pub struct NewReference {
    cfg: NewRefConfig,
    r: TransitionRef,
    step: f64,
    nodes: Vec<f64>,
    slopes: Vec<f64>,
}

impl NewReference {
    pub const DEFAULT_GRID_STEP: f64 = 1e-3;

    pub fn new(cfg: NewRefConfig, r: TransitionRef) -> Result<Self> {
        Self::with_grid_step(cfg, r, Self::DEFAULT_GRID_STEP)
    }

    pub fn with_grid_step(cfg: NewRefConfig, r: TransitionRef, grid_step: f64) -> Result<Self> {
        cfg.validate()?;
        r.validate()?;
        if !(grid_step > 0.0) {
            return Err(Error::InvalidParameter("grid step must be positive".into()));
        }
        let n = (r.tf / grid_step).ceil().max(1.0) as usize;
        let step = r.tf / n as f64;
        let mut nodes = vec![0.0; n + 1];
        nodes[n] = -cfg.p2 * r.yf;
        if step > 0.0 {
            let decay = (-cfg.lambda2 * step).exp();
            for i in (0..n).rev() {
                let a = i as f64 * step;
                let b = if i + 1 == n { r.tf } else { (i + 1) as f64 * step };
                nodes[i] = decay * nodes[i + 1] - weighted_integral(&cfg, &r, a, a, b);
            }
        } else {
            nodes[0] = nodes[n];
        }
        let slopes = nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| cfg.lambda2 * x + cfg.lambda2 * cfg.p2 * r.eval(i as f64 * step).0)
            .collect();
        Ok(Self {
            cfg,
            r,
            step,
            nodes,
            slopes,
        })
    }

    pub fn config(&self) -> &NewRefConfig {
        &self.cfg
    }

    pub fn transition(&self) -> &TransitionRef {
        &self.r
    }

    /// Value at `t = 0` from the tabulation.
    pub fn initial_value(&self) -> f64 {
        self.nodes[0]
    }

    fn value(&self, t: f64) -> f64 {
        let hold = -self.cfg.p2 * self.r.yf;
        if t >= self.r.tf {
            return hold;
        }
        if t < 0.0 {
            // Constant y0 on (-inf, 0].
            let shift = self.cfg.p2 * self.r.y0;
            return (self.cfg.lambda2 * t).exp() * (self.nodes[0] + shift) - shift;
        }
        let n = self.nodes.len() - 1;
        let i = ((t / self.step).floor() as usize).min(n - 1);
        let h = self.step;
        let theta = (t - i as f64 * h) / h;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        (2.0 * t3 - 3.0 * t2 + 1.0) * x0 + (t3 - 2.0 * t2 + theta) * d0 + (-2.0 * t3 + 3.0 * t2) * x1 + (t3 - t2) * d1
    }

    /// `(y_bar_ref, y_bar_ref', y_bar_ref'')` at `t`.
    pub fn eval(&self, t: f64) -> NewRefSample {
        complete_sample(&self.cfg, &self.r, t, self.value(t))
    }

    /// Same quantities, with the value from a fresh quadrature instead of the table.
    pub fn eval_direct(&self, t: f64) -> NewRefSample {
        let value = if t < 0.0 {
            self.value(t)
        } else {
            bounded_value(&self.cfg, &self.r, t)
        };
        complete_sample(&self.cfg, &self.r, t, value)
    }
}

/// Adds the derivatives implied by the reference ODE to a value. On the hold
/// segment the steady state is returned exactly.
fn complete_sample(cfg: &NewRefConfig, r: &TransitionRef, t: f64, value: f64) -> NewRefSample {
    if t >= r.tf {
        return NewRefSample {
            value: -cfg.p2 * r.yf,
            first: 0.0,
            second: 0.0,
        };
    }
    let (l2, p2) = (cfg.lambda2, cfg.p2);
    let (y, y_dot) = r.eval(t);
    let first = l2 * value + l2 * p2 * y;
    NewRefSample {
        value,
        first,
        second: l2 * first + l2 * p2 * y_dot,
    }
}

/// `new_ref_eval` without a prebuilt table.
pub fn new_ref_eval(cfg: &NewRefConfig, r: &TransitionRef, t: f64) -> Result<NewRefSample> {
    cfg.validate()?;
    r.validate()?;
    let value = if t < 0.0 {
        // Constant y0 on (-inf, 0].
        let shift = cfg.p2 * r.y0;
        (cfg.lambda2 * t).exp() * (bounded_value(cfg, r, 0.0) + shift) - shift
    } else {
        bounded_value(cfg, r, t)
    };
    Ok(complete_sample(cfg, r, t, value))
}

/// Integrates the auxiliary ODE forward from `x0`. Only meaningful over short
/// horizons: perturbations grow like `exp(lambda2 t)`.
pub fn forward_new_ref(
    cfg: &NewRefConfig,
    r: &TransitionRef,
    x0: f64,
    t_end: f64,
    sample_step: f64,
    settings: &IntegratorSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let (l2, p2) = (cfg.lambda2, cfg.p2);
    let sol = ode::solve(
        |t, x: &SVector<f64, 1>| Ok(SVector::<f64, 1>::new(l2 * x[0] + l2 * p2 * r.eval(t).0)),
        0.0,
        SVector::<f64, 1>::new(x0),
        t_end,
        sample_step,
        settings,
    )?;
    Ok((sol.times, sol.states.iter().map(|s| s[0]).collect()))
}

/// Linear exosystem `w' = A w`, `y_ref = C w`, `w(0) = w0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exosystem {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub w0: DVector<f64>,
}

impl Exosystem {
    /// `y_ref(t) = offset`.
    pub fn constant(offset: f64) -> Self {
        Self {
            a: DMatrix::zeros(1, 1),
            c: DVector::from_element(1, 1.0),
            w0: DVector::from_element(1, offset),
        }
    }

    /// `y_ref(t) = offset + amplitude sin(omega t + phase)`.
    pub fn sinusoid(offset: f64, amplitude: f64, omega: f64, phase: f64) -> Self {
        let mut a = DMatrix::zeros(3, 3);
        a[(1, 2)] = omega;
        a[(2, 1)] = -omega;
        Self {
            a,
            c: DVector::from_vec(vec![1.0, 1.0, 0.0]),
            w0: DVector::from_vec(vec![offset, amplitude * phase.sin(), amplitude * phase.cos()]),
        }
    }
}

/// Bounded initial value from the Sylvester equation
/// `lambda2 X - X A = lambda2 p2 C`, i.e. `X = lambda2 p2 C (lambda2 I - A)^{-1}`,
/// and `x0 = -X w0`.
pub fn sylvester_ic(lambda2: f64, p2: f64, exo: &Exosystem) -> Result<f64> {
    let k = exo.a.nrows();
    if exo.a.ncols() != k || exo.c.len() != k || exo.w0.len() != k {
        return Err(Error::InvalidParameter("exosystem dimensions disagree".into()));
    }
    let shifted = DMatrix::identity(k, k) * lambda2 - &exo.a;
    // Solve (lambda2 I - A)^T X^T = lambda2 p2 C^T.
    let rhs = &exo.c * (lambda2 * p2);
    let x = shifted
        .transpose()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidParameter("lambda2 is an eigenvalue of the exosystem".into()))?;
    Ok(-x.dot(&exo.w0))
}

/// Bounded initial value for an arbitrary bounded reference by quadrature over
/// `[0, horizon]`; the neglected tail is at most `|p2| sup|y| exp(-lambda2 horizon)`.
pub fn bounded_ic_quadrature<F: Fn(f64) -> f64>(lambda2: f64, p2: f64, y_ref: F, horizon: f64, abs_tol: f64) -> f64 {
    let integrand = |s: f64| (-lambda2 * s).exp() * lambda2 * p2 * y_ref(s);
    // Unit chunks keep oscillatory references well resolved.
    let chunks = horizon.ceil().max(1.0) as usize;
    let width = horizon / chunks as f64;
    -(0..chunks)
        .map(|i| {
            let a = i as f64 * width;
            quad::integrate(integrand, a, a + width, abs_tol, 0.0, MAX_INTERVALS).value
        })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> NewRefConfig {
        NewRefConfig {
            lambda2: 5.274917217635375,
            p2: 3.071231991962,
            quadrature_abs_tol: 1e-13,
            extension_mode: Extension::HoldFinalValue,
        }
    }

    #[test]
    fn endpoints() {
        let r = TransitionRef::case_study();
        assert_eq!(r.eval(0.0), (0.0, 0.0));
        let (y, yd) = r.eval(3.0);
        assert_eq!(y, r.yf);
        assert_eq!(yd, 0.0);
        // Polynomial value at the end of the open interval.
        let (y, yd) = r.eval(3.0 - 1e-9);
        assert_abs_diff_eq!(y, r.yf, epsilon = 1e-12);
        assert_abs_diff_eq!(yd, 0.0, epsilon = 1e-12);
        assert_eq!(r.eval(10.0), (r.yf, 0.0));
        assert_eq!(r.eval(-1.0), (0.0, 0.0));
    }

    #[test]
    fn midpoint_matches_naive_powers() {
        let r = TransitionRef::case_study();
        let s: f64 = 0.5;
        let naive =
            (126.0 * s.powi(5) - 420.0 * s.powi(6) + 540.0 * s.powi(7) - 315.0 * s.powi(8) + 70.0 * s.powi(9)) * r.yf;
        assert_abs_diff_eq!(r.eval(1.5).0, naive, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_config() {
        let r = TransitionRef::case_study();
        let bad = NewRefConfig { lambda2: -1.0, ..cfg() };
        assert!(new_ref_ic(&bad, &r).is_err());
        assert!(NewReference::new(bad, r).is_err());
        let backwards = TransitionRef { t0: 2.0, tf: 1.0, ..r };
        assert!(backwards.validate().is_err());
    }

    #[test]
    fn zero_reference() {
        let r = TransitionRef {
            y0: 0.0,
            yf: 0.0,
            t0: 0.0,
            tf: 3.0,
        };
        assert_eq!(new_ref_ic(&cfg(), &r).unwrap(), 0.0);
        let gen = NewReference::new(cfg(), r).unwrap();
        for t in [0.0, 0.7, 2.9, 3.0, 8.0] {
            assert_eq!(gen.eval(t), NewRefSample::default());
        }
    }

    #[test]
    fn constant_reference_is_pure_hold() {
        let r = TransitionRef {
            y0: 0.4,
            yf: 0.4,
            t0: 0.0,
            tf: 0.0,
        };
        let ic = new_ref_ic(&cfg(), &r).unwrap();
        assert_abs_diff_eq!(ic, -cfg().p2 * 0.4, epsilon = 1e-15);
    }

    #[test]
    fn hold_after_final_time() {
        let r = TransitionRef::case_study();
        let gen = NewReference::new(cfg(), r).unwrap();
        let s = gen.eval(4.0);
        assert_eq!(s.value, -cfg().p2 * r.yf);
        assert_abs_diff_eq!(s.first, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.second, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn table_matches_direct_quadrature() {
        let r = TransitionRef::case_study();
        let gen = NewReference::new(cfg(), r).unwrap();
        assert_abs_diff_eq!(gen.initial_value(), new_ref_ic(&cfg(), &r).unwrap(), epsilon = 1e-12);
        for i in 0..=60 {
            let t = 0.0499 * i as f64;
            assert_abs_diff_eq!(gen.eval(t).value, gen.eval_direct(t).value, epsilon = 1e-11);
        }
    }

    #[test]
    fn sylvester_constant() {
        let x0 = sylvester_ic(2.0, 1.5, &Exosystem::constant(0.3)).unwrap();
        assert_abs_diff_eq!(x0, -1.5 * 0.3, epsilon = 1e-15);
    }
}

//! Numerical invariant suite run by `funnel-sim check`.
//!
//! Every check samples seeded random states in the admissible region and
//! compares a closed-form quantity against an independent evaluation
//! (finite differences, chain rule, matrix products or a second algorithm).

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bif;
use crate::error::Result;
use crate::exec::{self, Execution};
use crate::linid::{self, LinData};
use crate::model::{self, ManipulatorParams, PlantState};
use crate::reference::{NewRefConfig, NewReference, TransitionRef};
use crate::sim::{ClosedLoop, Mode, ScenarioConfig};

/// Default number of random points per check.
pub const DEFAULT_SAMPLES: usize = 1000;
/// Default seed of the point generator.
pub const DEFAULT_SEED: u64 = 0x5eed_f00d;

/// Largest `|beta|` drawn; strictly inside `cos(beta) > 2/3`.
const BETA_SPAN: f64 = 0.84;
/// Sub-range on which the coordinate Jacobian determinant exceeds `1e-3`.
const JACOBIAN_BETA_SPAN: f64 = 0.8;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation.
    pub worst: f64,
    pub tolerance: f64,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<32} worst {:.3e} (tol {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )
    }
}

fn verdict(name: &'static str, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

/// Reproducible random states with `|beta| < 0.84` and bounded rates.
pub fn sample_states(seed: u64, n: usize) -> Vec<PlantState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            PlantState::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-BETA_SPAN..BETA_SPAN),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            )
        })
        .collect()
}

fn max_norm(m: &Matrix2<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Central-difference gradient of `f` at `x`.
fn fd_gradient<F: Fn(&PlantState) -> f64>(f: F, x: &PlantState, h: f64) -> [f64; 4] {
    let base = x.to_array();
    let mut g = [0.0; 4];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut up = base;
        let mut dn = base;
        up[i] += h;
        dn[i] -= h;
        *gi = (f(&PlantState::from_array(up)) - f(&PlantState::from_array(dn))) / (2.0 * h);
    }
    g
}

/// Batch runner sharing one point set across the checks.
pub struct CheckSuite {
    pub params: ManipulatorParams,
    pub lin: LinData,
    pub states: Vec<PlantState>,
    pub exec: Execution,
}

impl CheckSuite {
    pub fn new(params: ManipulatorParams, seed: u64, samples: usize, exec: Execution) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            lin: LinData::new(&params)?,
            params,
            states: sample_states(seed, samples),
            exec,
        })
    }

    fn worst<F>(&self, f: F) -> f64
    where
        F: Fn(&PlantState) -> f64 + Sync + Send,
    {
        exec::max_over(self.exec, self.states.len(), |i| f(&self.states[i]))
    }

    /// `M(beta) M(beta)^{-1} = I`.
    pub fn mass_inverse(&self) -> CheckResult {
        let p = self.params;
        let w = self.worst(|x| {
            let prod = model::mass_matrix(&p, x.beta) * model::mass_matrix_inverse(&p, x.beta);
            max_norm(&(prod - Matrix2::identity()))
        });
        verdict("mass matrix inverse", w, 1e-12)
    }

    /// Smallest eigenvalue of `M / (l^2 m)` stays positive.
    pub fn mass_positive(&self) -> CheckResult {
        let p = self.params;
        let w = self.worst(|x| {
            let m = model::mass_matrix(&p, x.beta) / p.l2m();
            let min_eig = m.symmetric_eigenvalues().min();
            if min_eig > 0.0 {
                0.0
            } else {
                1.0 - min_eig
            }
        });
        verdict("mass matrix positive definite", w, 0.0)
    }

    /// `Phi^{-1}(Phi(x)) = x`.
    pub fn bif_round_trip(&self) -> CheckResult {
        let p = self.params;
        let w = self.worst(
            |x| match bif::phi_forward(&p, x).and_then(|z| bif::phi_inverse(&p, &z)) {
                Ok(back) => x
                    .to_array()
                    .iter()
                    .zip(back.to_array())
                    .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())),
                Err(_) => f64::INFINITY,
            },
        );
        verdict("coordinate round trip", w, 1e-12)
    }

    /// Finite-difference `det D Phi(x)` equals `(3 cos(beta) - 2) / 12` and is
    /// at least `1e-3` in magnitude for `|beta| <= 0.8`. The determinant tends
    /// to zero at the domain boundary, so the floor cannot hold on all of it.
    pub fn bif_jacobian(&self) -> CheckResult {
        let p = self.params;
        let w = self.worst(|x| {
            let rows: Vec<[f64; 4]> = (0..4)
                .map(|i| {
                    fd_gradient(
                        |z| bif::phi_forward(&p, z).map(|c| c.to_array()[i]).unwrap_or(f64::NAN),
                        x,
                        1e-6,
                    )
                })
                .collect();
            let det = nalgebra::Matrix4::from_fn(|r, c| rows[r][c]).determinant();
            let exact = (3.0 * x.beta.cos() - 2.0) / 12.0;
            let floor_miss = if x.beta.abs() <= JACOBIAN_BETA_SPAN {
                (1e-3 - det.abs()).max(0.0)
            } else {
                0.0
            };
            (det - exact).abs().max(floor_miss)
        });
        verdict("coordinate jacobian nonsingular", w, 1e-8)
    }

    /// Closed-form internal dynamics against the chain rule along the plant flow.
    pub fn internal_dynamics(&self) -> CheckResult {
        let p = self.params;
        let w = self.worst(|x| {
            let z = match bif::phi_forward(&p, x) {
                Ok(z) => z,
                Err(_) => return f64::INFINITY,
            };
            match (
                bif::internal_rhs(&p, (z.eta1, z.eta2), z.y_dot),
                bif::internal_rhs_oracle(&p, x),
            ) {
                (Ok(a), Ok(b)) => {
                    let scale = 1.0 + b.0.abs().max(b.1.abs());
                    (a.0 - b.0).abs().max((a.1 - b.1).abs()) / scale
                }
                _ => f64::INFINITY,
            }
        });
        verdict("internal dynamics closed form", w, 1e-9)
    }

    /// The internal coordinates are not driven by the input.
    pub fn internal_decoupling(&self) -> CheckResult {
        let p = self.params;
        let w = self.worst(|x| {
            let (a, b) = bif::input_coupling(&p, x);
            a.abs().max(b.abs())
        });
        verdict("internal input decoupling", w, 1e-12)
    }

    /// `Gamma(beta) = L_g L_f h` and `Gamma < 0`.
    pub fn high_frequency_gain(&self) -> CheckResult {
        let p = self.params;
        let w = self.worst(|x| {
            let g = model::gamma(&p, x.beta);
            if g >= 0.0 {
                return f64::INFINITY;
            }
            (g - model::lie_g_lie_f_h(&p, x)).abs().max(model::lie_g_h(&p, x).abs())
        });
        verdict("high-frequency gain", w, 1e-12)
    }

    /// `Q V = V diag(lambda1, lambda2)`, `V V^{-1} = I`, `lambda2 p2 Gamma < 0`.
    pub fn eigensplit(&self) -> CheckResult {
        let lin = self.lin;
        let diag = Matrix2::new(lin.lambda1, 0.0, 0.0, lin.lambda2);
        let mut w = max_norm(&(lin.q * lin.v - lin.v * diag)).max(max_norm(&(lin.v * lin.v_inv - Matrix2::identity())));
        let sign = lin.lambda2 * lin.p2 * model::gamma(&self.params, 0.0);
        if !(lin.lambda1 < 0.0 && lin.lambda2 > 0.0 && sign < 0.0) {
            w = f64::INFINITY;
        }
        verdict("eigen-split and input sign", w, 1e-12)
    }

    /// `L_g Psi = 0` by finite differences: `y_new` has no direct input path.
    pub fn auxiliary_output_decoupling(&self) -> CheckResult {
        let p = self.params;
        let lin = self.lin;
        let w = self.worst(|x| {
            let grad = fd_gradient(|z| linid::psi(&p, &lin, z).unwrap_or(f64::NAN), x, 1e-6);
            let g = model::input_field(&p, x.beta);
            model::dot4(&grad, &g).abs() / (1.0 + g.iter().fold(0.0f64, |a, v| a.max(v.abs())))
        });
        verdict("auxiliary output input decoupling", w, 1e-7)
    }

    /// Interpolated auxiliary reference against direct quadrature.
    pub fn auxiliary_reference(&self) -> CheckResult {
        let reference = match NewReference::new(NewRefConfig::from_lin(&self.lin), TransitionRef::case_study()) {
            Ok(r) => r,
            Err(_) => return verdict("auxiliary reference table", f64::INFINITY, 1e-8),
        };
        let times: Vec<f64> = (0..=400).map(|i| -0.5 + 0.01 * i as f64).collect();
        let w = exec::max_over(self.exec, times.len(), |i| {
            let t = times[i];
            let a = reference.eval(t);
            let b = reference.eval_direct(t);
            (a.value - b.value).abs()
        });
        verdict("auxiliary reference table", w, 1e-8)
    }

    /// At rest with a zero reference the closed-loop vector field vanishes.
    pub fn equilibrium(&self) -> CheckResult {
        let mut w = 0.0f64;
        for mode in [Mode::Lin, Mode::Hg] {
            let mut cfg = ScenarioConfig::zero(mode);
            cfg.params = self.params;
            let s = crate::sim::ClosedLoopState {
                plant: PlantState::zero(),
                zeta: (mode == Mode::Hg).then(Default::default),
            };
            let dv = ClosedLoop::new(&cfg).and_then(|cl| cl.rhs(0.7, &s));
            w = w.max(match dv {
                Ok(d) => {
                    let z = d.zeta.unwrap_or_default();
                    d.plant
                        .to_array()
                        .into_iter()
                        .chain([z.zeta1, z.zeta2, z.zeta3])
                        .fold(0.0f64, |a, v| a.max(v.abs()))
                }
                Err(_) => f64::INFINITY,
            });
        }
        verdict("closed-loop equilibrium", w, 0.0)
    }

    pub fn run_all(&self) -> Vec<CheckResult> {
        vec![
            self.mass_inverse(),
            self.mass_positive(),
            self.bif_round_trip(),
            self.bif_jacobian(),
            self.internal_dynamics(),
            self.internal_decoupling(),
            self.high_frequency_gain(),
            self.eigensplit(),
            self.auxiliary_output_decoupling(),
            self.auxiliary_reference(),
            self.equilibrium(),
        ]
    }
}

/// Runs the whole suite with the case-study parameters.
pub fn run_default(exec: Execution) -> Result<Vec<CheckResult>> {
    Ok(CheckSuite::new(ManipulatorParams::case_study(), DEFAULT_SEED, DEFAULT_SAMPLES, exec)?.run_all())
}

//! Closed-loop assembly, scenario configuration, trajectories and sweeps.

use std::io::Write;
use std::path::Path;

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IntegrationFailure, Result};
use crate::exec::{self, Execution};
use crate::funnel::{CascadeOutput, Controller, FunnelSpec, ObserverGains, ObserverState};
use crate::linid::{self, LinData};
use crate::model::{self, ManipulatorParams, PlantState};
use crate::ode::{self, IntegratorSettings, SolverStats};
use crate::reference::{NewRefConfig, NewReference, TransitionRef};

/// Which derivative source the controller uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Linear surrogate ladder expressed in plant coordinates.
    Lin,
    /// High-gain observer co-integrated with the plant.
    Hg,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Lin => "lin",
            Mode::Hg => "hg",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lin" => Ok(Mode::Lin),
            "hg" => Ok(Mode::Hg),
            other => Err(Error::Config(format!("unknown mode {other:?} (expected lin or hg)"))),
        }
    }
}

/// Input disturbance `amp1 sin(freq1 t) + amp2 cos(freq2 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Disturbance {
    pub amp1: f64,
    pub freq1: f64,
    pub amp2: f64,
    pub freq2: f64,
}

impl Disturbance {
    /// `0.1 sin(5 t) + 0.2 cos(8 t)`.
    pub fn case_study() -> Self {
        Self {
            amp1: 0.1,
            freq1: 5.0,
            amp2: 0.2,
            freq2: 8.0,
        }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.amp1 * (self.freq1 * t).sin() + self.amp2 * (self.freq2 * t).cos()
    }
}

pub fn disturbance(d: &Disturbance, t: f64) -> f64 {
    d.eval(t)
}

fn default_sample_step() -> f64 {
    1e-3
}

/// Full description of one closed-loop run. Field names double as the JSON
/// configuration schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub params: ManipulatorParams,
    pub x0: PlantState,
    #[serde(rename = "ref")]
    pub reference: TransitionRef,
    pub funnels: [FunnelSpec; 3],
    pub mode: Mode,
    pub observer_gains: ObserverGains,
    pub disturbance: Disturbance,
    pub t_end: f64,
    pub integrator: IntegratorSettings,
    /// Output grid spacing.
    #[serde(default = "default_sample_step")]
    pub sample_step: f64,
    /// Observer start; `(Psi(x0), 0, 0)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer_init: Option<ObserverState>,
}

impl ScenarioConfig {
    /// Rest-to-rest `0 -> pi/4` transition in 3 s under the sinusoidal disturbance.
    pub fn case_study(mode: Mode) -> Self {
        Self {
            params: ManipulatorParams::case_study(),
            x0: PlantState::zero(),
            reference: TransitionRef::case_study(),
            funnels: FunnelSpec::case_study(),
            mode,
            observer_gains: ObserverGains::case_study(),
            disturbance: Disturbance::case_study(),
            t_end: 3.0,
            integrator: IntegratorSettings::default(),
            sample_step: default_sample_step(),
            observer_init: None,
        }
    }

    /// Zero state, zero reference, no disturbance.
    pub fn zero(mode: Mode) -> Self {
        Self {
            reference: TransitionRef {
                y0: 0.0,
                yf: 0.0,
                t0: 0.0,
                tf: 3.0,
            },
            disturbance: Disturbance::none(),
            ..Self::case_study(mode)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.reference.validate()?;
        self.integrator.validate()?;
        for f in &self.funnels {
            f.validate()?;
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config(format!("t_end must be positive (got {})", self.t_end)));
        }
        if !(self.sample_step > 0.0) {
            return Err(Error::Config("sample_step must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Sets a dotted field path (e.g. `params.d`, `disturbance.amp1`,
    /// `funnels.2.eps`) to `value`.
    pub fn with_field(&self, path: &str, value: f64) -> Result<Self> {
        let mut doc = serde_json::to_value(self)?;
        let mut slot = &mut doc;
        for key in path.split('.') {
            slot = match slot {
                serde_json::Value::Object(map) => map
                    .get_mut(key)
                    .ok_or_else(|| Error::Config(format!("unknown field {path:?}")))?,
                serde_json::Value::Array(items) => key
                    .parse::<usize>()
                    .ok()
                    .and_then(|i| items.get_mut(i))
                    .ok_or_else(|| Error::Config(format!("bad index in {path:?}")))?,
                _ => return Err(Error::Config(format!("{path:?} does not name a number"))),
            };
        }
        if !slot.is_number() {
            return Err(Error::Config(format!("{path:?} does not name a number")));
        }
        *slot = serde_json::json!(value);
        let cfg: ScenarioConfig = serde_json::from_value(doc)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Plant state plus observer state in high-gain mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopState {
    pub plant: PlantState,
    pub zeta: Option<ObserverState>,
}

/// Controller, disturbance and mode of one scenario.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub controller: Controller,
    pub disturbance: Disturbance,
    pub mode: Mode,
}

impl ClosedLoop {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let lin = LinData::new(&cfg.params)?;
        let reference = NewReference::new(NewRefConfig::from_lin(&lin), cfg.reference)?;
        Ok(Self {
            controller: Controller {
                params: cfg.params,
                lin,
                funnels: cfg.funnels,
                reference,
                observer: cfg.observer_gains,
            },
            disturbance: cfg.disturbance,
            mode: cfg.mode,
        })
    }

    /// Control law output at `(t, s)`.
    pub fn control(&self, t: f64, s: &ClosedLoopState) -> Result<(CascadeOutput, Option<ObserverState>)> {
        match (self.mode, s.zeta) {
            (Mode::Lin, _) => Ok((self.controller.evaluate_lin(t, &s.plant)?, None)),
            (Mode::Hg, Some(zeta)) => {
                let (out, dz) = self.controller.evaluate_hg(t, &s.plant, &zeta)?;
                Ok((out, Some(dz)))
            }
            (Mode::Hg, None) => Err(Error::Config("high-gain mode needs an observer state".into())),
        }
    }

    /// `d/dt (x, zeta)` with `u_d = u + d(t)`.
    pub fn rhs(&self, t: f64, s: &ClosedLoopState) -> Result<ClosedLoopState> {
        let (out, dz) = self.control(t, s)?;
        let u_d = out.u + self.disturbance.eval(t);
        Ok(ClosedLoopState {
            plant: model::plant_rhs(&self.controller.params, &s.plant, u_d),
            zeta: dz,
        })
    }

    fn initial_state(&self, cfg: &ScenarioConfig) -> Result<ClosedLoopState> {
        let zeta = match self.mode {
            Mode::Lin => None,
            Mode::Hg => Some(match cfg.observer_init {
                Some(z) => z,
                None => self.controller.observer_init(&cfg.x0)?,
            }),
        };
        Ok(ClosedLoopState { plant: cfg.x0, zeta })
    }
}

pub fn closed_loop_rhs(cl: &ClosedLoop, t: f64, s: &ClosedLoopState) -> Result<ClosedLoopState> {
    cl.rhs(t, s)
}

fn pack4(s: &ClosedLoopState) -> SVector<f64, 4> {
    SVector::<f64, 4>::from(s.plant.to_array())
}

fn pack7(s: &ClosedLoopState) -> SVector<f64, 7> {
    let z = s.zeta.unwrap_or_default();
    let x = s.plant;
    SVector::<f64, 7>::from([x.alpha, x.beta, x.alpha_dot, x.beta_dot, z.zeta1, z.zeta2, z.zeta3])
}

fn unpack(v: &[f64]) -> ClosedLoopState {
    let plant = PlantState::new(v[0], v[1], v[2], v[3]);
    let zeta = (v.len() == 7).then(|| ObserverState::new(v[4], v[5], v[6]));
    ClosedLoopState { plant, zeta }
}

/// One output sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
    pub y: f64,
    pub y_ref: f64,
    pub y_bar_ref: f64,
    pub y_new: f64,
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub u: f64,
    pub zeta: Option<[f64; 3]>,
}

/// Column names of the CSV output, without and with observer columns.
pub const CSV_COLUMNS: [&str; 16] = [
    "t",
    "alpha",
    "beta",
    "alpha_dot",
    "beta_dot",
    "y",
    "y_ref",
    "y_bar_ref",
    "y_new",
    "e0",
    "e1",
    "e2",
    "k0",
    "k1",
    "k2",
    "u",
];
pub const CSV_OBSERVER_COLUMNS: [&str; 3] = ["zeta1", "zeta2", "zeta3"];

/// Sampled closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mode: Mode,
    pub rows: Vec<TrajectoryRow>,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.t)
    }

    pub fn last(&self) -> &TrajectoryRow {
        self.rows.last().expect("trajectory has at least one row")
    }

    /// Per-level `max_t phi_i(t) |e_i(t)|`.
    pub fn max_scaled_errors(&self, funnels: &[FunnelSpec; 3]) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        for r in &self.rows {
            for (i, e) in [r.e0, r.e1, r.e2].into_iter().enumerate() {
                out[i] = out[i].max(funnels[i].eval(r.t).0 * e.abs());
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let observer = self.mode == Mode::Hg;
        let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
        if observer {
            header.extend(CSV_OBSERVER_COLUMNS);
        }
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            let mut vals = vec![
                r.t,
                r.alpha,
                r.beta,
                r.alpha_dot,
                r.beta_dot,
                r.y,
                r.y_ref,
                r.y_bar_ref,
                r.y_new,
                r.e0,
                r.e1,
                r.e2,
                r.k0,
                r.k1,
                r.k2,
                r.u,
            ];
            if observer {
                vals.extend(r.zeta.unwrap_or([f64::NAN; 3]));
            }
            let line: Vec<String> = vals.iter().map(|v| format!("{v:.15e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn row_at(cl: &ClosedLoop, t: f64, s: &ClosedLoopState) -> Result<TrajectoryRow> {
    let (out, _) = cl.control(t, s)?;
    let x = s.plant;
    let (y, _) = model::output(&cl.controller.params, &x);
    let reference = cl.controller.reference.eval(t);
    Ok(TrajectoryRow {
        t,
        alpha: x.alpha,
        beta: x.beta,
        alpha_dot: x.alpha_dot,
        beta_dot: x.beta_dot,
        y,
        y_ref: cl.controller.reference.transition().eval(t).0,
        y_bar_ref: reference.value,
        y_new: linid::psi(&cl.controller.params, &cl.controller.lin, &x)?,
        e0: out.e0,
        e1: out.e1,
        e2: out.e2,
        k0: out.k0,
        k1: out.k1,
        k2: out.k2,
        u: out.u,
        zeta: s.zeta.map(|z| [z.zeta1, z.zeta2, z.zeta3]),
    })
}

fn as_integration_error(t: f64, e: Error, state: &ClosedLoopState) -> Error {
    let v = pack7(state).as_slice().to_vec();
    let v = if state.zeta.is_some() { v } else { v[..4].to_vec() };
    match e {
        e @ Error::FunnelViolation { .. } => Error::Integration {
            t,
            reason: IntegrationFailure::Funnel {
                source: Box::new(e),
                state: v,
            },
        },
        e @ Error::Domain { .. } => Error::Integration {
            t,
            reason: IntegrationFailure::DomainExit {
                source: Box::new(e),
                state: v,
            },
        },
        other => other,
    }
}

/// Scaled error above which a collapsed step is attributed to the funnel wall.
pub const FUNNEL_STALL_MARGIN: f64 = 1e-6;

/// A step-size collapse with some `phi_i |e_i|` within [`FUNNEL_STALL_MARGIN`]
/// of one means the error is pinned against the funnel boundary. The gain is
/// then so large that the explicit integrator cannot advance, so the failure
/// is reported as a funnel violation.
fn classify_underflow(cl: &ClosedLoop, e: Error) -> Error {
    let Error::Integration {
        t,
        reason: IntegrationFailure::StepUnderflow { step, state },
    } = e
    else {
        return e;
    };
    let s = unpack(&state);
    let out = match cl.control(t, &s) {
        Ok((out, _)) => out,
        Err(source) => return as_integration_error(t, source, &s),
    };
    let errors = [out.e0, out.e1, out.e2];
    let level = (0..3)
        .max_by(|&i, &j| (out.phi[i] * errors[i].abs()).total_cmp(&(out.phi[j] * errors[j].abs())))
        .expect("three levels");
    let scaled_error = out.phi[level] * errors[level].abs();
    if scaled_error < 1.0 - FUNNEL_STALL_MARGIN {
        return Error::Integration {
            t,
            reason: IntegrationFailure::StepUnderflow { step, state },
        };
    }
    Error::Integration {
        t,
        reason: IntegrationFailure::Funnel {
            source: Box::new(Error::FunnelViolation {
                level,
                phi: out.phi[level],
                error: errors[level],
                scaled_error,
            }),
            state,
        },
    }
}

/// Runs the closed loop from `x0` over `[0, t_end]`.
///
/// All three funnel levels are checked at `t = 0` before integration starts;
/// an infeasible start is reported as a plain [`Error::FunnelViolation`].
/// A step-size collapse against a funnel wall is reported as a funnel failure
/// (see [`FUNNEL_STALL_MARGIN`]).
pub fn integrate(cfg: &ScenarioConfig) -> Result<Trajectory> {
    let cl = ClosedLoop::new(cfg)?;
    let s0 = cl.initial_state(cfg)?;
    cl.control(0.0, &s0)?;

    let (times, states, stats) = match cfg.mode {
        Mode::Lin => {
            let f = |t: f64, v: &SVector<f64, 4>| {
                let s = unpack(v.as_slice());
                Ok(pack4(&cl.rhs(t, &s)?))
            };
            let sol = ode::solve(f, 0.0, pack4(&s0), cfg.t_end, cfg.sample_step, &cfg.integrator)
                .map_err(|e| classify_underflow(&cl, e))?;
            let states: Vec<ClosedLoopState> = sol.states.iter().map(|v| unpack(v.as_slice())).collect();
            (sol.times, states, sol.stats)
        }
        Mode::Hg => {
            let f = |t: f64, v: &SVector<f64, 7>| {
                let s = unpack(v.as_slice());
                Ok(pack7(&cl.rhs(t, &s)?))
            };
            let sol = ode::solve(f, 0.0, pack7(&s0), cfg.t_end, cfg.sample_step, &cfg.integrator)
                .map_err(|e| classify_underflow(&cl, e))?;
            let states: Vec<ClosedLoopState> = sol.states.iter().map(|v| unpack(v.as_slice())).collect();
            (sol.times, states, sol.stats)
        }
    };

    let rows = times
        .iter()
        .zip(&states)
        .map(|(&t, s)| row_at(&cl, t, s).map_err(|e| as_integration_error(t, e, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        mode: cfg.mode,
        rows,
        stats,
    })
}

/// Headline numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    /// `max_t phi_i |e_i|` for `i = 0, 1, 2`.
    pub max_scaled_error: [f64; 3],
    pub funnel_invariant: bool,
    pub y_final: f64,
    pub y_ref_final: f64,
    pub final_tracking_error: f64,
    pub max_abs_u: f64,
    pub max_abs_beta: f64,
    pub domain_invariant: bool,
    pub stats: SolverStats,
}

impl Summary {
    pub fn of(traj: &Trajectory, cfg: &ScenarioConfig) -> Self {
        let max_scaled_error = traj.max_scaled_errors(&cfg.funnels);
        let last = traj.last();
        let max_abs_beta = traj.rows.iter().map(|r| r.beta.abs()).fold(0.0, f64::max);
        Summary {
            mode: traj.mode,
            max_scaled_error,
            funnel_invariant: max_scaled_error.iter().all(|&m| m < 1.0),
            y_final: last.y,
            y_ref_final: last.y_ref,
            final_tracking_error: (last.y - last.y_ref).abs(),
            max_abs_u: traj.rows.iter().map(|r| r.u.abs()).fold(0.0, f64::max),
            max_abs_beta,
            domain_invariant: traj
                .rows
                .iter()
                .all(|r| model::in_domain(&PlantState::new(0.0, r.beta, 0.0, 0.0))),
            stats: traj.stats,
        }
    }
}

/// Both controller variants on the same scenario, run side by side.
#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub lin: Trajectory,
    pub hg: Trajectory,
    pub lin_summary: Summary,
    pub hg_summary: Summary,
    /// `sup_{t >= 0.5} |u_lin - u_hg|` on the common grid.
    pub max_input_gap_after_transient: f64,
    pub final_output_gap: f64,
}

/// Start of the window used to compare the two controller inputs.
pub const OBSERVER_TRANSIENT: f64 = 0.5;

/// Runs lin and hg variants of `base` (its `mode` is ignored).
pub fn run_pair(base: &ScenarioConfig, exec: Execution) -> Result<CaseStudy> {
    let lin_cfg = ScenarioConfig {
        mode: Mode::Lin,
        ..base.clone()
    };
    let hg_cfg = ScenarioConfig {
        mode: Mode::Hg,
        ..base.clone()
    };
    let (lin, hg) = exec::join(exec, || integrate(&lin_cfg), || integrate(&hg_cfg));
    let (lin, hg) = (lin?, hg?);
    let max_input_gap_after_transient = lin
        .rows
        .iter()
        .zip(&hg.rows)
        .filter(|(a, _)| a.t >= OBSERVER_TRANSIENT)
        .map(|(a, b)| (a.u - b.u).abs())
        .fold(0.0, f64::max);
    let final_output_gap = (lin.last().y - hg.last().y).abs();
    Ok(CaseStudy {
        lin_summary: Summary::of(&lin, &lin_cfg),
        hg_summary: Summary::of(&hg, &hg_cfg),
        lin,
        hg,
        max_input_gap_after_transient,
        final_output_gap,
    })
}

/// The reference experiment: both variants with all case-study constants.
pub fn run_case_study(exec: Execution) -> Result<CaseStudy> {
    run_pair(&ScenarioConfig::case_study(Mode::Lin), exec)
}

impl CaseStudy {
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lin": self.lin_summary,
            "hg": self.hg_summary,
            "max_input_gap_after_transient": self.max_input_gap_after_transient,
            "final_output_gap": self.final_output_gap,
        })
    }

    /// Writes `lin.csv`, `hg.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.lin.save_csv(&dir.join("lin.csv"))?;
        self.hg.save_csv(&dir.join("hg.csv"))?;
        let text = serde_json::to_string_pretty(&self.summary_json())?;
        std::fs::write(dir.join("summary.json"), text + "\n")?;
        Ok(())
    }
}

/// Parameter sweep `field = start:stop:n` (inclusive, `n` points).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub field: String,
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl std::str::FromStr for SweepSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("sweep must look like field=start:stop:n, got {s:?}"));
        let (field, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 || field.is_empty() {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let stop = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok(SweepSpec {
            field: field.trim().to_string(),
            start,
            stop,
            n,
        })
    }
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.start + step * i as f64).collect()
    }
}

/// Outcome of one sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: std::result::Result<Summary, Error>,
}

/// Runs every sweep point as an independent scenario.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepPoint>> {
    let configs = spec
        .values()
        .into_iter()
        .map(|v| Ok((v, base.with_field(&spec.field, v)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(exec::map_slice(exec, &configs, |(value, cfg)| SweepPoint {
        value: *value,
        outcome: integrate(cfg).map(|traj| Summary::of(&traj, cfg)),
    }))
}

/// Sweep results as CSV text.
pub fn sweep_csv(spec: &SweepSpec, points: &[SweepPoint]) -> String {
    let mut out = format!(
        "{},status,max_scaled_e0,max_scaled_e1,max_scaled_e2,final_tracking_error,max_abs_u,max_abs_beta\n",
        spec.field
    );
    for p in points {
        match &p.outcome {
            Ok(s) => out.push_str(&format!(
                "{:.15e},ok,{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                p.value,
                s.max_scaled_error[0],
                s.max_scaled_error[1],
                s.max_scaled_error[2],
                s.final_tracking_error,
                s.max_abs_u,
                s.max_abs_beta
            )),
            Err(e) => out.push_str(&format!("{:.15e},error(exit {}),,,,,,\n", p.value, e.exit_code())),
        }
    }
    out
}

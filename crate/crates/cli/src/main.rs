use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use funnel_core::checks::{self, CheckSuite};
use funnel_core::exec::Execution;
use funnel_core::sim::{self, SweepSpec};
use funnel_core::{Error, ManipulatorParams, Mode, Result, ScenarioConfig, Summary};

#[derive(Parser, Debug)]
#[command(
    name = "funnel-sim",
    version,
    about = "Funnel-controlled two-link manipulator simulator"
)]
struct Cli {
    /// Run batch work on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one closed-loop scenario and write its trajectory as CSV.
    Simulate {
        /// JSON scenario file; the built-in case study when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Controller variant, overriding the file.
        #[arg(long)]
        mode: Option<Mode>,
        /// Final time in seconds, overriding the file.
        #[arg(long)]
        t_end: Option<f64>,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical invariant suite.
    Check {
        #[arg(long, default_value_t = checks::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = checks::DEFAULT_SEED)]
        seed: u64,
    },
    /// Run both controller variants on the reference scenario.
    CaseStudy {
        /// Directory receiving lin.csv, hg.csv and summary.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a one-parameter sweep of a scenario.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `field=start:stop:n`, e.g. `params.d=0.1:0.4:4`.
        #[arg(long)]
        vary: SweepSpec,
        #[arg(long)]
        mode: Option<Mode>,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>, mode: Option<Mode>, t_end: Option<f64>) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p).map_err(|e| match e {
            Error::Io(msg) => Error::Config(format!("{}: {msg}", p.display())),
            other => other,
        })?,
        None => ScenarioConfig::case_study(Mode::Lin),
    };
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if let Some(t) = t_end {
        cfg.t_end = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn describe(s: &Summary) -> String {
    format!(
        "{}: max phi|e| = [{:.4}, {:.4}, {:.4}], |y - y_ref|(end) = {:.3e}, max|u| = {:.4}, max|beta| = {:.4}, steps = {}",
        s.mode,
        s.max_scaled_error[0],
        s.max_scaled_error[1],
        s.max_scaled_error[2],
        s.final_tracking_error,
        s.max_abs_u,
        s.max_abs_beta,
        s.stats.accepted
    )
}

fn run(cli: Cli) -> Result<ExitCode> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Simulate {
            config,
            mode,
            t_end,
            out,
        } => {
            let cfg = load_config(config.as_ref(), mode, t_end)?;
            let traj = sim::integrate(&cfg)?;
            write_text(out.as_ref(), &traj.to_csv_string())?;
            eprintln!("{}", describe(&Summary::of(&traj, &cfg)));
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { samples, seed } => {
            let results = CheckSuite::new(ManipulatorParams::case_study(), seed, samples, exec)?.run_all();
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} checks, {} failed", results.len(), failed);
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::CaseStudy { out_dir } => {
            let study = sim::run_case_study(exec)?;
            study.write(&out_dir)?;
            eprintln!("{}", describe(&study.lin_summary));
            eprintln!("{}", describe(&study.hg_summary));
            eprintln!(
                "sup_(t >= {}) |u_lin - u_hg| = {:.4}, |y_lin - y_hg|(end) = {:.4}",
                sim::OBSERVER_TRANSIENT,
                study.max_input_gap_after_transient,
                study.final_output_gap
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            vary,
            mode,
            out,
        } => {
            let cfg = load_config(config.as_ref(), mode, None)?;
            let points = sim::run_sweep(&cfg, &vary, exec)?;
            write_text(out.as_ref(), &sim::sweep_csv(&vary, &points))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors, which is reserved for funnel
    // violations here, so bad arguments are mapped to the config error code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use funnel_core::FunnelSpec;

    fn run_args(args: &[&str]) -> Result<ExitCode> {
        run(Cli::try_parse_from(std::iter::once("funnel-sim").chain(args.iter().copied())).unwrap())
    }

    fn short_config(dir: &std::path::Path, mode: Mode) -> PathBuf {
        let mut cfg = ScenarioConfig::case_study(mode);
        cfg.t_end = 0.2;
        let path = dir.join("scenario.json");
        std::fs::write(&path, cfg.to_json()).unwrap();
        path
    }

    #[test]
    fn simulate_writes_csv_and_flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = short_config(dir.path(), Mode::Lin);
        let out = dir.path().join("run.csv");
        let code = run_args(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--mode",
            "hg",
            "--t-end",
            "0.1",
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(code, ExitCode::SUCCESS);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.lines().next().unwrap().ends_with("zeta1,zeta2,zeta3"));
        assert_eq!(text.lines().count(), 102);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.json");
        let err = run_args(&["simulate", "--config", missing.to_str().unwrap()]).unwrap_err();
        assert_eq!(err.exit_code(), 1);

        let mut cfg = ScenarioConfig::case_study(Mode::Lin);
        cfg.funnels[2] = FunnelSpec::new(0.1, 0.2, 0.001);
        let path = dir.path().join("narrow.json");
        std::fs::write(&path, cfg.to_json()).unwrap();
        let err = run_args(&["simulate", "--config", path.to_str().unwrap()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let mut cfg = ScenarioConfig::zero(Mode::Lin);
        cfg.x0.beta = 1.0;
        std::fs::write(&path, cfg.to_json()).unwrap();
        let err = run_args(&["simulate", "--config", path.to_str().unwrap()]).unwrap_err();
        assert_eq!(err.exit_code(), 3);

        assert!(Cli::try_parse_from(["funnel-sim", "sweep", "--vary", "t_end"]).is_err());
        assert!(Cli::try_parse_from(["funnel-sim", "simulate", "--mode", "fast"]).is_err());
    }

    #[test]
    fn check_passes() {
        assert_eq!(
            run_args(&["--sequential", "check", "--samples", "50"]).unwrap(),
            ExitCode::SUCCESS
        );
    }

    #[test]
    fn case_study_and_sweep_write_their_files() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_args(&["case-study", "--out-dir", dir.path().to_str().unwrap()]).unwrap();
        assert_eq!(code, ExitCode::SUCCESS);
        for name in ["lin.csv", "hg.csv", "summary.json"] {
            assert!(dir.path().join(name).is_file());
        }

        let cfg = short_config(dir.path(), Mode::Lin);
        let out = dir.path().join("sweep.csv");
        let code = run_args(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--vary",
            "params.d=0.1:0.3:3",
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(code, ExitCode::SUCCESS);
        let text = std::fs::read_to_string(out).unwrap();
        assert!(text.starts_with("params.d,status,"));
        assert_eq!(text.lines().count(), 4);
    }
}

use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use wild_euler::report::VerificationReport;
use wild_euler::runner;
use wild_euler::scenario::{Scenario, SCHEMA_VERSION};
use wild_euler::{Error, Result};

#[derive(Parser)]
#[command(
    name = "wild-euler",
    version,
    about = "Explicit subsolutions, admissibility windows and laminate experiments \
             for axisymmetric swirl-free Euler flows"
)]
struct Cli {
    /// JSON scenario file; the built-in defaults are used when absent
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Grid override as NR,NZ,NT
    #[arg(long, global = true, value_name = "NR,NZ,NT")]
    grid: Option<String>,
    /// Seed override for randomized test-function sets
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Echo the report document to stdout as JSON
    #[arg(long, global = true)]
    json: bool,
    /// Write per-component CSV dumps of the subsolution fields
    #[arg(long, global = true)]
    dump_fields: bool,
    /// Print the embedded default configuration and exit
    #[arg(long)]
    print_default_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Coordinate conversions and the advection-integrand identity
    CheckIdentity,
    /// Explicit subsolution contract plus the weak-formulation equivalence
    VerifySubsolution,
    /// Admissibility ODE for chi and the feasibility window
    ChiWindow,
    /// Burgers-fan subsolution and the symmetry-breaking witness
    SymmetryBreaking,
    /// Instrumented laminate iteration
    CiDemo {
        /// Number of accepted steps to attempt
        #[arg(long)]
        steps: Option<usize>,
        /// Oscillation frequency N
        #[arg(long)]
        frequency: Option<u32>,
    },
    /// Every suite in sequence plus a summary document
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_default_config {
        println!("{}", Scenario::default().to_pretty_json());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!(
            "{}",
            json!({"error": "invalid-config", "detail": "no subcommand given"})
        );
        return ExitCode::from(2);
    };
    let scenario = match load_scenario(&cli) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!(
                "{}",
                json!({"error": "invalid-config", "detail": e.to_string()})
            );
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli, command, &scenario) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({"error": error_tag(&e), "detail": e.to_string()})
            );
            ExitCode::from(1)
        }
    }
}

fn error_tag(e: &Error) -> &'static str {
    match e {
        Error::NoWindow => "no-window",
        Error::Saturated => "saturated",
        Error::StepRejected => "step-rejected",
        Error::FanUnresolved => "fan-unresolved",
        Error::Io(_) => "io-error",
        _ => "run-failed",
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario> {
    let mut sc = match &cli.config {
        Some(path) => Scenario::from_json(&std::fs::read_to_string(path)?)?,
        None => Scenario::default(),
    };
    if let Some(grid) = &cli.grid {
        let parts: Vec<&str> = grid.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidConfig(
                "grid override must be NR,NZ,NT".into(),
            ));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::InvalidConfig(format!("bad grid value `{s}`: {e}")))
        };
        sc.grid.nr = parse(parts[0])?;
        sc.grid.nz = parse(parts[1])?;
        sc.grid.nt = parse(parts[2])?;
    }
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    sc.validate()?;
    Ok(sc)
}

struct Outcome {
    pass: bool,
    document: serde_json::Value,
    file: &'static str,
}

fn dispatch(cli: &Cli, command: Command, sc: &Scenario) -> Result<bool> {
    std::fs::create_dir_all(&cli.out)?;
    let mut timings: Vec<(String, u128)> = Vec::new();
    let pass = match command {
        Command::All => {
            let subs = [
                Command::CheckIdentity,
                Command::VerifySubsolution,
                Command::ChiWindow,
                Command::SymmetryBreaking,
                Command::CiDemo {
                    steps: None,
                    frequency: None,
                },
            ];
            let mut results = Vec::new();
            for sub in subs {
                let started = Instant::now();
                let outcome = run_one(cli, sub, sc)?;
                timings.push((outcome.file.to_string(), started.elapsed().as_millis()));
                write_document(cli, &outcome)?;
                results.push((outcome.file, outcome.pass));
            }
            let all_pass = results.iter().all(|(_, p)| *p);
            let summary = json!({
                "schema": SCHEMA_VERSION,
                "command": "all",
                "pass": all_pass,
                "subcommands": results
                    .iter()
                    .map(|(name, p)| (name.to_string(), json!(p)))
                    .collect::<serde_json::Map<_, _>>(),
                "scenario": sc,
            });
            write_atomic(&cli.out.join("summary.json"), pretty(&summary).as_bytes())?;
            if cli.json {
                println!("{}", pretty(&summary));
            }
            all_pass
        }
        other => {
            let started = Instant::now();
            let outcome = run_one(cli, other, sc)?;
            timings.push((outcome.file.to_string(), started.elapsed().as_millis()));
            write_document(cli, &outcome)?;
            if cli.json {
                println!("{}", pretty(&outcome.document));
            }
            outcome.pass
        }
    };
    // Wall-clock data stays in a sidecar so report bytes are reproducible.
    let meta = json!({
        "timings_ms": timings
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect::<serde_json::Map<_, _>>(),
        "unix_time_s": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    });
    write_atomic(&cli.out.join("run-meta.json"), pretty(&meta).as_bytes())?;
    Ok(pass)
}

fn run_one(cli: &Cli, command: Command, sc: &Scenario) -> Result<Outcome> {
    match command {
        Command::All => unreachable!("handled by dispatch"),
        Command::CheckIdentity => {
            let report = runner::run_check_identity(sc)?;
            Ok(Outcome {
                pass: report.pass,
                document: envelope("check-identity", sc, &[&report], json!({})),
                file: "check-identity.json",
            })
        }
        Command::VerifySubsolution => {
            let run = runner::run_verify_subsolution(sc)?;
            if cli.dump_fields {
                let dump = runner::dump_subsolution(sc, &run)?;
                write_atomic(&cli.out.join("subsolution-m.csv"), &dump.m_csv)?;
                write_atomic(&cli.out.join("subsolution-stress.csv"), &dump.stress_csv)?;
                if let Some(q) = &dump.q_csv {
                    write_atomic(&cli.out.join("subsolution-q.csv"), q)?;
                }
                write_atomic(
                    &cli.out.join("subsolution-fields.json"),
                    pretty(&dump.sidecar).as_bytes(),
                )?;
            }
            let pass = run.report.pass && run.equivalence.pass;
            let mass0 = runner::initial_momentum_mass(&run.state)?;
            Ok(Outcome {
                pass,
                document: envelope(
                    "verify-subsolution",
                    sc,
                    &[&run.report, &run.equivalence],
                    json!({
                        "chi": run.chi_value,
                        "threshold_sup": run.threshold_sup,
                        "initial_gap": run.initial_gap,
                        "initial_momentum_mass": mass0,
                    }),
                ),
                file: "verify-subsolution.json",
            })
        }
        Command::ChiWindow => {
            let run = runner::run_chi_window(sc)?;
            let plot = runner::chi_window_plot(&run);
            write_atomic(&cli.out.join("chi-window.svg"), plot.to_svg().as_bytes())?;
            let summary = runner::ChiWindowSummary {
                chi0: sc.chi0,
                gamma: sc.gamma,
                delta: sc.domain.delta,
                r_outer: sc.domain.r_outer,
                t_max: run.window.t_max,
                limiting: run.window.limiting,
                margin_min: run.margin_min,
            };
            Ok(Outcome {
                pass: run.report.pass,
                document: envelope(
                    "chi-window",
                    sc,
                    &[&run.report],
                    serde_json::to_value(&summary)?,
                ),
                file: "chi-window.json",
            })
        }
        Command::SymmetryBreaking => {
            let run = runner::run_symmetry_breaking(sc)?;
            write_atomic(&cli.out.join("symmetry-breaking.csv"), run.csv.as_bytes())?;
            write_atomic(
                &cli.out.join("breaking-profiles.svg"),
                run.profiles_plot.to_svg().as_bytes(),
            )?;
            write_atomic(
                &cli.out.join("breaking-deficit.svg"),
                run.deficit_plot.to_svg().as_bytes(),
            )?;
            Ok(Outcome {
                pass: run.report.pass,
                document: envelope(
                    "symmetry-breaking",
                    sc,
                    &[&run.report],
                    json!({
                        "times": run.curves.times,
                        "deficit": run.curves.deficit,
                        "theta_variance": run.curves.variance,
                        "fan_resolved": run.curves.resolved,
                    }),
                ),
                file: "symmetry-breaking.json",
            })
        }
        Command::CiDemo { steps, frequency } => {
            let steps = steps.unwrap_or(sc.ci.steps);
            let frequency = frequency.unwrap_or(sc.ci.frequency);
            let run = runner::run_ci_demo(sc, steps, frequency)?;
            write_atomic(&cli.out.join("ci-demo.csv"), run.csv.as_bytes())?;
            write_atomic(
                &cli.out.join("ci-gap.svg"),
                run.gap_plot.to_svg().as_bytes(),
            )?;
            Ok(Outcome {
                pass: run.report.pass,
                document: envelope(
                    "ci-demo",
                    sc,
                    &[&run.report],
                    json!({
                        "trace": run.trace,
                        "final_divergence": run.final_divergence,
                        "frequency": frequency,
                        "steps_requested": steps,
                    }),
                ),
                file: "ci-demo.json",
            })
        }
    }
}

fn envelope(
    command: &str,
    sc: &Scenario,
    reports: &[&VerificationReport],
    extra: serde_json::Value,
) -> serde_json::Value {
    let pass = reports.iter().all(|r| r.pass);
    json!({
        "schema": SCHEMA_VERSION,
        "command": command,
        "pass": pass,
        "scenario": sc,
        "reports": reports,
        "extra": extra,
    })
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn write_document(cli: &Cli, outcome: &Outcome) -> Result<()> {
    write_atomic(
        &cli.out.join(outcome.file),
        pretty(&outcome.document).as_bytes(),
    )?;
    for c in outcome
        .document
        .get("reports")
        .and_then(|r| r.as_array())
        .unwrap_or(&Vec::new())
    {
        let name = c.get("name").and_then(|n| n.as_str()).unwrap_or("report");
        let pass = c.get("pass").and_then(|p| p.as_bool()).unwrap_or(false);
        println!("{name}: {}", if pass { "pass" } else { "FAIL" });
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

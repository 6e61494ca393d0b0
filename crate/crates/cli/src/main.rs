//! Command-line front end: problem-file ingestion, root calculus, existence
//! tests, Lax readings, spectral polynomials, flow integration and the
//! seeded verification suites.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 numerical abort.

mod problem;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use isoflow_core::flow::integrate::{integrate, IntegrateOptions};
use isoflow_core::linalg::C;
use isoflow_core::readings::lax_readings;
use isoflow_core::root::{
    classify_root, delta_dim, ds_exists, reflect_param, reflect_root, weyl_orbit, RootClass, Sign,
    DS_DEFAULT_BUDGET,
};
use isoflow_core::spectral::spectral_poly;
use isoflow_core::verify::{run_suite, Suite};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "isoflow", version, about = "isomonodromy systems on supernova graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the dimension vector and print (d,d) and the phase-space dimension
    Roots {
        #[arg(long)]
        file: PathBuf,
    },
    /// Reflect (λ, d) at one node
    Reflect {
        #[arg(long)]
        file: PathBuf,
        /// canonical node name, e.g. core:0:0 or leg:1:2
        #[arg(long)]
        node: String,
    },
    /// Breadth-first Weyl orbit of (λ, d) with generating words
    Orbit {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Existence test for stable connections with the given local data
    Exists {
        #[arg(long)]
        file: PathBuf,
    },
    /// Phase-space dimension 2 − (d, d)
    Dim {
        #[arg(long)]
        file: PathBuf,
    },
    /// Table of linear-system readings of the graph
    Readings {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Spectral polynomial of the pencil (from phase data or a weyl block)
    Spectral {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate the isomonodromy equations along the path in the file
    Integrate {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        step: Option<f64>,
        /// write trajectory JSON here (monitors CSV lands next to it)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate a closed loop and report the log τ defect under halving
    Tau {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Seeded self-check suites
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    };
    std::process::exit(code);
}

fn c_str(z: C) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im >= 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}-{}i", z.re, -z.im)
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Roots { file } => {
            let pf = problem::load(&file)?;
            let graph = pf.graph()?;
            let d = pf.dims(&graph)?;
            let class = classify_root(graph.graph(), &d)?;
            let dd = isoflow_core::root::cartan_form(graph.graph(), &d, &d)?;
            let delta = delta_dim(graph.graph(), &d)?;
            let label = match class {
                RootClass::Real(Sign::Positive) => "real root, positive",
                RootClass::Real(Sign::Negative) => "real root, negative",
                RootClass::Imaginary(Sign::Positive) => "imaginary root, positive",
                RootClass::Imaginary(Sign::Negative) => "imaginary root, negative",
                RootClass::NotARoot => "not a root",
            };
            println!("classification: {label}");
            println!("(d,d) = {dd}");
            println!("delta = 2-(d,d) = {delta}");
            Ok(0)
        }
        Command::Reflect { file, node } => {
            let pf = problem::load(&file)?;
            let graph = pf.graph()?;
            let d = pf.dims(&graph)?;
            let lam = pf.params(&graph)?;
            let idx = pf.node_index(&graph, &node)?;
            if lam.0[idx].norm() == 0.0 {
                println!("reflection at {node} refused: the parameter there is zero");
                return Ok(1);
            }
            let d2 = reflect_root(graph.graph(), idx, &d)?;
            let l2 = reflect_param(graph.graph(), idx, &lam)?;
            println!("node {node}:");
            println!("  d -> {:?}", d2.0);
            println!(
                "  lambda -> [{}]",
                l2.0.iter().map(|z| c_str(*z)).collect::<Vec<_>>().join(", ")
            );
            Ok(0)
        }
        Command::Orbit { file, depth, output } => {
            let pf = problem::load(&file)?;
            let graph = pf.graph()?;
            let d = pf.dims(&graph)?;
            let lam = pf.params(&graph)?;
            let depth = depth.or(pf.options.depth).unwrap_or(3);
            let orbit = weyl_orbit(graph.graph(), &lam, &d, depth)?;
            println!(
                "{} elements within depth {depth} (invariants per row: (d,d), lambda.d)",
                orbit.len()
            );
            let names = graph.graph().node_names();
            let mut rows = Vec::new();
            for el in &orbit {
                let dd = isoflow_core::root::cartan_form(graph.graph(), &el.dims, &el.dims)?;
                let pairing = el.lambda.dot_root(&el.dims);
                let word = if el.word.is_empty() {
                    "(identity)".to_owned()
                } else {
                    el.word
                        .iter()
                        .map(|&i| names[i].as_str())
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                println!(
                    "  d={:?}  (d,d)={dd}  lambda.d={}  word: {word}",
                    el.dims.0,
                    c_str(pairing)
                );
                rows.push(serde_json::json!({
                    "dims": el.dims.0,
                    "lambda": el.lambda.0.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>(),
                    "pairing": (pairing.re, pairing.im),
                    "cartan": dd,
                    "word": el.word,
                }));
            }
            if let Some(path) = output {
                std::fs::write(&path, serde_json::to_string_pretty(&rows)?)?;
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Exists { file } => {
            let pf = problem::load(&file)?;
            let graph = pf.graph()?;
            let d = pf.dims(&graph)?;
            let lam = pf.params(&graph)?;
            let budget = pf.options.budget.unwrap_or(DS_DEFAULT_BUDGET);
            match ds_exists(graph.graph(), &lam, &d, budget) {
                Ok(isoflow_core::root::DsVerdict::Nonempty) => {
                    println!("nonempty: d is a positive root, lambda.d = 0, and no admissible decomposition reaches delta(d)");
                    Ok(0)
                }
                Ok(isoflow_core::root::DsVerdict::Empty(cert)) => {
                    match cert {
                        isoflow_core::root::DsCertificate::NotAPositiveRoot => {
                            println!("empty: d is not a positive root");
                        }
                        isoflow_core::root::DsCertificate::PairingNonzero(v) => {
                            println!("empty: lambda.d = {} is nonzero", c_str(v));
                        }
                        isoflow_core::root::DsCertificate::Decomposition(parts) => {
                            println!("empty: admissible decomposition with delta(d) <= sum of parts:");
                            for p in parts {
                                println!("  part {:?}", p.0);
                            }
                        }
                    }
                    Ok(0)
                }
                Err(e) => {
                    println!("budget exceeded: {e}");
                    Ok(3)
                }
            }
        }
        Command::Dim { file } => {
            let pf = problem::load(&file)?;
            let graph = pf.graph()?;
            let d = pf.dims(&graph)?;
            println!("delta = {}", delta_dim(graph.graph(), &d)?);
            Ok(0)
        }
        Command::Readings { file, output } => {
            let pf = problem::load(&file)?;
            let graph = pf.graph()?;
            let d = pf.dims(&graph)?;
            let readings = lax_readings(&graph, &d);
            println!(
                "{:<18} {:>5} {:>14} {:>18}",
                "part at infinity", "rank", "finite poles", "pole order at inf"
            );
            for r in &readings {
                let part = match r.part_at_infinity {
                    Some(j) => format!("part {j}"),
                    None => "(generic)".to_owned(),
                };
                println!(
                    "{:<18} {:>5} {:>14} {:>18}",
                    part, r.rank, r.finite_simple_poles, r.infinity_pole_order
                );
            }
            if let Some(path) = output {
                std::fs::write(&path, serde_json::to_string_pretty(&readings)?)?;
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Spectral { file, output } => {
            let pf = problem::load(&file)?;
            let (alpha, beta, gamma) = match pf.pencil()? {
                Some(p) => p,
                None => {
                    let state = pf.flow_state()?;
                    let cfg = isoflow_core::sampling::RandomConfig {
                        fourier: state.fourier.clone(),
                        space: state.space.clone(),
                        phase: state.phase.clone(),
                        times: state.times.clone(),
                    };
                    isoflow_core::verify::pencil_of(&cfg)
                }
            };
            let p = spectral_poly(&alpha, &beta, &gamma)
                .map_err(|e| anyhow!("spectral polynomial failed: {e}"))?;
            println!(
                "coefficients c[m][n] of lambda^m z^n ({}x{}):",
                p.coeffs().nrows(),
                p.coeffs().ncols()
            );
            for m in 0..p.coeffs().nrows() {
                let row: Vec<String> = (0..p.coeffs().ncols())
                    .map(|n| c_str(p.coeff(m, n)))
                    .collect();
                println!("  lambda^{m}: [{}]", row.join(", "));
            }
            if let Some(path) = output {
                let json: Vec<Vec<(f64, f64)>> = (0..p.coeffs().nrows())
                    .map(|m| {
                        (0..p.coeffs().ncols())
                            .map(|n| (p.coeff(m, n).re, p.coeff(m, n).im))
                            .collect()
                    })
                    .collect();
                std::fs::write(&path, serde_json::to_string_pretty(&json)?)?;
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Integrate { file, step, output } => {
            let pf = problem::load(&file)?;
            let state = pf.flow_state()?;
            let path = pf.path()?;
            let opts = IntegrateOptions {
                step: step.or(pf.options.step).unwrap_or(1e-3),
                ..Default::default()
            };
            let traj = integrate(&state, &path, &opts)?;
            for w in &traj.warnings {
                eprintln!("warning: {w}");
            }
            let last = traj.samples.last().expect("at least the initial sample");
            println!(
                "{} waypoint samples; final lambda drift {:.3e}, trace drift {:.3e}, log tau {}",
                traj.samples.len(),
                last.lambda_drift,
                last.trace_drift,
                c_str(C::new(last.log_tau.0, last.log_tau.1)),
            );
            if let Some(json_path) = output {
                std::fs::write(&json_path, serde_json::to_string_pretty(&traj.samples)?)?;
                let csv_path = json_path.with_extension("monitors.csv");
                let mut csv =
                    String::from("sample,lambda_drift,trace_drift,log_tau_re,log_tau_im\n");
                for (i, s) in traj.samples.iter().enumerate() {
                    csv.push_str(&format!(
                        "{i},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                        s.lambda_drift, s.trace_drift, s.log_tau.0, s.log_tau.1
                    ));
                }
                std::fs::write(&csv_path, csv)?;
                println!("wrote {} and {}", json_path.display(), csv_path.display());
            }
            if traj.aborted {
                return Ok(3);
            }
            if !traj.warnings.is_empty() {
                return Ok(1);
            }
            Ok(0)
        }
        Command::Tau { file, step } => {
            let pf = problem::load(&file)?;
            let state = pf.flow_state()?;
            let mut path = pf.path()?;
            // close the loop back to the starting times if not already closed
            let start: Vec<Vec<C>> = state.times.values().to_vec();
            if path.last() != Some(&start) {
                path.push(start);
            }
            let base_step = step.or(pf.options.step).unwrap_or(2e-3);
            let run_loop = |s: f64| -> Result<C> {
                let traj = integrate(
                    &state,
                    &path,
                    &IntegrateOptions {
                        step: s,
                        ..Default::default()
                    },
                )?;
                if traj.aborted {
                    return Err(anyhow!("path left the admissible time domain"));
                }
                Ok(traj.final_state.log_tau)
            };
            let d1 = run_loop(base_step)?;
            let d2 = run_loop(base_step / 2.0)?;
            let order = (d1.norm() / d2.norm()).log2();
            println!(
                "closed-loop log tau defect: {:.6e} at step {base_step}",
                d1.norm()
            );
            println!(
                "                            {:.6e} at step {}",
                d2.norm(),
                base_step / 2.0
            );
            println!("estimated convergence order: {order:.2}");
            Ok(0)
        }
        Command::Verify {
            suite,
            seed,
            trials,
            output,
        } => {
            let suite: Suite = suite.parse().map_err(|e: String| anyhow!(e))?;
            let seed = seed.unwrap_or(20260809);
            let trials = trials.unwrap_or(16);
            let threads = std::env::var("ISOFLOW_THREADS")
                .ok()
                .and_then(|v| v.parse::<usize>().ok())
                .unwrap_or(1);
            if trials == 0 {
                println!("warning: trials = 0 makes every check vacuous");
            }
            let checks = run_suite(suite, seed, trials, threads);
            let mut failed = 0;
            for check in &checks {
                let status = if check.passed { "pass" } else { "FAIL" };
                println!(
                    "[{status}] {:<68} error {:>10.3e}  tol {:>8.1e}  ({} trials)",
                    check.name, check.error, check.tolerance, check.trials
                );
                if !check.passed {
                    failed += 1;
                }
            }
            println!(
                "{} checks, {} failed (seed {seed}, trials {trials}, threads {threads})",
                checks.len(),
                failed
            );
            if let Some(path) = output {
                std::fs::write(&path, serde_json::to_string_pretty(&checks)?)?;
                println!("wrote {}", path.display());
            }
            Ok(if failed > 0 { 1 } else { 0 })
        }
    }
}

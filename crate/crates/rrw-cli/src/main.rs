//! Command-line front end: batch analysis of reflecting-random-walk model
//! documents. Machine-readable JSON goes to stdout (CSV for `table`), human
//! summaries to stderr, and the exit status reflects the verdict.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use rrw_core::geometry::{sample_curve, CurveSample};
use rrw_core::model::{parse_model, serialize_model, validate, Face, ReflectingWalkModel};
use rrw_core::oracle::{
    closed_form_grid, simulate, total_variation, truncated_stationary, PowerIterationOptions,
};
use rrw_core::presets::{instance_note, published_instance, INSTANCE_NAMES};
use rrw_core::reversal::{build_reversed_model, reversed_model_document};
use rrw_core::reversibility::evaluate_conditions;
use rrw_core::{run_analysis, AnalysisOptions, AnalysisReport};

#[derive(Parser)]
#[command(
    name = "rrw",
    about = "Structure-reversibility analyzer for two-dimensional reflecting random walks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArg {
    /// Path to a model document (JSON).
    model: PathBuf,
    /// Relative tolerance for ratio conditions and cross-checks. Use about
    /// 1e-3 for instances published with rounded digits.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Check face invariants and irreducibility; print a validation report.
    Validate {
        /// Path to a model document (JSON).
        model: PathBuf,
    },
    /// Evaluate the ratio conditions (a1)-(a3) and boundary shortcuts
    /// (b1)-(b2).
    Check(ModelArg),
    /// Full analysis: verdict, decay rates, stationary distribution,
    /// product-form classification. Exits 0 when the walk is
    /// structure-reversible or singular.
    Solve(ModelArg),
    /// Build the time-reversed walk and write it as a model document.
    Reverse {
        #[command(flatten)]
        model: ModelArg,
        /// Output path for the reversed model document.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Cross-check the closed form against the truncated-grid oracle and a
    /// seeded simulation.
    Verify {
        #[command(flatten)]
        model: ModelArg,
        /// Truncation bound N of the oracle grid {0..N}^2.
        #[arg(long, default_value_t = 60)]
        grid: usize,
        /// Simulation seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Simulation steps (a tenth is discarded as burn-in).
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        /// Optional path for the truncated-grid stationary vector as CSV.
        #[arg(long)]
        dump_grid: Option<PathBuf>,
    },
    /// Sample the four level-one curves and write one CSV per face.
    Curves {
        #[command(flatten)]
        model: ModelArg,
        /// Output directory for the CSV files.
        #[arg(short, long)]
        output: PathBuf,
        /// Number of grid points.
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Smallest grid value.
        #[arg(long, default_value_t = 0.2)]
        zmin: f64,
        /// Largest grid value.
        #[arg(long, default_value_t = 5.0)]
        zmax: f64,
    },
    /// Write one of the built-in published instances as a model document.
    Preset {
        /// Instance name: jackson-extra-5.10, appendixD-product-nonreversible,
        /// or singular-A-demo.
        name: String,
        /// Output path for the document.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the stationary probabilities over {0..nmax}^2 as CSV.
    Table {
        #[command(flatten)]
        model: ModelArg,
        /// Largest coordinate of the table.
        #[arg(long, default_value_t = 20)]
        nmax: u64,
    },
}

fn load_model(path: &Path) -> Result<ReflectingWalkModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_model(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn print_report(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
}

fn summarize(report: &AnalysisReport) {
    match report.verdict {
        rrw_core::Verdict::StructureReversible => {
            let s = report.stationary.as_ref().expect("stationary present");
            eprintln!(
                "structure-reversible: eta1 = {:.6}, eta2 = {:.6}, pi(0,0) = {:.6}, product form: {}",
                s.eta1,
                s.eta2,
                s.pi00,
                report.product_form.unwrap_or(false)
            );
        }
        rrw_core::Verdict::Singular => {
            let s = report.stationary.as_ref().expect("stationary present");
            eprintln!(
                "singular regime: eta1 = {:.6}, eta2 = {:.6}, axis rates ({:.6}, {:.6})",
                s.eta1, s.eta2, s.axis1_rate, s.axis2_rate
            );
        }
        rrw_core::Verdict::NotStructureReversible => {
            eprintln!(
                "not structure-reversible: {}",
                report.detail.as_deref().unwrap_or("a condition fails")
            );
        }
        rrw_core::Verdict::Invalid => {
            eprintln!(
                "invalid model: {} violation(s)",
                report.validation.violations.len()
            );
        }
    }
}

fn write_curves(
    model: &ReflectingWalkModel,
    tol: f64,
    dir: &Path,
    points: usize,
    zmin: f64,
    zmax: f64,
) -> Result<serde_json::Value> {
    anyhow::ensure!(
        points >= 2 && zmin > 0.0 && zmax > zmin,
        "bad grid specification"
    );
    let conditions = evaluate_conditions(model, tol);
    let constants = conditions
        .constants
        .ok_or_else(|| anyhow::anyhow!("ratio conditions fail; curve constants undefined"))?;
    let ratio = (zmax / zmin).powf(1.0 / (points as f64 - 1.0));
    let mut grid: Vec<f64> = (0..points).map(|k| zmin * ratio.powi(k as i32)).collect();
    grid.push(1.0); // the interior curve always carries (1,1)
    grid.sort_by(f64::total_cmp);
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut skipped = serde_json::Map::new();
    for face in Face::all() {
        let sample: CurveSample = sample_curve(model, Some(&constants), face, &grid)?;
        let path = dir.join(format!("curve_{}.csv", face.name().to_lowercase()));
        let mut csv = String::from("face,z1,z2\n");
        for (z1, z2) in &sample.points {
            csv.push_str(&format!("{},{},{}\n", face.name(), z1, z2));
        }
        fs::write(&path, csv)?;
        skipped.insert(face.name().to_string(), json!(sample.skipped));
        written.push(path.display().to_string());
    }
    Ok(json!({ "written": written, "skipped": skipped }))
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { model } => {
            let model = load_model(&model)?;
            let report = validate(&model);
            print_report(&serde_json::to_value(&report)?);
            eprintln!(
                "{}: {} violation(s), chain irreducible: {:?}, free walk irreducible: {}",
                if report.ok { "ok" } else { "invalid" },
                report.violations.len(),
                report.chain_irreducible,
                report.free_walk_irreducible
            );
            Ok(if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Check(args) => {
            let model = load_model(&args.model)?;
            let report = evaluate_conditions(&model, args.tol);
            print_report(&serde_json::to_value(&report)?);
            eprintln!(
                "a1 {:?}, a2 {:?}, a3 {:?}, b1 {:?}, b2 {:?}",
                report.a1.status,
                report.a2.status,
                report.a3.status,
                report.b1.status,
                report.b2.status
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => {
            let model = load_model(&args.model)?;
            let report = run_analysis(&model, AnalysisOptions { tol: args.tol });
            print_report(&serde_json::to_value(&report)?);
            summarize(&report);
            Ok(if report.exit_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Reverse { model, output } => {
            let parsed = load_model(&model.model)?;
            let mut report = run_analysis(&parsed, AnalysisOptions { tol: model.tol });
            if !report.exit_ok() {
                print_report(&serde_json::to_value(&report)?);
                summarize(&report);
                return Ok(ExitCode::FAILURE);
            }
            let dist = *report.stationary.as_ref().expect("stationary present");
            let reversed = build_reversed_model(&parsed, &dist, model.tol.max(1e-10))?;
            fs::write(
                &output,
                reversed_model_document(&reversed, Some("time-reversed model")),
            )?;
            report.reversed_model_path = Some(output.display().to_string());
            print_report(&serde_json::to_value(&report)?);
            eprintln!(
                "reversed model written to {} (homogeneity residual {:e})",
                output.display(),
                reversed.homogeneity_residual
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            model,
            grid,
            seed,
            steps,
            dump_grid,
        } => {
            let parsed = load_model(&model.model)?;
            let mut report = run_analysis(&parsed, AnalysisOptions { tol: model.tol });
            let burn_in = steps / 10;
            let truncated = truncated_stationary(&parsed, grid, PowerIterationOptions::default())?;
            if let Some(path) = &dump_grid {
                fs::write(path, truncated.to_csv())?;
            }
            let empirical = simulate(&parsed, steps, seed, burn_in, grid)?;
            let sim_window = (grid.min(10), grid.min(10));
            let tv_sim = total_variation(&truncated, &empirical, sim_window)?;
            let closed_window = (grid.min(25), grid.min(25));
            let tv_closed = match report.stationary.as_ref() {
                Some(dist) => {
                    let closed = closed_form_grid(dist, grid);
                    Some(total_variation(&truncated, &closed, closed_window)?)
                }
                None => None,
            };
            report.oracle_tv = tv_closed;
            let value = json!({
                "verdict": report.verdict,
                "grid": grid,
                "seed": seed,
                "steps": steps,
                "burn_in": burn_in,
                "oracle_residual": truncated.residual,
                "closed_vs_truncated": tv_closed,
                "closed_window": closed_window,
                "truncated_vs_simulated": tv_sim,
                "sim_window": sim_window,
            });
            print_report(&value);
            eprintln!(
                "oracle agreement: closed vs truncated {:?}, truncated vs simulated {:.3e}",
                tv_closed, tv_sim
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Curves {
            model,
            output,
            points,
            zmin,
            zmax,
        } => {
            let parsed = load_model(&model.model)?;
            let value = write_curves(&parsed, model.tol, &output, points, zmin, zmax)?;
            print_report(&value);
            eprintln!("curve samples written to {}", output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { name, output } => {
            let model = published_instance(&name)
                .with_context(|| format!("known instances: {}", INSTANCE_NAMES.join(", ")))?;
            fs::write(&output, serialize_model(&model, instance_note(&name)))?;
            print_report(&json!({ "name": name, "path": output.display().to_string() }));
            eprintln!("preset {name} written to {}", output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Table { model, nmax } => {
            let parsed = load_model(&model.model)?;
            let report = run_analysis(&parsed, AnalysisOptions { tol: model.tol });
            let Some(dist) = report.stationary.as_ref() else {
                summarize(&report);
                anyhow::bail!(
                    "no closed-form stationary distribution: {:?}",
                    report.verdict
                );
            };
            let mut csv = String::from("n1,n2,probability\n");
            for n1 in 0..=nmax {
                for n2 in 0..=nmax {
                    csv.push_str(&format!("{},{},{}\n", n1, n2, dist.pi_at(n1, n2)));
                }
            }
            print!("{csv}");
            summarize(&report);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            let value = json!({ "error": format!("{err:#}") });
            println!(
                "{}",
                serde_json::to_string_pretty(&value).expect("error serializes")
            );
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

//! `tfg`: sample planted triangle-free graphs and run the scaling-window
//! experiment sweeps.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 configuration error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tfg_core::experiments::{
    run_sat_window, run_validate, run_window3, run_window4, write_rows_csv, write_rows_json,
    WindowRow,
};
use tfg_core::graphcore::write_edge_list;
use tfg_core::numerics::{
    params_for_fixed_m, params_for_window3, params_for_window4, ThresholdParams,
};
use tfg_core::sampler::{sample, SampleMetadata, SamplerConfig, SamplerModel};
use tfg_core::stream_rng;

#[derive(Parser)]
#[command(name = "tfg", version, about = "Triangle-free graph window laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    MuLambda1,
    MuLambda2,
    MuM1,
    RejectionOracle,
}

#[derive(Args)]
struct CommonOpts {
    /// Trials per sweep point.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Base seed; trial i uses an independent derived stream.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Scale trials down if the projected wall time exceeds this budget.
    #[arg(long)]
    budget_seconds: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw graphs from one of the planted samplers.
    Sample {
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = Model::MuLambda1)]
        model: Model,
        /// Window offset (mu_lambda_1 / rejection oracle parameters).
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        /// Window parameter c in (0,1) (mu_lambda_2).
        #[arg(long)]
        c: Option<f64>,
        /// Edge count (mu_m_1).
        #[arg(long)]
        m_edges: Option<u64>,
        /// Number of graphs to emit.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output prefix; writes `<prefix>-<i>.edges` and `<prefix>-<i>.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// 3-colorability fraction across an omega sweep.
    Window3 {
        #[arg(long)]
        n: u64,
        /// Comma-separated omega values.
        #[arg(long, value_delimiter = ',', required = true)]
        omega: Vec<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Defect-bipartiteness fraction across a c sweep, with the limit formula.
    Window4 {
        #[arg(long)]
        n: u64,
        /// Comma-separated c values in (0,1).
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// P[SAT] of bipartite random 2-SAT across a kappa sweep.
    SatWindow {
        /// Variable counts as `N` or `N,M`.
        #[arg(long, value_delimiter = ',', required = true)]
        nm: Vec<u64>,
        /// Comma-separated kappa values.
        #[arg(long, value_delimiter = ',', required = true)]
        kappa: Vec<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the pinned-seed invariant suite and emit a machine-readable report.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit_rows(rows: &[WindowRow], out: &Option<PathBuf>, format: Format) -> Result<(), String> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| e.to_string())?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => write_rows_csv(rows, sink).map_err(|e| e.to_string()),
        Format::Json => write_rows_json(rows, sink).map_err(|e| e.to_string()),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Sample {
            n,
            model,
            omega,
            c,
            m_edges,
            count,
            seed,
            out,
        } => {
            let (model, params): (SamplerModel, ThresholdParams) = match model {
                Model::MuLambda1 => (
                    SamplerModel::MuLambda1,
                    params_for_window3(n, omega).map_err(|e| e.to_string())?,
                ),
                Model::RejectionOracle => (
                    SamplerModel::RejectionOracle,
                    params_for_window3(n, omega).map_err(|e| e.to_string())?,
                ),
                Model::MuLambda2 => {
                    let c = c.ok_or("--c required for mu-lambda2")?;
                    (
                        SamplerModel::MuLambda2,
                        params_for_window4(n, c).map_err(|e| e.to_string())?,
                    )
                }
                Model::MuM1 => {
                    let m = m_edges.ok_or("--m-edges required for mu-m1")?;
                    (
                        SamplerModel::MuM1,
                        params_for_fixed_m(n, m).map_err(|e| e.to_string())?,
                    )
                }
            };
            let config = SamplerConfig::new(model, params, seed);
            for i in 0..count {
                let mut rng = stream_rng(seed, i);
                let s = sample(&config, &mut rng).map_err(|e| e.to_string())?;
                let base = out.display();
                let edge_path = format!("{base}-{i}.edges");
                let meta_path = format!("{base}-{i}.json");
                let f = File::create(&edge_path).map_err(|e| e.to_string())?;
                write_edge_list(&s.graph, BufWriter::new(f)).map_err(|e| e.to_string())?;
                let meta = SampleMetadata::for_sample(&config, &s);
                let f = File::create(&meta_path).map_err(|e| e.to_string())?;
                serde_json::to_writer_pretty(BufWriter::new(f), &meta)
                    .map_err(|e| e.to_string())?;
                eprintln!(
                    "wrote {edge_path} ({} edges{}) and {meta_path}",
                    s.graph.edge_count(),
                    if s.abort.is_some() { ", aborted" } else { "" }
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Window3 { n, omega, common } => {
            let rows = run_window3(n, &omega, common.trials, common.seed, common.budget_seconds)
                .map_err(|e| e.to_string())?;
            emit_rows(&rows, &common.out, common.format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Window4 { n, c, common } => {
            let rows = run_window4(n, &c, common.trials, common.seed, common.budget_seconds)
                .map_err(|e| e.to_string())?;
            emit_rows(&rows, &common.out, common.format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SatWindow { nm, kappa, common } => {
            let (n_vars, m_vars) = match nm.as_slice() {
                [n] => (*n, *n),
                [n, m] => (*n, *m),
                _ => return Err("--nm takes N or N,M".into()),
            };
            let rows = run_sat_window(
                n_vars,
                m_vars,
                &kappa,
                common.trials,
                common.seed,
                common.budget_seconds,
            )
            .map_err(|e| e.to_string())?;
            emit_rows(&rows, &common.out, common.format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { seed, out } => {
            let report = run_validate(seed);
            let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &json).map_err(|e| e.to_string())?;
                    eprintln!("report written to {}", path.display());
                }
                None => println!("{json}"),
            }
            for b in &report.blocks {
                eprintln!(
                    "{} {} - {}",
                    if b.pass { "PASS" } else { "FAIL" },
                    b.name,
                    b.details
                );
            }
            if report.all_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

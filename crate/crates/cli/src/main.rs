use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qadbench_core::data::{generate_toy, ToyConfig};
use qadbench_core::harness::{
    self, mean_auc_by_model, parse_kernel_mode, DatasetSource, ModelKind, Overrides,
};
use qadbench_core::kernel::{gram_matrix, write_matrix_csv, EncodingSpec};
use qadbench_core::report::{render, ReportFormat};
use qadbench_core::Error;

#[derive(Parser)]
#[command(
    name = "qadbench",
    version,
    about = "Semisupervised anomaly detection benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit and evaluate models and emit a metrics report.
    Run(RunArgs),
    /// Write a toy dataset as CSV.
    ToyGen(ToyGenArgs),
    /// Write the training Gram matrix of the quantum kernel as CSV.
    KernelDump(KernelDumpArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Input CSV (repeatable).
    #[arg(long = "dataset", value_name = "PATH")]
    datasets: Vec<PathBuf>,
    /// Use the generated toy dataset.
    #[arg(long)]
    toy: bool,
    /// Name of the 0/1 label column.
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `exact` or `shots:<N>`.
    #[arg(long, default_value = "exact")]
    kernel_mode: String,
}

impl SourceArgs {
    fn sources(&self) -> Result<Vec<DatasetSource>, Error> {
        let mut out: Vec<DatasetSource> = self
            .datasets
            .iter()
            .map(|p| DatasetSource::Csv {
                path: p.clone(),
                label_column: self.label_column.clone(),
            })
            .collect();
        if self.toy {
            out.push(DatasetSource::Toy(ToyConfig {
                seed: self.seed,
                ..ToyConfig::default()
            }));
        }
        if out.is_empty() {
            return Err(Error::InvalidParameter(
                "pass --dataset <path> or --toy".into(),
            ));
        }
        Ok(out)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// qsvr, csvr, qae, cae or all.
    #[arg(long, default_value = "all")]
    model: String,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    svr_c: Option<f64>,
    #[arg(long)]
    svr_eps: Option<f64>,
    #[arg(long)]
    rbf_gamma: Option<f64>,
    /// Autoencoder learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Autoencoder epochs.
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct ToyGenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ToyConfig::default().n_normal)]
    n_normal: usize,
    #[arg(long, default_value_t = ToyConfig::default().n_anomalous)]
    n_anomalous: usize,
}

#[derive(Args)]
struct KernelDumpArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Matrix path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn io_err(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| io_err(p, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_err(std::path::Path::new("<stdout>"), e)),
    }
}

fn parse_models(s: &str) -> Result<Vec<ModelKind>, Error> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(ModelKind::ALL.to_vec());
    }
    s.split(',').map(str::parse).collect()
}

fn run(args: RunArgs) -> Result<(), Error> {
    let src = &args.source;
    let mode = parse_kernel_mode(&src.kernel_mode, src.seed)?;
    let models = parse_models(&args.model)?;
    let format: ReportFormat = args.format.parse()?;
    let overrides = Overrides {
        svr_c: args.svr_c,
        svr_eps: args.svr_eps,
        rbf_gamma: args.rbf_gamma,
        lr: args.lr,
        epochs: args.epochs,
    };
    let rows = harness::run_suite(&src.sources()?, &models, mode, src.seed, overrides)?;
    emit(&args.out, render(&rows, format)?.as_bytes())?;
    for (model, auc) in mean_auc_by_model(&rows) {
        eprintln!("mean AUC {model}: {auc:.6}");
    }
    Ok(())
}

fn toy_gen(args: ToyGenArgs) -> Result<(), Error> {
    let toy = generate_toy(&ToyConfig {
        n_normal: args.n_normal,
        n_anomalous: args.n_anomalous,
        seed: args.seed,
        ..ToyConfig::default()
    })?;
    let file = std::fs::File::create(&args.out).map_err(|e| io_err(&args.out, e))?;
    toy.data.write_csv(file)
}

fn kernel_dump(args: KernelDumpArgs) -> Result<(), Error> {
    let src = &args.source;
    let mode = parse_kernel_mode(&src.kernel_mode, src.seed)?;
    let sources = src.sources()?;
    if sources.len() != 1 {
        return Err(Error::InvalidParameter(
            "kernel-dump takes exactly one dataset".into(),
        ));
    }
    let data = harness::prepare_source(&sources[0], src.seed)?;
    let spec = EncodingSpec::with_features(data.train[0].len())?;
    let k = gram_matrix(&data.train, &spec, mode)?;
    let mut buf = Vec::new();
    write_matrix_csv(k.matrix(), &mut buf)
        .map_err(|e| io_err(std::path::Path::new("<buffer>"), e))?;
    emit(&args.out, &buf)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::ToyGen(a) => toy_gen(a),
        Command::KernelDump(a) => kernel_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

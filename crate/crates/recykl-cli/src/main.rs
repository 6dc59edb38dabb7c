use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod report;

#[derive(Parser)]
#[command(name = "recykl", version, about = "Recycling Krylov solvers for sequences of SPD systems")]
struct Cli {
    /// Worker threads for method-level parallelism.
    #[arg(long, global = true, env = "RECYKL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic diffusion sequence as a manifest with Matrix Market files.
    Generate(GenerateArgs),
    /// Solve a sequence with each method and write per-system counters.
    Run(RunArgs),
    /// Cost of reaching output-error thresholds.
    OutputError(OutputErrorArgs),
    /// Compare weight schemes for one truncation after a training prefix.
    WeightStudy(WeightStudyArgs),
    /// Evaluate the bound checks on seeded random instances.
    VerifyBounds(VerifyBoundsArgs),
    /// Regenerate or check the regression fixtures.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub nx: usize,
    #[arg(long, default_value_t = 50)]
    pub ny: usize,
    /// Number of systems.
    #[arg(long, default_value_t = 20)]
    pub p: usize,
    /// Relative coefficient drift; 0 gives an invariant matrix.
    #[arg(long, default_value_t = 0.05)]
    pub drift: f64,
    #[arg(long)]
    pub steady: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Rows of a random output matrix to attach.
    #[arg(long)]
    pub outputs: Option<usize>,
}

#[derive(Args)]
pub struct MethodArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON array of method specs; defaults to the standard comparison set.
    #[arg(long)]
    pub methods: Option<PathBuf>,
    /// Storage cap of the default method set.
    #[arg(long, default_value_t = 50)]
    pub cap: usize,
    /// Preconditioner for every method: identity, jacobi, ssor or ssor:<omega>.
    #[arg(long)]
    pub precond: Option<String>,
    #[arg(long)]
    pub diagnostics: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: MethodArgs,
    /// Repeat every method at tolerances 1e-1 through 1e-6.
    #[arg(long)]
    pub tol_sweep: bool,
}

#[derive(Args)]
pub struct OutputErrorArgs {
    #[command(flatten)]
    pub common: MethodArgs,
    /// Output-error thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])]
    pub taus: Vec<f64>,
}

#[derive(Args)]
pub struct WeightStudyArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Systems solved before truncating.
    #[arg(long, default_value_t = 10)]
    pub train: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15, 20, 25, 30, 40, 50])]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub precond: Option<String>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct VerifyBoundsArgs {
    #[arg(long, default_value_t = 100)]
    pub instances: u64,
    /// First instance seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct FixturesArgs {
    /// Regenerate instead of checking.
    #[arg(long)]
    pub regenerate: bool,
    #[arg(long, default_value = "fixtures")]
    pub dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let res = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Run(a) => commands::run(&a),
        Command::OutputError(a) => commands::output_error(&a),
        Command::WeightStudy(a) => commands::weight_study(&a),
        Command::VerifyBounds(a) => commands::verify_bounds(&a),
        Command::Fixtures(a) => commands::fixtures(&a),
    };
    match res {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

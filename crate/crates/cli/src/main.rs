use clap::{Parser, ValueEnum};
use convex_toric_cli::{run, CliError, Command, Options};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Verify convex-geometric and toric claims on JSON inputs.
///
/// Exit status: 0 all checks pass, 1 some check fails, 2 unreadable or
/// invalid input, 3 resource guard.
#[derive(Debug, Parser)]
#[command(name = "convex-toric", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON input file; `-` reads standard input.
    input: PathBuf,
    /// Seed for randomized probe suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the command's primary tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for volume and quadrature batches.
    #[arg(long)]
    workers: Option<usize>,
    /// `csv` prints the command's table (or the check list) instead of the
    /// JSON report.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn read_input(path: &PathBuf) -> Result<(String, String), CliError> {
    let name = path.display().to_string();
    let text = if name == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    };
    text.map(|t| (name.clone(), t)).map_err(|e| CliError::Io {
        path: name,
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(w) = args.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .expect("global pool is configured once");
    }
    if let Some(t) = args.tol {
        if !(t.is_finite() && t >= 0.0) {
            eprintln!("error: --tol must be a finite nonnegative decimal");
            return ExitCode::from(2);
        }
    }
    let opts = Options {
        seed: args.seed,
        tol: args.tol,
    };
    let outcome = read_input(&args.input).and_then(|(name, text)| run(args.command, &name, &text, &opts));
    match outcome {
        Ok(out) => {
            match args.format {
                Format::Json => {
                    println!("{}", serde_json::to_string_pretty(&out.report).expect("report serialises"))
                }
                Format::Csv => print!("{}", out.table_csv.unwrap_or_else(|| out.report.checks_csv())),
            }
            ExitCode::from(out.report.exit_status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gsb_core::io::{parse, run, Overrides, Task};

/// Gröbner–Shirshov bases for conformal algebras and their envelopes.
#[derive(Parser, Debug)]
#[command(name = "gsb", version)]
struct Args {
    /// complete, basis, envelope, speciality or product
    task: String,
    /// Presentation file
    file: PathBuf,
    #[arg(long = "cap-index")]
    cap_index: Option<u32>,
    #[arg(long = "cap-degree")]
    cap_degree: Option<usize>,
    /// Length bound for basis listings
    #[arg(long)]
    bound: Option<usize>,
    /// Writes one `kind | w | outcome` line per composition
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn execute(args: &Args) -> Result<u8, String> {
    let task = Task::parse(&args.task).ok_or_else(|| format!("unknown task `{}`", args.task))?;
    let source =
        std::fs::read_to_string(&args.file).map_err(|e| format!("{}: {e}", args.file.display()))?;
    let file = parse(&source).map_err(|e| format!("{}:{e}", args.file.display()))?;
    let overrides = Overrides {
        max_index: args.cap_index,
        max_degree: args.cap_degree,
        bound: args.bound,
    };
    let report = run(&file, Some(task), overrides).map_err(|e| e.to_string())?;
    if let Some(path) = &args.trace {
        let mut text = report.trace.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    print!("{}", report.render());
    Ok(report.status.exit_code() as u8)
}

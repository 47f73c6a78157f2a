mod args;
mod check;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use bouquet_bench::{run_experiment, write_csv, SuiteSpec};
use bouquet_core::{
    generate_random_dtmc, pre_annotate, save_annotations, write_model, FlowerMark, GeneratorConfig, ModelFingerprint,
    PetalConfig,
};
use clap::Parser;

use args::{AnnotateArgs, BenchArgs, Cli, Command, GenerateArgs};

/// A failure with its exit status: 2 for bad input, 3 for numeric failure.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }

    /// A closed pipe on standard output ends the run quietly.
    pub fn stdout(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::BrokenPipe => CliError {
                code: 0,
                message: String::new(),
            },
            _ => CliError::input(format!("standard output: {e}")),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check(args) => check::run(args).and_then(|report| {
            let mut stdout = io::stdout().lock();
            let written = if args.json {
                let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::input(e.to_string()))?;
                writeln!(stdout, "{text}")
            } else {
                check::write_human(&report, &mut stdout)
            };
            written.map_err(CliError::stdout)
        }),
        Command::Generate(args) => generate(args),
        Command::Annotate(args) => annotate(args),
        Command::Bench(args) => bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.code == 0 => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn create(path: &std::path::Path) -> Result<io::BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(io::BufWriter::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let mut cfg = GeneratorConfig::new(args.states, args.density, args.seed).with_labels(args.p_a, args.p_b);
    if args.petal_count > 0 {
        cfg = cfg.with_petals(PetalConfig {
            count: args.petal_count,
            size: args.petal_size,
            p_a: args.petal_p_a,
            p_b: args.petal_p_b,
        });
    }
    let model = generate_random_dtmc(&cfg).map_err(|e| CliError::input(e.to_string()))?;
    let fingerprint = ModelFingerprint::of(&model);
    match &args.output {
        Some(path) => {
            write_model(&model, create(path)?).map_err(|e| CliError::input(e.to_string()))?;
            writeln!(io::stdout(), "sha256 {fingerprint}").map_err(CliError::stdout)?;
        }
        None => {
            let mut text = Vec::new();
            write_model(&model, &mut text).map_err(|e| CliError::input(e.to_string()))?;
            io::stdout().lock().write_all(&text).map_err(CliError::stdout)?;
            eprintln!("sha256 {fingerprint}");
        }
    }
    Ok(())
}

fn annotate(args: &AnnotateArgs) -> Result<(), CliError> {
    let model = check::load_model(&args.model)?;
    let k = args.k.unwrap_or_else(|| model.n().isqrt());
    if k == 0 {
        return Err(CliError::input("k must be at least 1"));
    }
    let store = pre_annotate(&model, k);
    let fingerprint = ModelFingerprint::of(&model);
    save_annotations(&store, &fingerprint, create(&args.output)?)
        .map_err(|e| CliError::input(format!("{}: {e}", args.output.display())))?;
    let flowers = store.marks().iter().filter(|&&m| m == FlowerMark::Flower).count();
    writeln!(
        io::stdout(),
        "k {k}: {flowers} flower states, {} non-flower states, written to {}",
        model.n() - flowers,
        args.output.display()
    )
    .map_err(CliError::stdout)
}

fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let mut text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    text.push('\n');
    if args.large {
        text.push_str("large=true\n");
    }
    for (key, value) in args.pairs() {
        text.push_str(&format!("{key}={value}\n"));
    }
    let spec = SuiteSpec::from_config(&text).map_err(|e| CliError::input(e.to_string()))?;
    let rows = run_experiment(&spec).map_err(|e| CliError::input(e.to_string()))?;
    match &args.output {
        Some(path) => write_csv(&rows, create(path)?).map_err(|e| CliError::input(e.to_string())),
        None => {
            let mut text = Vec::new();
            write_csv(&rows, &mut text).map_err(|e| CliError::input(e.to_string()))?;
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(&text)
                .and_then(|()| stdout.flush())
                .map_err(CliError::stdout)
        }
    }
}

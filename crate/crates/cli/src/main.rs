use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dphh::config::{Mode, RunConfig};
use dphh::generate::{GeneratorKind, GeneratorSpec};
use dphh::run;
use dphh::stream::{write_binary, write_text};
use dphh::HarnessError;

#[derive(Parser)]
#[command(name = "dphh", version, about = "Private heavy hitters over a sliding window")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run once: one-shot report, per-step continual reports, or the exact oracle.
    Run(ConfigArgs),
    /// Repeat a one-shot run over derived seeds and score it against the oracle.
    Experiment(ConfigArgs),
    /// Write a synthetic stream.
    Generate(GenerateArgs),
}

/// Every flag mirrors a config key. Values are validated by the config.
#[derive(Args)]
struct ConfigArgs {
    /// `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// oneshot-l2 | oneshot-l1 | continual | oracle
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    universe: Option<String>,
    /// Stream length bound m (defaults to the stream's length).
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    kappa_w: Option<String>,
    /// true | false
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Stream file, or `-` for stdin.
    #[arg(long)]
    input: Option<String>,
    /// uniform | zipf:S | planted:ITEM:MASS | distinct
    #[arg(long)]
    generator: Option<String>,
    /// auto | text | binary
    #[arg(long)]
    format: Option<String>,
    /// Output file (stdout if absent).
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    ams_rows: Option<String>,
    #[arg(long)]
    ams_reps: Option<String>,
    #[arg(long)]
    cs_rows: Option<String>,
    #[arg(long)]
    cs_buckets: Option<String>,
    /// median | mean-abs
    #[arg(long)]
    estimator: Option<String>,
    /// algorithm | unscaled
    #[arg(long)]
    l2_noise: Option<String>,
    /// sensitivity | algorithm
    #[arg(long)]
    l1_noise: Option<String>,
    /// derived | algorithm | sqrt-alpha-w
    #[arg(long)]
    continual_noise: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    failure_exponent: Option<String>,
    /// Include wall-clock time (output is then not reproducible).
    #[arg(long)]
    emit_timing: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, HarnessError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_file(&text)?;
        }
        let flags = [
            ("mode", &self.mode),
            ("alpha", &self.alpha),
            ("epsilon", &self.epsilon),
            ("delta", &self.delta),
            ("window", &self.window),
            ("universe", &self.universe),
            ("length", &self.length),
            ("kappa", &self.kappa),
            ("kappa-w", &self.kappa_w),
            ("noise", &self.noise),
            ("seed", &self.seed),
            ("input", &self.input),
            ("generator", &self.generator),
            ("format", &self.format),
            ("output", &self.output),
            ("trials", &self.trials),
            ("ams-rows", &self.ams_rows),
            ("ams-reps", &self.ams_reps),
            ("cs-rows", &self.cs_rows),
            ("cs-buckets", &self.cs_buckets),
            ("estimator", &self.estimator),
            ("l2-noise", &self.l2_noise),
            ("l1-noise", &self.l1_noise),
            ("continual-noise", &self.continual_noise),
            ("batch", &self.batch),
            ("failure-exponent", &self.failure_exponent),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        // A flag source replaces the other source from a config file.
        if self.input.is_some() && self.generator.is_none() {
            cfg.generator = None;
        }
        if self.generator.is_some() && self.input.is_none() {
            cfg.input = None;
        }
        if self.emit_timing {
            cfg.emit_timing = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// uniform | zipf:S | planted:ITEM:MASS | distinct
    #[arg(long)]
    generator: String,
    #[arg(long)]
    length: usize,
    #[arg(long)]
    universe: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// text | binary
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn sink(path: Option<&str>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match path {
        Some(p) if p != "-" => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            match cfg.mode {
                Mode::OneshotL2 | Mode::OneshotL1 => {
                    let doc = run::run_oneshot(&cfg)?;
                    run::write_document(&doc, sink(cfg.output.as_deref())?)
                }
                Mode::Continual => run::run_continual(&cfg, sink(cfg.output.as_deref())?).map(|_| ()),
                Mode::Oracle => {
                    let doc = run::run_oracle(&cfg)?;
                    run::write_document(&doc, sink(cfg.output.as_deref())?)
                }
            }
        }
        Command::Experiment(args) => {
            let cfg = args.resolve()?;
            let doc = run::run_experiment(&cfg)?;
            run::write_document(&doc, sink(cfg.output.as_deref())?)
        }
        Command::Generate(args) => {
            let kind: GeneratorKind = args
                .generator
                .parse()
                .map_err(|e: dphh::generate::GeneratorError| HarnessError::Config(e.to_string()))?;
            let binary = match args.format.as_str() {
                "text" => false,
                "binary" => true,
                f => return Err(HarnessError::Config(format!("unknown format {f:?} (text, binary)"))),
            };
            let spec = GeneratorSpec::new(kind, args.length, args.universe, args.seed);
            let stream = spec.generate().map_err(|e| HarnessError::Config(e.to_string()))?;
            let mut out = sink(args.output.as_ref().and_then(|p| p.to_str()))?;
            if binary {
                write_binary(&mut out, &stream)?;
            } else {
                write_text(&mut out, &stream)?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dphh: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

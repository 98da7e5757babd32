use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rotman::evalkit::render_intervals;
use rotman_cli::commands::{self, EvalReport};
use rotman_cli::{CliError, CliResult, RunConfig, CONFIG_ENV};

#[derive(Parser)]
#[command(name = "rotman", version, about = "Head pose estimation from rotation manifolds of landmark tensors")]
struct Cli {
    /// Configuration file (TOML); defaults apply to anything it leaves out.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch prediction.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Artifact directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of evaluation samples also run through the reconstruction estimator.
    #[arg(long, global = true)]
    oracle_sample: Option<usize>,
    /// Decomposition ranks as id,yaw,pitch,roll,feature.
    #[arg(long, global = true, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the pose-consistent synthetic dataset.
    Generate,
    /// Build the training tensor and decompose it.
    Decompose,
    /// Fit cosine curves to the rotation factors.
    Fit,
    /// Train the encoder and the three angle heads.
    Train,
    /// Evaluate on held-out identities (or an external dataset file).
    Eval {
        /// Dataset-format file to evaluate instead of synthetic held-out poses.
        #[arg(long)]
        external: Option<PathBuf>,
    },
    /// Predict one dataset-format record and print the result as JSON.
    Predict {
        /// File holding the record; standard input when absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Measure single-threaded fast-path latency.
    Bench {
        /// Time an untrained model with this many input features instead of the trained bundle.
        #[arg(long)]
        input_dim: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        frames: usize,
    },
    /// Run generate, decompose, fit, train and eval in sequence.
    Run,
    /// Print the effective configuration as TOML.
    Config,
}

fn build_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = &cli.out {
        cfg.paths.out_dir = o.clone();
    }
    if let Some(n) = cli.oracle_sample {
        cfg.eval.oracle_sample = n;
    }
    if let Some(r) = &cli.ranks {
        cfg.decomposition.ranks = Some(r.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_eval(r: &EvalReport) {
    println!("evaluated {} samples ({})", r.fast.samples, r.source);
    print!("{}", r.fast.render("fast path"));
    if r.out_of_range > 0 {
        println!("  {} predictions clamped to the trained range", r.out_of_range);
    }
    print!("{}", render_intervals(&r.intervals));
    if let Some(o) = &r.oracle {
        print!("{}", o.oracle.render(&format!("reconstruction estimator ({} samples)", o.samples)));
        println!(
            "  fast vs oracle MAE: yaw {:.3} pitch {:.3} roll {:.3} mean {:.3}",
            o.agreement.yaw, o.agreement.pitch, o.agreement.roll, o.agreement.mean
        );
        println!("  converged {}/{}, {:.3} s per sample", o.converged, o.samples, o.mean_seconds);
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = build_config(&cli)?;
    match cli.command {
        Command::Generate => {
            let s = commands::cmd_generate(&cfg)?;
            println!(
                "wrote {} records ({} identities x {} cells) to {}",
                s.records,
                s.identities,
                s.cells,
                s.path.display()
            );
        }
        Command::Decompose => {
            let s = commands::cmd_decompose(&cfg)?;
            println!("tensor dims {:?}, ranks {:?}", s.dims, s.ranks);
            for (mode, e) in ["identity", "yaw", "pitch", "roll", "feature"].iter().zip(&s.energy) {
                println!("  {mode:<9} energy kept {e:.6}");
            }
            println!("relative reconstruction error {:.3e}", s.relative_error);
        }
        Command::Fit => {
            for a in commands::cmd_fit(&cfg)? {
                for (j, (r, c)) in a.residual_rms.iter().zip(&a.column_rms).enumerate() {
                    let flag = if a.degenerate[j] { " (constant)" } else { "" };
                    println!("  {} dim {}: residual rms {r:.3e} (column rms {c:.3e}){flag}", a.axis, j + 1);
                }
            }
        }
        Command::Train => {
            let s = commands::cmd_train(&cfg)?;
            for n in std::iter::once(&s.encoder).chain(&s.heads) {
                println!("  {:<10} mse {:.4e} -> {:.4e} on {} samples", n.name, n.initial_loss, n.final_loss, n.samples);
            }
        }
        Command::Eval { external } => {
            let mut cfg = cfg;
            if external.is_some() {
                cfg.eval.external = external;
            }
            print_eval(&commands::cmd_eval(&cfg)?);
        }
        Command::Predict { input } => {
            let text = match input {
                Some(p) => std::fs::read_to_string(&p).map_err(|source| CliError::Io { path: p, source })?,
                None => {
                    let mut s = String::new();
                    std::io::stdin()
                        .read_to_string(&mut s)
                        .map_err(|source| CliError::Io { path: "<stdin>".into(), source })?;
                    s
                }
            };
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
            let rec = commands::cmd_predict(&cfg, line)?;
            println!("{}", serde_json::to_string(&rec).expect("record serializes"));
        }
        Command::Bench { input_dim, frames } => {
            let t = commands::cmd_bench(&cfg, input_dim, frames)?;
            println!(
                "{} frames: mean {:.4} ms, median {:.4} ms, p95 {:.4} ms",
                t.frames,
                t.mean * 1e3,
                t.median * 1e3,
                t.p95 * 1e3
            );
        }
        Command::Run => {
            let s = commands::run_pipeline(&cfg)?;
            println!("{} records, rotation energy {:?}", s.generate.records, &s.decompose.energy[1..4]);
            print_eval(&s.eval);
        }
        Command::Config => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

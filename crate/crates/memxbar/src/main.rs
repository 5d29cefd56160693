use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use memxbar::commands;
use memxbar::plot::plot_csv;
use memxbar::HarnessError;

#[derive(Parser)]
#[command(name = "memxbar", version, about = "Memristive crossbar inference simulator")]
struct Cli {
    /// Experiment or device-sim configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for sweeps and benchmarks (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one device and write trace.csv (t,v,i,w).
    DeviceSim,
    /// Train the configured MLP and write weights.json and history.csv.
    TrainDemo,
    /// Patch and tune a network and export its crossbars.
    Convert,
    /// Run the configured sweep and write sweep.csv.
    Sweep,
    /// Render a sweep CSV as SVG.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// Column for the x axis.
        #[arg(long)]
        x: String,
        /// Column that splits rows into series.
        #[arg(long)]
        series: Option<String>,
        /// Output file; defaults to <out-dir>/plot.svg.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time parallel quantization.
    QuantizeBench {
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        states: usize,
    },
}

fn threads(n: usize) -> usize {
    if n == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        n
    }
}

fn need_config(cli: &Cli) -> Result<&PathBuf, HarnessError> {
    cli.config.as_ref().ok_or_else(|| HarnessError::config("--config is required for this command"))
}

fn run(cli: &Cli) -> Result<ExitCode, HarnessError> {
    match &cli.command {
        Command::DeviceSim => {
            let path = commands::device_sim(cli.config.as_deref(), cli.seed.unwrap_or(0), &cli.out_dir)?;
            println!("wrote {}", path.display());
        }
        Command::TrainDemo => {
            let acc = commands::train_demo(need_config(cli)?, cli.seed, &cli.out_dir)?;
            println!("final test accuracy {acc:.4}; wrote {}", cli.out_dir.join("weights.json").display());
        }
        Command::Convert => {
            let s = commands::convert(need_config(cli)?, cli.seed, &cli.out_dir)?;
            println!("legacy {:.4}, crossbar {:.4}; wrote {}", s.legacy_metric, s.crossbar_metric, cli.out_dir.display());
        }
        Command::Sweep => {
            let r = commands::sweep(need_config(cli)?, cli.seed, &cli.out_dir, threads(cli.threads))?;
            let failed = r.failures();
            println!("{} records, {failed} failed; wrote {}", r.records.len(), cli.out_dir.join("sweep.csv").display());
            if failed > 0 {
                for rec in r.records.iter().filter(|r| r.error.is_some()).take(5) {
                    eprintln!("point {:?} repeat {} fold {}: {}", rec.coords, rec.repeat, rec.fold, rec.error.as_deref().unwrap_or(""));
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Plot { csv, x, series, out } => {
            let out = out.clone().unwrap_or_else(|| cli.out_dir.join("plot.svg"));
            if let Some(dir) = out.parent() {
                std::fs::create_dir_all(dir)?;
            }
            plot_csv(csv, x, series.as_deref(), &out)?;
            println!("wrote {}", out.display());
        }
        Command::QuantizeBench { n, states } => {
            let r = commands::quantize_bench(*n, *states, cli.seed.unwrap_or(0), threads(cli.threads))?;
            println!("quantized {} values on {} threads in {:.4} s", r.n, r.threads, r.seconds);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lpebc::cli;

/// Rate regions and protocol simulation for the two-user layered packet
/// erasure broadcast channel with feedback.
#[derive(Parser)]
#[command(name = "lpebc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one scheme's rate region and write its corner CSV.
    Region {
        /// Channel description document (JSON with K, Q, pmf).
        #[arg(long)]
        channel: PathBuf,
        /// no-csit | full-la | cof-outer | ach1 | ach2-idle | ach2-intra | ach2-inter
        #[arg(long)]
        scheme: String,
        /// Support angles used to polygonize bound regions.
        #[arg(long, default_value_t = 2048)]
        sweep: usize,
        /// Output corner CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a corner table with supporting weight angles and allocations.
    Corners {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long, default_value_t = 2048)]
        sweep: usize,
        /// Also write the table to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a retransmission variant and compare against the analysis.
    Simulate {
        #[arg(long)]
        channel: PathBuf,
        /// idle | intra | inter
        #[arg(long)]
        variant: String,
        /// Allocation document (JSON with a 2 x Q "k" array).
        #[arg(long)]
        alloc: PathBuf,
        /// Total packet budget the allocation is scaled to.
        #[arg(long, default_value_t = 10_000)]
        packets: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Output per-trial CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute all regions, check their inclusion chain and locate the
    /// widest inner/outer gap.
    Compare {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = 2048)]
        sweep: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlay corner CSVs into one SVG figure.
    Plot {
        /// Corner CSV files, one region each.
        #[arg(long, required = true, num_args = 1..)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Region {
            channel,
            scheme,
            sweep,
            out,
        } => cli::cmd_region(&channel, &scheme, sweep, &out),
        Command::Corners {
            channel,
            scheme,
            sweep,
            out,
        } => cli::cmd_corners(&channel, &scheme, sweep, out.as_deref()),
        Command::Simulate {
            channel,
            variant,
            alloc,
            packets,
            seed,
            trials,
            out,
        } => cli::cmd_simulate(&channel, &variant, &alloc, packets, seed, trials, &out),
        Command::Compare { channel, sweep, out } => {
            cli::cmd_compare(&channel, sweep, out.as_deref())
        }
        Command::Plot { csv, out } => cli::cmd_plot(&csv, &out),
    };
    match outcome {
        Ok(report) => {
            print!("{report}");
            if !report.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

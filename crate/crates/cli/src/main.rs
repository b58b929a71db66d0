//! Command-line front end for the sub-band precoding simulator.
//!
//! Subcommands: `run` (BLER sweep CSV), `sbs` (selection sub-band size
//! study), `tpmi` (signaling report), `export-codebook` (text dump of a
//! codebook). Results go to stdout unless `--out` is given; diagnostics go
//! to stderr. Exit codes: 0 on success, 2 on configuration errors, 3 on
//! runtime errors.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sbprec::codebook::{export_text, legacy_codebook, proposed_codebook, type1_8tx_codebook};
use sbprec::sim::{parse_config, render_csv, run_sweep, sbs_study, tpmi_report};
use sbprec::{Error, Result, SimConfig64};

#[derive(Parser)]
#[command(
    name = "sbprec",
    version,
    about = "Link-level simulator for sub-band vs wide-band uplink precoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured SNR sweep and emit a BLER CSV.
    Run(RunArgs),
    /// Re-run the first sub-band codebook scheme at several selection
    /// sub-band sizes and emit one CSV series per size.
    Sbs {
        #[command(flatten)]
        args: RunArgs,
        /// Comma-separated selection sub-band sizes in resource blocks.
        #[arg(long, value_delimiter = ',', required = true)]
        sbs: Vec<usize>,
    },
    /// Report TPMI signaling bits and index coherence across frequency.
    Tpmi(RunArgs),
    /// Print a codebook in the text interchange format.
    ExportCodebook {
        /// Codebook family.
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Transmit antenna count.
        #[arg(long)]
        n_tx: usize,
        /// Phase bit widths for the proposed family, comma separated, one
        /// per port after the first.
        #[arg(long, value_delimiter = ',')]
        bits: Vec<u32>,
        /// First beam-grid dimension for the type1 family.
        #[arg(long, default_value_t = 4)]
        n1: usize,
        /// Second beam-grid dimension for the type1 family.
        #[arg(long, default_value_t = 1)]
        n2: usize,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Path to a `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; any count gives byte-identical output.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Legacy,
    Proposed,
    Type1,
}

fn load_config(args: &RunArgs) -> Result<SimConfig64> {
    let text = fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut cfg = parse_config::<f64>(&text)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn write_output(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args)?;
            let result = run_sweep(&cfg, args.workers)?;
            eprintln!(
                "ran {} trials x {} schemes in {:.1?}",
                result.meta().n_tbs,
                result.series().len(),
                result.meta().wall
            );
            write_output(&render_csv(&result), args.out.as_ref())
        }
        Command::Sbs { args, sbs } => {
            let cfg = load_config(&args)?;
            let study = sbs_study(&cfg, &sbs, args.workers)?;
            for (series, metric) in study
                .sweep()
                .series()
                .iter()
                .zip(study.mean_metrics())
            {
                eprintln!("{} mean_metric {metric:.6}", series.label());
            }
            write_output(&render_csv(study.sweep()), args.out.as_ref())
        }
        Command::Tpmi(args) => {
            let cfg = load_config(&args)?;
            let report = tpmi_report(&cfg, args.workers)?;
            write_output(&report.to_string(), args.out.as_ref())
        }
        Command::ExportCodebook {
            family,
            n_tx,
            bits,
            n1,
            n2,
            out,
        } => {
            // Builder failures here are bad command-line arguments, so
            // surface them as configuration errors (exit code 2).
            let as_config = |e: Error| Error::Config(e.to_string());
            let cb = match family {
                FamilyArg::Legacy => legacy_codebook::<f64>(n_tx).map_err(as_config)?,
                FamilyArg::Proposed => {
                    if bits.is_empty() {
                        return Err(Error::Config(
                            "--bits is required for the proposed family".into(),
                        ));
                    }
                    proposed_codebook::<f64>(n_tx, &bits).map_err(as_config)?
                }
                FamilyArg::Type1 => {
                    if n_tx != 8 {
                        return Err(Error::Config(format!(
                            "the type1 codebook serves 8 ports, got --n-tx {n_tx}"
                        )));
                    }
                    type1_8tx_codebook::<f64>(n1, n2).map_err(as_config)?
                }
            };
            write_output(&export_text(&cb), out.as_ref())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

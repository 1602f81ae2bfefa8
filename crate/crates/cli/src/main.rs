use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use sfa_fisher::amplitude::write_momentum_map;
use sfa_fisher::audit::{audit, AuditRow};
use sfa_fisher::config::{OutputFormat, RunConfig};
use sfa_fisher::pipeline::{emit, momentum_map, run_point, run_sweep};
use sfa_fisher::tables::{self, Selection, COLUMNS, MEASURES, SHORT_PULSE_POINTS};
use sfa_fisher::Error;

#[derive(Parser)]
#[command(name = "sfa-fisher", version, about = "Fisher information of Up from strong-field ionization spectra")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (overrides `threads` in the config).
    #[arg(short = 'j', long, global = true)]
    threads: Option<usize>,
    /// Output file (overrides the config and the environment).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(short, long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Fisher report for a single configuration.
    Point,
    /// One report per value of the configured sweep.
    Sweep,
    /// M and M_g on the momentum grid.
    Map,
    /// Ratio tables for the standard channel selections and short-pulse uncertainties.
    Tables {
        #[arg(long, value_enum)]
        only: Option<TableKind>,
    },
    /// Oracle audits of the configuration.
    Verify,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum TableKind {
    Single,
    Five,
    Pairs,
    Short,
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<Error>() {
            Some(Error::Config(_) | Error::InvalidParameter(_)) => 2,
            Some(Error::Io(_)) => 1,
            Some(_) => 3,
            None => 1,
        };
        Self { code, err }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_path(cli: &Cli, cfg: &RunConfig) -> Option<PathBuf> {
    cli.output.clone().or_else(|| cfg.output_path())
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load(&cli)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    let out = output_path(&cli, &cfg);
    match &cli.command {
        Command::Point => {
            let r = run_point(&cfg).context("point")?;
            emit(&[r], cfg.output.format, out.as_deref()).context("emit")?;
        }
        Command::Sweep => {
            let s = run_sweep(&cfg).context("sweep")?;
            if let Some(fit) = s.fit {
                let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
                eprintln!(
                    "log-log exponent: optimal {}, full {}",
                    show(fit.optimal),
                    show(fit.full)
                );
            }
            emit(&s.reports, cfg.output.format, out.as_deref()).context("emit")?;
        }
        Command::Map => {
            let pairs = momentum_map(&cfg).context("map")?;
            let mut w = sink(out.as_deref())?;
            write_momentum_map(&mut w, &pairs).context("write momentum map")?;
            w.flush().context("flush")?;
        }
        Command::Tables { only } => {
            let mut w = sink(out.as_deref())?;
            print_tables(&mut w, *only, cfg.output.format).context("tables")?;
            w.flush().context("flush")?;
        }
        Command::Verify => {
            let rows = audit(&cfg).context("verify")?;
            let mut w = sink(out.as_deref())?;
            print_audit(&mut w, &rows).context("write audit")?;
            w.flush().context("flush")?;
            if rows.iter().any(|r| !r.pass) {
                return Err(Failure { code: 3, err: anyhow::anyhow!("oracle audit failed") });
            }
        }
    }
    Ok(())
}

fn print_audit(w: &mut dyn Write, rows: &[AuditRow]) -> anyhow::Result<()> {
    writeln!(w, "{:<6} {:<55} {:>12} {:>10}", "status", "check", "value", "tolerance")?;
    for r in rows {
        let status = if r.pass { "PASS" } else { "FAIL" };
        writeln!(w, "{status:<6} {:<55} {:>12.3e} {:>10.1e}", r.name, r.value, r.tolerance)?;
    }
    Ok(())
}

fn print_tables(w: &mut dyn Write, only: Option<TableKind>, format: OutputFormat) -> anyhow::Result<()> {
    let wanted = |k: TableKind| only.map_or(true, |o| o == k);
    let mut ratio = Vec::new();
    for (kind, sel) in [
        (TableKind::Single, Selection::SingleChannel),
        (TableKind::Five, Selection::FiveChannels),
        (TableKind::Pairs, Selection::FiveChannelPairs),
    ] {
        if wanted(kind) {
            log::info!("running {}", sel.label());
            ratio.push(tables::ratio_table(sel)?);
        }
    }
    let short = if wanted(TableKind::Short) {
        SHORT_PULSE_POINTS
            .iter()
            .map(|&(i, n)| tables::short_pulse_row(i, n))
            .collect::<sfa_fisher::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    if format == OutputFormat::Json {
        serde_json::to_writer_pretty(&mut *w, &TablesDoc { ratios: &ratio, short_pulse: &short })?;
        writeln!(w)?;
        return Ok(());
    }
    for t in &ratio {
        writeln!(w, "sqrt(QF/IF), {}", t.selection.label())?;
        write!(w, "{:<12}", "measure")?;
        for c in COLUMNS {
            let head = c.map_or("mono".to_string(), |n| format!("{n} cyc"));
            write!(w, "{head:>12}")?;
        }
        writeln!(w)?;
        for (name, row) in MEASURES.iter().zip(&t.values) {
            write!(w, "{name:<12}")?;
            for v in row {
                write!(w, "{v:>12.4}")?;
            }
            writeln!(w)?;
        }
        writeln!(w)?;
    }
    if !short.is_empty() {
        writeln!(w, "relative uncertainty (%), 3-cycle pulse")?;
        writeln!(
            w,
            "{:>10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>11}",
            "I (W/cm2)", "N", "QF", "IF full", "IF 0.1", "IF yield", "IF spec", "spec coarse"
        )?;
        let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
        for r in &short {
            writeln!(
                w,
                "{:>10.3e} {:>9.1e} {:>9} {:>9} {:>9} {:>9} {:>9} {:>11}",
                r.intensity_wcm2,
                r.n_measurements,
                f(r.optimal),
                f(r.full),
                f(r.coarse),
                f(r.yield_),
                f(r.spec),
                "see note"
            )?;
        }
        writeln!(w, "note: spectral binning with experiment-specific edges needs user-supplied bins")?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct TablesDoc<'a> {
    ratios: &'a [tables::RatioTable],
    short_pulse: &'a [tables::ShortPulseRow],
}

//! `phn-sim`: command-line front end for the phase-noise simulator.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phn_codebook::codebook::{Codebook, CodebookDesign};
use phn_codebook::harness::output::{csv_rows, write_mse_csv};
use phn_codebook::harness::{
    count_ops, plot_series, read_csv, run_ber, run_mse, write_csv, MseConfig, Series, SimConfig,
};
use phn_codebook::phn::sigma_eps_sq;
use phn_codebook::Error;

#[derive(Parser)]
#[command(
    name = "phn-sim",
    version,
    about = "OFDM phase-noise compensation with trajectory codebooks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalised MSE of the best-matching trajectory for a grid of (Q, J).
    MseTable(MseArgs),
    /// Monte-Carlo BER against Eb/N0.
    BerSweep(SweepArgs),
    /// Write a codebook in the text format.
    CodebookExport(ExportArgs),
    /// Closed-form and measured complex operations per OFDM symbol.
    OpsCount(ConfigArgs),
    /// Plot one or more BER CSV files.
    Plot(PlotArgs),
}

#[derive(Args)]
struct MseArgs {
    /// Cells as QxJ, comma separated. Defaults to Q in 2..=6, J in {1, 2, 4, 5, 8}.
    #[arg(long, value_delimiter = ',')]
    cells: Vec<String>,
    #[arg(long, default_value_t = 5000)]
    realizations: usize,
    /// Realisations for cells with K >= --large-k.
    #[arg(long, default_value_t = 500)]
    large_k_realizations: usize,
    #[arg(long, default_value_t = 16384)]
    large_k: usize,
    #[arg(long, default_value_t = 0.01)]
    beta_t: f64,
    #[arg(long, default_value_t = 64)]
    n_fft: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// A `key = value` config file plus overrides written as `key=value`,
/// `--key=value` or `--key value`. Dashes in keys read as underscores.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// CSV destination; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also draw the curve as SVG.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, short, default_value_t = 3)]
    q: usize,
    #[arg(long, short, default_value_t = 4)]
    j: usize,
    #[arg(long, default_value_t = 0.01)]
    beta_t: f64,
    #[arg(long, default_value_t = 64)]
    n_fft: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// SVG destination.
    #[arg(long, short)]
    out: PathBuf,
    /// BER CSV files; each config hash becomes one curve.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::MseTable(a) => mse_table(a),
        Cmd::BerSweep(a) => ber_sweep(a),
        Cmd::CodebookExport(a) => export(a),
        Cmd::OpsCount(a) => ops(a),
        Cmd::Plot(a) => plot(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_cell(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::Config(format!("cell {s:?} is not QxJ"));
    let (q, j) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((q.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?))
}

fn mse_table(a: MseArgs) -> Result<(), Error> {
    let mut cfg = MseConfig {
        n_fft: a.n_fft,
        beta_t: a.beta_t,
        realizations: a.realizations,
        large_k_realizations: a.large_k_realizations,
        large_k: a.large_k,
        seed: a.seed,
        ..MseConfig::default()
    };
    if !a.cells.is_empty() {
        cfg.cells = a.cells.iter().map(|c| parse_cell(c)).collect::<Result<_, _>>()?;
    }
    let rows = run_mse(&cfg)?;
    write_mse_csv(&rows, sink(&a.out)?)
}

/// Turn trailing arguments into (key, value) pairs.
fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let flag = a.strip_prefix("--");
        let body = flag.unwrap_or(a);
        let (k, v) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None if flag.is_some() => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::Config(format!("--{body} needs a value")))?;
                (body.to_string(), v.clone())
            }
            None => return Err(Error::Config(format!("expected key=value, got {a:?}"))),
        };
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

fn load_config(a: &ConfigArgs) -> Result<SimConfig, Error> {
    let mut cfg = match &a.config {
        Some(p) => SimConfig::from_text(&fs::read_to_string(p)?)?,
        None => SimConfig::default(),
    };
    for (k, v) in parse_overrides(&a.overrides)? {
        cfg.set(&k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ber_sweep(a: SweepArgs) -> Result<(), Error> {
    let cfg = load_config(&a.cfg)?;
    if a.dry_run {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let res = run_ber(&cfg)?;
    for p in &res.points {
        eprintln!(
            "{:>6.2} dB  BER {:.3e} (se {:.1e})  {} bits  {} frames",
            p.ebn0_db, p.ber, p.stderr, p.bits, p.frames
        );
    }
    eprintln!("config {}  {:.1}s", res.config_hash, res.wall_time_s);
    write_csv(&csv_rows(&res), sink(&a.out)?)?;
    if let Some(svg) = &a.plot {
        phn_codebook::harness::emit_plot(&res, svg)?;
    }
    Ok(())
}

fn export(a: ExportArgs) -> Result<(), Error> {
    let design = CodebookDesign::new(a.n_fft, a.j, a.q, sigma_eps_sq(a.beta_t, a.n_fft))?;
    let cb = Codebook::build(design)?;
    cb.write_text(sink(&a.out)?)
}

fn ops(a: ConfigArgs) -> Result<(), Error> {
    let cfg = load_config(&a)?;
    let r = count_ops(&cfg)?;
    println!("K = {}, N = {}, feedback iterations = {}", r.k, r.n_fft, r.n_iters);
    println!(
        "formula        muls {:>10}  adds {:>10}",
        r.formula_muls, r.formula_adds
    );
    println!(
        "time domain    muls {:>10}  adds {:>10}",
        r.measured_time_domain.muls, r.measured_time_domain.adds
    );
    println!(
        "circulant      muls {:>10}  adds {:>10}",
        r.measured_circulant.muls, r.measured_circulant.adds
    );
    Ok(())
}

fn plot(a: PlotArgs) -> Result<(), Error> {
    let mut series = Vec::new();
    for path in &a.inputs {
        let rows = read_csv(BufReader::new(fs::File::open(path)?))?;
        let stem = Path::new(path)
            .file_stem()
            .map_or_else(|| "series".into(), |s| s.to_string_lossy().into_owned());
        let mut hashes: Vec<&str> = Vec::new();
        for r in &rows {
            if !hashes.contains(&r.config_hash.as_str()) {
                hashes.push(&r.config_hash);
            }
        }
        for h in &hashes {
            let mine: Vec<_> = rows.iter().filter(|r| r.config_hash == *h).cloned().collect();
            let label = if hashes.len() > 1 {
                format!("{stem} {h}")
            } else {
                stem.clone()
            };
            series.push(Series::from_rows(label, &mine));
        }
    }
    plot_series(&series, &a.out)
}

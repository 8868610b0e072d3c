//! CSV and SVG output.

use std::io::{BufRead, Write};
use std::path::Path;

use plotters::prelude::*;

use crate::error::{config, Error, Result};
use crate::harness::sim::{MseRow, SimResult};

pub const CSV_HEADER: &str = "config_hash,ebn0_db,ber,stderr,bits,frames,seed";

/// One data row of a BER CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub config_hash: String,
    pub ebn0_db: f64,
    pub ber: f64,
    pub stderr: f64,
    pub bits: u64,
    pub frames: u64,
    pub seed: u64,
}

pub fn csv_rows(result: &SimResult) -> Vec<CsvRow> {
    result
        .points
        .iter()
        .map(|p| CsvRow {
            config_hash: result.config_hash.clone(),
            ebn0_db: p.ebn0_db,
            ber: p.ber,
            stderr: p.stderr,
            bits: p.bits,
            frames: p.frames,
            seed: result.config.seed,
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[CsvRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.config_hash, r.ebn0_db, r.ber, r.stderr, r.bits, r.frames, r.seed
        )?;
    }
    Ok(())
}

pub fn emit_csv(result: &SimResult, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(&csv_rows(result), std::io::BufWriter::new(f))
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<CsvRow>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return config("missing or unexpected CSV header");
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Framing(format!("CSV row {} has {} fields", i + 1, f.len())));
        }
        let bad = |what: &str| Error::Config(format!("CSV row {}: bad {what}", i + 1));
        rows.push(CsvRow {
            config_hash: f[0].to_string(),
            ebn0_db: f[1].parse().map_err(|_| bad("ebn0_db"))?,
            ber: f[2].parse().map_err(|_| bad("ber"))?,
            stderr: f[3].parse().map_err(|_| bad("stderr"))?,
            bits: f[4].parse().map_err(|_| bad("bits"))?,
            frames: f[5].parse().map_err(|_| bad("frames"))?,
            seed: f[6].parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(rows)
}

pub fn write_mse_csv<W: Write>(rows: &[MseRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "q,j,k,mse_a,mse_s,mse_s_stderr,mse_s_cv,mse_s_cv_stderr,realizations"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
            r.q, r.j, r.k, r.analytic, r.simulated, r.simulated_se, r.simulated_cv, r.simulated_cv_se, r.realizations
        )?;
    }
    Ok(())
}

/// A labelled BER curve.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn from_rows(label: impl Into<String>, rows: &[CsvRow]) -> Self {
        Self {
            label: label.into(),
            points: rows.iter().map(|r| (r.ebn0_db, r.ber)).collect(),
        }
    }
}

pub fn emit_plot(result: &SimResult, path: &Path) -> Result<()> {
    let label = if result.config.label.is_empty() {
        result.config_hash.clone()
    } else {
        result.config.label.clone()
    };
    plot_series(&[Series::from_rows(label, &csv_rows(result))], path)
}

/// BER against Eb/N0 on a log axis, one line per series. Zero BER points are
/// dropped since they have no place on a log scale.
pub fn plot_series(series: &[Series], path: &Path) -> Result<()> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|p| p.1 > 0.0)
        .collect();
    let (x0, x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x0, x1) = if x0.is_finite() {
        (x0, x1.max(x0 + 1.0))
    } else {
        (0.0, 1.0)
    };
    let (y0, y1) = if y0.is_finite() {
        (
            10f64.powf(y0.log10().floor()),
            10f64.powf(y1.log10().ceil()).max(10.0 * y0),
        )
    } else {
        (1e-6, 1.0)
    };
    let draw = || -> std::result::Result<(), Box<dyn std::error::Error>> {
        let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .margin(20)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, (y0..y1).log_scale())?;
        chart
            .configure_mesh()
            .x_desc("Eb/N0 (dB)")
            .y_desc("BER")
            .y_label_formatter(&|v| format!("{v:.0e}"))
            .draw()?;
        for (i, s) in series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            let data: Vec<(f64, f64)> = s.points.iter().copied().filter(|p| p.1 > 0.0).collect();
            chart
                .draw_series(LineSeries::new(data.clone(), color.stroke_width(2)))?
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
            chart.draw_series(data.into_iter().map(|p| Circle::new(p, 3, color.filled())))?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

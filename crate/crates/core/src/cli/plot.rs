//! Static line charts drawn from a results CSV.
//!
//! Output format follows the file extension (`.svg` or `.png`). Text needs a
//! TrueType font: `CONTROSTER_FONT` if set, otherwise the first common system
//! sans-serif font found.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use plotters::coord::Shift;
use plotters::prelude::*;

use crate::cli::experiment::{aggregate, ResultRow};
use crate::error::{Error, Result};
use crate::io::write_atomic;

const SIZE: (u32, u32) = (800, 520);
const FONT: &str = "sans-serif";

const FONT_CANDIDATES: &[&str] = &[
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/TTF/DejaVuSans.ttf",
    "/usr/share/fonts/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/truetype/liberation/LiberationSans-Regular.ttf",
    "/usr/share/fonts/liberation/LiberationSans-Regular.ttf",
    "/Library/Fonts/Arial.ttf",
    "/System/Library/Fonts/Supplemental/Arial.ttf",
    "C:\\Windows\\Fonts\\arial.ttf",
];

fn ensure_font() -> Result<()> {
    static LOADED: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    LOADED
        .get_or_init(|| {
            let mut candidates: Vec<PathBuf> = Vec::new();
            if let Some(p) = std::env::var_os("CONTROSTER_FONT") {
                candidates.push(p.into());
            }
            candidates.extend(FONT_CANDIDATES.iter().map(PathBuf::from));
            for path in candidates {
                if let Ok(bytes) = std::fs::read(&path) {
                    let bytes: &'static [u8] = Box::leak(bytes.into_boxed_slice());
                    if plotters::style::register_font(FONT, FontStyle::Normal, bytes).is_ok() {
                        return Ok(());
                    }
                }
            }
            Err("no TrueType font found for plot text; set CONTROSTER_FONT to a .ttf file".to_owned())
        })
        .clone()
        .map_err(Error::Config)
}

/// One named polyline of `(x, mean F1)` points.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Mean F1 against strong size, one line per variant, each variant at its
/// largest weak size.
pub fn strong_curve(rows: &[ResultRow]) -> Vec<Series> {
    let mut max_weak: BTreeMap<&str, usize> = BTreeMap::new();
    for r in rows {
        let e = max_weak.entry(&r.variant).or_insert(0);
        *e = (*e).max(r.weak_size);
    }
    let mut series: Vec<Series> = Vec::new();
    for (variant, weak, strong, members) in aggregate(rows) {
        if weak != max_weak[variant.as_str()] || strong == 0 {
            continue;
        }
        let mean = members.iter().map(|r| r.f1).sum::<f64>() / members.len() as f64;
        let name = if weak > 0 { format!("{variant} (weak {weak})") } else { variant.clone() };
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((strong as f64, mean)),
            None => series.push(Series {
                name,
                points: vec![(strong as f64, mean)],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

/// Mean F1 against weak size for the in-domain-weak variant (or the first
/// backbone variant present), one line per strong size; strong size 0 is
/// the weak-only model.
pub fn weak_curve(rows: &[ResultRow]) -> Vec<Series> {
    let variant = rows
        .iter()
        .map(|r| r.variant.as_str())
        .find(|v| *v == "indomain_weak")
        .or_else(|| rows.iter().map(|r| r.variant.as_str()).find(|v| *v != "none"));
    let Some(variant) = variant else { return Vec::new() };
    let mut series: Vec<Series> = Vec::new();
    for (v, weak, strong, members) in aggregate(rows) {
        if v != variant {
            continue;
        }
        let mean = members.iter().map(|r| r.f1).sum::<f64>() / members.len() as f64;
        let name = if strong == 0 { "weak only".to_owned() } else { format!("strong {strong}") };
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((weak as f64, mean)),
            None => series.push(Series {
                name,
                points: vec![(weak as f64, mean)],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

fn draw<DB: DrawingBackend>(area: DrawingArea<DB, Shift>, title: &str, x_label: &str, series: &[Series]) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let err = |e: &dyn std::fmt::Display| Error::validation(format!("plot rendering failed: {e}"));
    area.fill(&WHITE).map_err(|e| err(&e))?;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (lo, hi) = if lo.is_finite() { (lo, hi.max(lo + 1.0)) } else { (0.0, 1.0) };
    let pad = (hi - lo) * 0.05;
    let mut chart = ChartBuilder::on(&area)
        .caption(title, (FONT, 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(52)
        .build_cartesian_2d((lo - pad)..(hi + pad), 0.0f64..100.0)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc("F1")
        .label_style((FONT, 14))
        .draw()
        .map_err(|e| err(&e))?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| err(&e))?
            .label(s.name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart
            .draw_series(s.points.iter().map(|&p| Circle::new(p, 4, color.filled())))
            .map_err(|e| err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .label_font((FONT, 14))
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(|e| err(&e))?;
    area.present().map_err(|e| err(&e))?;
    Ok(())
}

/// Renders a chart to `path` (SVG or PNG by extension) without leaving a
/// partial file behind on failure.
pub fn render_chart(path: &Path, title: &str, x_label: &str, series: &[Series]) -> Result<()> {
    ensure_font()?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("svg") => {
            let mut svg = String::new();
            draw(SVGBackend::with_string(&mut svg, SIZE).into_drawing_area(), title, x_label, series)?;
            write_atomic(path, svg.as_bytes())
        }
        Some("png") => {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("plot");
            let tmp = path.with_file_name(format!(".{name}.tmp-{}.png", std::process::id()));
            let drawn = draw(BitMapBackend::new(&tmp, SIZE).into_drawing_area(), title, x_label, series);
            if let Err(e) = drawn {
                let _ = std::fs::remove_file(&tmp);
                return Err(e);
            }
            std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
        }
        _ => Err(Error::validation(format!(
            "unsupported plot format for {} (use .svg or .png)",
            path.display()
        ))),
    }
}

/// Writes the strong-size and weak-size charts for a set of results.
pub fn plot_results(rows: &[ResultRow], strong_path: &Path, weak_path: &Path) -> Result<()> {
    render_chart(strong_path, "F1 by strong training size", "strong sentences", &strong_curve(rows))?;
    render_chart(weak_path, "F1 by weak training size", "weak sentences", &weak_curve(rows))
}

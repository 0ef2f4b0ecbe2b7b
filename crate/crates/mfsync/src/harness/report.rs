//! Sweep output: CSV emission/parsing and static SVG heatmaps.
//!
//! CSV schema (UTF-8, header row, '.' decimal separator):
//! `algorithm,lambda,k_max,trial,seed,correlation,wall_ms,summary,error`.
//! One row per trial, then one summary row per cell with `summary = 1`,
//! `trial = -1`, and the cell median in the `correlation` column. Failed
//! trials carry `NaN` correlations and an error string. Floats print in
//! shortest round-trip form, so identical sweeps produce byte-identical
//! files; wall times are zeroed unless timing recording is enabled, since
//! measured times would break reproducibility.

use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::sweep::{CellResult, SweepResult, TrialRecord};

pub const CSV_HEADER: &str = "algorithm,lambda,k_max,trial,seed,correlation,wall_ms,summary,error";

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

/// Write a sweep as CSV. `record_timing = false` zeroes the wall_ms column
/// to keep the file byte-reproducible.
pub fn emit_csv(result: &SweepResult, path: &Path, record_timing: bool) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for cell in &result.cells {
        for t in &cell.trials {
            let wall = if record_timing { t.wall_ms } else { 0.0 };
            writeln!(
                out,
                "{},{},{},{},{},{},{},0,{}",
                cell.algorithm,
                fmt_f64(cell.lambda),
                cell.k_max,
                t.trial,
                t.seed,
                fmt_f64(t.correlation),
                fmt_f64(wall),
                t.error.as_deref().unwrap_or("").replace(',', ";"),
            )?;
        }
        let wall = if record_timing {
            cell.median_wall_ms()
        } else {
            0.0
        };
        writeln!(
            out,
            "{},{},{},-1,{},{},{},1,",
            cell.algorithm,
            fmt_f64(cell.lambda),
            cell.k_max,
            result
                .cells
                .first()
                .map(|c| c.trials.first().map(|t| t.seed).unwrap_or(0))
                .unwrap_or(0),
            fmt_f64(cell.median()),
            fmt_f64(wall),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a CSV written by [`emit_csv`] back into trial cells (summary rows
/// are skipped; medians are recomputable from the trial rows).
pub fn parse_csv(path: &Path) -> Result<SweepResult> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut cells: Vec<CellResult> = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(9, ',').collect();
        if fields.len() != 9 {
            return Err(Error::Config(format!("CSV line {} malformed", ln + 2)));
        }
        if fields[7] == "1" {
            continue;
        }
        let bad = |e: String| Error::Config(format!("CSV line {}: {e}", ln + 2));
        let lambda: f64 = fields[1].parse().map_err(|e| bad(format!("{e}")))?;
        let k_max: usize = fields[2].parse().map_err(|e| bad(format!("{e}")))?;
        let trial: i64 = fields[3].parse().map_err(|e| bad(format!("{e}")))?;
        let seed: u64 = fields[4].parse().map_err(|e| bad(format!("{e}")))?;
        let correlation: f64 = fields[5].parse().map_err(|e| bad(format!("{e}")))?;
        let wall_ms: f64 = fields[6].parse().map_err(|e| bad(format!("{e}")))?;
        let algorithm = leak_name(fields[0]);
        let record = TrialRecord {
            trial: trial as usize,
            seed,
            correlation,
            wall_ms,
            error: if fields[8].is_empty() {
                None
            } else {
                Some(fields[8].to_string())
            },
        };
        match cells
            .iter_mut()
            .find(|c| c.algorithm == algorithm && c.lambda == lambda && c.k_max == k_max)
        {
            Some(cell) => cell.trials.push(record),
            None => cells.push(CellResult {
                algorithm,
                lambda,
                k_max,
                trials: vec![record],
            }),
        }
    }
    Ok(SweepResult { cells })
}

/// Algorithm names form a tiny closed set; interning keeps `CellResult`
/// uniform between freshly run and re-parsed sweeps.
fn leak_name(name: &str) -> &'static str {
    const KNOWN: &[&str] = &[
        "spectral",
        "gpm",
        "ppe-spc",
        "ppe-spc-repeated",
        "mfgpm",
        "group-ppe",
        "group-refine",
    ];
    KNOWN
        .iter()
        .find(|k| **k == name)
        .copied()
        .unwrap_or("unknown")
}

/// Five-stop color ramp on [0, 1] (dark violet to yellow); NaN cells render
/// gray. Documented fixed endpoints: 0 maps to the first stop, 1 to the last.
fn ramp_color(v: f64) -> String {
    if !v.is_finite() {
        return "#cccccc".to_string();
    }
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.00, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.50, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.00, [253.0, 231.0, 37.0]),
    ];
    let v = v.clamp(0.0, 1.0);
    let mut rgb = STOPS[4].1;
    for w in STOPS.windows(2) {
        let (a, ca) = w[0];
        let (b, cb) = w[1];
        if v >= a && v <= b {
            let t = if b > a { (v - a) / (b - a) } else { 0.0 };
            rgb = [
                ca[0] + t * (cb[0] - ca[0]),
                ca[1] + t * (cb[1] - ca[1]),
                ca[2] + t * (cb[2] - ca[2]),
            ];
            break;
        }
    }
    format!(
        "#{:02x}{:02x}{:02x}",
        rgb[0].round() as u8,
        rgb[1].round() as u8,
        rgb[2].round() as u8
    )
}

/// Render one algorithm's median-correlation heatmap as a self-contained
/// SVG: lambda on the x axis, k_max on the y axis (log-ordered rows, larger
/// k_max on top), fixed [0, 1] color scale with a legend bar.
pub fn emit_heatmap(result: &SweepResult, algorithm: &str, path: &Path) -> Result<()> {
    let cells: Vec<&CellResult> = result
        .cells
        .iter()
        .filter(|c| c.algorithm == algorithm)
        .collect();
    if cells.is_empty() {
        return Err(Error::InvalidParameter {
            name: "algorithm",
            message: format!("no cells for algorithm {algorithm:?}"),
        });
    }
    let mut lambdas: Vec<f64> = Vec::new();
    let mut ks: Vec<usize> = Vec::new();
    for c in &cells {
        if !lambdas.contains(&c.lambda) {
            lambdas.push(c.lambda);
        }
        if !ks.contains(&c.k_max) {
            ks.push(c.k_max);
        }
    }
    lambdas.sort_by(f64::total_cmp);
    ks.sort_unstable();

    let cell_w = 56.0;
    let cell_h = 34.0;
    let left = 86.0;
    let top = 44.0;
    let grid_w = cell_w * lambdas.len() as f64;
    let grid_h = cell_h * ks.len() as f64;
    let legend_w = 18.0;
    let width = left + grid_w + 96.0;
    let height = top + grid_h + 58.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">{} median correlation</text>\n",
        left + grid_w / 2.0,
        algorithm
    ));

    for (yi, &k) in ks.iter().enumerate() {
        // Log-scale axis: rows ordered by k_max, largest on top.
        let y = top + grid_h - (yi + 1) as f64 * cell_h;
        for (xi, &lambda) in lambdas.iter().enumerate() {
            let x = left + xi as f64 * cell_w;
            let median = cells
                .iter()
                .find(|c| c.lambda == lambda && c.k_max == k)
                .map(|c| c.median())
                .unwrap_or(f64::NAN);
            svg.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell_w:.1}\" height=\"{cell_h:.1}\" \
                 fill=\"{}\" stroke=\"white\" stroke-width=\"1\"/>\n",
                ramp_color(median)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{k}</text>\n",
            left - 8.0,
            y + cell_h / 2.0 + 4.0
        ));
    }
    for (xi, &lambda) in lambdas.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{lambda}</text>\n",
            left + (xi as f64 + 0.5) * cell_w,
            top + grid_h + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">lambda</text>\n",
        left + grid_w / 2.0,
        top + grid_h + 40.0
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">k_max (log scale)</text>\n",
        top + grid_h / 2.0,
        top + grid_h / 2.0
    ));

    // Legend: 0 at the bottom, 1 at the top.
    let lx = left + grid_w + 28.0;
    let steps = 32;
    for s in 0..steps {
        let v = (s as f64 + 0.5) / steps as f64;
        let y = top + grid_h * (1.0 - (s as f64 + 1.0) / steps as f64);
        svg.push_str(&format!(
            "<rect x=\"{lx:.1}\" y=\"{y:.2}\" width=\"{legend_w:.1}\" height=\"{:.2}\" \
             fill=\"{}\"/>\n",
            grid_h / steps as f64 + 0.5,
            ramp_color(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">1.0</text>\n",
        lx + legend_w + 6.0,
        top + 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">0.0</text>\n",
        lx + legend_w + 6.0,
        top + grid_h
    ));
    svg.push_str("</svg>\n");

    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_result() -> SweepResult {
        let mk = |algorithm: &'static str, lambda: f64, k_max: usize, corr: f64| CellResult {
            algorithm,
            lambda,
            k_max,
            trials: (0..3)
                .map(|t| TrialRecord {
                    trial: t,
                    seed: 100 + t as u64,
                    correlation: corr + 0.01 * t as f64,
                    wall_ms: 1.5,
                    error: None,
                })
                .collect(),
        };
        SweepResult {
            cells: vec![
                mk("spectral", 0.7, 1, 0.2),
                mk("spectral", 1.3, 1, 0.8),
                mk("spectral", 0.7, 16, 0.5),
                mk("spectral", 1.3, 16, 0.9),
            ],
        }
    }

    #[test]
    fn csv_round_trip_preserves_medians() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let result = demo_result();
        emit_csv(&result, &path, false).unwrap();
        let back = parse_csv(&path).unwrap();
        assert_eq!(back.cells.len(), result.cells.len());
        for (a, b) in result.cells.iter().zip(&back.cells) {
            assert_eq!(a.median().to_bits(), b.median().to_bits());
            assert_eq!(a.trials.len(), b.trials.len());
        }
    }

    #[test]
    fn csv_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        emit_csv(&demo_result(), &p1, false).unwrap();
        emit_csv(&demo_result(), &p2, false).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn empty_result_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&SweepResult { cells: vec![] }, &path, false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim(), CSV_HEADER);
    }

    #[test]
    fn ramp_endpoints_are_documented_colors() {
        assert_eq!(ramp_color(0.0), "#440154");
        assert_eq!(ramp_color(1.0), "#fde725");
        assert_eq!(ramp_color(f64::NAN), "#cccccc");
    }

    #[test]
    fn heatmap_contains_one_rect_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.svg");
        emit_heatmap(&demo_result(), "spectral", &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cell_rects = text
            .lines()
            .filter(|l| l.contains("<rect") && l.contains("stroke=\"white\""))
            .count();
        assert_eq!(cell_rects, 4);
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn monotone_data_yields_monotone_colors() {
        // Increasing medians map to increasing green channel on this ramp's
        // lower half.
        let lo = ramp_color(0.1);
        let hi = ramp_color(0.4);
        let g = |s: &str| u8::from_str_radix(&s[3..5], 16).unwrap();
        assert!(g(&hi) > g(&lo));
    }
}

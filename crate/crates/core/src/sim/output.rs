use std::path::Path;

use super::{AggregateResult, CellSummary, SimError};

pub const CSV_HEADER: &str =
    "method,l_max,mean_rate_bits,stderr_bits,mean_selected_l,mean_power,trials";

/// Renders `x` with 9 significant digits: positional notation for
/// moderate magnitudes, scientific otherwise.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-5..=15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

pub fn render_csv(result: &AggregateResult) -> String {
    let mut cells: Vec<&CellSummary> = result.cells.iter().collect();
    cells.sort_by(|a, b| {
        a.method
            .name()
            .cmp(b.method.name())
            .then(a.l_max.cmp(&b.l_max))
    });
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.method.name(),
            c.l_max,
            format_sig9(c.mean_rate),
            format_sig9(c.stderr),
            format_sig9(c.mean_selected_l),
            format_sig9(c.mean_power),
            c.trials
        ));
    }
    out
}

pub fn write_csv(result: &AggregateResult, path: &Path) -> Result<(), SimError> {
    std::fs::write(path, render_csv(result)).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a file produced by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<AggregateResult, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err("missing or unexpected header".into());
    }
    let mut cells = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!("row {}: expected 7 fields", i + 1));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| format!("row {}: {e}", i + 1))
        };
        cells.push(CellSummary {
            method: f[0].parse()?,
            l_max: int(f[1])?,
            mean_rate: num(f[2])?,
            stderr: num(f[3])?,
            mean_selected_l: num(f[4])?,
            mean_power: num(f[5])?,
            trials: int(f[6])?,
        });
    }
    Ok(AggregateResult { cells })
}

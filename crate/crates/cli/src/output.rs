//! Writers for `result.json`, `table.csv` and `grid.csv`.

use std::io::Write;

use simulband_core::regions::{BandKind, IntervalSet};

use crate::analysis::{GridDoc, RegionsDoc, ResultDoc};

/// One decimal, without a negative zero.
pub fn round1(x: f64) -> String {
    let s = format!("{x:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

fn interval(lo: f64, hi: f64) -> String {
    format!("[{}, {}]", round1(lo), round1(hi))
}

/// Pretty JSON with a trailing newline. Floats use the shortest text that
/// parses back to the same value.
pub fn to_json(doc: &ResultDoc) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

fn band_label(kind: BandKind) -> &'static str {
    match kind {
        BandKind::Pointwise => "Intervals",
        BandKind::Bonferroni => "Band -- Bonferroni",
        BandKind::Supt => "Band -- sup-t",
    }
}

/// Estimate, the three regions and their widths, one column per parameter.
pub fn write_table<W: Write>(out: W, regions: &RegionsDoc) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string()];
    header.extend(regions.parameters.iter().cloned());
    w.write_record(&header)?;

    let est: &IntervalSet = &regions.pointwise;
    let mut row = vec!["Estimate".to_string()];
    row.extend(est.estimate.iter().map(|v| round1(*v)));
    w.write_record(&row)?;
    for kind in BandKind::ALL {
        let b = regions.band(kind);
        let mut row = vec![band_label(kind).to_string()];
        row.extend(b.lower.iter().zip(&b.upper).map(|(l, u)| interval(*l, *u)));
        w.write_record(&row)?;
    }
    for kind in BandKind::ALL {
        let b = regions.band(kind);
        let name = match kind {
            BandKind::Pointwise => "Intervals",
            BandKind::Bonferroni => "Bonferroni",
            BandKind::Supt => "sup-t",
        };
        let mut row = vec![format!("Width -- {name}")];
        row.extend(b.widths.iter().map(|v| round1(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-grid-point estimate and band limits at full precision.
pub fn write_grid<W: Write>(out: W, grid: &GridDoc) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        grid.modifier.as_str(),
        "estimate",
        "pointwise_lower",
        "pointwise_upper",
        "supt_lower",
        "supt_upper",
        "bonferroni_lower",
        "bonferroni_upper",
    ])?;
    let (p, s, b) = (&grid.pointwise, &grid.supt, &grid.bonferroni);
    for i in 0..grid.grid.len() {
        let vals = [grid.grid[i], grid.estimate[i], p.lower[i], p.upper[i], s.lower[i], s.upper[i], b.lower[i], b.upper[i]];
        w.write_record(vals.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Coverage rates to four decimals; one decimal would hide the differences.
pub fn write_simulation_table<W: Write>(out: W, doc: &ResultDoc) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(r) = &doc.simulation else { return Ok(()) };
    w.write_record(["method", "simultaneous_coverage", "mean_critical_value"])?;
    let c = &r.simultaneous;
    let mc = &r.mean_critical;
    let rows = [
        ("pointwise", c.pointwise, Some(mc.pointwise)),
        ("bonferroni", c.bonferroni, Some(mc.bonferroni)),
        ("supt", c.supt, Some(mc.supt)),
        ("ellipsoid", c.ellipsoid, None),
    ];
    for (name, cov, crit) in rows {
        w.write_record([name.to_string(), format!("{cov:.4}"), crit.map_or(String::new(), |v| format!("{v:.4}"))])?;
    }
    w.flush()?;
    Ok(())
}

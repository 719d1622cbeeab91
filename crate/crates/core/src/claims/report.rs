use super::{ClaimReport, ScanReport};
use crate::error::Result;
use crate::numeric::format_float;

pub const CSV_HEADER: [&str; 8] = ["claim", "family", "n", "lhs", "rhs", "ratio", "pass_mode", "verdict"];

fn write_report<W: std::io::Write>(w: &mut csv::Writer<W>, r: &ClaimReport) -> Result<()> {
    let ratio = r.ratio.as_ref().map(ToString::to_string).unwrap_or_default();
    w.write_record([
        r.claim.name(),
        &r.family,
        &r.n.to_string(),
        &r.lhs.to_string(),
        &r.rhs.to_string(),
        &ratio,
        &r.pass_mode.to_string(),
        &r.verdict.to_string(),
    ])?;
    Ok(())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per report under [`CSV_HEADER`].
pub fn reports_to_csv(reports: &[ClaimReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        write_report(&mut w, r)?;
    }
    finish(w)
}

/// One row per size, then a `slope` row whose `lhs` is the fitted slope
/// and whose verdict is the scan verdict. Failed sizes carry the error in
/// the `lhs` column and verdict `error`.
pub fn scan_to_csv(scan: &ScanReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let mode = scan.pass_mode.to_string();
    for row in &scan.rows {
        match (&row.report, &row.error) {
            (Some(r), _) => write_report(&mut w, r)?,
            (None, err) => w.write_record([
                scan.claim.name(),
                &scan.family,
                &row.n.to_string(),
                err.as_deref().unwrap_or(""),
                "",
                "",
                &mode,
                "error",
            ])?,
        }
    }
    let slope = scan.slope.map(format_float).unwrap_or_default();
    w.write_record([
        scan.claim.name(),
        &scan.family,
        "slope",
        &slope,
        "",
        "",
        &mode,
        &scan.verdict.to_string(),
    ])?;
    finish(w)
}

pub fn reports_to_json(reports: &[ClaimReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

pub fn scan_to_json(scan: &ScanReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(scan)?)
}

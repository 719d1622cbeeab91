use serde::Serialize;

use super::{check, ClaimId, ClaimInputs, ClaimReport, PassMode, Verdict};
use crate::convexfn::ConvexFn;
use crate::energy::Exponent;
use crate::error::{Error, Result};
use crate::generators::FamilySpec;
use crate::Exec;

/// A claim evaluated on `family` at each size; `B` comes from `family_b`
/// when given and equals `A` otherwise.
#[derive(Debug, Clone)]
pub struct ScanSpec {
    pub claim: ClaimId,
    pub family: FamilySpec,
    pub family_b: Option<FamilySpec>,
    pub f: Option<ConvexFn>,
    pub g: Option<ConvexFn>,
    pub k: Option<Exponent>,
    pub sizes: Vec<usize>,
}

impl ScanSpec {
    pub fn new(claim: ClaimId, family: FamilySpec, sizes: Vec<usize>) -> Self {
        ScanSpec { claim, family, family_b: None, f: None, g: None, k: None, sizes }
    }

    fn inputs(&self, n: usize) -> Result<ClaimInputs> {
        let a = self.family.generate(n)?;
        let mut inputs = ClaimInputs::new(a).label(self.family.to_string());
        if let Some(fb) = &self.family_b {
            inputs.b = Some(fb.generate(n)?);
        }
        inputs.f = self.f.clone();
        inputs.g = self.g.clone();
        inputs.k = self.k;
        Ok(inputs)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ClaimReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub claim: ClaimId,
    pub family: String,
    pub pass_mode: PassMode,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of the log-margin against `ln n`.
    pub slope: Option<f64>,
    pub verdict: Verdict,
}

impl ScanReport {
    pub fn exact_failures(&self) -> Vec<String> {
        self.rows
            .iter()
            .flat_map(|r| r.report.iter().flat_map(ClaimReport::exact_failures))
            .collect()
    }
}

/// Slope of the least-squares line through `(x, y)`; `None` for fewer than
/// two distinct `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the scan. Rows are computed in parallel under `exec` and kept in
/// size order; a failing size becomes an error row.
///
/// Trend claims pass when every row succeeds and the slope is nonnegative;
/// exact claims pass when every row passes.
pub fn scan(spec: &ScanSpec, exec: Exec) -> Result<ScanReport> {
    if spec.sizes.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a scan needs at least 3 sizes, got {}",
            spec.sizes.len()
        )));
    }
    if spec.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("scan sizes must be strictly increasing".into()));
    }
    let rows: Vec<ScanRow> = exec.map(&spec.sizes, |&n| {
        match spec.inputs(n).and_then(|inputs| check(spec.claim, &inputs)) {
            Ok(report) => ScanRow { n, report: Some(report), error: None },
            Err(e) => ScanRow { n, report: None, error: Some(e.to_string()) },
        }
    });
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.report.as_ref().map(|rep| ((r.n as f64).ln(), rep.log_margin)))
        .collect();
    let slope = least_squares_slope(&points);
    let all_ok = rows.iter().all(|r| r.report.is_some());
    let pass_mode = spec.claim.pass_mode();
    let pass = match pass_mode {
        PassMode::Exact => {
            all_ok
                && rows
                    .iter()
                    .all(|r| r.report.as_ref().is_some_and(|rep| rep.verdict == Verdict::Pass))
        }
        PassMode::Trend => all_ok && slope.is_some_and(|s| s >= 0.0),
    };
    Ok(ScanReport {
        claim: spec.claim,
        family: spec.family.to_string(),
        pass_mode,
        rows,
        slope,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

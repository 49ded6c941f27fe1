use serde_json::json;

use super::sweep::FluxSweep;
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::probe::{json_f64, ProbeReport};
use crate::spectral::hausdorff_distance;

/// Fitted exponent of `d_H(σ(K_b), σ(K_{b0})) ~ |b - b0|^p`.
///
/// Report-only: the consistency check `p >= 0.35` with the square-root law
/// is recorded but never fails a run.
pub fn hausdorff_scaling_probe(sweep: &FluxSweep, b0: f64) -> Result<ProbeReport> {
    let i0 = sweep
        .index_of(b0)
        .ok_or_else(|| Error::InvalidParameter(format!("b0 = {b0} is not on the sweep grid")))?;
    if sweep.len() < 6 {
        return Err(Error::InvalidParameter(
            "Hausdorff scaling needs at least 5 samples besides b0".into(),
        ));
    }
    let mut db = Vec::new();
    let mut dh = Vec::new();
    for (i, &b) in sweep.b_values.iter().enumerate() {
        if i != i0 {
            db.push((b - b0).abs());
            dh.push(hausdorff_distance(&sweep.rows[i], &sweep.rows[i0])?);
        }
    }
    let mut report = ProbeReport::new("hausdorff_scaling")
        .input("b0", b0)
        .input("samples", db.len())
        .report_only();
    report.measure("db", json!(db));
    report.measure("hausdorff", json!(dh));
    let (xs, ys): (Vec<f64>, Vec<f64>) = db
        .iter()
        .zip(&dh)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&b, &d)| (b.ln(), d.ln()))
        .unzip();
    match linear_fit(&xs, &ys) {
        Some((exponent, _)) if xs.len() >= 2 => {
            report.measure("degenerate", false);
            report.check_ge("exponent", exponent, 0.5 - 0.15);
        }
        _ => {
            report.measure("degenerate", true);
            report.measure("exponent", json_f64(f64::NAN));
        }
    }
    Ok(report)
}

use serde::Serialize;
use serde_json::json;

use super::sweep::FluxSweep;
use crate::error::{Error, Result};
use crate::fit::median;
use crate::probe::ProbeReport;
use crate::spectral::Gap;

/// Default ratio between the largest and the median difference quotient
/// tolerated by a `Bounded` verdict.
pub const DEFAULT_BOUND_FACTOR: f64 = 3.0;

/// Minimum number of samples with `b ≠ b0`.
const MIN_SAMPLES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeSelector {
    EPlus,
    EMinus,
    /// Lower edge of the `i`-th gap (counted from below) at `b0`.
    GapLower(usize),
    /// Upper edge of the `i`-th gap at `b0`.
    GapUpper(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Bounded,
    Diverging,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzSample {
    pub b: f64,
    pub edge: f64,
    pub quotient: f64,
}

/// Edge values along a sweep. `None` where a tracked gap has closed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeSeries {
    pub b_values: Vec<f64>,
    pub values: Vec<Option<f64>>,
    /// Flux values where the tracked gap had no overlapping successor.
    pub closed_at: Vec<f64>,
    /// Flux values where several gaps overlapped the tracked one; the one
    /// with the largest overlap was followed.
    pub ambiguous_at: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub selector: EdgeSelector,
    pub b0: f64,
    pub edge_b0: f64,
    pub bound_factor: f64,
    pub samples: Vec<LipschitzSample>,
    pub max_quotient: f64,
    pub median_quotient: f64,
    pub verdict: Verdict,
    pub closed_at: Vec<f64>,
    pub ambiguous_at: Vec<f64>,
}

impl LipschitzReport {
    pub fn to_probe(&self, name: &str) -> ProbeReport {
        let mut r = ProbeReport::new(name)
            .input("selector", format!("{:?}", self.selector))
            .input("b0", self.b0)
            .input("bound_factor", self.bound_factor);
        r.measure("edge_b0", self.edge_b0);
        r.measure(
            "b",
            json!(self.samples.iter().map(|s| s.b).collect::<Vec<_>>()),
        );
        r.measure(
            "edge",
            json!(self.samples.iter().map(|s| s.edge).collect::<Vec<_>>()),
        );
        r.measure(
            "quotient",
            json!(self.samples.iter().map(|s| s.quotient).collect::<Vec<_>>()),
        );
        r.measure("median_quotient", self.median_quotient);
        r.measure("verdict", format!("{:?}", self.verdict));
        if !self.ambiguous_at.is_empty() {
            r.measure("ambiguous_at", json!(self.ambiguous_at));
        }
        r.check_le(
            "max_quotient",
            self.max_quotient,
            self.bound_factor * self.median_quotient,
        );
        if matches!(
            self.selector,
            EdgeSelector::GapLower(_) | EdgeSelector::GapUpper(_)
        ) {
            r.measure("closed_at", json!(self.closed_at));
            r.check_that("gap_persists", self.closed_at.is_empty());
        }
        r
    }
}

fn overlap(a: &Gap, b: &Gap) -> f64 {
    (a.upper.min(b.upper) - a.lower.max(b.lower)).max(0.0)
}

/// Follows the selected edge outward from `b0` in both directions.
pub fn edge_series(sweep: &FluxSweep, selector: EdgeSelector, b0: f64) -> Result<EdgeSeries> {
    let i0 = sweep
        .index_of(b0)
        .ok_or_else(|| Error::InvalidParameter(format!("b0 = {b0} is not on the sweep grid")))?;
    let n = sweep.len();
    let mut values = vec![None; n];
    let mut closed_at = Vec::new();
    let mut ambiguous_at = Vec::new();
    let (gap_index, upper) = match selector {
        EdgeSelector::EPlus => {
            for (v, row) in values.iter_mut().zip(&sweep.rows) {
                *v = Some(row.e_plus);
            }
            return Ok(EdgeSeries {
                b_values: sweep.b_values.clone(),
                values,
                closed_at,
                ambiguous_at,
            });
        }
        EdgeSelector::EMinus => {
            for (v, row) in values.iter_mut().zip(&sweep.rows) {
                *v = Some(row.e_minus);
            }
            return Ok(EdgeSeries {
                b_values: sweep.b_values.clone(),
                values,
                closed_at,
                ambiguous_at,
            });
        }
        EdgeSelector::GapLower(i) => (i, false),
        EdgeSelector::GapUpper(i) => (i, true),
    };
    let start = *sweep.rows[i0].gaps.get(gap_index).ok_or_else(|| {
        Error::NoGap(format!(
            "gap #{gap_index} absent at b0 = {b0} ({} gaps)",
            sweep.rows[i0].gaps.len()
        ))
    })?;
    let pick = |g: &Gap| if upper { g.upper } else { g.lower };
    values[i0] = Some(pick(&start));
    let directions: [Box<dyn Iterator<Item = usize>>; 2] =
        [Box::new(i0 + 1..n), Box::new((0..i0).rev())];
    for dir in directions {
        let mut tracked = start;
        for j in dir {
            let candidates: Vec<&Gap> = sweep.rows[j]
                .gaps
                .iter()
                .filter(|g| g.overlaps(&tracked))
                .collect();
            if candidates.is_empty() {
                closed_at.push(sweep.b_values[j]);
                break;
            }
            if candidates.len() > 1 {
                ambiguous_at.push(sweep.b_values[j]);
            }
            let next = **candidates
                .iter()
                .max_by(|a, b| overlap(a, &tracked).total_cmp(&overlap(b, &tracked)))
                .expect("nonempty");
            values[j] = Some(pick(&next));
            tracked = next;
        }
    }
    closed_at.sort_by(f64::total_cmp);
    ambiguous_at.sort_by(f64::total_cmp);
    Ok(EdgeSeries {
        b_values: sweep.b_values.clone(),
        values,
        closed_at,
        ambiguous_at,
    })
}

/// Difference quotients `|edge(b) - edge(b0)| / |b - b0|` of the selected
/// edge and the verdict `Bounded` iff `max <= bound_factor · median`.
pub fn lipschitz_probe(
    sweep: &FluxSweep,
    selector: EdgeSelector,
    b0: f64,
    bound_factor: f64,
) -> Result<LipschitzReport> {
    let series = edge_series(sweep, selector, b0)?;
    let i0 = sweep.index_of(b0).expect("checked by edge_series");
    let edge_b0 = series.values[i0].expect("edge defined at b0");
    let points: Vec<(f64, f64)> = series
        .b_values
        .iter()
        .zip(&series.values)
        .enumerate()
        .filter(|(i, _)| *i != i0)
        .filter_map(|(_, (&b, v))| v.map(|e| (b, e)))
        .collect();
    if sweep.len() - 1 < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz probe needs at least {MIN_SAMPLES} samples with b ≠ b0"
        )));
    }
    let mut report = lipschitz_from_points(selector, b0, edge_b0, &points, bound_factor)?;
    report.closed_at = series.closed_at;
    report.ambiguous_at = series.ambiguous_at;
    if !report.closed_at.is_empty() && report.samples.len() < MIN_SAMPLES {
        report.verdict = Verdict::Diverging;
    }
    Ok(report)
}

/// Verdict for explicit `(b, edge(b))` samples around `(b0, edge_b0)`.
pub fn lipschitz_from_points(
    selector: EdgeSelector,
    b0: f64,
    edge_b0: f64,
    points: &[(f64, f64)],
    bound_factor: f64,
) -> Result<LipschitzReport> {
    if !(bound_factor >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bound factor must be >= 1, got {bound_factor}"
        )));
    }
    let samples: Vec<LipschitzSample> = points
        .iter()
        .filter(|&&(b, _)| b != b0)
        .map(|&(b, edge)| LipschitzSample {
            b,
            edge,
            quotient: (edge - edge_b0).abs() / (b - b0).abs(),
        })
        .collect();
    let quotients: Vec<f64> = samples.iter().map(|s| s.quotient).collect();
    let max_quotient = quotients.iter().copied().fold(0.0, f64::max);
    let median_quotient = if quotients.is_empty() {
        f64::NAN
    } else {
        median(&quotients)
    };
    let verdict = if !quotients.is_empty() && max_quotient <= bound_factor * median_quotient {
        Verdict::Bounded
    } else {
        Verdict::Diverging
    };
    Ok(LipschitzReport {
        selector,
        b0,
        edge_b0,
        bound_factor,
        samples,
        max_quotient,
        median_quotient,
        verdict,
        closed_at: Vec::new(),
        ambiguous_at: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sweep::SweepModel;
    use crate::magnetics::PhaseSource;
    use crate::spectral::SpectralSummary;

    fn synthetic(b: &[f64], f: impl Fn(f64) -> Vec<f64>) -> FluxSweep {
        let rows = b
            .iter()
            .map(|&b| SpectralSummary::from_eigenvalues(f(b), Some(0.5)).unwrap())
            .collect();
        FluxSweep::from_rows(
            SweepModel::new("synthetic", "none", PhaseSource::Standard),
            b.to_vec(),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn linear_edge_is_bounded() {
        let grid = super::super::sweep::geometric_grid(0.0, 3, 9).unwrap();
        let s = synthetic(&grid, |b| vec![-1.0, 0.0, 4.0 - 2.0 * b]);
        let r = lipschitz_probe(&s, EdgeSelector::EPlus, 0.0, 3.0).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
        for q in &r.samples {
            assert!((q.quotient - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_root_edge_diverges() {
        let mut grid: Vec<f64> = (1..=7).map(|k| 4f64.powi(-k)).collect();
        grid.push(0.0);
        grid.sort_by(f64::total_cmp);
        let s = synthetic(&grid, |b| vec![0.0, 1.0, 4.0 - b.sqrt()]);
        let r = lipschitz_probe(&s, EdgeSelector::EPlus, 0.0, 3.0).unwrap();
        assert_eq!(r.verdict, Verdict::Diverging);
        let mut q: Vec<f64> = r.samples.iter().map(|s| s.quotient).collect();
        q.sort_by(f64::total_cmp);
        for w in q.windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gap_edges_tracked_by_overlap() {
        let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let s = synthetic(&grid, |b| {
            vec![
                -2.0,
                -1.9,
                -1.0 + b,
                1.0 + 2.0 * b,
                1.9 + 2.0 * b,
                2.0 + 2.0 * b,
            ]
        });
        // gaps above -1.9 and above 1 + 2b have width 0.9 + b and 0.9
        let lo = lipschitz_probe(&s, EdgeSelector::GapLower(1), 0.0, 3.0).unwrap();
        let hi = lipschitz_probe(&s, EdgeSelector::GapUpper(1), 0.0, 3.0).unwrap();
        assert_eq!(lo.verdict, Verdict::Bounded);
        assert!(lo.samples.iter().all(|q| (q.quotient - 1.0).abs() < 1e-9));
        assert!(hi.samples.iter().all(|q| (q.quotient - 2.0).abs() < 1e-9));
        assert!(lo.closed_at.is_empty());
    }

    #[test]
    fn gap_closure_is_recorded() {
        let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let band = |a: f64, b: f64| (0..=10).map(move |i| a + (b - a) * i as f64 / 10.0);
        let s = synthetic(&grid, |b| {
            // two bands [-2, -w] and [w, 2]; the gap drops below min_width past b = 0.25
            let w = 1.0 - 3.0 * b;
            band(-2.0, -w).chain(band(w, 2.0)).collect()
        });
        let r = lipschitz_probe(&s, EdgeSelector::GapLower(0), 0.0, 3.0).unwrap();
        assert_eq!(r.closed_at, vec![0.3]);
        assert_eq!(r.verdict, Verdict::Diverging);
        assert!(!r.to_probe("gap").pass);
        assert!(lipschitz_probe(&s, EdgeSelector::GapLower(3), 0.0, 3.0).is_err());
    }

    #[test]
    fn needs_enough_samples() {
        let s = synthetic(&[0.0, 0.1, 0.2], |b| vec![0.0, b]);
        assert!(lipschitz_probe(&s, EdgeSelector::EPlus, 0.0, 3.0).is_err());
        assert!(lipschitz_probe(&s, EdgeSelector::EPlus, 0.05, 3.0).is_err());
    }
}

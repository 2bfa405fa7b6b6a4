//! Reference annotations, segment-count comparison and boundary scoring.
//!
//! Reference files are plain text: one change time in seconds per line,
//! `#` comment lines, and optional `label <index> <newsreader|other>` lines
//! naming the label of segment `index` (0-based).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{Label, Segment};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceAnnotation {
    pub change_times_s: Vec<f64>,
    pub labels: BTreeMap<usize, Label>,
}

impl ReferenceAnnotation {
    pub fn new(change_times_s: Vec<f64>) -> Result<Self> {
        let r = Self {
            change_times_s,
            labels: BTreeMap::new(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn n_segments(&self) -> usize {
        self.change_times_s.len() + 1
    }

    fn validate(&self) -> Result<()> {
        let mut prev = 0.0;
        for &t in &self.change_times_s {
            if !t.is_finite() || t <= prev {
                return Err(Error::Parse(format!(
                    "change times must be positive and strictly increasing (got {t} after {prev})"
                )));
            }
            prev = t;
        }
        if let Some((&i, _)) = self.labels.range(self.n_segments()..).next() {
            return Err(Error::Parse(format!("label for segment {i} beyond the last segment")));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| Error::Parse(format!("line {}: {m}: {raw:?}", lineno + 1));
            let mut parts = line.split_whitespace();
            if line.starts_with("label") {
                parts.next();
                let idx: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("bad segment index"))?;
                let label: Label = parts.next().ok_or_else(|| err("missing label"))?.parse()?;
                if parts.next().is_some() {
                    return Err(err("trailing fields"));
                }
                r.labels.insert(idx, label);
            } else {
                let t: f64 = line.parse().map_err(|_| err("expected seconds"))?;
                r.change_times_s.push(t);
            }
        }
        r.validate()?;
        Ok(r)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# change points (seconds)\n");
        for t in &self.change_times_s {
            let _ = writeln!(out, "{t:.3}");
        }
        for (i, l) in &self.labels {
            let _ = writeln!(out, "label {i} {l}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountComparison {
    pub hyp_count: usize,
    pub ref_count: usize,
    pub delta: i64,
}

pub fn compare_counts(hyp: &[Segment], reference: &ReferenceAnnotation) -> CountComparison {
    // cut_segments never yields zero segments
    let hyp_count = hyp.len().max(1);
    let ref_count = reference.n_segments();
    CountComparison {
        hyp_count,
        ref_count,
        delta: hyp_count as i64 - ref_count as i64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub tolerance_s: f64,
}

/// Maximum one-to-one matching of boundaries within `tolerance_s`.
///
/// Hypotheses are visited in time order and each takes the earliest
/// unmatched reference inside its tolerance window. For equal-width windows
/// on a line this greedy sweep is a maximum matching, so the count is
/// symmetric in the two lists and monotone in the tolerance.
pub fn match_boundaries(hyp: &[f64], reference: &[f64], tolerance_s: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut next_ref = 0usize;
    for (h, &ht) in hyp.iter().enumerate() {
        while next_ref < reference.len() && reference[next_ref] < ht - tolerance_s {
            next_ref += 1;
        }
        if next_ref < reference.len() && reference[next_ref] <= ht + tolerance_s {
            pairs.push((h, next_ref));
            next_ref += 1;
        }
    }
    pairs
}

pub fn boundary_prf(hyp: &[f64], reference: &[f64], tolerance_s: f64) -> BoundaryScore {
    let matched = match_boundaries(hyp, reference, tolerance_s).len();
    let ratio = |m: usize, n: usize, other_empty: bool| {
        if n == 0 {
            if other_empty {
                1.0
            } else {
                0.0
            }
        } else {
            m as f64 / n as f64
        }
    };
    let precision = ratio(matched, hyp.len(), reference.is_empty());
    let recall = ratio(matched, reference.len(), hyp.is_empty());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    BoundaryScore {
        precision,
        recall,
        f1,
        matched,
        tolerance_s,
    }
}

/// Combined count and boundary report, as written by `ssmseg eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: CountComparison,
    pub boundaries: BoundaryScore,
}

pub fn evaluate(hyp: &[Segment], reference: &ReferenceAnnotation, tolerance_s: f64) -> EvalReport {
    let hyp_times: Vec<f64> = hyp.iter().skip(1).map(|s| s.start_s).collect();
    EvalReport {
        counts: compare_counts(hyp, reference),
        boundaries: boundary_prf(&hyp_times, &reference.change_times_s, tolerance_s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn segs(n: usize) -> Vec<Segment> {
        (0..n)
            .map(|i| Segment {
                start_s: i as f64,
                end_s: i as f64 + 1.0,
                label: None,
                anchor_bic: 0.0,
            })
            .collect()
    }

    #[test]
    fn count_deltas() {
        let r8 = ReferenceAnnotation::new((1..8).map(|i| i as f64 * 10.0).collect()).unwrap();
        assert_eq!(compare_counts(&segs(7), &r8).delta, -1);
        let r7 = ReferenceAnnotation::new((1..7).map(|i| i as f64 * 10.0).collect()).unwrap();
        let c = compare_counts(&segs(7), &r7);
        assert_eq!((c.hyp_count, c.ref_count, c.delta), (7, 7, 0));
        let r1 = ReferenceAnnotation::default();
        let c = compare_counts(&[], &r1);
        assert_eq!((c.hyp_count, c.ref_count, c.delta), (1, 1, 0));
    }

    #[test]
    fn prf_examples() {
        let s = boundary_prf(&[1.0, 5.0], &[1.0, 5.0], 0.5);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = boundary_prf(&[10.2], &[10.0], 0.5);
        assert_eq!((s.precision, s.recall), (1.0, 1.0));
        let s = boundary_prf(&[10.2, 55.0], &[10.0], 0.5);
        assert_eq!((s.precision, s.recall, s.matched), (0.5, 1.0, 1));
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn prf_empty_lists() {
        let s = boundary_prf(&[], &[], 0.5);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = boundary_prf(&[], &[3.0], 0.5);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = boundary_prf(&[3.0], &[], 0.5);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reference_text_format() {
        let text = "# bulletin\n60.0\n\n125.5\nlabel 0 newsreader\nlabel 2 other\n";
        let r = ReferenceAnnotation::parse(text).unwrap();
        assert_eq!(r.change_times_s, vec![60.0, 125.5]);
        assert_eq!(r.labels[&2], Label::Other);
        assert_eq!(ReferenceAnnotation::parse(&r.to_text()).unwrap(), r);

        assert!(ReferenceAnnotation::parse("5\n4\n").is_err());
        assert!(ReferenceAnnotation::parse("abc\n").is_err());
        assert!(ReferenceAnnotation::parse("5\nlabel 3 other\n").is_err());
        assert!(ReferenceAnnotation::parse("label 0 anchor\n").is_err());
    }

    fn sorted_times() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0u32..2000, 0..12).prop_map(|mut v| {
            v.sort_unstable();
            v.dedup();
            v.into_iter().map(|x| x as f64 * 0.1).collect()
        })
    }

    proptest! {
        #[test]
        fn matching_is_one_to_one(h in sorted_times(), r in sorted_times(), tol in 0.0f64..3.0) {
            let pairs = match_boundaries(&h, &r, tol);
            prop_assert!(pairs.len() <= h.len().min(r.len()));
            let mut seen_r: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            seen_r.dedup();
            prop_assert_eq!(seen_r.len(), pairs.len());
            for (a, b) in pairs {
                prop_assert!((h[a] - r[b]).abs() <= tol + 1e-12);
            }
        }

        #[test]
        fn swapping_lists_swaps_p_and_r(h in sorted_times(), r in sorted_times(), tol in 0.0f64..3.0) {
            let ab = boundary_prf(&h, &r, tol);
            let ba = boundary_prf(&r, &h, tol);
            prop_assert_eq!(ab.matched, ba.matched);
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
        }

        #[test]
        fn wider_tolerance_never_matches_less(h in sorted_times(), r in sorted_times(), tol in 0.0f64..2.0, extra in 0.0f64..2.0) {
            prop_assert!(boundary_prf(&h, &r, tol + extra).matched >= boundary_prf(&h, &r, tol).matched);
        }
    }
}

//! Detection quality metrics on binary rank-3 maps.
//!
//! Matching is tolerant: a predicted cell counts as a true positive if a
//! truth cell lies within a per-axis box around it, and a truth cell counts
//! as found if a prediction lies within the same box. Both directions use
//! dilation of the respective other map, so a single prediction can match a
//! multi-cell truth blob and vice versa.

use serde::{Deserialize, Serialize};

use crate::{BoolTensor, Error, RealTensor, Result, Scalar};

/// Half-widths of the matching box, in cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceSpec {
    pub range: usize,
    pub doppler: usize,
    pub angle: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            range: 3,
            doppler: 3,
            angle: 1,
        }
    }
}

impl ToleranceSpec {
    fn half_widths(&self) -> [usize; 3] {
        [self.range, self.doppler, self.angle]
    }
}

/// Confusion counts of one or more maps; additive across samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct F1Stats {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

impl F1Stats {
    /// `2 TP / (2 TP + FP + FN)`; an empty confusion (no detections, no
    /// truth) scores 1.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.true_positives + self.false_positives + self.false_negatives;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.true_positives as f64 / denom as f64
        }
    }

    pub fn merge(&mut self, other: &F1Stats) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
    }
}

/// Per-axis box dilation: output is true where any input within the
/// half-width box is true. Sliding OR along one axis at a time.
fn dilate(map: &BoolTensor, half: [usize; 3]) -> BoolTensor {
    let dims = map.dims();
    let mut cur = map.clone();
    for axis in 0..3 {
        let h = half[axis];
        if h == 0 {
            continue;
        }
        let mut next = BoolTensor::new(dims);
        for i0 in 0..dims[0] {
            for i1 in 0..dims[1] {
                for i2 in 0..dims[2] {
                    let idx = [i0, i1, i2];
                    if !cur.get(idx) {
                        continue;
                    }
                    let lo = idx[axis].saturating_sub(h);
                    let hi = (idx[axis] + h).min(dims[axis] - 1);
                    let mut j = idx;
                    for v in lo..=hi {
                        j[axis] = v;
                        next.set(j, true);
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Converts a relaxed map to binary by thresholding at `0.5`, rejecting
/// values outside `[0, 1]`.
pub fn binarize<T: Scalar>(map: &RealTensor<T>, context: &'static str) -> Result<BoolTensor> {
    let mut out = BoolTensor::new(map.dims());
    for (k, &v) in map.data().iter().enumerate() {
        let v = v.to_f64_lossy();
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::NotBinary {
                context,
                value: v,
                index: k,
            });
        }
        out.data_mut()[k] = v > 0.5;
    }
    Ok(out)
}

/// Tolerant confusion counts between a truth map and a predicted map.
///
/// TP: predicted cells within the box of some truth cell. FP: the remaining
/// predicted cells. FN: truth cells with no prediction within the box.
pub fn f1_tolerant(truth: &BoolTensor, pred: &BoolTensor, tol: ToleranceSpec) -> Result<F1Stats> {
    if truth.dims() != pred.dims() {
        return Err(Error::ShapeMismatch {
            context: "f1_tolerant",
            expected: truth.dims().to_vec(),
            got: pred.dims().to_vec(),
        });
    }
    let half = tol.half_widths();
    let truth_dil = dilate(truth, half);
    let pred_dil = dilate(pred, half);
    let mut stats = F1Stats::default();
    for k in 0..truth.len() {
        let t = truth.data()[k];
        let p = pred.data()[k];
        if p {
            if truth_dil.data()[k] {
                stats.true_positives += 1;
            } else {
                stats.false_positives += 1;
            }
        }
        if t && !pred_dil.data()[k] {
            stats.false_negatives += 1;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_with(dims: [usize; 3], cells: &[[usize; 3]]) -> BoolTensor {
        let mut m = BoolTensor::new(dims);
        for &c in cells {
            m.set(c, true);
        }
        m
    }

    #[test]
    fn exact_match_is_perfect() {
        let dims = [16, 16, 8];
        let truth = map_with(dims, &[[3, 4, 2], [10, 10, 5]]);
        let stats = f1_tolerant(&truth, &truth, ToleranceSpec::default()).unwrap();
        assert_eq!(stats.true_positives, 2);
        assert_eq!(stats.false_positives, 0);
        assert_eq!(stats.false_negatives, 0);
        assert_eq!(stats.f1(), 1.0);
    }

    #[test]
    fn empty_maps_score_one_and_miss_costs() {
        let dims = [8, 8, 4];
        let empty = BoolTensor::new(dims);
        assert_eq!(f1_tolerant(&empty, &empty, ToleranceSpec::default()).unwrap().f1(), 1.0);

        let truth = map_with(dims, &[[2, 2, 2]]);
        let s = f1_tolerant(&truth, &empty, ToleranceSpec::default()).unwrap();
        assert_eq!(
            (s.true_positives, s.false_positives, s.false_negatives),
            (0, 0, 1)
        );
        assert_eq!(s.f1(), 0.0);

        let s = f1_tolerant(&empty, &truth, ToleranceSpec::default()).unwrap();
        assert_eq!(
            (s.true_positives, s.false_positives, s.false_negatives),
            (0, 1, 0)
        );
    }

    #[test]
    fn offsets_inside_tolerance_match_and_outside_do_not() {
        let dims = [32, 32, 8];
        let tol = ToleranceSpec::default();
        let truth = map_with(dims, &[[16, 16, 4]]);

        // Corner of the tolerance box: still a hit.
        let pred = map_with(dims, &[[19, 13, 5]]);
        let s = f1_tolerant(&truth, &pred, tol).unwrap();
        assert_eq!((s.true_positives, s.false_positives, s.false_negatives), (1, 0, 0));

        // One past the box on the range axis: miss plus false alarm.
        let pred = map_with(dims, &[[20, 16, 4]]);
        let s = f1_tolerant(&truth, &pred, tol).unwrap();
        assert_eq!((s.true_positives, s.false_positives, s.false_negatives), (0, 1, 1));

        // Angle tolerance is tighter (1 cell).
        let pred = map_with(dims, &[[16, 16, 6]]);
        let s = f1_tolerant(&truth, &pred, tol).unwrap();
        assert_eq!((s.true_positives, s.false_positives, s.false_negatives), (0, 1, 1));
    }

    #[test]
    fn multi_cell_blob_counts_every_cell() {
        // A 2-cell predicted blob on one truth cell: both predictions are
        // hits; the truth cell is found once.
        let dims = [16, 16, 4];
        let truth = map_with(dims, &[[8, 8, 2]]);
        let pred = map_with(dims, &[[8, 8, 2], [9, 8, 2]]);
        let s = f1_tolerant(&truth, &pred, ToleranceSpec::default()).unwrap();
        assert_eq!((s.true_positives, s.false_positives, s.false_negatives), (2, 0, 0));
    }

    #[test]
    fn brute_force_agreement_on_random_maps() {
        // Oracle: per-cell scan with explicit box checks.
        let dims = [12, 10, 6];
        let tol = ToleranceSpec {
            range: 2,
            doppler: 1,
            angle: 1,
        };
        let mut state = 0x1234_5678_9ABC_DEF0u64;
        let mut next_bool = |p: u64| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) % 100 < p
        };
        for _ in 0..20 {
            let mut truth = BoolTensor::new(dims);
            let mut pred = BoolTensor::new(dims);
            for k in 0..truth.len() {
                truth.data_mut()[k] = next_bool(5);
                pred.data_mut()[k] = next_bool(5);
            }
            let fast = f1_tolerant(&truth, &pred, tol).unwrap();

            let half = [tol.range, tol.doppler, tol.angle];
            let near = |map: &BoolTensor, idx: [usize; 3]| -> bool {
                for a in idx[0].saturating_sub(half[0])..=(idx[0] + half[0]).min(dims[0] - 1) {
                    for b in idx[1].saturating_sub(half[1])..=(idx[1] + half[1]).min(dims[1] - 1) {
                        for c in idx[2].saturating_sub(half[2])..=(idx[2] + half[2]).min(dims[2] - 1)
                        {
                            if map.get([a, b, c]) {
                                return true;
                            }
                        }
                    }
                }
                false
            };
            let mut slow = F1Stats::default();
            for i0 in 0..dims[0] {
                for i1 in 0..dims[1] {
                    for i2 in 0..dims[2] {
                        let idx = [i0, i1, i2];
                        if pred.get(idx) {
                            if near(&truth, idx) {
                                slow.true_positives += 1;
                            } else {
                                slow.false_positives += 1;
                            }
                        }
                        if truth.get(idx) && !near(&pred, idx) {
                            slow.false_negatives += 1;
                        }
                    }
                }
            }
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn binarize_enforces_unit_interval() {
        let mut m = RealTensor::<f64>::zeros([2, 1, 1]);
        m.data_mut()[0] = 0.4;
        m.data_mut()[1] = 0.6;
        let b = binarize(&m, "test").unwrap();
        assert_eq!(b.data(), &[false, true]);
        m.data_mut()[1] = 1.5;
        assert!(matches!(binarize(&m, "test"), Err(Error::NotBinary { .. })));
        m.data_mut()[1] = -0.1;
        assert!(binarize(&m, "test").is_err());
    }

    #[test]
    fn stats_merge_accumulates() {
        let mut a = F1Stats {
            true_positives: 3,
            false_positives: 1,
            false_negatives: 2,
        };
        let b = F1Stats {
            true_positives: 1,
            false_positives: 0,
            false_negatives: 4,
        };
        a.merge(&b);
        assert_eq!(a.true_positives, 4);
        assert_eq!(a.false_positives, 1);
        assert_eq!(a.false_negatives, 6);
        assert!((a.f1() - 8.0 / 15.0).abs() < 1e-15);
    }
}

//! Pose-specific labelling, argmax classification, multi-view voting and
//! class balancing.

use crate::{Error, Result, Scalar};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of uniform pose partitions used by default (45 degrees each).
pub const DEFAULT_POSE_BINS: u32 = 8;

/// (object, pose-bin) pair with its flat class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PoseLabel {
    pub object_id: u32,
    pub pose_bin: u32,
}

impl PoseLabel {
    pub fn flat_class(&self, pose_bins: u32) -> usize {
        (self.object_id * pose_bins + self.pose_bin) as usize
    }

    pub fn from_angle(object_id: u32, angle_deg: f64, pose_bins: u32) -> Result<Self> {
        Ok(PoseLabel {
            object_id,
            pose_bin: pose_bin_of(angle_deg, pose_bins)?,
        })
    }
}

/// Map an angle to its pose bin; negative angles wrap into `[0, 360)`.
pub fn pose_bin_of(angle_deg: f64, pose_bins: u32) -> Result<u32> {
    if !angle_deg.is_finite() {
        return Err(Error::NonFinite("pose angle".into()));
    }
    let wrapped = angle_deg.rem_euclid(360.0);
    let bin = (wrapped / (360.0 / pose_bins as f64)) as u32;
    Ok(bin.min(pose_bins - 1))
}

/// One-hot target of length `num_objects * pose_bins`.
pub fn encode_target<T: Scalar>(label: &PoseLabel, num_objects: u32, pose_bins: u32) -> Vec<T> {
    let m = (num_objects * pose_bins) as usize;
    let flat = label.flat_class(pose_bins);
    assert!(flat < m, "label out of range");
    let mut v = vec![<T as num_traits::Zero>::zero(); m];
    v[flat] = <T as num_traits::One>::one();
    v
}

/// Object decision from pose-specific scores: the object owning the maximal
/// flat class. Ties break toward the lowest flat index.
pub fn classify_single<T: Scalar>(scores: &[T], num_objects: u32, pose_bins: u32) -> Result<u32> {
    let m = (num_objects * pose_bins) as usize;
    if scores.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: scores.len(),
            context: "score vector vs 8N classes".into(),
        });
    }
    if scores.iter().any(|s| !num_traits::Float::is_finite(*s)) {
        return Err(Error::NonFinite("classification scores".into()));
    }
    let mut best = 0usize;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(best as u32 / pose_bins)
}

/// Running vote tally over object decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteState {
    counts: Vec<usize>,
    samples_seen: usize,
}

impl VoteState {
    pub fn new(num_objects: u32) -> Self {
        VoteState {
            counts: vec![0; num_objects as usize],
            samples_seen: 0,
        }
    }

    pub fn update(&mut self, object_id: u32) {
        self.counts[object_id as usize] += 1;
        self.samples_seen += 1;
    }

    pub fn samples_seen(&self) -> usize {
        self.samples_seen
    }

    /// Majority decision; ties break toward the lowest object id.
    pub fn decide(&self) -> Result<u32> {
        if self.samples_seen == 0 {
            return Err(Error::EmptyVoteState);
        }
        let mut best = 0usize;
        for (i, c) in self.counts.iter().enumerate() {
            if *c > self.counts[best] {
                best = i;
            }
        }
        Ok(best as u32)
    }
}

/// Duplicate samples so every flat class reaches the maximum class count.
/// Extras are drawn uniformly with replacement from the class's originals,
/// deterministically per seed. Errors on the first empty class.
pub fn balance_by_duplication<S: Clone>(
    samples: &[(PoseLabel, S)],
    num_objects: u32,
    pose_bins: u32,
    seed: u64,
) -> Result<Vec<(PoseLabel, S)>> {
    let m = (num_objects * pose_bins) as usize;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, (label, _)) in samples.iter().enumerate() {
        by_class[label.flat_class(pose_bins)].push(i);
    }
    for (flat, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::EmptyClass {
                object_id: flat as u32 / pose_bins,
                pose_bin: flat as u32 % pose_bins,
            });
        }
    }
    let target = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = samples.to_vec();
    for members in &by_class {
        for _ in members.len()..target {
            let pick = members[rng.gen_range(0..members.len())];
            out.push(samples[pick].clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_bin_partitions() {
        assert_eq!(pose_bin_of(50.0, 8).unwrap(), 1);
        assert_eq!(pose_bin_of(0.0, 8).unwrap(), 0);
        assert_eq!(pose_bin_of(360.0, 8).unwrap(), 0);
        assert_eq!(pose_bin_of(-10.0, 8).unwrap(), 7);
        assert_eq!(pose_bin_of(315.0, 8).unwrap(), 7);
    }

    #[test]
    fn pose_bin_periodic() {
        for a in [-700.0, -45.0, 3.0, 123.4, 359.9] {
            assert_eq!(
                pose_bin_of(a, 8).unwrap(),
                pose_bin_of(a + 360.0, 8).unwrap()
            );
            assert_eq!(
                pose_bin_of(a, 8).unwrap(),
                pose_bin_of(a - 720.0, 8).unwrap()
            );
        }
    }

    #[test]
    fn pose_bin_rejects_non_finite() {
        assert!(pose_bin_of(f64::NAN, 8).is_err());
        assert!(pose_bin_of(f64::INFINITY, 8).is_err());
    }

    #[test]
    fn encode_target_one_hot() {
        let first = PoseLabel {
            object_id: 0,
            pose_bin: 0,
        };
        let v: Vec<f64> = encode_target(&first, 8, 8);
        assert_eq!(v.len(), 64);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1..].iter().sum::<f64>(), 0.0);

        let last = PoseLabel {
            object_id: 7,
            pose_bin: 7,
        };
        let v: Vec<f64> = encode_target(&last, 8, 8);
        assert_eq!(v[63], 1.0);
    }

    #[test]
    fn all_labels_distinct() {
        let mut seen = std::collections::HashSet::new();
        for obj in 0..8 {
            for bin in 0..8 {
                let v: Vec<f64> = encode_target(
                    &PoseLabel {
                        object_id: obj,
                        pose_bin: bin,
                    },
                    8,
                    8,
                );
                let hot = v.iter().position(|&x| x == 1.0).unwrap();
                assert!(seen.insert(hot));
            }
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn classify_single_object_from_flat_index() {
        let mut scores = vec![0.0f64; 64];
        scores[13] = 1.0;
        assert_eq!(classify_single(&scores, 8, 8).unwrap(), 1);
        let mut scores = vec![0.0f64; 64];
        scores[63] = 2.0;
        assert_eq!(classify_single(&scores, 8, 8).unwrap(), 7);
    }

    #[test]
    fn classify_single_tie_break_lowest() {
        let scores = vec![0.25f64; 64];
        assert_eq!(classify_single(&scores, 8, 8).unwrap(), 0);
    }

    #[test]
    fn classify_single_rejects_nan() {
        let mut scores = vec![0.0f64; 64];
        scores[5] = f64::NAN;
        assert!(classify_single(&scores, 8, 8).is_err());
    }

    #[test]
    fn encode_then_classify_recovers_object() {
        for obj in 0..8 {
            for bin in 0..8 {
                let label = PoseLabel {
                    object_id: obj,
                    pose_bin: bin,
                };
                let v: Vec<f64> = encode_target(&label, 8, 8);
                assert_eq!(classify_single(&v, 8, 8).unwrap(), obj);
            }
        }
    }

    #[test]
    fn majority_vote() {
        let mut s = VoteState::new(4);
        s.update(0);
        s.update(0);
        s.update(1);
        assert_eq!(s.decide().unwrap(), 0);
    }

    #[test]
    fn vote_tie_break_lowest_id() {
        let mut s = VoteState::new(4);
        s.update(2);
        s.update(1);
        assert_eq!(s.decide().unwrap(), 1);
    }

    #[test]
    fn vote_on_empty_state_errors() {
        let s = VoteState::new(4);
        assert!(s.decide().is_err());
    }

    #[test]
    fn vote_permutation_invariant() {
        let votes = [2u32, 0, 1, 2, 2, 0];
        let mut a = VoteState::new(3);
        for &v in &votes {
            a.update(v);
        }
        let mut rev = VoteState::new(3);
        for &v in votes.iter().rev() {
            rev.update(v);
        }
        assert_eq!(a.decide().unwrap(), rev.decide().unwrap());
    }

    fn lbl(o: u32, b: u32) -> PoseLabel {
        PoseLabel {
            object_id: o,
            pose_bin: b,
        }
    }

    #[test]
    fn balance_duplicates_small_classes() {
        let samples = vec![
            (lbl(0, 0), "a1"),
            (lbl(0, 0), "a2"),
            (lbl(0, 0), "a3"),
            (lbl(0, 1), "b1"),
        ];
        let out = balance_by_duplication(&samples, 1, 2, 7).unwrap();
        let count_b = out.iter().filter(|(l, _)| *l == lbl(0, 1)).count();
        assert_eq!(count_b, 3);
        assert!(out
            .iter()
            .filter(|(l, _)| *l == lbl(0, 1))
            .all(|(_, s)| *s == "b1"));
    }

    #[test]
    fn balance_already_balanced_is_identity() {
        let samples = vec![(lbl(0, 0), 1), (lbl(0, 1), 2)];
        let out = balance_by_duplication(&samples, 1, 2, 0).unwrap();
        assert_eq!(out, samples);
    }

    #[test]
    fn balance_duplicates_are_members() {
        let samples = vec![
            (lbl(0, 0), 10),
            (lbl(0, 0), 11),
            (lbl(0, 0), 12),
            (lbl(0, 0), 13),
            (lbl(0, 0), 14),
            (lbl(0, 1), 20),
            (lbl(0, 1), 21),
            (lbl(1, 0), 30),
            (lbl(1, 0), 31),
            (lbl(1, 0), 32),
            (lbl(1, 0), 33),
            (lbl(1, 1), 40),
        ];
        let out = balance_by_duplication(&samples, 2, 2, 3).unwrap();
        for cls in [lbl(0, 0), lbl(0, 1), lbl(1, 0), lbl(1, 1)] {
            let members: Vec<i32> = out
                .iter()
                .filter(|(l, _)| *l == cls)
                .map(|(_, s)| *s)
                .collect();
            assert_eq!(members.len(), 5, "class {cls:?}");
            let originals: Vec<i32> = samples
                .iter()
                .filter(|(l, _)| *l == cls)
                .map(|(_, s)| *s)
                .collect();
            assert!(members.iter().all(|m| originals.contains(m)));
        }
    }

    #[test]
    fn balance_empty_class_errors_with_name() {
        let samples = vec![(lbl(0, 0), 1)];
        let err = balance_by_duplication(&samples, 1, 2, 0).unwrap_err();
        match err {
            crate::Error::EmptyClass {
                object_id,
                pose_bin,
            } => {
                assert_eq!((object_id, pose_bin), (0, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn balance_deterministic_per_seed() {
        let samples: Vec<(PoseLabel, u32)> = (0..20)
            .map(|i| (lbl(i % 2, 0), i))
            .chain((0..3).map(|i| (lbl(0, 1), 100 + i)))
            .chain((0..3).map(|i| (lbl(1, 1), 200 + i)))
            .collect();
        let a = balance_by_duplication(&samples, 2, 2, 42).unwrap();
        let b = balance_by_duplication(&samples, 2, 2, 42).unwrap();
        assert_eq!(a, b);
    }
}

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which partition a subject (and every window cut from it) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Parse {
                line: 0,
                message: format!("unknown split label '{other}'"),
            }),
        }
    }
}

/// Subject id -> split, total over the subjects it was built from.
pub type SplitAssignment = BTreeMap<String, Split>;

/// Assign whole subjects to train/validation/test. Subject ids are sorted
/// lexicographically before the seeded shuffle so the assignment is
/// deterministic across platforms. Sizes follow largest-remainder rounding
/// of the fractions.
pub fn split_by_subject(
    subject_ids: &[String],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitAssignment> {
    let (ft, fv, fe) = fractions;
    let fracs = [ft, fv, fe];
    if fracs.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::Config(format!("split fractions must be nonnegative, got {fracs:?}")));
    }
    if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions must sum to 1, got {fracs:?}")));
    }
    let mut ids: Vec<String> = subject_ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() != subject_ids.len() {
        return Err(Error::Config("duplicate subject ids in split input".into()));
    }
    let nonzero = fracs.iter().filter(|f| **f > 0.0).count();
    if ids.len() < nonzero {
        return Err(Error::InsufficientData(format!(
            "{} subjects cannot fill {} nonempty splits",
            ids.len(),
            nonzero
        )));
    }

    let n = ids.len();
    // Largest-remainder apportionment; ties go to the earlier split.
    let exact: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - sizes[a] as f64;
        let rb = exact[b] - sizes[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut leftover = n - sizes.iter().sum::<usize>();
    for &i in &order {
        if leftover == 0 {
            break;
        }
        if fracs[i] > 0.0 {
            sizes[i] += 1;
            leftover -= 1;
        }
    }
    // Every nonzero split gets at least one subject.
    for i in 0..3 {
        if fracs[i] > 0.0 && sizes[i] == 0 {
            let donor = (0..3)
                .filter(|&j| sizes[j] > 1)
                .max_by_key(|&j| sizes[j])
                .ok_or_else(|| {
                    Error::InsufficientData("not enough subjects to populate every split".into())
                })?;
            sizes[donor] -= 1;
            sizes[i] += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mut assignment = SplitAssignment::new();
    let mut cursor = 0;
    for (split, &size) in Split::ALL.iter().zip(&sizes) {
        for id in &ids[cursor..cursor + size] {
            assignment.insert(id.clone(), *split);
        }
        cursor += size;
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i:03}")).collect()
    }

    fn count(a: &SplitAssignment, s: Split) -> usize {
        a.values().filter(|&&v| v == s).count()
    }

    #[test]
    fn ten_subjects_standard_fractions() {
        let a = split_by_subject(&ids(10), (0.7, 0.1, 0.2), 42).unwrap();
        assert_eq!(count(&a, Split::Train), 7);
        assert_eq!(count(&a, Split::Validation), 1);
        assert_eq!(count(&a, Split::Test), 2);
    }

    #[test]
    fn degenerate_all_train() {
        let a = split_by_subject(&ids(5), (1.0, 0.0, 0.0), 0).unwrap();
        assert_eq!(count(&a, Split::Train), 5);
    }

    #[test]
    fn same_seed_is_identical_different_seed_differs_somewhere() {
        let a = split_by_subject(&ids(30), (0.7, 0.1, 0.2), 7).unwrap();
        let b = split_by_subject(&ids(30), (0.7, 0.1, 0.2), 7).unwrap();
        assert_eq!(a, b);
        let mut any_diff = false;
        for seed in 0..5u64 {
            let c = split_by_subject(&ids(30), (0.7, 0.1, 0.2), seed).unwrap();
            any_diff |= c != a;
        }
        assert!(any_diff);
    }

    #[test]
    fn input_order_does_not_matter() {
        let mut shuffled = ids(12);
        shuffled.reverse();
        let a = split_by_subject(&ids(12), (0.7, 0.1, 0.2), 3).unwrap();
        let b = split_by_subject(&shuffled, (0.7, 0.1, 0.2), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_subjects_errors() {
        let err = split_by_subject(&ids(2), (0.7, 0.1, 0.2), 0).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)), "{err}");
    }

    #[test]
    fn bad_fractions_error() {
        assert!(split_by_subject(&ids(10), (0.5, 0.1, 0.2), 0).is_err());
        assert!(split_by_subject(&ids(10), (-0.1, 0.9, 0.2), 0).is_err());
    }

    proptest! {
        #[test]
        fn assignment_is_a_partition(n in 3usize..40, seed in 0u64..1000) {
            let subjects = ids(n);
            let a = split_by_subject(&subjects, (0.7, 0.1, 0.2), seed).unwrap();
            prop_assert_eq!(a.len(), n);
            for id in &subjects {
                prop_assert!(a.contains_key(id));
            }
            let total: usize = Split::ALL.iter().map(|&s| count(&a, s)).sum();
            prop_assert_eq!(total, n);
            for s in Split::ALL {
                prop_assert!(count(&a, s) >= 1);
            }
        }
    }
}

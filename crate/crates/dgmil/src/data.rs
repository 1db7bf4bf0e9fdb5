//! Bag/instance data model and dataset validation.
//!
//! A dataset is a flat matrix of instance feature vectors plus a bag table.
//! Every instance belongs to exactly one bag; bags carry the only labels the
//! pipeline trains on. Instance labels are ternary (negative / positive /
//! unknown) so the same types serve training data (labels unknown) and
//! evaluation data (labels known). The types are plain data on purpose:
//! [`validate_dataset`] accepts arbitrary candidate structures and reports
//! violations as values rather than refusing to construct them.

use serde::{Deserialize, Serialize};

use crate::linalg::Mat;

/// Ternary per-instance ground-truth label. On disk: 0, 1, or 255.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceLabel {
    Negative,
    Positive,
    Unknown,
}

impl InstanceLabel {
    pub fn to_code(self) -> u8 {
        match self {
            InstanceLabel::Negative => 0,
            InstanceLabel::Positive => 1,
            InstanceLabel::Unknown => 255,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(InstanceLabel::Negative),
            1 => Some(InstanceLabel::Positive),
            255 => Some(InstanceLabel::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BagLabel {
    Negative,
    Positive,
}

impl BagLabel {
    pub fn to_code(self) -> u8 {
        match self {
            BagLabel::Negative => 0,
            BagLabel::Positive => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BagLabel::Negative),
            1 => Some(BagLabel::Positive),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, BagLabel::Positive)
    }
}

/// Instance feature matrix with bag membership and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSet {
    /// n×d feature matrix, one row per instance.
    pub features: Mat,
    /// For each instance, the index of its bag in the companion [`BagTable`].
    pub bag_of: Vec<usize>,
    /// Ground-truth instance labels; `Unknown` where unavailable.
    pub labels: Vec<InstanceLabel>,
}

impl InstanceSet {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    pub id: u32,
    pub label: BagLabel,
    /// Indices into the companion [`InstanceSet`], in file order.
    pub instances: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BagTable {
    pub bags: Vec<Bag>,
}

impl BagTable {
    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn labels(&self) -> Vec<BagLabel> {
        self.bags.iter().map(|b| b.label).collect()
    }

    pub fn positive_count(&self) -> usize {
        self.bags.iter().filter(|b| b.label.is_positive()).count()
    }

    pub fn negative_count(&self) -> usize {
        self.bags.len() - self.positive_count()
    }

    /// Instance indices of all bags with the given label, in bag order.
    pub fn instances_with_label(&self, label: BagLabel) -> Vec<usize> {
        let mut out = Vec::new();
        for bag in &self.bags {
            if bag.label == label {
                out.extend_from_slice(&bag.instances);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: InstanceSet,
    pub bags: BagTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Dataset,
    pub test: Dataset,
}

/// One invariant violation found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyInstances,
    ZeroDimension,
    /// `bag_of` / `labels` length disagrees with the instance count.
    LengthMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    NonFiniteFeature {
        instance: usize,
        column: usize,
    },
    BagIndexOutOfRange {
        instance: usize,
        bag_index: usize,
    },
    DuplicateBagId {
        bag_id: u32,
    },
    InstanceIndexOutOfRange {
        bag: usize,
        index: usize,
    },
    /// Instance listed by more than one bag.
    DuplicateMembership {
        instance: usize,
    },
    /// Instance listed by no bag.
    UncoveredInstance {
        instance: usize,
    },
    /// `bag_of` disagrees with the bag that lists the instance.
    MembershipMismatch {
        instance: usize,
        bag_of: usize,
        listed_in: usize,
    },
    /// A bag labeled negative contains an instance labeled positive.
    NegativeBagPositiveInstance {
        bag: usize,
        instance: usize,
    },
    /// A bag labeled positive whose instance labels are all known negatives.
    PositiveBagWithoutWitness {
        bag: usize,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EmptyInstances => write!(f, "dataset has no instances"),
            Violation::ZeroDimension => write!(f, "feature dimension is zero"),
            Violation::LengthMismatch {
                field,
                expected,
                got,
            } => write!(f, "{field} has length {got}, expected {expected}"),
            Violation::NonFiniteFeature { instance, column } => {
                write!(f, "instance {instance} has a non-finite feature in column {column}")
            }
            Violation::BagIndexOutOfRange { instance, bag_index } => {
                write!(f, "instance {instance} references nonexistent bag index {bag_index}")
            }
            Violation::DuplicateBagId { bag_id } => {
                write!(f, "bag id {bag_id} appears more than once")
            }
            Violation::InstanceIndexOutOfRange { bag, index } => {
                write!(f, "bag {bag} lists nonexistent instance index {index}")
            }
            Violation::DuplicateMembership { instance } => {
                write!(f, "instance {instance} is listed by more than one bag")
            }
            Violation::UncoveredInstance { instance } => {
                write!(f, "instance {instance} is not listed by any bag")
            }
            Violation::MembershipMismatch {
                instance,
                bag_of,
                listed_in,
            } => write!(
                f,
                "instance {instance} claims bag {bag_of} but is listed by bag {listed_in}"
            ),
            Violation::NegativeBagPositiveInstance { bag, instance } => write!(
                f,
                "negative bag {bag} contains instance {instance} labeled positive"
            ),
            Violation::PositiveBagWithoutWitness { bag } => write!(
                f,
                "positive bag {bag} has fully-known instance labels but no positive instance"
            ),
        }
    }
}

/// Check every dataset invariant and report each violation with the offending
/// bag/instance index. Valid data yields an empty report. Violations are data,
/// not errors: arbitrary candidate structures are accepted.
pub fn validate_dataset(instances: &InstanceSet, bags: &BagTable) -> Vec<Violation> {
    let mut report = Vec::new();
    let n = instances.len();

    if n == 0 {
        report.push(Violation::EmptyInstances);
    }
    if instances.dim() == 0 {
        report.push(Violation::ZeroDimension);
    }
    if instances.bag_of.len() != n {
        report.push(Violation::LengthMismatch {
            field: "bag_of",
            expected: n,
            got: instances.bag_of.len(),
        });
        return report; // per-instance checks below would index out of bounds
    }
    if instances.labels.len() != n {
        report.push(Violation::LengthMismatch {
            field: "labels",
            expected: n,
            got: instances.labels.len(),
        });
        return report;
    }

    for i in 0..n {
        if let Some(col) = instances.features.row(i).iter().position(|v| !v.is_finite()) {
            report.push(Violation::NonFiniteFeature {
                instance: i,
                column: col,
            });
        }
    }

    let mut seen_ids = std::collections::HashSet::new();
    for bag in &bags.bags {
        if !seen_ids.insert(bag.id) {
            report.push(Violation::DuplicateBagId { bag_id: bag.id });
        }
    }

    // Membership: each instance must be listed by exactly one bag, and that
    // bag must agree with bag_of. An instance whose bag_of is out of range is
    // reported once, as the orphan it is, and skips the cross-checks.
    let mut listed_in: Vec<Option<usize>> = vec![None; n];
    for (b, bag) in bags.bags.iter().enumerate() {
        for &i in &bag.instances {
            if i >= n {
                report.push(Violation::InstanceIndexOutOfRange { bag: b, index: i });
                continue;
            }
            match listed_in[i] {
                None => listed_in[i] = Some(b),
                Some(_) => report.push(Violation::DuplicateMembership { instance: i }),
            }
        }
    }
    for i in 0..n {
        let bag_of = instances.bag_of[i];
        if bag_of >= bags.bags.len() {
            report.push(Violation::BagIndexOutOfRange {
                instance: i,
                bag_index: bag_of,
            });
            continue;
        }
        match listed_in[i] {
            None => report.push(Violation::UncoveredInstance { instance: i }),
            Some(b) if b != bag_of => report.push(Violation::MembershipMismatch {
                instance: i,
                bag_of,
                listed_in: b,
            }),
            Some(_) => {}
        }
    }

    // Bag-label / instance-label consistency: a negative bag must contain no
    // known-positive instance; a positive bag whose members are all *known*
    // must contain at least one positive. Unknown labels impose no constraint.
    for (b, bag) in bags.bags.iter().enumerate() {
        let members: Vec<usize> = bag.instances.iter().copied().filter(|&i| i < n).collect();
        match bag.label {
            BagLabel::Negative => {
                for &i in &members {
                    if instances.labels[i] == InstanceLabel::Positive {
                        report.push(Violation::NegativeBagPositiveInstance { bag: b, instance: i });
                    }
                }
            }
            BagLabel::Positive => {
                let all_known = !members.is_empty()
                    && members.iter().all(|&i| instances.labels[i] != InstanceLabel::Unknown);
                let any_positive = members
                    .iter()
                    .any(|&i| instances.labels[i] == InstanceLabel::Positive);
                if all_known && !any_positive {
                    report.push(Violation::PositiveBagWithoutWitness { bag: b });
                }
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(labels: &[InstanceLabel], bag_label: BagLabel) -> (InstanceSet, BagTable) {
        let n = labels.len();
        let features = Mat::from_rows(&(0..n).map(|i| vec![i as f64, 1.0]).collect::<Vec<_>>());
        let instances = InstanceSet {
            features,
            bag_of: vec![0; n],
            labels: labels.to_vec(),
        };
        let bags = BagTable {
            bags: vec![Bag {
                id: 7,
                label: bag_label,
                instances: (0..n).collect(),
            }],
        };
        (instances, bags)
    }

    #[test]
    fn negative_bag_all_negative_is_valid() {
        let (inst, bags) = tiny(&[InstanceLabel::Negative; 3], BagLabel::Negative);
        assert!(validate_dataset(&inst, &bags).is_empty());
    }

    #[test]
    fn negative_bag_with_positive_instance_names_the_bag() {
        let (inst, bags) = tiny(
            &[InstanceLabel::Negative, InstanceLabel::Positive],
            BagLabel::Negative,
        );
        let report = validate_dataset(&inst, &bags);
        assert_eq!(
            report,
            vec![Violation::NegativeBagPositiveInstance { bag: 0, instance: 1 }]
        );
    }

    #[test]
    fn positive_bag_with_unknown_labels_is_valid() {
        let (inst, bags) = tiny(&[InstanceLabel::Unknown; 4], BagLabel::Positive);
        assert!(validate_dataset(&inst, &bags).is_empty());
    }

    #[test]
    fn positive_bag_of_known_negatives_is_flagged() {
        let (inst, bags) = tiny(&[InstanceLabel::Negative; 2], BagLabel::Positive);
        let report = validate_dataset(&inst, &bags);
        assert_eq!(report, vec![Violation::PositiveBagWithoutWitness { bag: 0 }]);
    }

    #[test]
    fn mutations_yield_exactly_one_violation_of_the_right_kind() {
        // Base dataset: two bags, valid.
        let features = Mat::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![5.0, 5.0],
            vec![6.0, 5.0],
        ]);
        let instances = InstanceSet {
            features,
            bag_of: vec![0, 0, 1, 1],
            labels: vec![
                InstanceLabel::Negative,
                InstanceLabel::Negative,
                InstanceLabel::Positive,
                InstanceLabel::Negative,
            ],
        };
        let bags = BagTable {
            bags: vec![
                Bag {
                    id: 0,
                    label: BagLabel::Negative,
                    instances: vec![0, 1],
                },
                Bag {
                    id: 1,
                    label: BagLabel::Positive,
                    instances: vec![2, 3],
                },
            ],
        };
        assert!(validate_dataset(&instances, &bags).is_empty());

        // Flip one bag label.
        let mut flipped = bags.clone();
        flipped.bags[1].label = BagLabel::Negative;
        let report = validate_dataset(&instances, &flipped);
        assert_eq!(
            report,
            vec![Violation::NegativeBagPositiveInstance { bag: 1, instance: 2 }]
        );

        // Orphan one instance.
        let mut orphaned = instances.clone();
        orphaned.bag_of[3] = 9;
        let report = validate_dataset(&orphaned, &bags);
        assert_eq!(
            report,
            vec![Violation::BagIndexOutOfRange {
                instance: 3,
                bag_index: 9
            }]
        );

        // Inject one NaN.
        let mut poisoned = instances.clone();
        poisoned.features[(1, 1)] = f64::NAN;
        let report = validate_dataset(&poisoned, &bags);
        assert_eq!(
            report,
            vec![Violation::NonFiniteFeature {
                instance: 1,
                column: 1
            }]
        );
    }

    #[test]
    fn duplicate_bag_ids_are_reported() {
        let (inst, mut bags) = tiny(&[InstanceLabel::Unknown; 2], BagLabel::Positive);
        bags.bags.push(Bag {
            id: 7,
            label: BagLabel::Negative,
            instances: vec![],
        });
        let report = validate_dataset(&inst, &bags);
        assert!(report.contains(&Violation::DuplicateBagId { bag_id: 7 }));
    }

    #[test]
    fn membership_mismatch_is_reported_once_per_instance() {
        let (mut inst, bags) = tiny(&[InstanceLabel::Unknown; 3], BagLabel::Positive);
        // second bag does not exist, so point bag_of at bag 0 but unlist it
        let mut bags = bags;
        bags.bags[0].instances = vec![0, 1];
        inst.bag_of = vec![0, 0, 0];
        let report = validate_dataset(&inst, &bags);
        assert_eq!(report, vec![Violation::UncoveredInstance { instance: 2 }]);
    }
}

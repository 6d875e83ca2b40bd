//! Uses of a built tree: checking whether a leaf is a single cluster, and
//! embedding unseen entities from their features.

mod cold_start;
mod consistency;

pub use cold_start::{assignment_for_row, cold_start_embed, descriptor_bit, Branch, ColdStartResult, FeatureAssignment, FeatureValue, PathStep};
pub use consistency::{best_threshold_split, diagnose_leaf, diagnose_leaf_with, DiagnosisConfig, ConsistencyReport, Evidence, ThresholdSplit, Verdict};

//! Dataset formats, filtering, fold assignment, and synthetic generation.

pub mod dataset;
pub mod descriptors;
pub mod folds;
pub mod synth;

pub use dataset::{
    dataset_stats, filter_dataset, load_id_list, load_interactions, restrict_drugs,
    save_interactions, DatasetStats, InteractionDataset,
};
pub use descriptors::{load_descriptors, save_descriptors, DescriptorTable};
pub use folds::{make_folds, FoldPlan};
pub use synth::{
    load_ground_truth, save_ground_truth, synth_from_factors, synth_generate,
    GroundTruthFactors, SyntheticSpec, SyntheticTruth,
};

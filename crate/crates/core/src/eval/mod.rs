//! Metrics, variance subsets and the benchmark variants.

pub mod bench;
pub mod metrics;
pub mod subsets;

pub use bench::{
    auth_outcome, build_dataset, dataset_subsets, ident_outcome, macro_bac, read_report_csv,
    report_json, run_auth_benchmark, run_benchmark, run_ident_benchmark, split_point, variant_data,
    write_report_csv, BenchConfig, Dataset, Outcome, ReportRow, SubjectData, Variant,
};
pub use metrics::{acquisition, bac, AcquisitionStats, ConfusionCounts, Rates};
pub use subsets::{default_caps, emulate_subsets, EmulatedSubset, SubjectCte, MIN_SUBJECT_PERIODS};

//! Experiment harness: corpus manifests, database conditions, identification
//! sweeps over feature dimension and frame length, and reports.

mod build;
mod corpus;
mod manifest;
mod report;
mod sweep;

pub use build::{build_database_variants, variant_root, BuildReport};
pub use corpus::{write_synthetic_bwe_corpus, write_synthetic_corpus, SyntheticCorpusSpec};
pub use manifest::{CorpusManifest, DurationLimits, SpeakerEntry, MANIFEST_FILE};
pub use report::{
    emit_report, render_audit, render_csv, render_plot, render_table, ReportFormat, AUDIT_HEADER, CSV_HEADER,
};
pub use sweep::{
    identification_rate, rate_from_counts, run_sweep, CellKey, ExperimentResult, InvalidCell, SweepConfig,
    SweepOutcome, Trial, VariantCorpus,
};

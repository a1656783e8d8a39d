//! Dataset-quality checks: template detection, annotation constraints and
//! partial correctness scores.

mod distance;
mod report;
mod scoring;
mod templates;
mod validate;

use thiserror::Error;

pub use distance::{char_distance, edit_distance, edit_distance_below};
pub use report::{filter_report_tsv, violations_tsv, FilterSummary};
pub use scoring::{correctness_report, partial_score, CorrectnessReport, JudgedPrediction, PartialScore};
pub use templates::{
    filter_uninformative, match_template, normalize, DistanceUnit, FilterCounts, FilterOutcome,
    FlaggedRecord, MatchOptions, Scope, Template, TemplateMatch, TemplateSet, HYPOTHESIS_SLOT,
    PREMISE_SLOT,
};
pub use validate::{validate_record, Rule, Violation};

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("template file line {line}: {message}")]
    TemplateFile { line: usize, message: String },
    #[error("partial score {mentioned}/{required} is not in [0, 1] with a positive denominator")]
    InvalidScore { mentioned: u32, required: u32 },
    #[error("window {window} exceeds the {available} available predictions or is zero")]
    Window { window: usize, available: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

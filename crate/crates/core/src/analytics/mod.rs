//! Post-hoc quality analytics: duplicate consistency, golden accuracy, time
//! outliers, answer patterns and Cohen's kappa agreement, assembled into a
//! [`QualityReport`].

mod agreement;
mod checks;
mod kappa;
mod pattern;
mod render;
mod report;
mod timing;

use thiserror::Error;

use crate::model::{ItemId, UnitId};

pub use agreement::{
    agreement_table, worker_vs_rest_kappa, AgreementTable, AnnotationKey, Annotations,
    PairAgreement, PairOverlap, QuestionAgreement, DEFAULT_MIN_OVERLAP,
};
pub use checks::{duplicate_consistency, golden_accuracy, Ratio};
pub use kappa::cohen_kappa;
pub use pattern::{detect_pattern, PatternFinding, PatternRule};
pub use render::render_report_markdown;
pub use report::{
    build_report, DurationStats, FeedbackEntry, FlaggedDuration, ProjectData, QualityReport,
    ReportOptions, WorkerSummary, INTERACTIVE_NOT_APPLICABLE,
};
pub use timing::{detect_time_outliers, Durations, TimeOutliers};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("label sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("label sequences are empty")]
    EmptyInput,
    #[error("submission {submission} does not match unit {unit}")]
    UnitMismatch { submission: String, unit: UnitId },
    #[error("submission refers to unknown unit {0}")]
    UnknownUnit(UnitId),
    #[error("unit refers to unknown item {0}")]
    UnknownItem(ItemId),
    #[error("no submissions")]
    NoSubmissions,
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::LengthMismatch { .. } => "length-mismatch",
            Self::EmptyInput => "empty-input",
            Self::UnitMismatch { .. } | Self::UnknownUnit(_) | Self::UnknownItem(_) => {
                "unit-mismatch"
            }
            Self::NoSubmissions => "no-submissions",
        }
    }
}

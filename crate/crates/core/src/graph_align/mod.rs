//! Partial alignment of correlated sparse graphs by neighbourhood tree matching.

mod neighborhood;
mod ntma;

pub use neighborhood::{ball_status, neighborhood, Neighborhood};
pub use ntma::{
    alignment_csv, ntma, ntma2, score, strip_duplicates, AlignParams, Algorithm, AlignmentResult, AlignmentSummary,
    ALIGNMENT_CSV_HEADER, DEFAULT_NODE_BUDGET,
};

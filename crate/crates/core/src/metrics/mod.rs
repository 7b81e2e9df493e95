//! Span-level evaluation and annotator agreement.

pub mod agreement;
pub mod prf;

pub use agreement::{compare_by_language, pairwise_agreement, AgreementReport, LanguageReport, LanguageRow};
pub use prf::{prf_from_layers, span_prf, Prf, PrfReport, SpanSource, TypeRow};

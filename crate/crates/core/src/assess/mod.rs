//! Accentedness scoring and statistics: CER, the reference-class
//! log-softmax score, per-speaker box summaries and ranking, and Pearson
//! correlation with two-sided p-values.

mod aggregate;
mod edit;
mod scores;
mod stats;

pub use aggregate::{
    correlate_scores, correlate_speakers, quantile, rank_speakers, speaker_aggregate, speaker_statistic, summarize,
    CorrelationFilter, CorrelationResult, RankedSpeaker, SpeakerSummary, Statistic,
};
pub use edit::{cer, edit_distance, normalize_transcript};
pub use scores::{
    aid_accentedness_score, read_scores, reference_log_softmax, score_aid, score_asr, score_hypotheses, write_scores,
    ScoreKind, ScoreRow,
};
pub use stats::{beta_inc, ln_gamma, pearson, pearson_pvalue, student_t_two_sided};

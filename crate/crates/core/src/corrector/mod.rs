//! Post-OCR correction with a character n-gram LM and a confusion channel.

mod decode;
mod lm;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ConfusionModel;
use crate::metrics::{corpus_report, CharMode, MetricError, MetricReport};
use crate::pipeline::{PairSet, Prediction};

pub use decode::{beam_decode, Decoder};
pub use lm::{lm_logprob, train_char_lm, CharLm, LmError, Sym, DEFAULT_LM_SMOOTHING, DEFAULT_ORDER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorConfig {
    pub beam_width: usize,
    /// Weight of the LM score against the channel score.
    pub lambda: f64,
    /// Edits (substitutions, deletions, insertions) allowed per
    /// whitespace-delimited token.
    pub max_edits_per_token: usize,
    /// Candidates kept per hypothesis and step.
    pub top_k: usize,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        CorrectorConfig {
            beam_width: 8,
            lambda: 1.0,
            max_edits_per_token: 2,
            top_k: 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorrectorError {
    #[error("invalid corrector config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

impl CorrectorConfig {
    pub fn validate(&self) -> Result<(), CorrectorError> {
        if self.beam_width < 1 {
            return Err(CorrectorError::InvalidConfig("beam width must be at least 1".into()));
        }
        if self.top_k < 1 {
            return Err(CorrectorError::InvalidConfig("top_k must be at least 1".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(CorrectorError::InvalidConfig(format!(
                "lambda must be finite and >= 0 (got {})",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Predictions for a pair set with scores before and after correction.
#[derive(Debug, Clone)]
pub struct Correction {
    pub predictions: Vec<Prediction>,
    pub before: MetricReport,
    pub after: MetricReport,
}

/// Decodes every pair's OCR side in parallel. The models should come from
/// data disjoint from `pairs`; that is not checked here.
pub fn correct_pairs(
    pairs: &PairSet,
    channel: &ConfusionModel,
    lm: &CharLm,
    cfg: &CorrectorConfig,
    mode: CharMode,
) -> Result<Correction, CorrectorError> {
    cfg.validate()?;
    let decoder = Decoder::new(channel, lm, cfg);
    let predictions: Vec<Prediction> = pairs
        .pairs
        .par_iter()
        .map(|p| Prediction {
            id: p.id,
            prediction: decoder.decode(&p.ocr),
        })
        .collect();
    let before = corpus_report(pairs, None, mode)?;
    let after = corpus_report(pairs, Some(&predictions), mode)?;
    Ok(Correction {
        predictions,
        before,
        after,
    })
}

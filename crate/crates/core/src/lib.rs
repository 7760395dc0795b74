//! Synthetic post-OCR error-correction data and the tools around it.
//!
//! The crate covers the whole loop: clean a monolingual corpus, render each
//! sentence under many fonts, OCR the images (an external engine or a seeded
//! simulation), collect `<gold, ocr>` pairs into split datasets, score them
//! with CER/WER, learn a character confusion channel from the pairs, and
//! correct OCR output with a noisy-channel beam decoder over a character
//! n-gram language model.

pub mod channel;
pub mod corpus;
pub mod corrector;
pub mod edit;
pub mod io;
pub mod metrics;
pub mod ocr;
pub mod pipeline;
pub mod render;
pub mod seed;
mod textfmt;

pub use channel::{
    align_pair, build_confusion, channel_logprob, ChannelError, ConfusionCounts, ConfusionModel,
};
pub use corpus::{
    filter_corpus, load_corpus, normalize_sentence, normalize_text, Corpus, CorpusError,
    FilterRules, Lang, LoadedCorpus, Sentence,
};
pub use corrector::{
    beam_decode, correct_pairs, lm_logprob, train_char_lm, CharLm, Correction, CorrectorConfig,
    CorrectorError, Decoder, LmError,
};
pub use edit::{align, AlignOp};
pub use metrics::{
    cer, corpus_report, edit_ops, font_report, wer, CharMode, EditOpsCount, FontReport,
    MetricError, MetricReport, Unit,
};
pub use ocr::{
    map_language, simulate_ocr, ExternalEngine, ExternalEngineConfig, OcrEngine, OcrError,
    OcrModelTag, OcrRequest, RecognizedText, SimulatedEngine,
};
pub use pipeline::{
    dataset::{
        read_dataset, read_predictions, write_dataset, write_predictions, write_tsv, DatasetError,
    },
    filter_pairs, generate_pairs, simulate_pairs, split_dataset, GenerateOptions, OcrPair,
    PairSet, PipelineError, Prediction, Provenance, RunManifest, SplitConfig, Splits,
};
pub use render::{load_font, render_text, FontHandle, FontSpec, RenderConfig, RenderError, RenderedImage};

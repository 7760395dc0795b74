//! Corpus × fonts × engine → `<gold, ocr>` pair datasets.

pub mod dataset;
mod split;

use std::path::PathBuf;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Lang, Sentence};
use crate::metrics::{self, CharMode};
use crate::ocr::{OcrEngine, OcrError, OcrRequest};
use crate::render::{render_text, FontHandle, RenderConfig, RenderError};

pub use split::{
    plan_split, shuffle_seed_for, split_dataset, SplitConfig, SplitName, SplitPlan, Splits,
    SPLIT_SEED_LABEL,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no fonts given")]
    NoFonts,
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("split config invalid: {0}")]
    InvalidSplit(String),
    #[error("cannot fill the {split} split with exactly {requested} pairs from whole sentences (reached {reached})")]
    SplitShortfall {
        split: &'static str,
        requested: usize,
        reached: usize,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One `<gold, ocr>` record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcrPair {
    pub id: u64,
    pub sentence_id: u64,
    pub lang: Lang,
    pub font_id: String,
    pub gold: String,
    pub ocr: String,
}

/// Where a pair set came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine_id: String,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pub lang: Lang,
    pub pairs: Vec<OcrPair>,
    pub provenance: Provenance,
}

impl PairSet {
    pub fn new(lang: Lang, pairs: Vec<OcrPair>, provenance: Provenance) -> Self {
        PairSet {
            lang,
            pairs,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Same provenance, different pairs.
    pub fn with_pairs(&self, pairs: Vec<OcrPair>) -> PairSet {
        PairSet {
            lang: self.lang,
            pairs,
            provenance: self.provenance.clone(),
        }
    }

    /// Restores the canonical (sentence_id, font_id) order.
    pub fn sort_canonical(&mut self) {
        self.pairs
            .sort_by(|a, b| (a.sentence_id, &a.font_id).cmp(&(b.sentence_id, &b.font_id)));
    }
}

/// A corrected text for one pair, keyed by pair id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: u64,
    pub prediction: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub sentence_id: u64,
    pub font_id: String,
    pub reason: String,
}

/// What happened during a generation run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub cells: usize,
    pub emitted: usize,
    pub skipped: Vec<SkippedCell>,
}

#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    /// Extra attempts for a failed cell.
    pub retries: u32,
    /// Keep rendered images here as `{sentence_id}_{font_id}.png`. Images
    /// for image-reading engines are staged in a temporary directory
    /// otherwise.
    pub images_dir: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub pairs: PairSet,
    pub manifest: RunManifest,
}

#[derive(Debug, thiserror::Error)]
enum CellError {
    #[error("render failed: {0}")]
    Render(#[from] RenderError),
    #[error("OCR failed: {0}")]
    Ocr(#[from] OcrError),
    #[error("cannot write image: {0}")]
    Io(#[from] std::io::Error),
}

fn pool(jobs: usize, cap: Option<usize>) -> Result<rayon::ThreadPool, PipelineError> {
    let mut threads = if jobs == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        jobs
    };
    if let Some(cap) = cap {
        threads = threads.min(cap.max(1));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

/// Runs every (sentence, font) cell through `work`, in parallel, and
/// assembles the surviving results in canonical order.
fn run_cells(
    corpus: &Corpus,
    font_ids: &[String],
    opts: &GenerateOptions,
    engine: &dyn OcrEngine,
    work: impl Fn(&Sentence, usize) -> Result<String, CellError> + Sync,
) -> Result<Generated, PipelineError> {
    if corpus.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    if font_ids.is_empty() {
        return Err(PipelineError::NoFonts);
    }
    let cells: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|s| (0..font_ids.len()).map(move |f| (s, f)))
        .collect();
    let attempt = |&(s, f): &(usize, usize)| {
        let sentence = &corpus.sentences[s];
        let mut result = work(sentence, f);
        for _ in 0..opts.retries {
            if result.is_ok() {
                break;
            }
            result = work(sentence, f);
        }
        (s, f, result)
    };
    let outcomes: Vec<_> = pool(opts.jobs, engine.max_parallel())?
        .install(|| cells.par_iter().map(attempt).collect());

    let mut pairs = Vec::with_capacity(outcomes.len());
    let mut manifest = RunManifest {
        cells: cells.len(),
        ..RunManifest::default()
    };
    for (s, f, result) in outcomes {
        let sentence = &corpus.sentences[s];
        match result {
            Ok(ocr) => pairs.push(OcrPair {
                id: 0,
                sentence_id: sentence.id,
                lang: corpus.lang,
                font_id: font_ids[f].clone(),
                gold: sentence.text.clone(),
                ocr,
            }),
            Err(e) => {
                warn!("skipping sentence {} / font {}: {e}", sentence.id, font_ids[f]);
                manifest.skipped.push(SkippedCell {
                    sentence_id: sentence.id,
                    font_id: font_ids[f].clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    let mut set = PairSet::new(corpus.lang, pairs, opts.provenance.clone());
    set.sort_canonical();
    for (i, p) in set.pairs.iter_mut().enumerate() {
        p.id = i as u64;
    }
    manifest.emitted = set.len();
    Ok(Generated {
        pairs: set,
        manifest,
    })
}

/// Renders every sentence under every font and OCRs the images. Cells that
/// fail are logged, recorded in the manifest and skipped.
pub fn generate_pairs(
    corpus: &Corpus,
    fonts: &[FontHandle],
    engine: &dyn OcrEngine,
    cfg: &RenderConfig,
    opts: &GenerateOptions,
) -> Result<Generated, PipelineError> {
    cfg.validate()?;
    let font_ids: Vec<String> = fonts.iter().map(|f| f.font_id().to_string()).collect();
    let staging = match (&opts.images_dir, engine.needs_image()) {
        (None, true) => Some(tempfile::tempdir()?),
        _ => None,
    };
    let image_dir = opts
        .images_dir
        .clone()
        .or_else(|| staging.as_ref().map(|d| d.path().to_path_buf()));
    run_cells(corpus, &font_ids, opts, engine, |sentence, f| {
        let font = &fonts[f];
        let image = render_text(&sentence.text, font, cfg)?;
        let path = match &image_dir {
            Some(dir) => {
                let p = dir.join(format!("{}_{}.png", sentence.id, font.font_id()));
                image.write_png(&p)?;
                Some(p)
            }
            None => None,
        };
        let req = OcrRequest {
            sentence_id: sentence.id,
            font_id: font.font_id(),
            lang: sentence.lang,
            text: &sentence.text,
            image: Some(&image),
            image_path: path.as_deref(),
        };
        Ok(engine.recognize(&req)?.text)
    })
}

/// Like [`generate_pairs`] without rendering: the engine sees only the gold
/// text, labelled with each of `font_ids`.
pub fn simulate_pairs(
    corpus: &Corpus,
    font_ids: &[String],
    engine: &dyn OcrEngine,
    opts: &GenerateOptions,
) -> Result<Generated, PipelineError> {
    run_cells(corpus, font_ids, opts, engine, |sentence, f| {
        let req = OcrRequest {
            sentence_id: sentence.id,
            font_id: &font_ids[f],
            lang: sentence.lang,
            text: &sentence.text,
            image: None,
            image_path: None,
        };
        Ok(engine.recognize(&req)?.text)
    })
}

/// Drops pairs with empty OCR output (when asked) and pairs whose CER
/// exceeds `max_cer`. Order is preserved.
pub fn filter_pairs(pairs: &PairSet, max_cer: f64, drop_empty: bool) -> PairSet {
    let kept = pairs
        .pairs
        .iter()
        .filter(|p| !(drop_empty && p.ocr.is_empty()))
        .filter(|p| {
            metrics::cer_with(&p.gold, &p.ocr, CharMode::Codepoint).is_ok_and(|c| c <= max_cer)
        })
        .cloned()
        .collect();
    pairs.with_pairs(kept)
}

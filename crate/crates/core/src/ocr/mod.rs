//! OCR engines behind one interface: an external executable, or a seeded
//! simulation driven by a confusion model.

mod external;
mod simulated;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_text, Lang};
use crate::render::RenderedImage;

pub use external::{recognize_external, ExternalEngine, ExternalEngineConfig, OCR_BIN_ENV};
pub use simulated::{simulate_ocr, NoiseSampler, SimulatedEngine};

/// Traineddata identifier handed to the external engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OcrModelTag {
    Hin,
    Mar,
    San,
}

impl OcrModelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            OcrModelTag::Hin => "hin",
            OcrModelTag::Mar => "mar",
            OcrModelTag::San => "san",
        }
    }
}

impl fmt::Display for OcrModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Languages without their own recognizer borrow a close relative's:
/// Bodo and Nepali read with Hindi, Konkani with Marathi.
pub fn map_language(lang: Lang) -> OcrModelTag {
    match lang {
        Lang::Hi | Lang::Brx | Lang::Ne => OcrModelTag::Hin,
        Lang::Mr | Lang::Gom => OcrModelTag::Mar,
        Lang::Sa => OcrModelTag::San,
    }
}

/// OCR output, normalized the same way as gold sentences. May be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognizedText {
    pub text: String,
    pub engine_id: String,
}

impl RecognizedText {
    pub fn new(raw: &str, engine_id: impl Into<String>) -> Self {
        RecognizedText {
            text: normalize_text(raw),
            engine_id: engine_id.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OcrError {
    #[error("OCR engine unavailable: cannot run `{}`: {source}", path.display())]
    Unavailable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("OCR engine exited with status {status}: {stderr}")]
    Failed { status: String, stderr: String },
    #[error("OCR engine timed out after {secs}s")]
    Timeout { secs: u64 },
    #[error("OCR engine produced non-UTF-8 output")]
    InvalidOutput,
    #[error("engine `{0}` needs a rendered image")]
    MissingImage(String),
    #[error("cannot stage image for OCR: {0}")]
    Io(#[from] std::io::Error),
}

/// One recognition job.
pub struct OcrRequest<'a> {
    pub sentence_id: u64,
    pub font_id: &'a str,
    pub lang: Lang,
    /// Gold text. Only the simulated engine reads it.
    pub text: &'a str,
    pub image: Option<&'a RenderedImage>,
    /// Where `image` is already stored on disk, if anywhere.
    pub image_path: Option<&'a Path>,
}

pub trait OcrEngine: Send + Sync {
    fn engine_id(&self) -> String;

    /// Whether requests must carry a rendered image.
    fn needs_image(&self) -> bool;

    /// Upper bound on concurrent `recognize` calls, if the engine has one.
    fn max_parallel(&self) -> Option<usize> {
        None
    }

    fn recognize(&self, req: &OcrRequest<'_>) -> Result<RecognizedText, OcrError>;
}

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use super::{map_language, OcrEngine, OcrError, OcrModelTag, OcrRequest, RecognizedText};

/// Environment variable that overrides the configured executable.
pub const OCR_BIN_ENV: &str = "ROUNDTRIP_OCR_BIN";

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalEngineConfig {
    pub executable: PathBuf,
    pub timeout: Duration,
    pub max_parallel: usize,
}

impl Default for ExternalEngineConfig {
    fn default() -> Self {
        ExternalEngineConfig {
            executable: PathBuf::from("tesseract"),
            timeout: Duration::from_secs(30),
            max_parallel: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl ExternalEngineConfig {
    /// Applies the `ROUNDTRIP_OCR_BIN` override, if set.
    pub fn with_env_override(mut self) -> Self {
        if let Some(bin) = std::env::var_os(OCR_BIN_ENV).filter(|v| !v.is_empty()) {
            self.executable = PathBuf::from(bin);
        }
        self
    }
}

fn drain(mut pipe: impl Read + Send + 'static) -> std::thread::JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        buf
    })
}

/// Runs `<exe> <image> stdout -l <tag>` and returns its normalized stdout.
/// The image file is only read.
pub fn recognize_external(
    image: &Path,
    model: OcrModelTag,
    cfg: &ExternalEngineConfig,
) -> Result<RecognizedText, OcrError> {
    let mut child = Command::new(&cfg.executable)
        .arg(image)
        .arg("stdout")
        .arg("-l")
        .arg(model.as_str())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| OcrError::Unavailable {
            path: cfg.executable.clone(),
            source,
        })?;
    let stdout = drain(child.stdout.take().expect("stdout is piped"));
    let stderr = drain(child.stderr.take().expect("stderr is piped"));
    let status = match child.wait_timeout(cfg.timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(OcrError::Timeout {
                secs: cfg.timeout.as_secs(),
            });
        }
    };
    let out = stdout.join().unwrap_or_default();
    let err = stderr.join().unwrap_or_default();
    if !status.success() {
        return Err(OcrError::Failed {
            status: status.to_string(),
            stderr: String::from_utf8_lossy(&err).trim().to_string(),
        });
    }
    let text = String::from_utf8(out).map_err(|_| OcrError::InvalidOutput)?;
    Ok(RecognizedText::new(&text, engine_id(&cfg.executable)))
}

fn engine_id(exe: &Path) -> String {
    let name = exe
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| exe.display().to_string());
    format!("external:{name}")
}

/// An OCR executable invoked once per image.
#[derive(Debug, Clone)]
pub struct ExternalEngine {
    pub config: ExternalEngineConfig,
}

impl ExternalEngine {
    pub fn new(config: ExternalEngineConfig) -> Self {
        ExternalEngine { config }
    }
}

impl OcrEngine for ExternalEngine {
    fn engine_id(&self) -> String {
        engine_id(&self.config.executable)
    }

    fn needs_image(&self) -> bool {
        true
    }

    fn max_parallel(&self) -> Option<usize> {
        Some(self.config.max_parallel.max(1))
    }

    fn recognize(&self, req: &OcrRequest<'_>) -> Result<RecognizedText, OcrError> {
        let model = map_language(req.lang);
        if let Some(path) = req.image_path {
            return recognize_external(path, model, &self.config);
        }
        let image = req
            .image
            .ok_or_else(|| OcrError::MissingImage(self.engine_id()))?;
        let dir = tempfile::tempdir()?;
        let path = dir
            .path()
            .join(format!("{}_{}.png", req.sentence_id, req.font_id));
        image.write_png(&path)?;
        recognize_external(&path, model, &self.config)
    }
}

//! Rasterizes sentences into grayscale images.
//!
//! Text is shaped with a full OpenType shaper so conjuncts, reordered
//! matras and mark positioning come out as the font intends, then each glyph
//! outline is scan-converted into a coverage buffer.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ab_glyph_rasterizer::{point, Point, Rasterizer};
use rustybuzz::ttf_parser::{GlyphId, OutlineBuilder};
use rustybuzz::{Face, GlyphBuffer, UnicodeBuffer};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("cannot read font {}: {source}", path.display())]
    FontIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} is not a parseable font", path.display())]
    FontParse { path: PathBuf },
    #[error("{} has no glyphs in the Devanagari block", path.display())]
    NoDevanagari { path: PathBuf },
    #[error("invalid render config: {0}")]
    InvalidConfig(String),
    #[error("nothing to render")]
    EmptyText,
    #[error("`{word}` is {width:.1}px wide but only {usable}px are available")]
    TooWide { word: String, width: f64, usable: u32 },
}

/// A font file plus the size to set text at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FontSpec {
    pub font_id: String,
    pub path: PathBuf,
    /// Em size in pixels.
    pub size_px: u32,
}

impl FontSpec {
    pub fn new(font_id: impl Into<String>, path: impl Into<PathBuf>, size_px: u32) -> Self {
        FontSpec {
            font_id: font_id.into(),
            path: path.into(),
            size_px,
        }
    }
}

pub const DEFAULT_FONT_SIZE: u32 = 16;

/// Every `.ttf`/`.otf` file in `dir`, sorted by file name, with the file
/// stem as font id.
pub fn fonts_in_dir(dir: &Path, size_px: u32) -> std::io::Result<Vec<FontSpec>> {
    let mut specs = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("ttf") | Some("otf")) && path.is_file() {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            specs.push(FontSpec::new(id, path, size_px));
        }
    }
    specs.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(specs)
}

/// A loaded font. Cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct FontHandle {
    spec: FontSpec,
    data: Arc<Vec<u8>>,
}

impl FontHandle {
    pub fn spec(&self) -> &FontSpec {
        &self.spec
    }

    pub fn font_id(&self) -> &str {
        &self.spec.font_id
    }

    fn face(&self) -> Face<'_> {
        Face::from_slice(&self.data, 0).expect("validated at load time")
    }

    fn scale(&self, face: &Face<'_>) -> f64 {
        self.spec.size_px as f64 / face.units_per_em() as f64
    }

    /// Shaped advance width of `text` in pixels.
    pub fn text_width(&self, text: &str) -> f64 {
        let face = self.face();
        let glyphs = shape(&face, text);
        let units: i64 = glyphs.glyph_positions().iter().map(|p| p.x_advance as i64).sum();
        units as f64 * self.scale(&face)
    }

    /// Distance between consecutive baselines, in whole pixels.
    pub fn line_height(&self) -> u32 {
        let face = self.face();
        let units = face.ascender() as f64 - face.descender() as f64 + face.line_gap() as f64;
        let px = (units * self.scale(&face)).ceil();
        if px >= 1.0 {
            px as u32
        } else {
            (self.spec.size_px as f64 * 1.2).ceil() as u32
        }
    }

    fn ascent_px(&self, face: &Face<'_>) -> f64 {
        face.ascender() as f64 * self.scale(face)
    }
}

pub fn load_font(spec: &FontSpec) -> Result<FontHandle, RenderError> {
    let data = std::fs::read(&spec.path).map_err(|source| RenderError::FontIo {
        path: spec.path.clone(),
        source,
    })?;
    let face = Face::from_slice(&data, 0).ok_or_else(|| RenderError::FontParse {
        path: spec.path.clone(),
    })?;
    let covers_devanagari = ('\u{0900}'..='\u{097F}').any(|c| face.glyph_index(c).is_some());
    if !covers_devanagari {
        return Err(RenderError::NoDevanagari {
            path: spec.path.clone(),
        });
    }
    if spec.size_px == 0 {
        return Err(RenderError::InvalidConfig("font size must be positive".into()));
    }
    drop(face);
    Ok(FontHandle {
        spec: spec.clone(),
        data: Arc::new(data),
    })
}

fn shape(face: &Face<'_>, text: &str) -> GlyphBuffer {
    let mut buffer = UnicodeBuffer::new();
    buffer.push_str(text);
    buffer.guess_segment_properties();
    rustybuzz::shape(face, &[], buffer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderConfig {
    pub canvas_width_px: u32,
    pub canvas_height_px: u32,
    pub margin_px: u32,
    pub foreground: u8,
    pub background: u8,
    pub wrap: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            canvas_width_px: 300,
            canvas_height_px: 300,
            margin_px: 10,
            foreground: 0,
            background: 255,
            wrap: true,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), RenderError> {
        let m2 = 2 * self.margin_px;
        if self.canvas_width_px <= m2 || self.canvas_height_px <= m2 {
            return Err(RenderError::InvalidConfig(format!(
                "canvas {}x{} leaves no room inside a {}px margin",
                self.canvas_width_px, self.canvas_height_px, self.margin_px
            )));
        }
        if self.foreground == self.background {
            return Err(RenderError::InvalidConfig(
                "foreground and background are identical".into(),
            ));
        }
        Ok(())
    }

    pub fn usable_width(&self) -> u32 {
        self.canvas_width_px - 2 * self.margin_px
    }
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl RenderedImage {
    pub fn blank(width: u32, height: u32, background: u8) -> Self {
        RenderedImage {
            width,
            height,
            pixels: vec![background; width as usize * height as usize],
        }
    }

    pub fn count_not(&self, background: u8) -> usize {
        self.pixels.iter().filter(|&&p| p != background).count()
    }

    pub fn encode_png(&self, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        let mut enc = png::Encoder::new(out, self.width, self.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(std::io::Error::other)?;
        writer
            .write_image_data(&self.pixels)
            .map_err(std::io::Error::other)?;
        writer.finish().map_err(std::io::Error::other)
    }

    pub fn write_png(&self, path: &Path) -> std::io::Result<()> {
        crate::io::write_atomic(path, |w| self.encode_png(w))
    }
}

/// Splits `text` into lines that fit the usable width, breaking only at
/// spaces.
pub fn layout_lines(text: &str, font: &FontHandle, cfg: &RenderConfig) -> Result<Vec<String>, RenderError> {
    cfg.validate()?;
    let usable = cfg.usable_width();
    let fits = |s: &str| font.text_width(s) <= usable as f64;
    let too_wide = |s: &str| RenderError::TooWide {
        word: s.to_string(),
        width: font.text_width(s),
        usable,
    };
    let words: Vec<&str> = text.split(' ').filter(|w| !w.is_empty()).collect();
    if words.is_empty() {
        return Err(RenderError::EmptyText);
    }
    if !cfg.wrap {
        let line = words.join(" ");
        return if fits(&line) { Ok(vec![line]) } else { Err(too_wide(&line)) };
    }
    let mut lines = Vec::new();
    let mut current = String::new();
    for word in words {
        if !fits(word) {
            return Err(too_wide(word));
        }
        if current.is_empty() {
            current.push_str(word);
            continue;
        }
        let candidate = format!("{current} {word}");
        if fits(&candidate) {
            current = candidate;
        } else {
            lines.push(std::mem::replace(&mut current, word.to_string()));
        }
    }
    lines.push(current);
    Ok(lines)
}

/// Canvas height needed for `lines` lines: the configured height, grown in
/// whole line-height steps when the text would overflow it.
pub fn canvas_height(lines: usize, line_height: u32, cfg: &RenderConfig) -> u32 {
    let needed = 2 * cfg.margin_px + lines as u32 * line_height;
    if needed <= cfg.canvas_height_px {
        cfg.canvas_height_px
    } else {
        let overflow = needed - cfg.canvas_height_px;
        cfg.canvas_height_px + overflow.div_ceil(line_height) * line_height
    }
}

struct GlyphPen {
    raster: Rasterizer,
    origin_x: f64,
    origin_y: f64,
    scale: f64,
    last: Point,
    start: Point,
}

impl GlyphPen {
    fn map(&self, x: f32, y: f32) -> Point {
        point(
            (self.origin_x + x as f64 * self.scale) as f32,
            (self.origin_y - y as f64 * self.scale) as f32,
        )
    }
}

impl OutlineBuilder for GlyphPen {
    fn move_to(&mut self, x: f32, y: f32) {
        self.last = self.map(x, y);
        self.start = self.last;
    }

    fn line_to(&mut self, x: f32, y: f32) {
        let p = self.map(x, y);
        self.raster.draw_line(self.last, p);
        self.last = p;
    }

    fn quad_to(&mut self, x1: f32, y1: f32, x: f32, y: f32) {
        let (c, p) = (self.map(x1, y1), self.map(x, y));
        self.raster.draw_quad(self.last, c, p);
        self.last = p;
    }

    fn curve_to(&mut self, x1: f32, y1: f32, x2: f32, y2: f32, x: f32, y: f32) {
        let (c1, c2, p) = (self.map(x1, y1), self.map(x2, y2), self.map(x, y));
        self.raster.draw_cubic(self.last, c1, c2, p);
        self.last = p;
    }

    fn close(&mut self) {
        if self.last != self.start {
            self.raster.draw_line(self.last, self.start);
        }
        self.last = self.start;
    }
}

/// Renders `text` black-on-white (or as configured), word-wrapped.
/// Identical inputs always produce identical pixels.
pub fn render_text(text: &str, font: &FontHandle, cfg: &RenderConfig) -> Result<RenderedImage, RenderError> {
    let lines = layout_lines(text, font, cfg)?;
    let line_height = font.line_height();
    let width = cfg.canvas_width_px;
    let height = canvas_height(lines.len(), line_height, cfg);
    let face = font.face();
    let scale = font.scale(&face);
    let ascent = font.ascent_px(&face);

    let mut coverage = vec![0f32; width as usize * height as usize];
    for (row, line) in lines.iter().enumerate() {
        let baseline = cfg.margin_px as f64 + ascent + (row as u32 * line_height) as f64;
        let shaped = shape(&face, line);
        let mut pen_x = cfg.margin_px as f64;
        for (info, pos) in shaped.glyph_infos().iter().zip(shaped.glyph_positions()) {
            let gid = GlyphId(info.glyph_id as u16);
            let gx = pen_x + pos.x_offset as f64 * scale;
            let gy = baseline - pos.y_offset as f64 * scale;
            pen_x += pos.x_advance as f64 * scale;
            let Some(bbox) = face.glyph_bounding_box(gid) else {
                continue;
            };
            let left = (gx + bbox.x_min as f64 * scale).floor();
            let right = (gx + bbox.x_max as f64 * scale).ceil();
            let top = (gy - bbox.y_max as f64 * scale).floor();
            let bottom = (gy - bbox.y_min as f64 * scale).ceil();
            let (w, h) = ((right - left) as usize + 1, (bottom - top) as usize + 1);
            let mut pen = GlyphPen {
                raster: Rasterizer::new(w, h),
                origin_x: gx - left,
                origin_y: gy - top,
                scale,
                last: point(0.0, 0.0),
                start: point(0.0, 0.0),
            };
            if face.outline_glyph(gid, &mut pen).is_none() {
                continue;
            }
            pen.raster.for_each_pixel_2d(|x, y, c| {
                let (px, py) = (left as i64 + x as i64, top as i64 + y as i64);
                if px < 0 || py < 0 || px >= width as i64 || py >= height as i64 {
                    return;
                }
                let cell = &mut coverage[py as usize * width as usize + px as usize];
                let c = c.clamp(0.0, 1.0);
                *cell = 1.0 - (1.0 - *cell) * (1.0 - c);
            });
        }
    }

    let (fg, bg) = (cfg.foreground as f32, cfg.background as f32);
    let pixels = coverage
        .into_iter()
        .map(|c| (bg + (fg - bg) * c).round().clamp(0.0, 255.0) as u8)
        .collect();
    Ok(RenderedImage {
        width,
        height,
        pixels,
    })
}

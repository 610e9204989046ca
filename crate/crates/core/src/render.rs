//! Flat-colour P6 renders of layouts.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::geometry::Point2;
use crate::layout::Layout;

pub const BACKGROUND: [u8; 3] = [236, 232, 224];
const CENTROID_MARK: [u8; 3] = [20, 20, 20];
const ANCHOR_MARK: [u8; 3] = [255, 255, 255];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot write `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RenderOptions {
    /// Draw a small cross at every object's centroid.
    pub centroid_markers: bool,
    /// Entry index of the anchor, drawn with a larger white cross.
    pub anchor: Option<usize>,
}

impl RenderOptions {
    pub fn with_markers(anchor: Option<usize>) -> Self {
        Self {
            centroid_markers: true,
            anchor,
        }
    }
}

/// Distinct colour for the `k`-th entry: golden-ratio hue steps at fixed
/// saturation and value, so no entry can match the background.
pub fn entry_color(k: usize) -> [u8; 3] {
    let h = (k as f64 * 0.618_033_988_749_895 + 0.11).fract() * 6.0;
    let (s, v) = (0.65, 0.82);
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|t| ((t + m) * 255.0).round() as u8)
}

struct Canvas {
    width: u32,
    height: u32,
    rgb: Vec<u8>,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height {
            let i = 3 * (y as usize * self.width as usize + x as usize);
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    fn cross(&mut self, p: Point2, arm: i64, c: [u8; 3]) {
        let (x, y) = (p.x.round() as i64, p.y.round() as i64);
        for d in -arm..=arm {
            self.put(x + d, y, c);
            self.put(x, y + d, c);
        }
    }
}

/// Entries are painted in layout order; later entries cover earlier ones.
pub fn render_ppm(layout: &Layout, width: u32, height: u32, opts: &RenderOptions) -> Vec<u8> {
    let mut canvas = Canvas {
        width,
        height,
        rgb: BACKGROUND.repeat(width as usize * height as usize),
    };
    for (k, e) in layout.entries.iter().enumerate() {
        let c = entry_color(k);
        for (x, y) in e.footprint().pixels() {
            canvas.put(x, y, c);
        }
    }
    if opts.centroid_markers {
        for e in &layout.entries {
            canvas.cross(e.pose.centroid(), 1, CENTROID_MARK);
        }
    }
    if let Some(a) = opts.anchor.and_then(|a| layout.entries.get(a)) {
        canvas.cross(a.pose.centroid(), 3, ANCHOR_MARK);
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(&canvas.rgb);
    out
}

pub fn render_layout(layout: &Layout, width: u32, height: u32, opts: &RenderOptions, path: &Path) -> Result<(), RenderError> {
    let bytes = render_ppm(layout, width, height, opts);
    let io = |source| RenderError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&bytes).map_err(io)
}

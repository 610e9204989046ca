//! Run-length encoded binary masks and rasterized footprints.
//!
//! A [`BinaryMask`] stores foreground intervals as `(row, start, len)` runs
//! in row-major order. Runs are kept canonical (sorted, non-overlapping and
//! maximal), so structural equality is pixel equality.
//!
//! A [`Footprint`] is a mask placed in the plane by a [`Pose2D`]. Rotation is
//! rasterized by inverse mapping with nearest-neighbour sampling about the
//! mask centroid, so the same inputs always yield the same pixels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Bounds, Point2, Pose2D};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("run {index} ({row}, {start}, {len}) lies outside a {width}x{height} mask")]
    RunOutOfBounds {
        index: usize,
        row: u32,
        start: u32,
        len: u32,
        width: u32,
        height: u32,
    },
    #[error("run {index} has zero length")]
    ZeroLengthRun { index: usize },
    #[error("run {index} is out of order or overlaps its predecessor")]
    UnsortedRuns { index: usize },
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("target box must be at least 1x1")]
    DegenerateTarget,
}

/// One horizontal foreground interval. Serialized as `[row, start, len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 3]", into = "[u32; 3]")]
pub struct Run {
    pub row: u32,
    pub start: u32,
    pub len: u32,
}

impl From<[u32; 3]> for Run {
    fn from([row, start, len]: [u32; 3]) -> Self {
        Run { row, start, len }
    }
}

impl From<Run> for [u32; 3] {
    fn from(r: Run) -> Self {
        [r.row, r.start, r.len]
    }
}

impl Run {
    fn end(&self) -> u32 {
        self.start + self.len
    }
}

/// Axis-aligned box `(min_x, min_y, width, height)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: u32,
    pub min_y: u32,
    pub width: u32,
    pub height: u32,
}

impl BBox {
    pub fn new(min_x: u32, min_y: u32, width: u32, height: u32) -> Self {
        Self {
            min_x,
            min_y,
            width,
            height,
        }
    }
}

#[derive(Deserialize)]
struct RawMask {
    width: u32,
    height: u32,
    runs: Vec<Run>,
}

impl TryFrom<RawMask> for BinaryMask {
    type Error = MaskError;
    fn try_from(raw: RawMask) -> Result<Self, Self::Error> {
        BinaryMask::from_runs(raw.width, raw.height, raw.runs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawMask")]
pub struct BinaryMask {
    width: u32,
    height: u32,
    runs: Vec<Run>,
}

/// Integer offsets `(dx, dy)` with `dx² + dy² ≤ r²`, in row-major order.
pub(crate) fn disk_offsets(radius: u32) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            runs: Vec::new(),
        }
    }

    /// Validates runs and merges adjacent intervals into canonical form.
    pub fn from_runs(width: u32, height: u32, runs: Vec<Run>) -> Result<Self, MaskError> {
        let mut canonical: Vec<Run> = Vec::with_capacity(runs.len());
        for (index, run) in runs.into_iter().enumerate() {
            if run.len == 0 {
                return Err(MaskError::ZeroLengthRun { index });
            }
            if run.row >= height || run.start.checked_add(run.len).is_none_or(|e| e > width) {
                return Err(MaskError::RunOutOfBounds {
                    index,
                    row: run.row,
                    start: run.start,
                    len: run.len,
                    width,
                    height,
                });
            }
            match canonical.last_mut() {
                Some(prev) if prev.row == run.row && run.start < prev.end() => {
                    return Err(MaskError::UnsortedRuns { index });
                }
                Some(prev) if prev.row > run.row => {
                    return Err(MaskError::UnsortedRuns { index });
                }
                Some(prev) if prev.row == run.row && run.start == prev.end() => {
                    prev.len += run.len;
                }
                _ => canonical.push(run),
            }
        }
        Ok(Self {
            width,
            height,
            runs: canonical,
        })
    }

    /// Encodes a dense row-major bitmap.
    pub fn from_dense(width: u32, height: u32, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize);
        let mut runs = Vec::new();
        for row in 0..height {
            let line = &bits[(row * width) as usize..((row + 1) * width) as usize];
            let mut x = 0u32;
            while x < width {
                if line[x as usize] {
                    let start = x;
                    while x < width && line[x as usize] {
                        x += 1;
                    }
                    runs.push(Run {
                        row,
                        start,
                        len: x - start,
                    });
                } else {
                    x += 1;
                }
            }
        }
        Self {
            width,
            height,
            runs,
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut bits = vec![false; width as usize * height as usize];
        for y in 0..height {
            for x in 0..width {
                bits[(y * width + x) as usize] = f(x, y);
            }
        }
        Self::from_dense(width, height, &bits)
    }

    /// Pixels outside the frame are dropped.
    pub fn from_pixels(width: u32, height: u32, pixels: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut bits = vec![false; width as usize * height as usize];
        for (x, y) in pixels {
            if x >= 0 && y >= 0 && (x as u64) < width as u64 && (y as u64) < height as u64 {
                bits[y as usize * width as usize + x as usize] = true;
            }
        }
        Self::from_dense(width, height, &bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn to_dense(&self) -> Vec<bool> {
        let mut bits = vec![false; self.width as usize * self.height as usize];
        for r in &self.runs {
            let base = (r.row * self.width) as usize;
            bits[base + r.start as usize..base + r.end() as usize].fill(true);
        }
        bits
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        let (x, y) = (x as u32, y as u32);
        let idx = self.runs.partition_point(|r| (r.row, r.start) <= (y, x));
        idx > 0 && {
            let r = self.runs[idx - 1];
            r.row == y && x < r.end()
        }
    }

    pub fn area(&self) -> u64 {
        self.runs.iter().map(|r| r.len as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (r.start..r.end()).map(move |x| (x, r.row)))
    }

    /// Tightest box containing every foreground pixel.
    pub fn bbox(&self) -> Result<BBox, MaskError> {
        let first = self.runs.first().ok_or(MaskError::EmptyMask)?;
        let last = self.runs.last().ok_or(MaskError::EmptyMask)?;
        let min_x = self.runs.iter().map(|r| r.start).min().unwrap_or(0);
        let max_x = self.runs.iter().map(|r| r.end()).max().unwrap_or(0);
        Ok(BBox::new(
            min_x,
            first.row,
            max_x - min_x,
            last.row - first.row + 1,
        ))
    }

    /// Mean foreground pixel coordinate.
    pub fn centroid(&self) -> Result<Point2, MaskError> {
        if self.is_empty() {
            return Err(MaskError::EmptyMask);
        }
        let (mut sx, mut sy, mut n) = (0.0f64, 0.0f64, 0.0f64);
        for r in &self.runs {
            let len = r.len as f64;
            // sum of start..end = len * (start + end - 1) / 2
            sx += len * (r.start as f64 + r.end() as f64 - 1.0) / 2.0;
            sy += len * r.row as f64;
            n += len;
        }
        Ok(Point2::new(sx / n, sy / n))
    }

    /// Orientation of the major axis of the pixel distribution, in
    /// (-π/2, π/2]. Isotropic masks report 0.
    pub fn principal_axis(&self) -> Result<f64, MaskError> {
        let c = self.centroid()?;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for (x, y) in self.pixels() {
            let dx = x as f64 - c.x;
            let dy = y as f64 - c.y;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        if (sxx - syy).abs() < 1e-9 && sxy.abs() < 1e-9 {
            return Ok(0.0);
        }
        let mut a = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        if a <= -std::f64::consts::FRAC_PI_2 {
            a += std::f64::consts::PI;
        }
        Ok(a)
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<(), MaskError> {
        if self.width != other.width || self.height != other.height {
            return Err(MaskError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask, MaskError> {
        self.check_dims(other)?;
        let a = self.to_dense();
        let b = other.to_dense();
        let bits: Vec<bool> = a.iter().zip(&b).map(|(&p, &q)| f(p, q)).collect();
        Ok(BinaryMask::from_dense(self.width, self.height, &bits))
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask, MaskError> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &BinaryMask) -> Result<BinaryMask, MaskError> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &BinaryMask) -> Result<BinaryMask, MaskError> {
        self.zip_with(other, |a, b| a && !b)
    }

    /// Grows the foreground by a Euclidean disk, clipped to the frame.
    pub fn dilate(&self, radius: u32) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let offsets = disk_offsets(radius);
        let (w, h) = (self.width as i64, self.height as i64);
        let mut bits = vec![false; (w * h) as usize];
        for (x, y) in self.pixels() {
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    bits[(ny * w + nx) as usize] = true;
                }
            }
        }
        BinaryMask::from_dense(self.width, self.height, &bits)
    }

    /// Keeps pixels whose whole disk neighbourhood is foreground. Pixels
    /// outside the frame count as background.
    pub fn erode(&self, radius: u32) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let offsets = disk_offsets(radius);
        let dense = self.to_dense();
        let (w, h) = (self.width as i64, self.height as i64);
        let kept = self.pixels().filter(|&(x, y)| {
            offsets.iter().all(|&(dx, dy)| {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                nx >= 0 && ny >= 0 && nx < w && ny < h && dense[(ny * w + nx) as usize]
            })
        });
        BinaryMask::from_pixels(self.width, self.height, kept.map(|(x, y)| (x as i64, y as i64)))
    }

    /// Foreground pixels within `thickness` of the background.
    pub fn contour(&self, thickness: u32) -> BinaryMask {
        if thickness == 0 {
            return BinaryMask::empty(self.width, self.height);
        }
        self.difference(&self.erode(thickness))
            .expect("erosion preserves dimensions")
    }

    /// Anisotropic nearest-neighbour rescale so the foreground bounding box
    /// becomes exactly `target`.
    ///
    /// Each output pixel samples the source cells its preimage covers, which
    /// reduces to plain nearest-neighbour when upsampling and guarantees the
    /// tight box of the result equals `target` when downsampling. The output
    /// frame is the source frame, grown if `target` reaches beyond it.
    pub fn rescale_to(&self, target: BBox) -> Result<BinaryMask, MaskError> {
        let src = self.bbox()?;
        if target.width == 0 || target.height == 0 {
            return Err(MaskError::DegenerateTarget);
        }
        let out_w = self.width.max(target.min_x + target.width);
        let out_h = self.height.max(target.min_y + target.height);
        let dense = self.to_dense();
        let sample = |x: u32, y: u32| dense[(y * self.width + x) as usize];
        let span = |i: u32, src_len: u32, dst_len: u32| {
            let (i, s, d) = (i as u64, src_len as u64, dst_len as u64);
            let lo = i * s / d;
            let hi = ((i + 1) * s).div_ceil(d);
            (lo as u32, hi as u32)
        };
        let mut bits = vec![false; out_w as usize * out_h as usize];
        for oy in 0..target.height {
            let (y0, y1) = span(oy, src.height, target.height);
            for ox in 0..target.width {
                let (x0, x1) = span(ox, src.width, target.width);
                let hit = (y0..y1).any(|sy| (x0..x1).any(|sx| sample(src.min_x + sx, src.min_y + sy)));
                if hit {
                    let px = target.min_x + ox;
                    let py = target.min_y + oy;
                    bits[(py * out_w + px) as usize] = true;
                }
            }
        }
        Ok(BinaryMask::from_dense(out_w, out_h, &bits))
    }

    /// Uniform rescale by `factor` about the box origin.
    pub fn rescale_uniform(&self, factor: f64) -> Result<BinaryMask, MaskError> {
        let b = self.bbox()?;
        let w = ((b.width as f64 * factor).round() as u32).max(1);
        let h = ((b.height as f64 * factor).round() as u32).max(1);
        self.rescale_to(BBox::new(b.min_x, b.min_y, w, h))
    }
}

/// A mask rasterized at a pose, with pixel coordinates that may fall outside
/// any image frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Footprint {
    x0: i64,
    y0: i64,
    width: usize,
    height: usize,
    bits: Vec<bool>,
    area: usize,
}

impl Footprint {
    /// The mask at its own pixels (centroid pose, zero rotation).
    pub fn from_mask(mask: &BinaryMask) -> Self {
        let Ok(b) = mask.bbox() else {
            return Self::empty();
        };
        let (w, h) = (b.width as usize, b.height as usize);
        let mut bits = vec![false; w * h];
        for (x, y) in mask.pixels() {
            bits[(y - b.min_y) as usize * w + (x - b.min_x) as usize] = true;
        }
        let area = mask.area() as usize;
        Self {
            x0: b.min_x as i64,
            y0: b.min_y as i64,
            width: w,
            height: h,
            bits,
            area,
        }
    }

    pub fn empty() -> Self {
        Self {
            x0: 0,
            y0: 0,
            width: 0,
            height: 0,
            bits: Vec::new(),
            area: 0,
        }
    }

    /// Rasterizes `mask` so its centroid lands on the pose centroid, rotated
    /// by the pose angle about that point.
    pub fn posed(mask: &BinaryMask, pose: &Pose2D) -> Self {
        let Ok(c) = mask.centroid() else {
            return Self::empty();
        };
        let b = mask.bbox().expect("non-empty mask has a box");
        let p = pose.centroid();
        let (s, co) = pose.theta.sin_cos();
        let forward = |q: Point2| {
            let d = q - c;
            Point2::new(co * d.x - s * d.y + p.x, s * d.x + co * d.y + p.y)
        };
        let corners = [
            Point2::new(b.min_x as f64 - 0.5, b.min_y as f64 - 0.5),
            Point2::new((b.min_x + b.width) as f64 - 0.5, b.min_y as f64 - 0.5),
            Point2::new(b.min_x as f64 - 0.5, (b.min_y + b.height) as f64 - 0.5),
            Point2::new((b.min_x + b.width) as f64 - 0.5, (b.min_y + b.height) as f64 - 0.5),
        ]
        .map(forward);
        let min_x = corners.iter().map(|q| q.x).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
        let max_x = corners.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;
        let min_y = corners.iter().map(|q| q.y).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
        let max_y = corners.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;

        let dense = mask.to_dense();
        let mw = mask.width() as i64;
        let mh = mask.height() as i64;
        let mut pixels = Vec::new();
        for oy in min_y..=max_y {
            for ox in min_x..=max_x {
                let dx = ox as f64 - p.x;
                let dy = oy as f64 - p.y;
                // inverse rotation back into the mask frame
                let qx = co * dx + s * dy + c.x;
                let qy = -s * dx + co * dy + c.y;
                let sx = (qx + 0.5).floor() as i64;
                let sy = (qy + 0.5).floor() as i64;
                if sx >= 0 && sy >= 0 && sx < mw && sy < mh && dense[(sy * mw + sx) as usize] {
                    pixels.push((ox, oy));
                }
            }
        }
        Self::from_pixel_list(&pixels)
    }

    pub fn from_pixel_list(pixels: &[(i64, i64)]) -> Self {
        if pixels.is_empty() {
            return Self::empty();
        }
        let x0 = pixels.iter().map(|p| p.0).min().unwrap_or(0);
        let x1 = pixels.iter().map(|p| p.0).max().unwrap_or(0);
        let y0 = pixels.iter().map(|p| p.1).min().unwrap_or(0);
        let y1 = pixels.iter().map(|p| p.1).max().unwrap_or(0);
        let width = (x1 - x0 + 1) as usize;
        let height = (y1 - y0 + 1) as usize;
        let mut bits = vec![false; width * height];
        for &(x, y) in pixels {
            bits[(y - y0) as usize * width + (x - x0) as usize] = true;
        }
        let area = bits.iter().filter(|&&b| b).count();
        Self {
            x0,
            y0,
            width,
            height,
            bits,
            area,
        }
    }

    pub fn area(&self) -> usize {
        self.area
    }

    pub fn is_empty(&self) -> bool {
        self.area == 0
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        let (lx, ly) = (x - self.x0, y - self.y0);
        lx >= 0
            && ly >= 0
            && (lx as usize) < self.width
            && (ly as usize) < self.height
            && self.bits[ly as usize * self.width + lx as usize]
    }

    pub fn pixels(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| {
            (
                self.x0 + (i % self.width) as i64,
                self.y0 + (i / self.width) as i64,
            )
        })
    }

    /// Inclusive pixel extent, `None` when empty.
    pub fn extent(&self) -> Option<Bounds> {
        if self.is_empty() {
            return None;
        }
        let mut b = Bounds::new(i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for (x, y) in self.pixels() {
            b.min_x = b.min_x.min(x);
            b.min_y = b.min_y.min(y);
            b.max_x = b.max_x.max(x);
            b.max_y = b.max_y.max(y);
        }
        Some(b)
    }

    pub fn centroid(&self) -> Option<Point2> {
        if self.is_empty() {
            return None;
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for (x, y) in self.pixels() {
            sx += x as f64;
            sy += y as f64;
        }
        Some(Point2::new(sx / self.area as f64, sy / self.area as f64))
    }

    pub fn dilate(&self, radius: u32) -> Footprint {
        if radius == 0 || self.is_empty() {
            return self.clone();
        }
        let offsets = disk_offsets(radius);
        let r = radius as i64;
        let width = self.width + 2 * radius as usize;
        let height = self.height + 2 * radius as usize;
        let mut bits = vec![false; width * height];
        for (x, y) in self.pixels() {
            let (lx, ly) = (x - self.x0 + r, y - self.y0 + r);
            for &(dx, dy) in &offsets {
                bits[(ly + dy) as usize * width + (lx + dx) as usize] = true;
            }
        }
        let area = bits.iter().filter(|&&b| b).count();
        Footprint {
            x0: self.x0 - r,
            y0: self.y0 - r,
            width,
            height,
            bits,
            area,
        }
    }

    /// Shares at least one pixel with `other`.
    pub fn intersects(&self, other: &Footprint) -> bool {
        if self.is_empty() || other.is_empty() {
            return false;
        }
        let x_lo = self.x0.max(other.x0);
        let y_lo = self.y0.max(other.y0);
        let x_hi = (self.x0 + self.width as i64).min(other.x0 + other.width as i64);
        let y_hi = (self.y0 + self.height as i64).min(other.y0 + other.height as i64);
        if x_lo >= x_hi || y_lo >= y_hi {
            return false;
        }
        (y_lo..y_hi).any(|y| (x_lo..x_hi).any(|x| self.contains(x, y) && other.contains(x, y)))
    }

    /// Some pixel of `self` lies within Euclidean distance `margin` of some
    /// pixel of `other`. Symmetric in its arguments.
    pub fn collides(&self, other: &Footprint, margin: u32) -> bool {
        if self.is_empty() || other.is_empty() {
            return false;
        }
        let m = margin as i64;
        if self.x0 - m >= other.x0 + other.width as i64
            || other.x0 - m >= self.x0 + self.width as i64
            || self.y0 - m >= other.y0 + other.height as i64
            || other.y0 - m >= self.y0 + self.height as i64
        {
            return false;
        }
        if margin == 0 {
            return self.intersects(other);
        }
        // dilate the smaller of the two
        if self.area <= other.area {
            self.dilate(margin).intersects(other)
        } else {
            other.dilate(margin).intersects(self)
        }
    }

    pub fn within(&self, bounds: &Bounds) -> bool {
        match self.extent() {
            None => true,
            Some(e) => {
                e.min_x >= bounds.min_x
                    && e.min_y >= bounds.min_y
                    && e.max_x <= bounds.max_x
                    && e.max_y <= bounds.max_y
            }
        }
    }

    /// The same pixels shifted by an integer offset.
    pub fn translated(&self, dx: i64, dy: i64) -> Footprint {
        Footprint {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            ..self.clone()
        }
    }

    /// Clips into a `width × height` frame.
    pub fn to_mask(&self, width: u32, height: u32) -> BinaryMask {
        BinaryMask::from_pixels(width, height, self.pixels())
    }
}

/// True iff the two posed footprints come within `margin` pixels of each
/// other (sharing a pixel when `margin` is 0).
pub fn masks_overlap(a: &BinaryMask, pose_a: &Pose2D, b: &BinaryMask, pose_b: &Pose2D, margin: u32) -> bool {
    Footprint::posed(a, pose_a).collides(&Footprint::posed(b, pose_b), margin)
}

/// The identity pose of a mask: its own centroid with zero rotation.
pub fn rest_pose(mask: &BinaryMask) -> Result<Pose2D, MaskError> {
    Ok(Pose2D::at(mask.centroid()?, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_from(w: u32, h: u32, px: &[(i64, i64)]) -> BinaryMask {
        BinaryMask::from_pixels(w, h, px.iter().copied())
    }

    #[test]
    fn bbox_examples() {
        let single = mask_from(8, 8, &[(3, 5)]);
        assert_eq!(single.bbox().unwrap(), BBox::new(3, 5, 1, 1));
        let full = BinaryMask::from_fn(4, 4, |_, _| true);
        assert_eq!(full.bbox().unwrap(), BBox::new(0, 0, 4, 4));
        let l_shape = mask_from(4, 4, &[(0, 0), (0, 1), (1, 1)]);
        assert_eq!(l_shape.bbox().unwrap(), BBox::new(0, 0, 2, 2));
        assert_eq!(BinaryMask::empty(3, 3).bbox(), Err(MaskError::EmptyMask));
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(mask_from(8, 8, &[(3, 5)]).centroid().unwrap(), Point2::new(3.0, 5.0));
        let block = mask_from(4, 4, &[(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(block.centroid().unwrap(), Point2::new(0.5, 0.5));
        let cross = mask_from(9, 9, &[(4, 2), (4, 3), (4, 4), (4, 5), (4, 6), (2, 4), (3, 4), (5, 4), (6, 4)]);
        assert_eq!(cross.centroid().unwrap(), Point2::new(4.0, 4.0));
        assert_eq!(BinaryMask::empty(2, 2).centroid(), Err(MaskError::EmptyMask));
    }

    #[test]
    fn dilate_examples() {
        let m = mask_from(7, 7, &[(3, 3)]);
        assert_eq!(m.dilate(0), m);
        let plus = mask_from(7, 7, &[(3, 3), (2, 3), (4, 3), (3, 2), (3, 4)]);
        assert_eq!(m.dilate(1), plus);

        // enumerate the quarter disk of radius 2 at the corner by hand
        let corner = mask_from(6, 6, &[(0, 0)]).dilate(2);
        let expected = mask_from(6, 6, &[(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)]);
        assert_eq!(corner, expected);
    }

    #[test]
    fn overlap_examples() {
        let sq = mask_from(32, 32, &[(5, 5)]);
        let p = Pose2D::new(5.0, 5.0, 0.0);
        assert!(masks_overlap(&sq, &p, &sq, &p, 0));
        let q = Pose2D::new(15.0, 5.0, 0.0);
        assert!(!masks_overlap(&sq, &p, &sq, &q, 0));

        let square = BinaryMask::from_fn(16, 16, |x, y| x < 4 && y < 4);
        let a = Pose2D::new(4.0, 4.0, 0.0);
        let b = Pose2D::new(8.0, 4.0, 0.0);
        // columns {2..=5} and {6..=9}: adjacent, no shared pixel
        assert!(!masks_overlap(&square, &a, &square, &b, 0));
        assert!(masks_overlap(&square, &a, &square, &b, 1));
    }

    #[test]
    fn runs_are_validated() {
        let err = BinaryMask::from_runs(4, 4, vec![Run { row: 0, start: 3, len: 2 }]);
        assert!(matches!(err, Err(MaskError::RunOutOfBounds { .. })));
        let err = BinaryMask::from_runs(4, 4, vec![Run { row: 1, start: 0, len: 1 }, Run { row: 0, start: 0, len: 1 }]);
        assert!(matches!(err, Err(MaskError::UnsortedRuns { index: 1 })));
        let err = BinaryMask::from_runs(4, 4, vec![Run { row: 0, start: 0, len: 2 }, Run { row: 0, start: 1, len: 2 }]);
        assert!(matches!(err, Err(MaskError::UnsortedRuns { index: 1 })));
        let merged = BinaryMask::from_runs(4, 4, vec![Run { row: 0, start: 0, len: 2 }, Run { row: 0, start: 2, len: 1 }]).unwrap();
        assert_eq!(merged.runs(), &[Run { row: 0, start: 0, len: 3 }]);
    }

    #[test]
    fn json_wire_format() {
        let m = mask_from(4, 3, &[(1, 0), (2, 0), (0, 2)]);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"width":4,"height":3,"runs":[[0,1,2],[2,0,1]]}"#);
        let back: BinaryMask = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<BinaryMask>(r#"{"width":2,"height":2,"runs":[[0,1,5]]}"#).is_err());
    }

    #[test]
    fn rescale_examples() {
        let sq = BinaryMask::from_fn(30, 30, |x, y| (5..15).contains(&x) && (5..15).contains(&y));
        let b = sq.bbox().unwrap();
        assert_eq!(sq.rescale_to(b).unwrap(), sq);

        let wide = sq.rescale_to(BBox::new(5, 5, 20, 10)).unwrap();
        assert_eq!(wide.bbox().unwrap(), BBox::new(5, 5, 20, 10));
        assert_eq!(wide.area(), 200);

        let dot = mask_from(5, 5, &[(2, 2)]);
        let block = dot.rescale_to(BBox::new(2, 2, 3, 3)).unwrap();
        assert_eq!(block.area(), 9);
        assert_eq!(block.bbox().unwrap(), BBox::new(2, 2, 3, 3));
        assert_eq!(BinaryMask::empty(3, 3).rescale_to(BBox::new(0, 0, 1, 1)), Err(MaskError::EmptyMask));
    }

    #[test]
    fn contour_of_square_is_ring() {
        let sq = BinaryMask::from_fn(8, 8, |x, y| (2..5).contains(&x) && (2..5).contains(&y));
        let ring = sq.contour(1);
        assert_eq!(ring.area(), 8);
        assert!(!ring.contains(3, 3));
    }

    #[test]
    fn posed_identity_reproduces_mask() {
        let m = mask_from(10, 10, &[(1, 1), (2, 1), (2, 2), (7, 3)]);
        let fp = Footprint::posed(&m, &rest_pose(&m).unwrap());
        assert_eq!(fp.to_mask(10, 10), m);
        assert_eq!(Footprint::from_mask(&m), fp);
    }

    #[test]
    fn posed_quarter_turn_is_exact_for_grid_aligned_center() {
        // 3×1 bar centred on (4,4) turned by 90° becomes a 1×3 bar
        let bar = mask_from(9, 9, &[(3, 4), (4, 4), (5, 4)]);
        let fp = Footprint::posed(&bar, &Pose2D::new(4.0, 4.0, std::f64::consts::FRAC_PI_2));
        let got: Vec<_> = fp.pixels().collect();
        assert_eq!(got, vec![(4, 3), (4, 4), (4, 5)]);
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1u32..24, 1u32..24).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), (w * h) as usize)
                .prop_map(move |bits| BinaryMask::from_dense(w, h, &bits))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn rle_round_trip(m in arb_mask()) {
            let dense = m.to_dense();
            prop_assert_eq!(BinaryMask::from_dense(m.width(), m.height(), &dense), m.clone());
            let again = BinaryMask::from_runs(m.width(), m.height(), m.runs().to_vec()).unwrap();
            prop_assert_eq!(again, m);
        }
    }

    proptest! {
        #[test]
        fn dilate_is_monotone(m in arb_mask(), r1 in 0u32..4, dr in 0u32..3) {
            let small = m.dilate(r1);
            let big = m.dilate(r1 + dr);
            prop_assert_eq!(small.difference(&big).unwrap().area(), 0);
        }

        #[test]
        fn dilate_grows_bbox_by_at_most_radius(m in arb_mask(), r in 0u32..4) {
            prop_assume!(!m.is_empty());
            let b0 = m.bbox().unwrap();
            let b1 = m.dilate(r).bbox().unwrap();
            prop_assert!(b0.min_x - b1.min_x <= r);
            prop_assert!(b0.min_y - b1.min_y <= r);
            prop_assert!((b1.min_x + b1.width) - (b0.min_x + b0.width) <= r);
            prop_assert!((b1.min_y + b1.height) - (b0.min_y + b0.height) <= r);
        }

        #[test]
        fn rescale_hits_target_dims(m in arb_mask(), tw in 1u32..40, th in 1u32..40) {
            prop_assume!(!m.is_empty());
            let out = m.rescale_to(BBox::new(0, 0, tw, th)).unwrap();
            prop_assert_eq!(out.bbox().unwrap(), BBox::new(0, 0, tw, th));
        }

        #[test]
        fn overlap_is_symmetric(a in arb_mask(), b in arb_mask(),
                                ax in 0.0..30.0f64, ay in 0.0..30.0f64, at in -3.1..3.1f64,
                                bx in 0.0..30.0f64, by in 0.0..30.0f64, bt in -3.1..3.1f64,
                                margin in 0u32..4) {
            prop_assume!(!a.is_empty() && !b.is_empty());
            let pa = Pose2D::new(ax, ay, at);
            let pb = Pose2D::new(bx, by, bt);
            prop_assert_eq!(masks_overlap(&a, &pa, &b, &pb, margin), masks_overlap(&b, &pb, &a, &pa, margin));
        }
    }
}

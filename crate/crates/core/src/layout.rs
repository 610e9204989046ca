//! Goal-layout clean-up: anchor selection, size-based scale normalisation
//! and radial collision resolution.
//!
//! A layout stores every object with the mask it was observed with and the
//! pose that mask should be rendered at. The identity pose of a mask is its
//! own centroid with zero rotation, so the initial scene is simply every
//! object at its rest pose.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Bounds, Point2, Pose2D};
use crate::mask::{rest_pose, BinaryMask, Footprint};
use crate::scene::SceneDescription;

pub const DEFAULT_MARGIN: u32 = 2;
pub const DEFAULT_STEP: f64 = 2.0;
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("layout has no movable entries")]
    EmptyLayout,
    #[error("duplicate id `{0}` in layout")]
    DuplicateId(String),
    #[error("entry `{0}` has an empty mask")]
    EmptyMask(String),
    #[error("`{id}` cannot be placed inside the workspace")]
    OutOfBounds { id: String },
    #[error("expected {expected} size ratios, got {got}")]
    RatioCount { expected: usize, got: usize },
    #[error("size ratio for `{id}` must be positive and finite, got {value}")]
    InvalidRatio { id: String, value: f64 },
    #[error("collisions remain after {iterations} iteration(s): {pairs:?}")]
    Unresolvable { iterations: usize, pairs: Vec<(String, String)> },
    #[error("unknown id `{0}`")]
    UnknownId(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutEntry {
    pub id: String,
    #[serde(skip)]
    pub mask: BinaryMask,
    pub movable: bool,
    pub pose: Pose2D,
}

impl LayoutEntry {
    pub fn footprint(&self) -> Footprint {
        Footprint::posed(&self.mask, &self.pose)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layout {
    pub entries: Vec<LayoutEntry>,
    pub bounds: Bounds,
}

/// Serialized form: poses only; masks come from the scene.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutRecord {
    pub bounds: Bounds,
    pub entries: Vec<PoseRecord>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub id: String,
    #[serde(default)]
    pub movable: Option<bool>,
    pub pose: Pose2D,
}

impl Layout {
    pub fn new(entries: Vec<LayoutEntry>, bounds: Bounds) -> Result<Self, LayoutError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(LayoutError::DuplicateId(e.id.clone()));
            }
            if e.mask.is_empty() {
                return Err(LayoutError::EmptyMask(e.id.clone()));
            }
        }
        Ok(Self { entries, bounds })
    }

    /// Every scene object at its rest pose, within the scene's workspace.
    pub fn from_scene(scene: &SceneDescription) -> Self {
        let entries = scene
            .objects
            .iter()
            .map(|o| LayoutEntry {
                id: o.id.clone(),
                mask: o.mask.clone(),
                movable: o.movable,
                pose: rest_pose(&o.mask).expect("scene masks are non-empty"),
            })
            .collect();
        Self {
            entries,
            bounds: scene.workspace_bounds(),
        }
    }

    /// Re-attaches masks from `scene` to a pose-only record.
    pub fn from_record(scene: &SceneDescription, rec: LayoutRecord) -> Result<Self, LayoutError> {
        let mut entries = Vec::with_capacity(rec.entries.len());
        for r in rec.entries {
            let obj = scene.object(&r.id).ok_or_else(|| LayoutError::UnknownId(r.id.clone()))?;
            entries.push(LayoutEntry {
                id: r.id,
                mask: obj.mask.clone(),
                movable: r.movable.unwrap_or(obj.movable),
                pose: r.pose,
            });
        }
        Self::new(entries, rec.bounds)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    pub fn entry(&self, id: &str) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn set_pose(&mut self, id: &str, pose: Pose2D) -> Result<(), LayoutError> {
        let i = self.index_of(id).ok_or_else(|| LayoutError::UnknownId(id.to_string()))?;
        self.entries[i].pose = pose;
        Ok(())
    }

    pub fn footprints(&self) -> Vec<Footprint> {
        self.entries.iter().map(LayoutEntry::footprint).collect()
    }

    /// All pairs `(i, j)`, `i < j`, whose footprints come within `margin`.
    pub fn overlapping_pairs(&self, margin: u32) -> Vec<(usize, usize)> {
        let fps = self.footprints();
        let dil: Vec<Footprint> = fps.iter().map(|f| f.dilate(margin)).collect();
        let mut pairs = Vec::new();
        for (i, d) in dil.iter().enumerate() {
            for (j, f) in fps.iter().enumerate().skip(i + 1) {
                if d.intersects(f) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    fn pair_ids(&self, pairs: &[(usize, usize)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|&(i, j)| (self.entries[i].id.clone(), self.entries[j].id.clone()))
            .collect()
    }
}

/// Index of the movable entry with the smallest summed centroid distance to
/// the other movable entries; ties go to the lowest index.
pub fn anchor_index(layout: &Layout) -> Result<usize, LayoutError> {
    let movable: Vec<usize> = (0..layout.len()).filter(|&i| layout.entries[i].movable).collect();
    let centroid = |i: usize| layout.entries[i].pose.centroid();
    let mut best: Option<(usize, f64)> = None;
    for &i in &movable {
        let total: f64 = movable.iter().map(|&j| centroid(i).distance(centroid(j))).sum();
        if best.is_none_or(|(_, b)| total < b) {
            best = Some((i, total));
        }
    }
    best.map(|(i, _)| i).ok_or(LayoutError::EmptyLayout)
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Scales movable centroids about the anchor by the median of the movable
/// entries' `size_ratios` (one per entry, `sqrt(initial area / goal area)`).
/// Orientations and stationary entries are untouched.
pub fn scale_normalize(layout: &Layout, size_ratios: &[f64]) -> Result<(Layout, f64), LayoutError> {
    if size_ratios.len() != layout.len() {
        return Err(LayoutError::RatioCount {
            expected: layout.len(),
            got: size_ratios.len(),
        });
    }
    let anchor = anchor_index(layout)?;
    let mut movable_ratios = Vec::new();
    for (e, &r) in layout.entries.iter().zip(size_ratios) {
        if e.movable {
            if !(r.is_finite() && r > 0.0) {
                return Err(LayoutError::InvalidRatio { id: e.id.clone(), value: r });
            }
            movable_ratios.push(r);
        }
    }
    let s = median(&mut movable_ratios).expect("anchor implies a movable entry");
    let a = layout.entries[anchor].pose.centroid();
    let mut out = layout.clone();
    for e in out.entries.iter_mut().filter(|e| e.movable) {
        let c = a + (e.pose.centroid() - a) * s;
        e.pose = Pose2D::at(c, e.pose.theta);
    }
    Ok((out, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionConfig {
    pub margin: u32,
    pub step: f64,
    pub max_iter: usize,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            step: DEFAULT_STEP,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Result of [`resolve_collisions_traced`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolution {
    pub layout: Layout,
    pub anchor: usize,
    pub iterations: usize,
    /// Radial distance of every entry from the anchor, before the first push
    /// and after each iteration.
    pub radial_history: Vec<Vec<f64>>,
}

/// Largest `t ∈ [0, step]` such that the entry moved by `t·dir` stays inside
/// `bounds`.
fn clipped_step(mask: &BinaryMask, pose: &Pose2D, dir: Point2, step: f64, bounds: &Bounds) -> f64 {
    let moved = |t: f64| Pose2D::new(pose.centroid_x + t * dir.x, pose.centroid_y + t * dir.y, pose.theta);
    if Footprint::posed(mask, &moved(step)).within(bounds) {
        return step;
    }
    if !Footprint::posed(mask, pose).within(bounds) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, step);
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if Footprint::posed(mask, &moved(mid)).within(bounds) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Translates a movable entry by the smallest integer offset that brings its
/// footprint inside `bounds`.
fn fit_inside(e: &mut LayoutEntry, bounds: &Bounds) -> Result<(), LayoutError> {
    let fp = e.footprint();
    let Some(ext) = fp.extent() else {
        return Ok(());
    };
    if ext.width() > bounds.width() || ext.height() > bounds.height() {
        return Err(LayoutError::OutOfBounds { id: e.id.clone() });
    }
    let shift = |lo: i64, hi: i64, blo: i64, bhi: i64| -> i64 {
        if lo < blo {
            blo - lo
        } else if hi > bhi {
            bhi - hi
        } else {
            0
        }
    };
    let dx = shift(ext.min_x, ext.max_x, bounds.min_x, bounds.max_x);
    let dy = shift(ext.min_y, ext.max_y, bounds.min_y, bounds.max_y);
    if dx != 0 || dy != 0 {
        e.pose = Pose2D::new(e.pose.centroid_x + dx as f64, e.pose.centroid_y + dy as f64, e.pose.theta);
        // rasterisation can differ by a pixel after a shift
        if !e.footprint().within(bounds) {
            return Err(LayoutError::OutOfBounds { id: e.id.clone() });
        }
    }
    Ok(())
}

pub fn resolve_collisions(layout: &Layout, cfg: &CollisionConfig) -> Result<Layout, LayoutError> {
    resolve_collisions_traced(layout, cfg).map(|r| r.layout)
}

/// Pushes colliding objects radially away from the anchor, `step` pixels per
/// iteration, until no pair comes within `margin`. Only movable, non-anchor
/// members of a colliding pair move; a push is shortened rather than let the
/// object leave the workspace.
pub fn resolve_collisions_traced(layout: &Layout, cfg: &CollisionConfig) -> Result<Resolution, LayoutError> {
    let anchor = anchor_index(layout)?;
    let mut out = layout.clone();
    let bounds = out.bounds;
    for e in out.entries.iter_mut().filter(|e| e.movable) {
        fit_inside(e, &bounds)?;
    }
    let n = out.len();
    let a = out.entries[anchor].pose.centroid();
    let radial = |l: &Layout| -> Vec<f64> { l.entries.iter().map(|e| e.pose.centroid().distance(a)).collect() };
    let mut history = vec![radial(&out)];

    let mut fps: Vec<Footprint> = out.footprints();
    let mut dil: Vec<Footprint> = fps.iter().map(|f| f.dilate(cfg.margin)).collect();
    let overlaps = |fps: &[Footprint], dil: &[Footprint]| {
        let mut pairs = Vec::new();
        for (i, d) in dil.iter().enumerate() {
            for (j, f) in fps.iter().enumerate().skip(i + 1) {
                if d.intersects(f) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    };
    let mut pairs = overlaps(&fps, &dil);
    if pairs.is_empty() {
        return Ok(Resolution {
            layout: out,
            anchor,
            iterations: 0,
            radial_history: history,
        });
    }
    // pigeonhole: the objects cannot all fit side by side
    let total_area: i64 = fps.iter().map(|f| f.area() as i64).sum();
    if total_area > bounds.area() {
        return Err(LayoutError::Unresolvable {
            iterations: 0,
            pairs: out.pair_ids(&pairs),
        });
    }

    for iter in 1..=cfg.max_iter {
        let mut movers = vec![false; n];
        for &(i, j) in &pairs {
            for k in [i, j] {
                movers[k] |= k != anchor && out.entries[k].movable;
            }
        }
        let mut moved_any = false;
        for k in (0..n).filter(|&k| movers[k]) {
            let e = &out.entries[k];
            let d = e.pose.centroid() - a;
            let dir = if d.norm() > 1e-9 {
                d * (1.0 / d.norm())
            } else {
                let phi = k as f64 * 2.0 * PI / n as f64;
                Point2::new(phi.cos(), phi.sin())
            };
            let t = clipped_step(&e.mask, &e.pose, dir, cfg.step, &bounds);
            if t > 0.0 {
                let p = e.pose;
                out.entries[k].pose = Pose2D::new(p.centroid_x + t * dir.x, p.centroid_y + t * dir.y, p.theta);
                fps[k] = out.entries[k].footprint();
                dil[k] = fps[k].dilate(cfg.margin);
                moved_any = true;
            }
        }
        history.push(radial(&out));
        pairs = overlaps(&fps, &dil);
        if pairs.is_empty() {
            return Ok(Resolution {
                layout: out,
                anchor,
                iterations: iter,
                radial_history: history,
            });
        }
        if !moved_any {
            return Err(LayoutError::Unresolvable {
                iterations: iter,
                pairs: out.pair_ids(&pairs),
            });
        }
    }
    Err(LayoutError::Unresolvable {
        iterations: cfg.max_iter,
        pairs: out.pair_ids(&pairs),
    })
}

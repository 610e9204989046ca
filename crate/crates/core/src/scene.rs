//! Object-level scene descriptions and their JSON file format.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Bounds;
use crate::mask::{BinaryMask, MaskError};
use crate::prompting::{LexiconTagger, NounTagger};

pub const DEFAULT_FEATURE_DIM: usize = 512;
const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("object {id}: {source}")]
    Mask {
        id: String,
        #[source]
        source: MaskError,
    },
    #[error("object {id}: mask is empty")]
    EmptyObjectMask { id: String },
    #[error("object {id}: {mw}x{mh} mask does not fit a {iw}x{ih} image")]
    MaskOutOfFrame {
        id: String,
        mw: u32,
        mh: u32,
        iw: u32,
        ih: u32,
    },
    #[error("duplicate object id {0}")]
    DuplicateId(String),
    #[error("object {id}: feature norm {norm} is not 1")]
    FeatureNotUnit { id: String, norm: f64 },
    #[error("object {id}: feature has dimension {got}, expected {expected}")]
    FeatureDimension { id: String, expected: usize, got: usize },
    #[error("object {id}: no class noun ({reason})")]
    MissingNoun { id: String, reason: String },
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("table edge band is {0}x{1}, image is {2}x{3}")]
    BandFrame(u32, u32, u32, u32),
}

/// Top-down pinhole camera over a table plane at fixed depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(rename = "table_depth_m")]
    pub table_depth: f64,
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), SceneError> {
        let finite = [self.fx, self.fy, self.cx, self.cy, self.table_depth]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(SceneError::InvalidCamera("non-finite parameter"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(SceneError::InvalidCamera("focal lengths must be positive"));
        }
        if self.table_depth <= 0.0 {
            return Err(SceneError::InvalidCamera("table depth must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: String,
    pub caption: String,
    pub class_noun: String,
    pub movable: bool,
    pub mask: BinaryMask,
    pub feature: Vec<f64>,
}

/// On-disk object record; `class_noun` may be omitted and is then derived
/// from the caption.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectRecord {
    id: String,
    #[serde(default)]
    caption: String,
    #[serde(default)]
    class_noun: Option<String>,
    movable: bool,
    mask: BinaryMask,
    feature: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales a vector to unit length; zero vectors are left unchanged.
pub fn unit_normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn build_objects(
    records: Vec<ObjectRecord>,
    width: u32,
    height: u32,
    tagger: &dyn NounTagger,
) -> Result<Vec<ObjectInstance>, SceneError> {
    let mut objects = Vec::with_capacity(records.len());
    for r in records {
        let class_noun = match r.class_noun.filter(|n| !n.trim().is_empty()) {
            Some(n) => n.trim().to_lowercase(),
            None => tagger
                .class_noun(&r.caption)
                .map_err(|e| SceneError::MissingNoun {
                    id: r.id.clone(),
                    reason: e.to_string(),
                })?,
        };
        let mask = reframe(&r.id, r.mask, width, height)?;
        objects.push(ObjectInstance {
            id: r.id,
            caption: r.caption,
            class_noun,
            movable: r.movable,
            mask,
            feature: r.feature,
        });
    }
    validate_objects(&objects, width, height)?;
    Ok(objects)
}

/// Pads a mask anchored at the image origin out to the full frame.
fn reframe(id: &str, mask: BinaryMask, width: u32, height: u32) -> Result<BinaryMask, SceneError> {
    if mask.width() == width && mask.height() == height {
        return Ok(mask);
    }
    if mask.width() > width || mask.height() > height {
        return Err(SceneError::MaskOutOfFrame {
            id: id.to_string(),
            mw: mask.width(),
            mh: mask.height(),
            iw: width,
            ih: height,
        });
    }
    BinaryMask::from_runs(width, height, mask.runs().to_vec()).map_err(|source| SceneError::Mask {
        id: id.to_string(),
        source,
    })
}

/// Checks the invariants shared by scenes and candidates.
pub fn validate_objects(objects: &[ObjectInstance], width: u32, height: u32) -> Result<(), SceneError> {
    let mut seen = std::collections::BTreeSet::new();
    let dim = objects.first().map(|o| o.feature.len());
    for o in objects {
        if !seen.insert(o.id.as_str()) {
            return Err(SceneError::DuplicateId(o.id.clone()));
        }
        if o.mask.width() != width || o.mask.height() != height {
            return Err(SceneError::MaskOutOfFrame {
                id: o.id.clone(),
                mw: o.mask.width(),
                mh: o.mask.height(),
                iw: width,
                ih: height,
            });
        }
        if o.mask.is_empty() {
            return Err(SceneError::EmptyObjectMask { id: o.id.clone() });
        }
        if o.class_noun.trim().is_empty() {
            return Err(SceneError::MissingNoun {
                id: o.id.clone(),
                reason: "empty class noun".into(),
            });
        }
        let n = norm(&o.feature);
        if !n.is_finite() || (n - 1.0).abs() >= UNIT_NORM_TOL {
            return Err(SceneError::FeatureNotUnit { id: o.id.clone(), norm: n });
        }
        if let Some(d) = dim {
            if o.feature.len() != d {
                return Err(SceneError::FeatureDimension {
                    id: o.id.clone(),
                    expected: d,
                    got: o.feature.len(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneDescription {
    pub image_width: u32,
    pub image_height: u32,
    pub camera: CameraModel,
    pub table_edge_band: BinaryMask,
    pub objects: Vec<ObjectInstance>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneRecord {
    image_width: u32,
    image_height: u32,
    camera: CameraModel,
    table_edge_band: BinaryMask,
    objects: Vec<ObjectRecord>,
}

fn read(path: &Path) -> Result<String, SceneError> {
    std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl SceneDescription {
    pub fn new(
        image_width: u32,
        image_height: u32,
        camera: CameraModel,
        table_edge_band: BinaryMask,
        objects: Vec<ObjectInstance>,
    ) -> Result<Self, SceneError> {
        let scene = Self {
            image_width,
            image_height,
            camera,
            table_edge_band,
            objects,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.camera.validate()?;
        let band = &self.table_edge_band;
        if band.width() != self.image_width || band.height() != self.image_height {
            return Err(SceneError::BandFrame(
                band.width(),
                band.height(),
                self.image_width,
                self.image_height,
            ));
        }
        validate_objects(&self.objects, self.image_width, self.image_height)
    }

    pub fn from_json_str(s: &str) -> Result<Self, SceneError> {
        Self::from_json_str_with(s, &LexiconTagger::default())
    }

    /// Parses and validates, deriving missing class nouns with `tagger`.
    pub fn from_json_str_with(s: &str, tagger: &dyn NounTagger) -> Result<Self, SceneError> {
        let rec: SceneRecord = serde_json::from_str(s)?;
        let band = if rec.table_edge_band.width() == rec.image_width
            && rec.table_edge_band.height() == rec.image_height
        {
            rec.table_edge_band
        } else {
            reframe("table_edge_band", rec.table_edge_band, rec.image_width, rec.image_height)?
        };
        let objects = build_objects(rec.objects, rec.image_width, rec.image_height, tagger)?;
        Self::new(rec.image_width, rec.image_height, rec.camera, band, objects)
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        Self::from_json_str(&read(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn movable(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(|o| o.movable)
    }

    pub fn stationary(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(|o| !o.movable)
    }

    pub fn movable_count(&self) -> usize {
        self.movable().count()
    }

    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// The table region inside the edge band (its tight box), or the whole
    /// image when there is no band.
    pub fn workspace_bounds(&self) -> Bounds {
        let full = Bounds::new(0, 0, self.image_width as i64 - 1, self.image_height as i64 - 1);
        if self.table_edge_band.is_empty() {
            return full;
        }
        let dense = self.table_edge_band.to_dense();
        let inside = BinaryMask::from_dense(
            self.image_width,
            self.image_height,
            &dense.iter().map(|b| !b).collect::<Vec<_>>(),
        );
        match inside.bbox() {
            Ok(b) => Bounds::new(
                b.min_x as i64,
                b.min_y as i64,
                (b.min_x + b.width) as i64 - 1,
                (b.min_y + b.height) as i64 - 1,
            ),
            Err(_) => full,
        }
    }
}

/// A generated image reduced to object-level form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScene {
    pub source_tag: String,
    pub image_width: u32,
    pub image_height: u32,
    pub objects: Vec<ObjectInstance>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRecord {
    #[serde(default)]
    source_tag: String,
    image_width: u32,
    image_height: u32,
    objects: Vec<ObjectRecord>,
}

impl CandidateScene {
    pub fn new(
        source_tag: impl Into<String>,
        image_width: u32,
        image_height: u32,
        objects: Vec<ObjectInstance>,
    ) -> Result<Self, SceneError> {
        validate_objects(&objects, image_width, image_height)?;
        Ok(Self {
            source_tag: source_tag.into(),
            image_width,
            image_height,
            objects,
        })
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self, SceneError> {
        let rec: CandidateRecord = serde_json::from_value(v)?;
        let objects = build_objects(rec.objects, rec.image_width, rec.image_height, &LexiconTagger::default())?;
        Self::new(rec.source_tag, rec.image_width, rec.image_height, objects)
    }

    pub fn from_json_str(s: &str) -> Result<Self, SceneError> {
        Self::from_value(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        Self::from_json_str(&read(path)?)
    }

    pub fn movable(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(|o| o.movable)
    }

    pub fn movable_count(&self) -> usize {
        self.movable().count()
    }
}

//! Template-driven candidate generator.
//!
//! Each candidate re-poses the reference scene's own movable masks into a
//! parameterised arrangement (plus seeded jitter), so the "right answer" is
//! known exactly and the whole pipeline can be checked in closed loop.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{GenerationRequest, GoalProvider, ProviderError};
use crate::geometry::{normalize_angle, Point2, Pose2D};
use crate::mask::{rest_pose, Footprint};
use crate::scene::{unit_normalize, CandidateScene, ObjectInstance, SceneDescription};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    PlaceSetting,
    Office,
    FruitCircle,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::PlaceSetting, Template::Office, Template::FruitCircle];

    pub fn name(self) -> &'static str {
        match self {
            Template::PlaceSetting => "place-setting",
            Template::Office => "office",
            Template::FruitCircle => "fruit-circle",
        }
    }
}

impl FromStr for Template {
    type Err = ProviderError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ProviderError::UnknownTemplate(s.to_string()))
    }
}

/// Nouns whose silhouettes are close to rotation invariant; the template
/// leaves their orientation alone.
pub const ROUND_NOUNS: &[&str] = &["plate", "bowl", "orange", "apple"];

#[derive(Debug, Clone, Copy)]
enum Facing {
    /// Major axis at this absolute image angle.
    Axis(f64),
    Keep,
}

struct Chains {
    center: &'static [&'static str],
    left: &'static [&'static str],
    right: &'static [&'static str],
    above: &'static [&'static str],
}

const PLACE_SETTING: Chains = Chains {
    center: &["plate", "bowl"],
    left: &["fork", "napkin"],
    right: &["knife", "spoon"],
    above: &["cup", "mug", "glass"],
};

const OFFICE: Chains = Chains {
    center: &["keyboard", "laptop"],
    left: &["pen", "pencil", "notebook", "book"],
    right: &["mouse", "phone"],
    above: &["cup", "mug", "tablet"],
};

fn facing(template: Template, noun: &str) -> Facing {
    if ROUND_NOUNS.contains(&noun) {
        return Facing::Keep;
    }
    match (template, noun) {
        (Template::Office, "keyboard" | "laptop") => Facing::Axis(0.0),
        (Template::FruitCircle, _) => Facing::Keep,
        _ => Facing::Axis(FRAC_PI_2),
    }
}

/// Footprint extents about the centroid: (left, right, up, down), all ≥ 0.
fn half_extents(obj: &ObjectInstance, theta: f64) -> (f64, f64, f64, f64) {
    let fp = Footprint::posed(&obj.mask, &Pose2D::new(0.0, 0.0, theta));
    match fp.extent() {
        Some(b) => (-(b.min_x as f64), b.max_x as f64, -(b.min_y as f64), b.max_y as f64),
        None => (0.0, 0.0, 0.0, 0.0),
    }
}

fn radius(obj: &ObjectInstance) -> f64 {
    let c = obj.mask.centroid().unwrap_or_default();
    obj.mask
        .pixels()
        .map(|(x, y)| Point2::new(x as f64, y as f64).distance(c))
        .fold(0.0, f64::max)
        + 0.5
}

pub struct SyntheticProvider {
    template: Template,
    reference: SceneDescription,
    /// Uniform position jitter half-width, pixels.
    pub jitter_px: f64,
    /// Uniform orientation jitter half-width, degrees.
    pub jitter_deg: f64,
    /// Gap between neighbouring objects in the template, pixels.
    pub gap: f64,
    /// Clearance the finished arrangement must keep, pixels.
    pub clearance: u32,
    /// Leave this many movable objects out of every candidate.
    pub drop_objects: usize,
    /// Overrides the template: listed objects take these poses, the rest
    /// stay where the reference has them.
    explicit: Option<Vec<(String, Pose2D)>>,
}

/// One candidate and the pose each reference object was given in it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticCandidate {
    pub candidate: CandidateScene,
    /// (reference id, pose of its own mask): centroid plus rotation.
    pub poses: Vec<(String, Pose2D)>,
}

impl SyntheticProvider {
    pub fn new(template: Template, reference: SceneDescription) -> Self {
        Self {
            template,
            reference,
            jitter_px: 1.5,
            jitter_deg: 2.0,
            gap: 12.0,
            clearance: 4,
            drop_objects: 0,
            explicit: None,
        }
    }

    /// A provider that always "generates" the given arrangement.
    pub fn with_poses(reference: SceneDescription, poses: Vec<(String, Pose2D)>) -> Self {
        Self {
            explicit: Some(poses),
            jitter_px: 0.0,
            jitter_deg: 0.0,
            ..Self::new(Template::PlaceSetting, reference)
        }
    }

    fn label(&self) -> &'static str {
        if self.explicit.is_some() {
            "explicit"
        } else {
            self.template.name()
        }
    }

    pub fn template(&self) -> Template {
        self.template
    }

    pub fn with_jitter(mut self, px: f64, deg: f64) -> Self {
        self.jitter_px = px;
        self.jitter_deg = deg;
        self
    }

    pub fn with_dropped_objects(mut self, k: usize) -> Self {
        self.drop_objects = k;
        self
    }

    /// Rotation to apply to `obj`'s own mask so it faces as the template asks.
    fn rotation_for(&self, obj: &ObjectInstance) -> f64 {
        match facing(self.template, &obj.class_noun) {
            Facing::Keep => 0.0,
            Facing::Axis(target) => {
                let current = obj.mask.principal_axis().unwrap_or(0.0);
                // the axis is a line: pick the smaller of the two turns
                let d = normalize_angle(target - current);
                if d > FRAC_PI_2 {
                    d - PI
                } else if d <= -FRAC_PI_2 {
                    d + PI
                } else {
                    d
                }
            }
        }
    }

    /// Noise-free template poses for the reference's movable objects.
    pub fn template_poses(&self) -> Vec<(String, Pose2D)> {
        let movable: Vec<&ObjectInstance> = self.reference.movable().collect();
        if let Some(explicit) = &self.explicit {
            return movable
                .iter()
                .map(|o| {
                    let pose = explicit
                        .iter()
                        .find(|(id, _)| *id == o.id)
                        .map(|(_, p)| *p)
                        .unwrap_or_else(|| rest_pose(&o.mask).expect("validated scene masks are non-empty"));
                    (o.id.clone(), pose)
                })
                .collect();
        }
        let center = self.reference.workspace_bounds().center();
        let thetas: Vec<f64> = movable.iter().map(|o| self.rotation_for(o)).collect();
        let positions = match self.template {
            Template::PlaceSetting => self.chain_layout(&PLACE_SETTING, &movable, &thetas, center),
            Template::Office => self.chain_layout(&OFFICE, &movable, &thetas, center),
            Template::FruitCircle => self.circle_layout(&movable, center),
        };
        movable
            .iter()
            .zip(positions)
            .zip(&thetas)
            .map(|((o, p), &t)| (o.id.clone(), Pose2D::at(p, t)))
            .collect()
    }

    fn chain_layout(&self, spec: &Chains, objs: &[&ObjectInstance], thetas: &[f64], center: Point2) -> Vec<Point2> {
        let n = objs.len();
        let rank = |list: &[&str], noun: &str| list.iter().position(|&x| x == noun);
        let mut middle = None;
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut above = Vec::new();
        let mut overflow = Vec::new();
        for (i, o) in objs.iter().enumerate() {
            let noun = o.class_noun.as_str();
            if middle.is_none() && rank(spec.center, noun).is_some() {
                middle = Some(i);
            } else if let Some(r) = rank(spec.left, noun) {
                left.push((r, i));
            } else if let Some(r) = rank(spec.right, noun) {
                right.push((r, i));
            } else if rank(spec.above, noun).is_some() {
                above.push(i);
            } else {
                overflow.push(i);
            }
        }
        // both chains run from the centre outwards
        left.sort();
        right.sort();
        let mut left: Vec<usize> = left.into_iter().map(|(_, i)| i).collect();
        let mut right: Vec<usize> = right.into_iter().map(|(_, i)| i).collect();
        for (k, i) in overflow.into_iter().enumerate() {
            if k % 2 == 0 {
                right.push(i);
            } else {
                left.push(i);
            }
        }
        let ext: Vec<_> = (0..n).map(|i| half_extents(objs[i], thetas[i])).collect();
        let mut pos = vec![center; n];
        let (mut reach_l, mut reach_r, mut top) = (self.gap / 2.0, self.gap / 2.0, 0.0);
        if let Some(m) = middle {
            let (l, r, u, _) = ext[m];
            reach_l = l;
            reach_r = r;
            top = u;
        }
        for &i in &left {
            let (_, r, u, _) = ext[i];
            let x = center.x - reach_l - self.gap - r;
            pos[i] = Point2::new(x, center.y);
            reach_l = center.x - x + ext[i].0;
            top = f64::max(top, u);
        }
        for &i in &right {
            let (l, _, u, _) = ext[i];
            let x = center.x + reach_r + self.gap + l;
            pos[i] = Point2::new(x, center.y);
            reach_r = x - center.x + ext[i].1;
            top = f64::max(top, u);
        }
        // items above the row, packed left to right and centred
        let total: f64 = above.iter().map(|&i| ext[i].0 + ext[i].1).sum::<f64>() + self.gap * above.len().saturating_sub(1) as f64;
        let mut x = center.x - total / 2.0;
        for &i in &above {
            let (l, r, _, d) = ext[i];
            pos[i] = Point2::new(x + l, center.y - top - self.gap - d);
            x += l + r + self.gap;
        }
        pos
    }

    fn circle_layout(&self, objs: &[&ObjectInstance], center: Point2) -> Vec<Point2> {
        let n = objs.len();
        let mut pos = vec![center; n];
        let hub = objs.iter().position(|o| o.class_noun == "bowl");
        let ring: Vec<usize> = (0..n).filter(|&i| Some(i) != hub).collect();
        let radii: Vec<f64> = objs.iter().map(|o| radius(o)).collect();
        let m = ring.len();
        if m == 0 {
            return pos;
        }
        let mut r = hub.map_or(0.0, |h| radii[h]) + ring.iter().map(|&i| radii[i]).fold(0.0, f64::max) + self.gap;
        if m >= 2 {
            let chord = 2.0 * (PI / m as f64).sin();
            for k in 0..m {
                let a = radii[ring[k]];
                let b = radii[ring[(k + 1) % m]];
                r = r.max((a + b + self.gap) / chord);
            }
        } else if hub.is_none() {
            r = 0.0;
        }
        for (k, &i) in ring.iter().enumerate() {
            let phi = -FRAC_PI_2 + 2.0 * PI * k as f64 / m as f64;
            pos[i] = center + Point2::new(phi.cos(), phi.sin()) * r;
        }
        pos
    }

    fn rng_for(seed: Option<u64>, index: usize) -> ChaCha8Rng {
        let s = seed.unwrap_or(0);
        ChaCha8Rng::seed_from_u64(s.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index as u64)
    }

    /// Builds the `index`-th candidate of the batch generated with `seed`.
    pub fn generate(&self, seed: Option<u64>, index: usize) -> Result<SyntheticCandidate, ProviderError> {
        let mut rng = Self::rng_for(seed, index);
        let movable: Vec<&ObjectInstance> = self.reference.movable().collect();
        let keep = movable.len().saturating_sub(self.drop_objects);
        let mut poses = Vec::with_capacity(keep);
        for (id, pose) in self.template_poses().into_iter().take(keep) {
            let dx = rng.random_range(-1.0..=1.0) * self.jitter_px;
            let dy = rng.random_range(-1.0..=1.0) * self.jitter_px;
            let dt = (rng.random_range(-1.0..=1.0) * self.jitter_deg).to_radians();
            poses.push((id, Pose2D::new(pose.centroid_x + dx, pose.centroid_y + dy, pose.theta + dt)));
        }
        let (w, h) = (self.reference.image_width, self.reference.image_height);
        let bounds = self.reference.workspace_bounds();
        let mut footprints: Vec<(String, Footprint)> = self
            .reference
            .stationary()
            .map(|o| (o.id.clone(), Footprint::from_mask(&o.mask)))
            .collect();
        let mut objects = Vec::new();
        for (id, pose) in &poses {
            let obj = self.reference.object(id).expect("pose for a reference object");
            let fp = Footprint::posed(&obj.mask, pose);
            let misfit = |reason: String| ProviderError::TemplateDoesNotFit {
                template: self.label().into(),
                reason,
            };
            if !fp.within(&bounds) {
                return Err(misfit(format!("{id} leaves the workspace")));
            }
            if let Some((other, _)) = footprints.iter().find(|(_, f)| f.collides(&fp, self.clearance)) {
                return Err(misfit(format!("{id} collides with {other}")));
            }
            let mut feature = obj.feature.clone();
            let sigma = 0.05 / (feature.len() as f64).sqrt();
            feature.iter_mut().for_each(|v| *v += sigma * rng.random_range(-1.0..=1.0));
            unit_normalize(&mut feature);
            objects.push(ObjectInstance {
                id: String::new(),
                caption: obj.caption.clone(),
                class_noun: obj.class_noun.clone(),
                movable: true,
                mask: fp.to_mask(w, h),
                feature,
            });
            footprints.push((id.clone(), fp));
        }
        // detections come back in no particular order
        objects.shuffle(&mut rng);
        for o in self.reference.stationary() {
            objects.push(o.clone());
        }
        for (k, o) in objects.iter_mut().enumerate() {
            if o.movable {
                o.id = format!("gen-{k}");
            }
        }
        let tag = format!("synthetic:{}:seed={}:{index}", self.label(), seed.map_or("none".into(), |s| s.to_string()));
        let candidate = CandidateScene::new(tag, w, h, objects).map_err(|e| ProviderError::MalformedCandidate {
            source_tag: self.label().into(),
            reason: e.to_string(),
        })?;
        Ok(SyntheticCandidate { candidate, poses })
    }
}

impl GoalProvider for SyntheticProvider {
    fn describe(&self) -> String {
        format!("synthetic:{}", self.label())
    }

    fn request_batch(&self, request: &GenerationRequest) -> Result<Vec<CandidateScene>, ProviderError> {
        let m = &request.inpaint.mask;
        if m.width() != self.reference.image_width || m.height() != self.reference.image_height {
            return Err(ProviderError::InvalidRequest(format!(
                "inpaint mask is {}x{}, reference scene is {}x{}",
                m.width(),
                m.height(),
                self.reference.image_width,
                self.reference.image_height
            )));
        }
        (0..request.batch_size)
            .into_par_iter()
            .map(|k| self.generate(request.seed, k).map(|c| c.candidate))
            .collect()
    }
}

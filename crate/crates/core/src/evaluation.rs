//! Zero-shot baselines and the missing-object error metrics.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_distance, normalize_angle, Point2, Pose2D};
use crate::layout::{median, Layout, LayoutEntry};
use crate::mask::{BinaryMask, Footprint};
use crate::planning::pixel_to_workspace;
use crate::scene::{CameraModel, ObjectInstance, SceneDescription};

/// Objects whose orientation error is not reported.
pub const DEFAULT_SYMMETRIC: &[&str] = &["plate", "bowl", "orange", "apple"];
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("could not place `{id}` without collisions after {attempts} attempts")]
    PlacementFailed { id: String, attempts: usize },
    #[error("objects do not fit on the midline: {reason}")]
    DoesNotFit { reason: String },
    #[error("need at least two fixed objects, have {0}")]
    TooFewFixed(usize),
    #[error("no collision-free pose for `{0}` on the fixed-object line")]
    NoFreePose(String),
    #[error("acceptable pose set for `{0}` is empty")]
    NoAcceptablePose(String),
    #[error("cannot aggregate an empty error list")]
    EmptyList,
}

/// Pose of `mask` whose major axis makes the absolute image angle `target`
/// (a line, so the smaller of the two turns is used).
pub fn rotation_to_axis(mask: &BinaryMask, target: f64) -> f64 {
    let current = mask.principal_axis().unwrap_or(0.0);
    let d = normalize_angle(target - current);
    if d > FRAC_PI_2 {
        d - PI
    } else if d <= -FRAC_PI_2 {
        d + PI
    } else {
        d
    }
}

fn stationary_entries(scene: &SceneDescription) -> Vec<LayoutEntry> {
    Layout::from_scene(scene).entries.into_iter().filter(|e| !e.movable).collect()
}

/// Uniformly random collision-free poses for every movable object, placed in
/// scene order with stationary objects left where they are.
pub fn baseline_random(scene: &SceneDescription, seed: u64, max_attempts: usize, margin: u32) -> Result<Layout, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = scene.workspace_bounds();
    let mut placed: Vec<Footprint> = stationary_entries(scene).iter().map(LayoutEntry::footprint).collect();
    let mut layout = Layout::from_scene(scene);
    for e in layout.entries.iter_mut().filter(|e| e.movable) {
        let mut done = false;
        for _ in 0..max_attempts {
            let pose = Pose2D::new(
                rng.random_range(bounds.min_x as f64..=bounds.max_x as f64),
                rng.random_range(bounds.min_y as f64..=bounds.max_y as f64),
                rng.random_range(-PI..PI),
            );
            let fp = Footprint::posed(&e.mask, &pose);
            if fp.within(&bounds) && placed.iter().all(|o| !o.collides(&fp, margin)) {
                e.pose = pose;
                placed.push(fp);
                done = true;
                break;
            }
        }
        if !done {
            return Err(EvalError::PlacementFailed {
                id: e.id.clone(),
                attempts: max_attempts,
            });
        }
    }
    Ok(layout)
}

/// A random collision-free pose for one extra object among `fixed`.
pub fn baseline_random_missing(
    fixed: &Layout,
    missing: &ObjectInstance,
    seed: u64,
    max_attempts: usize,
    margin: u32,
) -> Result<Pose2D, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = fixed.bounds;
    let others = fixed.footprints();
    for _ in 0..max_attempts {
        let pose = Pose2D::new(
            rng.random_range(b.min_x as f64..=b.max_x as f64),
            rng.random_range(b.min_y as f64..=b.max_y as f64),
            rng.random_range(-PI..PI),
        );
        let fp = Footprint::posed(&missing.mask, &pose);
        if fp.within(&b) && others.iter().all(|o| !o.collides(&fp, margin)) {
            return Ok(pose);
        }
    }
    Err(EvalError::PlacementFailed {
        id: missing.id.clone(),
        attempts: max_attempts,
    })
}

/// Movable objects in id order, long axis vertical, evenly spaced along the
/// horizontal midline of the workspace.
pub fn baseline_geometric(scene: &SceneDescription, margin: u32) -> Result<Layout, EvalError> {
    let bounds = scene.workspace_bounds();
    let mut layout = Layout::from_scene(scene);
    let mut order: Vec<usize> = (0..layout.len()).filter(|&i| layout.entries[i].movable).collect();
    order.sort_by(|&a, &b| layout.entries[a].id.cmp(&layout.entries[b].id));
    if order.is_empty() {
        return Ok(layout);
    }
    // footprint extents at the upright pose about the centroid
    let mut specs = Vec::with_capacity(order.len());
    for &i in &order {
        let e = &layout.entries[i];
        let theta = rotation_to_axis(&e.mask, FRAC_PI_2);
        let ext = Footprint::posed(&e.mask, &Pose2D::new(0.0, 0.0, theta))
            .extent()
            .expect("non-empty mask");
        if ext.height() > bounds.height() {
            return Err(EvalError::DoesNotFit {
                reason: format!("`{}` is taller than the workspace", e.id),
            });
        }
        specs.push((i, theta, ext));
    }
    let widths: f64 = specs.iter().map(|(_, _, e)| e.width() as f64).sum();
    let gap = (bounds.width() as f64 - widths) / (specs.len() + 1) as f64;
    if gap < margin as f64 + 1.0 {
        return Err(EvalError::DoesNotFit {
            reason: format!("gap {gap:.2} px is below the {margin} px margin"),
        });
    }
    let mid = bounds.center().y;
    let mut left = bounds.min_x as f64;
    for (i, theta, ext) in specs {
        left += gap;
        // ext.min_x is the offset of the left-most pixel from the centroid
        let cx = left - ext.min_x as f64;
        let cy = mid - 0.5 * (ext.min_y + ext.max_y) as f64;
        layout.entries[i].pose = Pose2D::new(cx, cy, theta);
        left += ext.width() as f64;
    }
    let stationary: Vec<Footprint> = stationary_entries(scene).iter().map(LayoutEntry::footprint).collect();
    for e in layout.entries.iter().filter(|e| e.movable) {
        let fp = e.footprint();
        if stationary.iter().any(|s| s.collides(&fp, margin)) {
            return Err(EvalError::DoesNotFit {
                reason: format!("`{}` lands on a stationary object", e.id),
            });
        }
    }
    Ok(layout)
}

/// Places `missing` on the line through the two closest fixed centroids,
/// scanning outward from their midpoint in 1-px steps, oriented like the
/// nearest fixed object.
pub fn baseline_geometric_missing(fixed: &Layout, missing: &ObjectInstance, margin: u32) -> Result<Pose2D, EvalError> {
    let n = fixed.len();
    if n < 2 {
        return Err(EvalError::TooFewFixed(n));
    }
    let c: Vec<Point2> = fixed.entries.iter().map(|e| e.pose.centroid()).collect();
    let mut pair = (0, 1);
    for i in 0..n {
        for j in i + 1..n {
            if c[i].distance(c[j]) < c[pair.0].distance(c[pair.1]) {
                pair = (i, j);
            }
        }
    }
    let (a, b) = (c[pair.0], c[pair.1]);
    let d = b - a;
    let dir = if d.norm() > 1e-9 { d * (1.0 / d.norm()) } else { Point2::new(1.0, 0.0) };
    let origin = (a + b) * 0.5;
    let fps = fixed.footprints();
    // fixed-object axes in image space: mask axis turned by the pose angle
    let axes: Vec<f64> = fixed
        .entries
        .iter()
        .map(|e| e.mask.principal_axis().unwrap_or(0.0) + e.pose.theta)
        .collect();
    let bounds = fixed.bounds;
    let reach = bounds.width() + bounds.height();
    for k in 0..=reach {
        for t in if k == 0 { vec![0] } else { vec![k, -k] } {
            let p = origin + dir * t as f64;
            if !bounds.contains_point(p) {
                continue;
            }
            let nearest = (0..n)
                .min_by(|&i, &j| c[i].distance(p).total_cmp(&c[j].distance(p)))
                .expect("n >= 2");
            let pose = Pose2D::at(p, rotation_to_axis(&missing.mask, axes[nearest]));
            let fp = Footprint::posed(&missing.mask, &pose);
            if fp.within(&bounds) && fps.iter().all(|o| !o.collides(&fp, margin)) {
                return Ok(pose);
            }
        }
    }
    Err(EvalError::NoFreePose(missing.id.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptablePoseSet {
    pub object_id: String,
    pub poses: Vec<Pose2D>,
}

/// Distance in centimetres; orientation in degrees, `None` when the object
/// is rotationally symmetric and orientation is not scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub distance_cm: f64,
    pub orientation_deg: Option<f64>,
}

impl PoseError {
    pub fn is_exempt(&self) -> bool {
        self.orientation_deg.is_none()
    }
}

/// Error against the acceptable pose with the smallest metric distance
/// (ties to the earliest listed).
pub fn pose_error(
    predicted: &Pose2D,
    acceptable: &AcceptablePoseSet,
    camera: &CameraModel,
    symmetric: bool,
) -> Result<PoseError, EvalError> {
    let p = pixel_to_workspace(camera, predicted.centroid_x, predicted.centroid_y);
    let mut best: Option<(f64, &Pose2D)> = None;
    for a in &acceptable.poses {
        let q = pixel_to_workspace(camera, a.centroid_x, a.centroid_y);
        let d = p.distance(q);
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, a));
        }
    }
    let (d, pose) = best.ok_or_else(|| EvalError::NoAcceptablePose(acceptable.object_id.clone()))?;
    Ok(PoseError {
        distance_cm: d * 100.0,
        orientation_deg: (!symmetric).then(|| angle_distance(predicted.theta, pose.theta).to_degrees()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub median_cm: f64,
    /// Absent when every orientation was exempt.
    pub median_deg: Option<f64>,
    pub count: usize,
}

pub fn aggregate_median(errors: &[PoseError]) -> Result<ErrorSummary, EvalError> {
    let mut cm: Vec<f64> = errors.iter().map(|e| e.distance_cm).collect();
    let mut deg: Vec<f64> = errors.iter().filter_map(|e| e.orientation_deg).collect();
    Ok(ErrorSummary {
        median_cm: median(&mut cm).ok_or(EvalError::EmptyList)?,
        median_deg: median(&mut deg),
        count: errors.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub object_id: String,
    pub class_noun: String,
    pub method: String,
    pub predicted: Pose2D,
    pub error: PoseError,
}

/// Per-object, per-method errors with order-stable medians.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    /// class noun -> method -> summary
    pub by_object: BTreeMap<String, BTreeMap<String, ErrorSummary>>,
    pub by_method: BTreeMap<String, ErrorSummary>,
}

impl EvalReport {
    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn summary(&self) -> ReportSummary {
        let mut groups: BTreeMap<String, BTreeMap<String, Vec<PoseError>>> = BTreeMap::new();
        let mut methods: BTreeMap<String, Vec<PoseError>> = BTreeMap::new();
        for r in &self.rows {
            groups
                .entry(r.class_noun.clone())
                .or_default()
                .entry(r.method.clone())
                .or_default()
                .push(r.error);
            methods.entry(r.method.clone()).or_default().push(r.error);
        }
        let agg = |v: &Vec<PoseError>| aggregate_median(v).expect("groups are non-empty");
        ReportSummary {
            by_object: groups
                .into_iter()
                .map(|(k, m)| (k, m.iter().map(|(mk, v)| (mk.clone(), agg(v))).collect()))
                .collect(),
            by_method: methods.iter().map(|(k, v)| (k.clone(), agg(v))).collect(),
        }
    }

    /// Plain-text table: one row per method, one `cm / deg` column per
    /// object; exempt orientations print as `-`.
    pub fn to_table(&self) -> String {
        let s = self.summary();
        let objects: Vec<&String> = s.by_object.keys().collect();
        let methods: Vec<&String> = s.by_method.keys().collect();
        let cell = |e: Option<&ErrorSummary>| match e {
            None => "n/a".to_string(),
            Some(e) => match e.median_deg {
                Some(d) => format!("{:.1} / {:.1}", e.median_cm, d),
                None => format!("{:.1} / -", e.median_cm),
            },
        };
        let mut grid = vec![std::iter::once("method".to_string()).chain(objects.iter().map(|o| o.to_string())).collect::<Vec<_>>()];
        for m in &methods {
            let mut row = vec![m.to_string()];
            for o in &objects {
                row.push(cell(s.by_object[*o].get(*m)));
            }
            grid.push(row);
        }
        let widths: Vec<usize> = (0..grid[0].len()).map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (k, row) in grid.iter().enumerate() {
            let line: Vec<String> = row.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join(" | ").trim_end());
            if k == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                let _ = writeln!(out, "{}", rule.join("-|-"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mask::masks_overlap;
    use proptest::prelude::*;

    fn assert_collision_free(l: &Layout, margin: u32) {
        for (i, a) in l.entries.iter().enumerate() {
            assert!(a.footprint().within(&l.bounds) || !a.movable, "{} out of bounds", a.id);
            for b in &l.entries[i + 1..] {
                assert!(!masks_overlap(&a.mask, &a.pose, &b.mask, &b.pose, margin), "{} vs {}", a.id, b.id);
            }
        }
    }

    #[test]
    fn random_baseline_is_collision_free_and_seeded() {
        let scene = fixtures::dining_scene();
        let a = baseline_random(&scene, 0, DEFAULT_MAX_ATTEMPTS, 2).unwrap();
        assert_collision_free(&a, 2);
        assert_eq!(a, baseline_random(&scene, 0, DEFAULT_MAX_ATTEMPTS, 2).unwrap());
        assert_ne!(a, baseline_random(&scene, 1, DEFAULT_MAX_ATTEMPTS, 2).unwrap());
    }

    #[test]
    fn random_baseline_gives_up() {
        let scene = fixtures::dining_scene();
        assert!(matches!(baseline_random(&scene, 0, 0, 2), Err(EvalError::PlacementFailed { .. })));
    }

    fn bar_scene(widths: &[u32], frame: u32) -> SceneDescription {
        let objects = widths
            .iter()
            .enumerate()
            .map(|(i, &w)| ObjectInstance {
                id: format!("o{i}"),
                caption: String::new(),
                class_noun: "bar".into(),
                movable: true,
                mask: BinaryMask::from_fn(frame, frame, |x, y| x >= 2 + 12 * i as u32 && x < 2 + 12 * i as u32 + w && (5..25).contains(&y)),
                feature: vec![1.0],
            })
            .collect();
        SceneDescription::new(frame, frame, fixtures::default_camera(), BinaryMask::empty(frame, frame), objects).unwrap()
    }

    #[test]
    fn geometric_spacing_arithmetic() {
        // three 10-px-wide, 20-px-tall bars in a 100-px workspace
        let scene = bar_scene(&[10, 10, 10], 100);
        let l = baseline_geometric(&scene, 2).unwrap();
        assert_collision_free(&l, 2);
        let ext: Vec<_> = l.entries.iter().map(|e| e.footprint().extent().unwrap()).collect();
        let gaps = [ext[0].min_x, ext[1].min_x - ext[0].max_x - 1, ext[2].min_x - ext[1].max_x - 1, 99 - ext[2].max_x];
        // 17.5 px gaps land on whole pixels as 17 or 18
        for g in gaps {
            assert!((17..=18).contains(&g), "{gaps:?}");
        }
        for e in &l.entries {
            assert!((e.pose.centroid_y - 49.5).abs() <= 1.0);
        }
    }

    #[test]
    fn geometric_single_object_is_centred() {
        let scene = bar_scene(&[10], 100);
        let l = baseline_geometric(&scene, 2).unwrap();
        let c = l.entries[0].pose.centroid();
        assert!((c.x - 49.5).abs() <= 0.5 && (c.y - 49.5).abs() <= 0.5);
    }

    #[test]
    fn geometric_makes_long_axes_vertical() {
        let scene = fixtures::dining_scene();
        let l = baseline_geometric(&scene, 2).unwrap();
        assert_collision_free(&l, 2);
        let fork = l.entry("fork").unwrap();
        let ext = fork.footprint().extent().unwrap();
        assert!(ext.height() > 3 * ext.width(), "{ext:?}");
    }

    #[test]
    fn geometric_reports_overflow() {
        let scene = bar_scene(&[10; 8], 100);
        assert!(matches!(baseline_geometric(&scene, 2), Err(EvalError::DoesNotFit { .. })));
    }

    fn square_entry(id: &str, x: f64, y: f64) -> LayoutEntry {
        LayoutEntry {
            id: id.into(),
            mask: BinaryMask::from_fn(100, 100, |px, py| px < 6 && py < 6),
            movable: true,
            pose: Pose2D::new(x, y, 0.0),
        }
    }

    fn missing_square() -> ObjectInstance {
        ObjectInstance {
            id: "m".into(),
            caption: String::new(),
            class_noun: "block".into(),
            movable: true,
            mask: BinaryMask::from_fn(100, 100, |px, py| px < 6 && py < 6),
            feature: vec![1.0],
        }
    }

    #[test]
    fn geometric_missing_lands_between_fixed_objects() {
        let fixed = Layout::new(
            vec![square_entry("a", 20.0, 50.0), square_entry("b", 60.0, 50.0), square_entry("c", 90.0, 90.0)],
            crate::geometry::Bounds::new(0, 0, 99, 99),
        )
        .unwrap();
        let p = baseline_geometric_missing(&fixed, &missing_square(), 2).unwrap();
        assert!((p.centroid_x - 40.0).abs() < 1e-9 && (p.centroid_y - 50.0).abs() < 1e-9);
    }

    #[test]
    fn geometric_missing_steps_past_an_occupied_line() {
        // midpoint occupied: closest free spot on the line wins
        let fixed = Layout::new(
            vec![square_entry("a", 40.0, 50.0), square_entry("b", 52.0, 50.0), square_entry("c", 46.0, 50.0)],
            crate::geometry::Bounds::new(0, 0, 99, 99),
        )
        .unwrap();
        let p = baseline_geometric_missing(&fixed, &missing_square(), 2).unwrap();
        assert!((p.centroid_y - 50.0).abs() < 1e-9);
        let fp = Footprint::posed(&missing_square().mask, &p);
        for e in &fixed.entries {
            assert!(!e.footprint().collides(&fp, 2));
        }
        // the scan is outward, so the first free spot is the nearest one
        let offset = (p.centroid_x - 43.0).abs();
        assert!(offset <= 15.0, "{p:?}");
    }

    #[test]
    fn geometric_missing_needs_two_fixed() {
        let fixed = Layout::new(vec![square_entry("a", 20.0, 50.0)], crate::geometry::Bounds::new(0, 0, 99, 99)).unwrap();
        assert_eq!(baseline_geometric_missing(&fixed, &missing_square(), 2), Err(EvalError::TooFewFixed(1)));
    }

    fn mm_camera() -> CameraModel {
        CameraModel {
            fx: 500.0,
            fy: 500.0,
            cx: 0.0,
            cy: 0.0,
            table_depth: 0.5,
        }
    }

    #[test]
    fn pose_error_examples() {
        let set = AcceptablePoseSet {
            object_id: "fork".into(),
            poses: vec![Pose2D::new(200.0, 0.0, 1.0), Pose2D::new(10.0, 10.0, 0.5)],
        };
        let exact = pose_error(&Pose2D::new(10.0, 10.0, 0.5), &set, &mm_camera(), false).unwrap();
        assert_eq!(exact, PoseError { distance_cm: 0.0, orientation_deg: Some(0.0) });
        // 10 px at 1 mm per pixel
        let off = pose_error(&Pose2D::new(20.0, 10.0, 0.5), &set, &mm_camera(), false).unwrap();
        assert!((off.distance_cm - 1.0).abs() < 1e-9);
        let plate = pose_error(&Pose2D::new(20.0, 10.0, 2.0), &set, &mm_camera(), true).unwrap();
        assert!(plate.is_exempt());
        let empty = AcceptablePoseSet { object_id: "x".into(), poses: vec![] };
        assert!(pose_error(&Pose2D::new(0.0, 0.0, 0.0), &empty, &mm_camera(), false).is_err());
    }

    #[test]
    fn orientation_is_folded() {
        let set = AcceptablePoseSet {
            object_id: "k".into(),
            poses: vec![Pose2D::new(0.0, 0.0, 170f64.to_radians())],
        };
        let e = pose_error(&Pose2D::new(0.0, 0.0, (-170f64).to_radians()), &set, &mm_camera(), false).unwrap();
        assert!((e.orientation_deg.unwrap() - 20.0).abs() < 1e-9);
    }

    fn cm(v: &[f64]) -> Vec<PoseError> {
        v.iter().map(|&d| PoseError { distance_cm: d, orientation_deg: None }).collect()
    }

    #[test]
    fn median_examples() {
        assert_eq!(aggregate_median(&cm(&[1.0, 2.0, 9.0])).unwrap().median_cm, 2.0);
        assert_eq!(aggregate_median(&cm(&[1.0, 3.0])).unwrap().median_cm, 2.0);
        assert_eq!(aggregate_median(&cm(&[1.0, 3.0])).unwrap().median_deg, None);
        assert_eq!(aggregate_median(&[]), Err(EvalError::EmptyList));
        let mixed = [
            PoseError { distance_cm: 1.0, orientation_deg: Some(10.0) },
            PoseError { distance_cm: 2.0, orientation_deg: None },
            PoseError { distance_cm: 3.0, orientation_deg: Some(30.0) },
        ];
        assert_eq!(aggregate_median(&mixed).unwrap().median_deg, Some(20.0));
    }

    #[test]
    fn table_marks_exempt_orientation() {
        let mut r = EvalReport::default();
        for (noun, method, deg) in [("plate", "generated", None), ("fork", "generated", Some(4.0)), ("fork", "random", Some(90.0))] {
            r.push(ReportRow {
                object_id: noun.into(),
                class_noun: noun.into(),
                method: method.into(),
                predicted: Pose2D::new(0.0, 0.0, 0.0),
                error: PoseError { distance_cm: 1.5, orientation_deg: deg },
            });
        }
        let t = r.to_table();
        assert!(t.contains("1.5 / -"), "{t}");
        assert!(t.contains("1.5 / 4.0"), "{t}");
        assert!(t.contains("n/a"), "{t}");
    }

    proptest! {
        #[test]
        fn median_is_order_and_duplication_invariant(mut v in proptest::collection::vec(0.0..100.0f64, 1..20), seed in any::<u64>()) {
            let base = aggregate_median(&cm(&v)).unwrap().median_cm;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            use rand::seq::SliceRandom;
            v.shuffle(&mut rng);
            prop_assert_eq!(aggregate_median(&cm(&v)).unwrap().median_cm, base);
            let doubled: Vec<f64> = v.iter().chain(v.iter()).copied().collect();
            prop_assert_eq!(aggregate_median(&cm(&doubled)).unwrap().median_cm, base);
        }
    }
}

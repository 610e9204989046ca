//! Pixel-to-table projection, pick-and-place ordering with temporary side
//! placements, and a 2D simulator that replays plans and checks them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_distance, normalize_angle, Bounds, Point2, Pose2D};
use crate::layout::Layout;
use crate::mask::Footprint;
use crate::scene::CameraModel;

/// Raster stride of the intermediate-pose search, pixels.
pub const INTERMEDIATE_STRIDE: i64 = 4;
/// Simulator tolerance for "reached the goal".
pub const GOAL_POS_TOL_PX: f64 = 1.0;
pub const GOAL_ANGLE_TOL_DEG: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("current and goal layouts disagree on `{0}`")]
    LayoutMismatch(String),
    #[error("goal poses of `{0}` and `{1}` collide")]
    GoalInCollision(String, String),
    #[error("goal pose of `{0}` leaves the workspace")]
    GoalOutOfBounds(String),
    #[error("no free intermediate pose for `{0}`")]
    NoIntermediateSpace(String),
    #[error("plan refers to unknown object `{0}`")]
    UnknownObject(String),
    #[error("planner made no progress with {0} object(s) pending")]
    Stuck(usize),
}

/// Metric table-plane coordinates of a pixel under a top-down camera.
pub fn pixel_to_workspace(camera: &CameraModel, u: f64, v: f64) -> Point2 {
    Point2::new(
        (u - camera.cx) * camera.table_depth / camera.fx,
        (v - camera.cy) * camera.table_depth / camera.fy,
    )
}

/// Table-plane pose, meters and radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

pub fn pose_to_workspace(camera: &CameraModel, pose: &Pose2D) -> MetricPose {
    let p = pixel_to_workspace(camera, pose.centroid_x, pose.centroid_y);
    MetricPose {
        x: p.x,
        y: p.y,
        theta: pose.theta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceTransform {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

pub fn to_workspace_transform(camera: &CameraModel, initial: &Pose2D, goal: &Pose2D) -> WorkspaceTransform {
    let a = pixel_to_workspace(camera, initial.centroid_x, initial.centroid_y);
    let b = pixel_to_workspace(camera, goal.centroid_x, goal.centroid_y);
    WorkspaceTransform {
        dx: b.x - a.x,
        dy: b.y - a.y,
        dtheta: normalize_angle(goal.theta - initial.theta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Direct,
    ToIntermediate,
    FromIntermediate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub object_id: String,
    pub pick: Pose2D,
    pub place: Pose2D,
    pub kind: MoveKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PickPlacePlan {
    pub moves: Vec<Move>,
}

impl PickPlacePlan {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Plan file form: every move with pixel and metric poses.
    pub fn to_record(&self, camera: &CameraModel) -> PlanRecord {
        PlanRecord {
            moves: self
                .moves
                .iter()
                .map(|m| MoveRecord {
                    object_id: m.object_id.clone(),
                    kind: m.kind,
                    pick_px: m.pick,
                    place_px: m.place,
                    pick_m: pose_to_workspace(camera, &m.pick),
                    place_m: pose_to_workspace(camera, &m.place),
                    transform_m: to_workspace_transform(camera, &m.pick, &m.place),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub object_id: String,
    pub kind: MoveKind,
    pub pick_px: Pose2D,
    pub place_px: Pose2D,
    pub pick_m: MetricPose,
    pub place_m: MetricPose,
    pub transform_m: WorkspaceTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub moves: Vec<MoveRecord>,
}

impl From<&PlanRecord> for PickPlacePlan {
    fn from(r: &PlanRecord) -> Self {
        Self {
            moves: r
                .moves
                .iter()
                .map(|m| Move {
                    object_id: m.object_id.clone(),
                    pick: m.pick_px,
                    place: m.place_px,
                    kind: m.kind,
                })
                .collect(),
        }
    }
}

fn same_pose(a: &Pose2D, b: &Pose2D) -> bool {
    a.approx_eq(b, 1e-9, 1e-9)
}

/// Occupancy raster over `bounds`, with everything outside counting as
/// occupied.
struct Occupancy {
    bounds: Bounds,
    w: i64,
    bits: Vec<bool>,
}

impl Occupancy {
    fn new(bounds: Bounds) -> Self {
        let w = bounds.width().max(0);
        let h = bounds.height().max(0);
        Self {
            bounds,
            w,
            bits: vec![false; (w * h) as usize],
        }
    }

    fn mark(&mut self, fp: &Footprint) {
        for (x, y) in fp.pixels() {
            if self.bounds.contains_pixel(x, y) {
                let i = (y - self.bounds.min_y) * self.w + (x - self.bounds.min_x);
                self.bits[i as usize] = true;
            }
        }
    }

    fn free(&self, fp: &Footprint) -> bool {
        fp.pixels().all(|(x, y)| {
            self.bounds.contains_pixel(x, y) && !self.bits[((y - self.bounds.min_y) * self.w + (x - self.bounds.min_x)) as usize]
        })
    }
}

/// Integer centroid offsets covering `[x0, x1] × [y0, y1]` ring by ring from
/// the outside in, `stride` apart, clockwise from the top-left corner.
fn border_raster(x0: i64, y0: i64, x1: i64, y1: i64, stride: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut ax, mut ay, mut bx, mut by) = (x0, y0, x1, y1);
    while ax <= bx && ay <= by {
        if ax == bx || ay == by {
            let mut x = ax;
            while x <= bx {
                let mut y = ay;
                while y <= by {
                    out.push((x, y));
                    y += stride;
                }
                x += stride;
            }
            break;
        }
        let mut x = ax;
        while x < bx {
            out.push((x, ay));
            x += stride;
        }
        let mut y = ay;
        while y < by {
            out.push((bx, y));
            y += stride;
        }
        let mut x = bx;
        while x > ax {
            out.push((x, by));
            x -= stride;
        }
        let mut y = by;
        while y > ay {
            out.push((ax, y));
            y -= stride;
        }
        ax += stride;
        ay += stride;
        bx -= stride;
        by -= stride;
    }
    out
}

/// Greedy pick-and-place ordering.
///
/// Repeatedly places the lowest-id object whose goal footprint is clear of
/// every other object's current footprint. When nothing can be placed, the
/// lowest-id blocker is moved to a temporary pose that is clear of all
/// current and all goal footprints, found by scanning the workspace from its
/// border inwards. Objects in temporary poses therefore never block a goal,
/// so every object moves at most twice.
pub fn plan_moves(current: &Layout, goal: &Layout, margin: u32) -> Result<PickPlacePlan, PlanError> {
    let bounds = goal.bounds;
    let n = current.len();
    let goal_index: BTreeMap<&str, usize> = goal.entries.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    if goal_index.len() != n {
        let missing = current
            .entries
            .iter()
            .find(|e| !goal_index.contains_key(e.id.as_str()))
            .map_or_else(|| goal.entries[0].id.clone(), |e| e.id.clone());
        return Err(PlanError::LayoutMismatch(missing));
    }
    let mut goal_fp = Vec::with_capacity(n);
    let mut goal_pose = Vec::with_capacity(n);
    for e in &current.entries {
        let g = goal_index
            .get(e.id.as_str())
            .map(|&i| &goal.entries[i])
            .ok_or_else(|| PlanError::LayoutMismatch(e.id.clone()))?;
        if g.movable != e.movable || g.mask != e.mask || (!e.movable && !same_pose(&g.pose, &e.pose)) {
            return Err(PlanError::LayoutMismatch(e.id.clone()));
        }
        let fp = g.footprint();
        if e.movable && !fp.within(&bounds) {
            return Err(PlanError::GoalOutOfBounds(e.id.clone()));
        }
        goal_fp.push(fp);
        goal_pose.push(g.pose);
    }
    let goal_dil: Vec<Footprint> = goal_fp.iter().map(|f| f.dilate(margin)).collect();
    for (i, d) in goal_dil.iter().enumerate() {
        for (j, f) in goal_fp.iter().enumerate().skip(i + 1) {
            if d.intersects(f) {
                return Err(PlanError::GoalInCollision(current.entries[i].id.clone(), current.entries[j].id.clone()));
            }
        }
    }

    let mut pose: Vec<Pose2D> = current.entries.iter().map(|e| e.pose).collect();
    let mut fp: Vec<Footprint> = current.footprints();
    let mut parked = vec![false; n];
    // lowest id first
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| current.entries[a].id.cmp(&current.entries[b].id));
    let mut pending: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| current.entries[i].movable && !same_pose(&pose[i], &goal_pose[i]))
        .collect();
    let mut plan = PickPlacePlan::default();

    while !pending.is_empty() {
        let clear = |i: usize, fp: &[Footprint]| (0..n).all(|j| j == i || !goal_dil[i].intersects(&fp[j]));
        if let Some(pos) = pending.iter().position(|&i| clear(i, &fp)) {
            let i = pending.remove(pos);
            plan.moves.push(Move {
                object_id: current.entries[i].id.clone(),
                pick: pose[i],
                place: goal_pose[i],
                kind: if parked[i] {
                    MoveKind::FromIntermediate
                } else {
                    MoveKind::Direct
                },
            });
            pose[i] = goal_pose[i];
            fp[i] = goal_fp[i].clone();
            continue;
        }
        let blocker = order.iter().copied().find(|&b| {
            pending.contains(&b) && !parked[b] && pending.iter().any(|&i| i != b && goal_dil[i].intersects(&fp[b]))
        });
        let Some(b) = blocker else {
            return Err(PlanError::Stuck(pending.len()));
        };
        let park = find_intermediate(b, &pose, &fp, &goal_fp, &bounds, margin)
            .ok_or_else(|| PlanError::NoIntermediateSpace(current.entries[b].id.clone()))?;
        plan.moves.push(Move {
            object_id: current.entries[b].id.clone(),
            pick: pose[b],
            place: park.0,
            kind: MoveKind::ToIntermediate,
        });
        pose[b] = park.0;
        fp[b] = park.1;
        parked[b] = true;
    }
    debug_assert!(plan.len() <= 2 * n);
    Ok(plan)
}

fn find_intermediate(
    b: usize,
    pose: &[Pose2D],
    fp: &[Footprint],
    goal_fp: &[Footprint],
    bounds: &Bounds,
    margin: u32,
) -> Option<(Pose2D, Footprint)> {
    let mut occ = Occupancy::new(*bounds);
    for (j, f) in fp.iter().enumerate() {
        if j != b {
            occ.mark(&f.dilate(margin));
        }
    }
    for g in goal_fp {
        occ.mark(&g.dilate(margin));
    }
    let base = &fp[b];
    let ext = base.extent()?;
    // integer shifts that keep the footprint inside the workspace
    let (sx0, sx1) = (bounds.min_x - ext.min_x, bounds.max_x - ext.max_x);
    let (sy0, sy1) = (bounds.min_y - ext.min_y, bounds.max_y - ext.max_y);
    if sx0 > sx1 || sy0 > sy1 {
        return None;
    }
    for (dx, dy) in border_raster(sx0, sy0, sx1, sy1, INTERMEDIATE_STRIDE) {
        let cand = base.translated(dx, dy);
        if occ.free(&cand) {
            let p = pose[b];
            return Some((Pose2D::new(p.centroid_x + dx as f64, p.centroid_y + dy as f64, p.theta), cand));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The placed object comes within the margin of resting objects.
    Overlap { move_index: usize, object_id: String, others: Vec<String> },
    OutOfBounds { move_index: usize, object_id: String },
    /// The pick pose is not where the object currently is.
    PickMismatch { move_index: usize, object_id: String },
    StationaryMoved { move_index: usize, object_id: String },
    NotAtGoal { object_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub final_layout: Layout,
}

/// Replays `plan` from `start` and checks every placement and the final
/// state against `goal` (within 1 px / 1°).
pub fn simulate(plan: &PickPlacePlan, start: &Layout, goal: &Layout, margin: u32) -> Result<SimReport, PlanError> {
    let mut state = start.clone();
    let mut fps = state.footprints();
    let mut violations = Vec::new();
    for (k, m) in plan.moves.iter().enumerate() {
        let i = state.index_of(&m.object_id).ok_or_else(|| PlanError::UnknownObject(m.object_id.clone()))?;
        if !state.entries[i].movable {
            violations.push(Violation::StationaryMoved {
                move_index: k,
                object_id: m.object_id.clone(),
            });
            continue;
        }
        if !state.entries[i].pose.approx_eq(&m.pick, 1e-6, 1e-9) {
            violations.push(Violation::PickMismatch {
                move_index: k,
                object_id: m.object_id.clone(),
            });
        }
        state.entries[i].pose = m.place;
        fps[i] = state.entries[i].footprint();
        if !fps[i].within(&state.bounds) {
            violations.push(Violation::OutOfBounds {
                move_index: k,
                object_id: m.object_id.clone(),
            });
        }
        let placed = fps[i].dilate(margin);
        let others: Vec<String> = (0..fps.len())
            .filter(|&j| j != i && placed.intersects(&fps[j]))
            .map(|j| state.entries[j].id.clone())
            .collect();
        if !others.is_empty() {
            violations.push(Violation::Overlap {
                move_index: k,
                object_id: m.object_id.clone(),
                others,
            });
        }
    }
    for g in &goal.entries {
        let i = state.index_of(&g.id).ok_or_else(|| PlanError::UnknownObject(g.id.clone()))?;
        let p = &state.entries[i].pose;
        let close = p.centroid().distance(g.pose.centroid()) <= GOAL_POS_TOL_PX
            && angle_distance(p.theta, g.pose.theta) <= GOAL_ANGLE_TOL_DEG.to_radians();
        if !close {
            violations.push(Violation::NotAtGoal { object_id: g.id.clone() });
        }
    }
    Ok(SimReport {
        valid: violations.is_empty(),
        violations,
        final_layout: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::LayoutEntry;
    use crate::mask::BinaryMask;
    use proptest::prelude::*;

    fn camera() -> CameraModel {
        CameraModel {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
            table_depth: 0.5,
        }
    }

    #[test]
    fn projection_examples() {
        let c = camera();
        assert_eq!(pixel_to_workspace(&c, 320.0, 240.0), Point2::new(0.0, 0.0));
        assert!((pixel_to_workspace(&c, 570.0, 240.0).x - 0.25).abs() < 1e-12);
        let deep = CameraModel { table_depth: 1.0, ..c };
        let (a, b) = (pixel_to_workspace(&c, 400.0, 100.0), pixel_to_workspace(&deep, 400.0, 100.0));
        assert!((b.x - 2.0 * a.x).abs() < 1e-12 && (b.y - 2.0 * a.y).abs() < 1e-12);
    }

    #[test]
    fn workspace_transform_examples() {
        let c = camera();
        let p = Pose2D::new(100.0, 50.0, 0.3);
        assert_eq!(to_workspace_transform(&c, &p, &p), WorkspaceTransform { dx: 0.0, dy: 0.0, dtheta: 0.0 });
        // 0.001 m/px effective scale
        let mm = CameraModel { fx: 500.0, fy: 500.0, table_depth: 0.5, ..c };
        let t = to_workspace_transform(&mm, &Pose2D::new(0.0, 0.0, 0.0), &Pose2D::new(100.0, 0.0, 0.0));
        assert!((t.dx - 0.1).abs() < 1e-12);
        let t = to_workspace_transform(&c, &Pose2D::new(0.0, 0.0, 170f64.to_radians()), &Pose2D::new(0.0, 0.0, (-170f64).to_radians()));
        assert!((t.dtheta - 20f64.to_radians()).abs() < 1e-12);
    }

    fn rect(w: u32, h: u32) -> BinaryMask {
        BinaryMask::from_fn(100, 100, |x, y| x < w && y < h)
    }

    fn layout(items: &[(&str, u32, u32, f64, f64)], movable: bool) -> Layout {
        let entries = items
            .iter()
            .map(|&(id, w, h, x, y)| LayoutEntry {
                id: id.into(),
                mask: rect(w, h),
                movable,
                pose: Pose2D::new(x, y, 0.0),
            })
            .collect();
        Layout::new(entries, Bounds::new(0, 0, 99, 99)).unwrap()
    }

    #[test]
    fn free_goals_are_direct_moves_in_id_order() {
        let cur = layout(&[("b", 6, 6, 10.0, 10.0), ("a", 6, 6, 30.0, 10.0)], true);
        let goal = layout(&[("b", 6, 6, 10.0, 60.0), ("a", 6, 6, 30.0, 60.0)], true);
        let plan = plan_moves(&cur, &goal, 2).unwrap();
        let ids: Vec<_> = plan.moves.iter().map(|m| m.object_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert!(plan.moves.iter().all(|m| m.kind == MoveKind::Direct));
        assert!(simulate(&plan, &cur, &goal, 2).unwrap().valid);
    }

    #[test]
    fn swap_needs_one_intermediate() {
        let cur = layout(&[("a", 10, 10, 30.0, 50.0), ("b", 10, 10, 60.0, 50.0)], true);
        let goal = layout(&[("a", 10, 10, 60.0, 50.0), ("b", 10, 10, 30.0, 50.0)], true);
        let plan = plan_moves(&cur, &goal, 2).unwrap();
        let kinds: Vec<_> = plan.moves.iter().map(|m| m.kind).collect();
        assert_eq!(kinds, [MoveKind::ToIntermediate, MoveKind::Direct, MoveKind::FromIntermediate]);
        assert_eq!(plan.moves[0].object_id, "a");
        let report = simulate(&plan, &cur, &goal, 2).unwrap();
        assert!(report.valid, "{:?}", report.violations);
    }

    #[test]
    fn current_equal_to_goal_is_an_empty_plan() {
        let l = layout(&[("a", 5, 5, 20.0, 20.0)], true);
        let plan = plan_moves(&l, &l, 2).unwrap();
        assert!(plan.is_empty());
        assert!(simulate(&plan, &l, &l, 2).unwrap().valid);
    }

    #[test]
    fn stationary_objects_never_move() {
        let mut cur = layout(&[("a", 10, 10, 30.0, 50.0), ("b", 10, 10, 60.0, 50.0), ("s", 8, 8, 80.0, 80.0)], true);
        let mut goal = layout(&[("a", 10, 10, 60.0, 50.0), ("b", 10, 10, 30.0, 50.0), ("s", 8, 8, 80.0, 80.0)], true);
        cur.entries[2].movable = false;
        goal.entries[2].movable = false;
        let plan = plan_moves(&cur, &goal, 2).unwrap();
        assert!(plan.moves.iter().all(|m| m.object_id != "s"));
    }

    #[test]
    fn colliding_goal_is_rejected() {
        let cur = layout(&[("a", 10, 10, 20.0, 20.0), ("b", 10, 10, 60.0, 60.0)], true);
        let goal = layout(&[("a", 10, 10, 40.0, 40.0), ("b", 10, 10, 42.0, 42.0)], true);
        assert!(matches!(plan_moves(&cur, &goal, 2), Err(PlanError::GoalInCollision(..))));
    }

    #[test]
    fn no_room_to_park() {
        // two wide bars swapping in a workspace barely larger than both
        let entries = |ya: f64, yb: f64| {
            vec![
                LayoutEntry { id: "a".into(), mask: rect(20, 8), movable: true, pose: Pose2D::new(10.0, ya, 0.0) },
                LayoutEntry { id: "b".into(), mask: rect(20, 8), movable: true, pose: Pose2D::new(10.0, yb, 0.0) },
            ]
        };
        let b = Bounds::new(0, 0, 19, 21);
        let cur = Layout::new(entries(4.0, 17.0), b).unwrap();
        let goal = Layout::new(entries(17.0, 4.0), b).unwrap();
        assert!(matches!(plan_moves(&cur, &goal, 2), Err(PlanError::NoIntermediateSpace(_))));
    }

    #[test]
    fn hand_built_overlap_is_reported_at_its_move() {
        let cur = layout(&[("a", 10, 10, 20.0, 20.0), ("b", 10, 10, 60.0, 60.0)], true);
        let goal = layout(&[("a", 10, 10, 60.0, 60.0), ("b", 10, 10, 20.0, 20.0)], true);
        let plan = PickPlacePlan {
            moves: vec![
                Move { object_id: "a".into(), pick: cur.entries[0].pose, place: goal.entries[0].pose, kind: MoveKind::Direct },
                Move { object_id: "b".into(), pick: cur.entries[1].pose, place: goal.entries[1].pose, kind: MoveKind::Direct },
            ],
        };
        let r = simulate(&plan, &cur, &goal, 2).unwrap();
        assert!(!r.valid);
        assert!(matches!(&r.violations[0], Violation::Overlap { move_index: 0, others, .. } if others == &["b".to_string()]));
    }

    #[test]
    fn unknown_object_is_an_error() {
        let l = layout(&[("a", 5, 5, 20.0, 20.0)], true);
        let plan = PickPlacePlan {
            moves: vec![Move { object_id: "zz".into(), pick: l.entries[0].pose, place: l.entries[0].pose, kind: MoveKind::Direct }],
        };
        assert_eq!(simulate(&plan, &l, &l, 2), Err(PlanError::UnknownObject("zz".into())));
    }

    #[test]
    fn raster_visits_the_border_first() {
        let pts = border_raster(0, 0, 8, 8, 4);
        assert_eq!(&pts[..4], &[(0, 0), (4, 0), (8, 0), (8, 4)]);
        assert_eq!(pts.last(), Some(&(4, 4)));
        assert_eq!(pts.len(), 9);
    }

    #[test]
    fn translated_footprint_matches_integer_shifted_pose() {
        let m = BinaryMask::from_fn(40, 40, |x, y| (x + 2 * y) % 7 < 3 && x < 20 && y < 15);
        let p = Pose2D::new(10.3, 7.6, 0.7);
        let q = Pose2D::new(15.3, 3.6, 0.7);
        assert_eq!(Footprint::posed(&m, &p).translated(5, -4), Footprint::posed(&m, &q));
    }

    #[test]
    fn plan_record_round_trips() {
        let cur = layout(&[("a", 10, 10, 30.0, 50.0), ("b", 10, 10, 60.0, 50.0)], true);
        let goal = layout(&[("a", 10, 10, 60.0, 50.0), ("b", 10, 10, 30.0, 50.0)], true);
        let plan = plan_moves(&cur, &goal, 2).unwrap();
        let rec = plan.to_record(&camera());
        let back: PlanRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        assert_eq!(PickPlacePlan::from(&back), plan);
    }

    proptest! {
        #[test]
        fn projection_is_linear(u in -1000.0..1000.0f64, v in -1000.0..1000.0f64, k in 0.1..5.0f64) {
            let c = camera();
            let a = pixel_to_workspace(&c, u, v);
            let b = pixel_to_workspace(&c, c.cx + k * (u - c.cx), c.cy + k * (v - c.cy));
            prop_assert!((b.x - k * a.x).abs() < 1e-9 && (b.y - k * a.y).abs() < 1e-9);
        }
    }
}

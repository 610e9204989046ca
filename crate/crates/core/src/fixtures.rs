//! Procedural tabletop scenes: simple asymmetric object silhouettes,
//! deterministic pseudo-features per class noun, and three cluttered
//! starting scenes (dining, office, fruit).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Pose2D;
use crate::pipeline::MissingTask;
use crate::mask::{BinaryMask, Footprint};
use crate::scene::{unit_normalize, CameraModel, ObjectInstance, SceneDescription, DEFAULT_FEATURE_DIM};

pub const SCENE_WIDTH: u32 = 320;
pub const SCENE_HEIGHT: u32 = 240;
pub const EDGE_BAND: u32 = 8;

/// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    unit_normalize(&mut v);
    v
}

/// Unit feature shared by every instance of `noun`, nudged per instance so
/// that two apples are similar but not identical.
pub fn noun_feature(noun: &str, instance: u64, dim: usize) -> Vec<f64> {
    let mut base = random_unit(&mut ChaCha8Rng::seed_from_u64(fnv1a(noun)), dim);
    if instance > 0 {
        let noise = random_unit(&mut ChaCha8Rng::seed_from_u64(fnv1a(noun) ^ instance.wrapping_mul(0x9e37_79b9)), dim);
        base.iter_mut().zip(&noise).for_each(|(b, n)| *b += 0.15 * n);
        unit_normalize(&mut base);
    }
    base
}

/// Silhouettes are predicates in a local frame centred on the origin with
/// the long axis vertical and `y` growing downwards.
fn shape_fn(noun: &str) -> Option<fn(i64, i64) -> bool> {
    fn ellipse(x: i64, y: i64, cx: f64, cy: f64, rx: f64, ry: f64) -> bool {
        let u = (x as f64 - cx) / rx;
        let v = (y as f64 - cy) / ry;
        u * u + v * v <= 1.0
    }
    fn rect(x: i64, y: i64, x0: i64, y0: i64, x1: i64, y1: i64) -> bool {
        (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
    }
    let f: fn(i64, i64) -> bool = match noun {
        // four tines over a wide neck, long narrow handle
        "fork" => |x, y| rect(x, y, -2, -8, 1, 30) || rect(x, y, -6, -14, 5, -8) || ((-28..-14).contains(&y) && (-6..=5).contains(&x) && (x + 6) % 3 != 2),
        // thick handle, thinner blade with a slanted tip
        "knife" => |x, y| rect(x, y, -3, 4, 3, 28) || (rect(x, y, -2, -28, 1, 3) && !(y < -22 && x > 1 - (y + 28) / 2)),
        "spoon" => |x, y| rect(x, y, -2, -10, 1, 30) || ellipse(x, y, 0.0, -20.0, 7.0, 10.5),
        "plate" => |x, y| ellipse(x, y, 0.0, 0.0, 26.0, 26.0),
        // round body with a handle on one side
        "cup" | "mug" => |x, y| ellipse(x, y, 0.0, 0.0, 11.0, 11.0) || (rect(x, y, 10, -4, 16, 4) && !rect(x, y, 11, -2, 14, 2)),
        "keyboard" => |x, y| rect(x, y, -14, -46, 14, 46) || rect(x, y, -18, -46, -15, -36),
        "mouse" => |x, y| ellipse(x, y, 0.0, 0.0, 7.0, 11.0) || rect(x, y, -1, -19, 0, -10),
        "pen" => |x, y| rect(x, y, -1, -22, 1, 22) || rect(x, y, 2, -20, 3, -10),
        "notebook" | "book" => |x, y| rect(x, y, -20, -26, 20, 26) || rect(x, y, 8, 27, 10, 33),
        "apple" => |x, y| ellipse(x, y, 0.0, 0.0, 11.0, 10.0) || rect(x, y, 0, -14, 1, -9),
        "orange" => |x, y| ellipse(x, y, 0.0, 0.0, 12.0, 12.0),
        // crescent: big disk minus an offset disk
        "banana" => |x, y| ellipse(x, y, 0.0, 0.0, 10.0, 30.0) && !ellipse(x, y, 7.0, 0.0, 8.0, 28.0),
        "bowl" => |x, y| ellipse(x, y, 0.0, 0.0, 22.0, 22.0),
        "basket" => |x, y| rect(x, y, -28, -20, 28, 20),
        "tablet" => |x, y| rect(x, y, -30, -22, 30, 22) || rect(x, y, -30, 23, -24, 25),
        _ => return None,
    };
    Some(f)
}

/// Nouns with a built-in silhouette.
pub const KNOWN_SHAPES: &[&str] = &[
    "fork", "knife", "spoon", "plate", "cup", "mug", "keyboard", "mouse", "pen", "notebook", "book", "apple", "orange",
    "banana", "bowl", "basket", "tablet",
];

/// The silhouette of `noun` at `pose` in a `width × height` frame.
/// Pose angle 0 means long axis vertical.
pub fn shape_mask(noun: &str, width: u32, height: u32, pose: &Pose2D) -> Option<BinaryMask> {
    let f = shape_fn(noun)?;
    let (cx, cy) = (width as i64 / 2, height as i64 / 2);
    let upright = BinaryMask::from_fn(width, height, |x, y| f(x as i64 - cx, y as i64 - cy));
    Some(Footprint::posed(&upright, pose).to_mask(width, height))
}

/// `table_edge_band` of the built-in scenes: a border of `EDGE_BAND` pixels.
pub fn edge_band(width: u32, height: u32, band: u32) -> BinaryMask {
    BinaryMask::from_fn(width, height, |x, y| x < band || y < band || x + band >= width || y + band >= height)
}

pub fn default_camera() -> CameraModel {
    CameraModel {
        fx: 500.0,
        fy: 500.0,
        cx: SCENE_WIDTH as f64 / 2.0,
        cy: SCENE_HEIGHT as f64 / 2.0,
        table_depth: 0.6,
    }
}

/// One object to place in a procedural scene.
#[derive(Debug, Clone, Copy)]
pub struct Placement<'a> {
    pub id: &'a str,
    pub noun: &'a str,
    pub caption: &'a str,
    pub movable: bool,
    pub x: f64,
    pub y: f64,
    pub theta_deg: f64,
}

pub fn build_scene(placements: &[Placement<'_>]) -> SceneDescription {
    let mut instances = std::collections::BTreeMap::<&str, u64>::new();
    let objects = placements
        .iter()
        .map(|p| {
            let k = instances.entry(p.noun).or_insert(0);
            let feature = noun_feature(p.noun, *k, DEFAULT_FEATURE_DIM);
            *k += 1;
            let pose = Pose2D::new(p.x, p.y, p.theta_deg.to_radians());
            ObjectInstance {
                id: p.id.to_string(),
                caption: p.caption.to_string(),
                class_noun: p.noun.to_string(),
                movable: p.movable,
                mask: shape_mask(p.noun, SCENE_WIDTH, SCENE_HEIGHT, &pose).expect("built-in shape"),
                feature,
            }
        })
        .collect();
    SceneDescription::new(
        SCENE_WIDTH,
        SCENE_HEIGHT,
        default_camera(),
        edge_band(SCENE_WIDTH, SCENE_HEIGHT, EDGE_BAND),
        objects,
    )
    .expect("built-in scene is valid")
}

fn p<'a>(id: &'a str, noun: &'a str, caption: &'a str, movable: bool, x: f64, y: f64, theta_deg: f64) -> Placement<'a> {
    Placement {
        id,
        noun,
        caption,
        movable,
        x,
        y,
        theta_deg,
    }
}

/// Fork, knife, plate and spoon scattered over the table.
pub fn dining_scene() -> SceneDescription {
    build_scene(&[
        p("fork", "fork", "a silver fork", true, 62.0, 70.0, 35.0),
        p("knife", "knife", "a steel knife with a black handle", true, 250.0, 180.0, -60.0),
        p("plate", "plate", "a white ceramic plate", true, 220.0, 70.0, 0.0),
        p("spoon", "spoon", "a metal spoon", true, 90.0, 175.0, 110.0),
    ])
}

/// Keyboard, mouse, pen and notebook, with a stationary tablet.
pub fn office_scene() -> SceneDescription {
    build_scene(&[
        p("keyboard", "keyboard", "a black computer keyboard", true, 110.0, 160.0, 20.0),
        p("mouse", "mouse", "a wireless mouse", true, 250.0, 60.0, 140.0),
        p("pen", "pen", "a blue ballpoint pen", true, 40.0, 60.0, 75.0),
        p("notebook", "notebook", "a spiral notebook", true, 255.0, 175.0, 10.0),
        p("tablet", "tablet", "a tablet lying flat", false, 140.0, 45.0, 90.0),
    ])
}

/// Two apples, an orange and a banana, with a stationary basket.
pub fn fruit_scene() -> SceneDescription {
    build_scene(&[
        p("apple-1", "apple", "a red apple", true, 60.0, 60.0, 0.0),
        p("apple-2", "apple", "a green apple", true, 200.0, 200.0, 30.0),
        p("orange", "orange", "an orange", true, 80.0, 190.0, 0.0),
        p("banana", "banana", "a ripe banana", true, 250.0, 70.0, 60.0),
        p("basket", "basket", "a wicker basket", false, 270.0, 193.0, 90.0),
    ])
}

pub fn named_scene(name: &str) -> Option<SceneDescription> {
    match name {
        "dining" => Some(dining_scene()),
        "office" => Some(office_scene()),
        "fruit" => Some(fruit_scene()),
        _ => None,
    }
}

pub const SCENE_NAMES: &[&str] = &["dining", "office", "fruit"];

/// Held-out tasks for the dining scene: each object in turn, with a
/// preferred pose near the table centre and a second acceptable one.
pub fn dining_missing_tasks() -> Vec<MissingTask> {
    let t = |id: &str, poses: &[(f64, f64, f64)]| MissingTask {
        missing_id: id.into(),
        acceptable_poses: poses.iter().map(|&(x, y, d)| Pose2D::new(x, y, f64::to_radians(d))).collect(),
        symmetric: None,
    };
    vec![
        t("fork", &[(150.0, 120.0, 11.5), (130.0, 115.0, 0.0)]),
        t("knife", &[(160.0, 125.0, -40.0), (185.0, 120.0, 0.0)]),
        t("plate", &[(150.0, 150.0, 0.0)]),
        t("spoon", &[(165.0, 120.0, 143.0), (200.0, 125.0, 0.0)]),
    ]
}

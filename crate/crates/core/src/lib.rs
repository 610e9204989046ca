//! Goal-arrangement inference and pick-and-place planning for tabletop
//! rearrangement.
//!
//! A scene reduced to per-object masks, captions and features goes through:
//! prompt and inpainting-mask construction ([`prompting`]), goal sampling
//! from a pluggable generator ([`provider`]), semantic matching
//! ([`matching`]), mask registration ([`registration`]), layout clean-up
//! ([`layout`]) and finally planning and simulation ([`planning`]).
//! [`pipeline`] strings the stages together.

pub mod evaluation;
pub mod fixtures;
pub mod geometry;
pub mod layout;
pub mod mask;
pub mod matching;
pub mod pipeline;
pub mod planning;
pub mod prompting;
pub mod provider;
pub mod registration;
pub mod render;
pub mod scene;

pub use geometry::{Bounds, Point2, Pose2D, RigidTransform2D};
pub use mask::{masks_overlap, BBox, BinaryMask, Footprint, MaskError};
pub use scene::{CameraModel, CandidateScene, ObjectInstance, SceneDescription, SceneError};

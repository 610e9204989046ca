//! Per-object pose estimation by mask registration.
//!
//! The initial mask is first brought to the generated object's size and then
//! aligned onto the generated mask with ICP, treating every foreground pixel
//! as a point. The result is a rigid motion taking initial-image pixel
//! coordinates to goal-image pixel coordinates.

mod icp;
mod nn;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, RigidTransform2D};
use crate::mask::{BBox, BinaryMask, MaskError};
use crate::scene::ObjectInstance;

pub use icp::{fit_rigid, icp_align, IcpConfig, IcpResult, RestartTrace, SYMMETRY_RATIO};
pub use nn::GridIndex;

#[derive(Debug, Error, PartialEq)]
pub enum RegistrationError {
    #[error("point set is empty")]
    EmptySet,
    #[error(transparent)]
    Mask(#[from] MaskError),
}

/// How the initial mask is resized before alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RescaleMode {
    /// Uniform scale matching the generated object's area; independent of
    /// how the two instances are oriented.
    #[default]
    Area,
    /// Anisotropic stretch so the bounding box equals the generated box.
    /// Exact only when both instances share an orientation.
    BoundingBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    pub icp: IcpConfig,
    pub rescale: RescaleMode,
}

/// Anisotropic nearest-neighbour rescale to the dimensions of `target`.
pub fn rescale_mask(source: &BinaryMask, target: BBox) -> Result<BinaryMask, MaskError> {
    source.rescale_to(target)
}

pub fn mask_points(mask: &BinaryMask) -> Vec<Point2> {
    mask.pixels().map(|(x, y)| Point2::new(x as f64, y as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Registration {
    pub transform: RigidTransform2D,
    /// `sqrt(initial area / goal area)`.
    pub size_ratio: f64,
    pub icp: IcpResult,
}

/// Estimates the rigid motion from `initial`'s pose to `goal`'s pose.
pub fn estimate_object_transform(
    initial: &ObjectInstance,
    goal: &ObjectInstance,
    cfg: &RegistrationConfig,
) -> Result<Registration, RegistrationError> {
    let init_mask = &initial.mask;
    let goal_mask = &goal.mask;
    if init_mask.is_empty() || goal_mask.is_empty() {
        return Err(RegistrationError::EmptySet);
    }
    let init_box = init_mask.bbox()?;
    let goal_box = goal_mask.bbox()?;
    let rescaled = match cfg.rescale {
        RescaleMode::Area => {
            let s = (goal_mask.area() as f64 / init_mask.area() as f64).sqrt();
            let w = ((init_box.width as f64 * s).round() as u32).max(1);
            let h = ((init_box.height as f64 * s).round() as u32).max(1);
            init_mask.rescale_to(BBox::new(init_box.min_x, init_box.min_y, w, h))?
        }
        RescaleMode::BoundingBox => {
            init_mask.rescale_to(BBox::new(init_box.min_x, init_box.min_y, goal_box.width, goal_box.height))?
        }
    };
    let c_init = init_mask.centroid()?;
    let c_rescaled = rescaled.centroid()?;
    let icp = icp_align(&mask_points(&rescaled), &mask_points(goal_mask), &cfg.icp)?;
    // carry the initial centroid to wherever ICP sends the rescaled one
    let theta = icp.transform.theta;
    let landing = icp.transform.apply(c_rescaled);
    let t = landing - c_init.rotated(theta);
    Ok(Registration {
        transform: RigidTransform2D::new(t.x, t.y, theta),
        size_ratio: (init_mask.area() as f64 / goal_mask.area() as f64).sqrt(),
        icp,
    })
}

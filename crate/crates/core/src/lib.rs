//! Field-of-view bounding box geometry on the sphere.
//!
//! A field-of-view box `(lon, lat, fov_h, fov_v)` is the spherical rectangle a
//! pinhole camera pointed at `(lon, lat)` would see with the given horizontal
//! and vertical fields of view. This crate provides:
//!
//! * [`sphere`]: coordinate conversion, rotations and equirectangular mapping,
//! * [`bfov`]: the [`FovBBox`] type and its realization on the sphere,
//! * [`iou`]: FoV-IoU, Sph-IoU, exact spherical-polygon IoU and a Monte-Carlo oracle,
//! * [`loss`]: GIoU-style losses with gradients,
//! * [`nms`]: greedy non-maximum suppression,
//! * [`eval`]: COCO-style mAP with size buckets and latitude bands,
//! * [`augment`]: spherically consistent image and box augmentation,
//! * [`dataio`]: dataset, prediction and image files,
//! * [`bench`]: the timing harness behind `sphergeo bench`.
//!
//! Angles are degrees at every public boundary.

pub mod augment;
pub mod bench;
pub mod bfov;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod iou;
pub mod loss;
pub mod nms;
pub mod sphere;

pub use bfov::FovBBox;
pub use error::{Error, Result};
pub use iou::{exact_iou, fov_iou, iou_matrix, mc_iou, sph_iou, IouMatrix, IouMethod};
pub use nms::{nms, Detection};
pub use sphere::{RotationSpec, SphPoint, Vec3};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

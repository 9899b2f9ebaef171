//! The field-of-view bounding box and its realization on the sphere.
//!
//! A box `(lon, lat, fov_h, fov_v)` is the set of directions that project
//! inside the rectangle `[-tan(fov_h/2), tan(fov_h/2)] x [-tan(fov_v/2), tan(fov_v/2)]`
//! on the plane tangent to the sphere at the box center. Its four edges are
//! great-circle arcs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{lonlat_to_cart, rotate_pitch, rotate_yaw, sph_to_cart, wrap_lon, SphPoint, Vec3};

/// Exclusive upper bound for both fields of view.
pub const MAX_FOV: f64 = 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct FovBBox {
    lon: f64,
    lat: f64,
    fov_h: f64,
    fov_v: f64,
}

impl FovBBox {
    /// Builds a box, wrapping `lon` into `[-180, 180)`.
    ///
    /// Both fields of view must lie strictly inside `(0, 180)` and `lat` in `[-90, 90]`.
    pub fn new(lon: f64, lat: f64, fov_h: f64, fov_v: f64) -> Result<Self> {
        if ![lon, lat, fov_h, fov_v].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidBox("non-finite component".into()));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidBox(format!("latitude {lat} outside [-90, 90]")));
        }
        for (name, fov) in [("fov_h", fov_h), ("fov_v", fov_v)] {
            if !(fov > 0.0 && fov < MAX_FOV) {
                return Err(Error::InvalidBox(format!("{name} {fov} outside (0, 180)")));
            }
        }
        Ok(Self {
            lon: wrap_lon(lon),
            lat,
            fov_h,
            fov_v,
        })
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.lon, self.lat, self.fov_h, self.fov_v]
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn fov_h(&self) -> f64 {
        self.fov_h
    }

    pub fn fov_v(&self) -> f64 {
        self.fov_v
    }

    pub fn center(&self) -> SphPoint {
        SphPoint::new(self.lon, self.lat).expect("validated at construction")
    }

    /// True when the vertical extent reaches past a pole.
    pub fn pole_adjacent(&self) -> bool {
        self.lat.abs() + self.fov_v / 2.0 > 90.0
    }

    /// Same box moved by `d_lon` degrees of longitude.
    pub fn shifted_lon(&self, d_lon: f64) -> Self {
        Self {
            lon: wrap_lon(self.lon + d_lon),
            ..*self
        }
    }

    /// `fov_h * fov_v` in square degrees.
    pub fn planar_area(&self) -> f64 {
        self.fov_h * self.fov_v
    }

    /// Spherical-segment approximation `2 fov_h sin(fov_v / 2)` in steradians.
    pub fn segment_area(&self) -> f64 {
        2.0 * self.fov_h.to_radians() * (self.fov_v.to_radians() / 2.0).sin()
    }

    /// Exact area of the tangent-rectangle realization, in steradians.
    pub fn solid_angle(&self) -> f64 {
        let a = (self.fov_h.to_radians() / 2.0).sin();
        let b = (self.fov_v.to_radians() / 2.0).sin();
        4.0 * (a * b).asin()
    }
}

impl TryFrom<[f64; 4]> for FovBBox {
    type Error = Error;

    fn try_from(a: [f64; 4]) -> Result<Self> {
        Self::from_array(a)
    }
}

impl From<FovBBox> for [f64; 4] {
    fn from(b: FovBBox) -> Self {
        b.to_array()
    }
}

/// Orthonormal frame whose forward (`z`) axis is a box center, `x` pointing
/// east and `y` north.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxFrame {
    rows: [Vec3; 3],
}

impl BoxFrame {
    /// World to frame: yaw the center onto lon 0, then pitch it down to lat 0.
    pub fn new(b: &FovBBox) -> Self {
        let (sl, cl) = b.lon.to_radians().sin_cos();
        let (sp, cp) = b.lat.to_radians().sin_cos();
        // Rows of pitch(-lat) * yaw(lon) written out.
        Self {
            rows: [
                Vec3::new(cl, 0.0, -sl),
                Vec3::new(-sp * sl, cp, -sp * cl),
                Vec3::new(cp * sl, sp, cp * cl),
            ],
        }
    }

    #[inline]
    pub fn to_frame(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    #[inline]
    pub fn from_frame(&self, v: Vec3) -> Vec3 {
        self.rows[0] * v.x + self.rows[1] * v.y + self.rows[2] * v.z
    }

    /// Frame composed from the generic rotations; used to check [`BoxFrame::new`].
    pub fn via_rotations(b: &FovBBox, v: Vec3) -> Vec3 {
        rotate_pitch(rotate_yaw(v, b.lon), -b.lat)
    }
}

pub fn box_frame(b: &FovBBox) -> BoxFrame {
    BoxFrame::new(b)
}

/// Membership test with the frame and half-angle tangents precomputed.
#[derive(Debug, Clone, Copy)]
pub struct BoxRegion {
    frame: BoxFrame,
    tan_h: f64,
    tan_v: f64,
}

impl BoxRegion {
    pub fn new(b: &FovBBox) -> Self {
        Self {
            frame: BoxFrame::new(b),
            tan_h: (b.fov_h.to_radians() / 2.0).tan(),
            tan_v: (b.fov_v.to_radians() / 2.0).tan(),
        }
    }

    #[inline]
    pub fn contains(&self, v: Vec3) -> bool {
        let f = self.frame.to_frame(v);
        f.z > 0.0 && f.x.abs() <= self.tan_h * f.z && f.y.abs() <= self.tan_v * f.z
    }

    /// Corners counter-clockwise as seen from outside the sphere.
    pub fn corners(&self) -> [Vec3; 4] {
        let (h, v) = (self.tan_h, self.tan_v);
        [(h, -v), (h, v), (-h, v), (-h, -v)]
            .map(|(x, y)| self.frame.from_frame(Vec3::new(x, y, 1.0).normalize()))
    }

    /// Inward normals of the four bounding great circles: a point is inside
    /// iff every dot product is non-negative.
    pub fn edge_normals(&self) -> [Vec3; 4] {
        let (h, v) = (self.tan_h, self.tan_v);
        [
            Vec3::new(-1.0, 0.0, h),
            Vec3::new(1.0, 0.0, h),
            Vec3::new(0.0, -1.0, v),
            Vec3::new(0.0, 1.0, v),
        ]
        .map(|n| self.frame.from_frame(n.normalize()))
    }
}

pub fn contains(b: &FovBBox, p: SphPoint) -> bool {
    BoxRegion::new(b).contains(sph_to_cart(p))
}

pub fn box_corners(b: &FovBBox) -> [Vec3; 4] {
    BoxRegion::new(b).corners()
}

/// Unit vector of the box center.
pub(crate) fn center_vec(b: &FovBBox) -> Vec3 {
    lonlat_to_cart(b.lon, b.lat)
}

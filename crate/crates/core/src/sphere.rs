//! Points on the unit sphere, rotations and the equirectangular mapping.
//!
//! Axis convention: `y` is the polar axis, `z` points at (lon 0, lat 0) and
//! `x` at (lon 90, lat 0):
//!
//! ```text
//! (x, y, z) = (sin(lon) cos(lat), sin(lat), cos(lon) cos(lat))
//! ```
//!
//! Yaw rotates about `y`, pitch about `x`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps a longitude (or longitude difference) into `[-180, 180)`.
#[inline]
pub fn wrap_lon(deg: f64) -> f64 {
    if (-180.0..180.0).contains(&deg) {
        deg
    } else {
        (deg + 180.0).rem_euclid(360.0) - 180.0
    }
}

/// A point on the unit sphere in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphPoint {
    lon: f64,
    lat: f64,
}

impl SphPoint {
    /// Longitude is wrapped into `[-180, 180)`; latitude must lie in `[-90, 90]`.
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        if !lon.is_finite() || !lat.is_finite() {
            return Err(Error::NonFinite("point coordinates must be finite"));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::LatitudeOutOfRange(lat));
        }
        Ok(Self {
            lon: wrap_lon(lon),
            lat,
        })
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction. The zero vector stays zero.
    #[inline]
    pub fn normalize(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self * (1.0 / n)
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

pub fn sph_to_cart(p: SphPoint) -> Vec3 {
    lonlat_to_cart(p.lon, p.lat)
}

#[inline]
pub(crate) fn lonlat_to_cart(lon_deg: f64, lat_deg: f64) -> Vec3 {
    let (sl, cl) = lon_deg.to_radians().sin_cos();
    let (sp, cp) = lat_deg.to_radians().sin_cos();
    Vec3::new(sl * cp, sp, cl * cp)
}

/// Inverse of [`sph_to_cart`] for any non-zero vector. Longitude is 0 at the poles.
pub fn cart_to_sph(v: Vec3) -> Result<SphPoint> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    let horiz = v.x.hypot(v.z);
    let lat = v.y.atan2(horiz).to_degrees().clamp(-90.0, 90.0);
    let lon = if horiz == 0.0 || lat.abs() == 90.0 {
        0.0
    } else {
        wrap_lon(v.x.atan2(v.z).to_degrees())
    };
    Ok(SphPoint { lon, lat })
}

/// Rotation about the polar axis. A positive yaw moves points towards
/// decreasing longitude.
#[inline]
pub fn rotate_yaw(v: Vec3, yaw_deg: f64) -> Vec3 {
    let (s, c) = yaw_deg.to_radians().sin_cos();
    Vec3::new(v.x * c - v.z * s, v.y, v.x * s + v.z * c)
}

/// Rotation about the `x` axis. A positive pitch raises points on the
/// lon = 0 meridian towards the north pole.
#[inline]
pub fn rotate_pitch(v: Vec3, pitch_deg: f64) -> Vec3 {
    let (s, c) = pitch_deg.to_radians().sin_cos();
    Vec3::new(v.x, v.y * c + v.z * s, -v.y * s + v.z * c)
}

/// Great-circle distance in radians (haversine form).
pub fn great_circle_distance(p: SphPoint, q: SphPoint) -> f64 {
    let (p_lat, q_lat) = (p.lat.to_radians(), q.lat.to_radians());
    let d_lat = q_lat - p_lat;
    let d_lon = wrap_lon(q.lon - p.lon).to_radians();
    let h = (d_lat / 2.0).sin().powi(2) + p_lat.cos() * q_lat.cos() * (d_lon / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

/// Yaw followed by pitch, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    yaw: f64,
    pitch: f64,
}

impl RotationSpec {
    pub const IDENTITY: RotationSpec = RotationSpec {
        yaw: 0.0,
        pitch: 0.0,
    };

    /// `yaw` is reduced into `[0, 360)`; `pitch` must lie in `[-90, 90]`.
    pub fn new(yaw: f64, pitch: f64) -> Result<Self> {
        if !yaw.is_finite() || !pitch.is_finite() {
            return Err(Error::NonFinite("rotation angles must be finite"));
        }
        if !(-90.0..=90.0).contains(&pitch) {
            return Err(Error::InvalidArgument(format!(
                "pitch {pitch} outside [-90, 90]"
            )));
        }
        let yaw = yaw.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        let yaw = if yaw >= 360.0 { 0.0 } else { yaw };
        Ok(Self { yaw, pitch })
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn is_identity(&self) -> bool {
        self.yaw == 0.0 && self.pitch == 0.0
    }

    /// The reverse rotation as a spec is not representable (pitch must come
    /// first), so inversion is exposed through [`RotationSpec::apply_inverse`].
    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        rotate_pitch(rotate_yaw(v, self.yaw), self.pitch)
    }

    #[inline]
    pub fn apply_inverse(&self, v: Vec3) -> Vec3 {
        rotate_yaw(rotate_pitch(v, -self.pitch), -self.yaw)
    }
}

/// Equirectangular projection `x = R (lon - lon0) cos(lat_sp)`, `y = R (lat - lat0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErpProjection {
    pub center: SphPoint,
    pub standard_parallel: f64,
    pub radius: f64,
}

impl Default for ErpProjection {
    fn default() -> Self {
        Self {
            center: SphPoint { lon: 0.0, lat: 0.0 },
            standard_parallel: 0.0,
            radius: 1.0,
        }
    }
}

impl ErpProjection {
    /// Planar coordinates in units of `radius` (radians for the unit sphere).
    pub fn project(&self, p: SphPoint) -> (f64, f64) {
        let d_lon = wrap_lon(p.lon - self.center.lon).to_radians();
        let d_lat = (p.lat - self.center.lat).to_radians();
        (
            self.radius * d_lon * self.standard_parallel.to_radians().cos(),
            self.radius * d_lat,
        )
    }
}

pub(crate) fn check_erp_dims(width: u32, height: u32) -> Result<()> {
    if height == 0 || width != 2 * height {
        return Err(Error::Aspect { width, height });
    }
    Ok(())
}

/// Sphere point at the center of pixel `(u, v)` of a `width x height` panorama.
pub fn erp_pixel_to_sph(u: f64, v: f64, width: u32, height: u32) -> Result<SphPoint> {
    check_erp_dims(width, height)?;
    if !(0.0..width as f64).contains(&u) || !(0.0..height as f64).contains(&v) {
        return Err(Error::PixelOutOfRange {
            u,
            v,
            width,
            height,
        });
    }
    let (lon, lat) = pixel_to_lonlat(u, v, width, height);
    SphPoint::new(lon, lat)
}

#[inline]
pub(crate) fn pixel_to_lonlat(u: f64, v: f64, width: u32, height: u32) -> (f64, f64) {
    (
        (u + 0.5) / width as f64 * 360.0 - 180.0,
        90.0 - (v + 0.5) / height as f64 * 180.0,
    )
}

/// Continuous pixel coordinates `(u, v)` such that integer values land on
/// pixel centers; inverse of [`erp_pixel_to_sph`].
pub fn sph_to_erp_pixel(p: SphPoint, width: u32, height: u32) -> Result<(f64, f64)> {
    check_erp_dims(width, height)?;
    Ok(lonlat_to_pixel(p.lon, p.lat, width, height))
}

#[inline]
pub(crate) fn lonlat_to_pixel(lon: f64, lat: f64, width: u32, height: u32) -> (f64, f64) {
    (
        (lon + 180.0) / 360.0 * width as f64 - 0.5,
        (90.0 - lat) / 180.0 * height as f64 - 0.5,
    )
}

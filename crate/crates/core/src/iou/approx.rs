//! Rectangle-style approximations: FoV-IoU and Sph-IoU.
//!
//! Both place the ground-truth box at horizontal offset 0 and the detection at
//! a horizontal offset, then intersect axis-aligned rectangles in
//! (horizontal, latitude) degree space. Sph-IoU uses the raw longitude
//! difference; FoV-IoU scales it by the cosine of the mean latitude.
//!
//! The arithmetic is written once over [`Real`] so the losses can run it on
//! dual numbers and share every operation with the plain `f64` path.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::bfov::FovBBox;
use crate::sphere::wrap_lon;

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// How the horizontal offset between the two centers is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offset {
    /// Longitude difference scaled by the cosine of the mean latitude.
    FovDistance,
    /// Raw longitude difference.
    Longitude,
}

/// How box, intersection and enclosure areas are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SphArea {
    /// `width * height` in square degrees.
    #[default]
    Planar,
    /// Spherical segment `2 width sin(height / 2)`, radians.
    Segment,
}

/// Records whether any min/max (or the zero clamp) was evaluated at a tie.
#[derive(Debug, Default, Clone, Copy)]
pub struct Kinks(pub bool);

impl Kinks {
    /// `max(a, b)`, taking `a` on ties.
    #[inline]
    pub fn max<T: Real>(&mut self, a: T, b: T) -> T {
        let (av, bv) = (a.value(), b.value());
        if av == bv {
            self.0 = true;
        }
        if av >= bv {
            a
        } else {
            b
        }
    }

    /// `min(a, b)`, taking `a` on ties.
    #[inline]
    pub fn min<T: Real>(&mut self, a: T, b: T) -> T {
        let (av, bv) = (a.value(), b.value());
        if av == bv {
            self.0 = true;
        }
        if av <= bv {
            a
        } else {
            b
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Terms<T> {
    pub offset: T,
    pub area_g: T,
    pub area_d: T,
    pub inter: T,
    pub union: T,
    pub enclosure: T,
}

impl<T: Real> Terms<T> {
    #[inline]
    pub fn iou(&self) -> T {
        self.inter / self.union
    }
}

#[inline]
fn area<T: Real>(w: T, h: T, mode: SphArea) -> T {
    match mode {
        SphArea::Planar => w * h,
        SphArea::Segment => {
            let rad = T::cst(std::f64::consts::PI / 180.0);
            T::cst(2.0) * (w * rad) * (h * rad * T::cst(0.5)).sin()
        }
    }
}

/// Intersection, union and enclosure of `g` and `d`, each `[lon, lat, fov_h, fov_v]`.
#[inline]
pub fn terms<T: Real>(g: [T; 4], d: [T; 4], offset: Offset, mode: SphArea, kinks: &mut Kinks) -> Terms<T> {
    let half = T::cst(0.5);
    let raw = d[0] - g[0];
    let raw_v = raw.value();
    // the wrap only ever adds a multiple of 360
    let d_lon = raw + T::cst(wrap_lon(raw_v) - raw_v);
    let off = match offset {
        Offset::Longitude => d_lon,
        Offset::FovDistance => {
            let mean_lat = (g[1] + d[1]) * half * T::cst(std::f64::consts::PI / 180.0);
            d_lon * mean_lat.cos()
        }
    };

    let (g_lo, g_hi) = (-(g[2] * half), g[2] * half);
    let (d_lo, d_hi) = (off - d[2] * half, off + d[2] * half);
    // latitudes relative to the ground truth center, so equal boxes give
    // exactly equal extents
    let d_lat = d[1] - g[1];
    let (gp_lo, gp_hi) = (-(g[3] * half), g[3] * half);
    let (dp_lo, dp_hi) = (d_lat - d[3] * half, d_lat + d[3] * half);

    let zero = T::cst(0.0);
    let iw = kinks.min(g_hi, d_hi) - kinks.max(g_lo, d_lo);
    let ih = kinks.min(gp_hi, dp_hi) - kinks.max(gp_lo, dp_lo);
    let iw = kinks.max(zero, iw);
    let ih = kinks.max(zero, ih);

    let cw = kinks.max(g_hi, d_hi) - kinks.min(g_lo, d_lo);
    let ch = kinks.max(gp_hi, dp_hi) - kinks.min(gp_lo, dp_lo);

    let area_g = area(g[2], g[3], mode);
    let area_d = area(d[2], d[3], mode);
    let inter = area(iw, ih, mode);
    Terms {
        offset: off,
        area_g,
        area_d,
        inter,
        union: area_g + area_d - inter,
        enclosure: area(cw, ch, mode),
    }
}

/// Longitude difference scaled by the cosine of the mean latitude, in degrees.
pub fn fov_distance(bg: &FovBBox, bd: &FovBBox) -> f64 {
    let mean_lat = ((bg.lat() + bd.lat()) * 0.5).to_radians();
    wrap_lon(bd.lon() - bg.lon()) * mean_lat.cos()
}

/// Plain `f64` IoU of the two rectangles, the detection's horizontal offset
/// already computed. Same operations as [`terms`] without the bookkeeping.
#[inline(always)]
fn rect_iou(g: [f64; 4], d: [f64; 4], off: f64) -> f64 {
    let (gw, gh) = (g[2] * 0.5, g[3] * 0.5);
    let (dw, dh) = (d[2] * 0.5, d[3] * 0.5);
    let d_lat = d[1] - g[1];
    let iw = gw.min(off + dw) - (-gw).max(off - dw);
    let ih = gh.min(d_lat + dh) - (-gh).max(d_lat - dh);
    let inter = iw.max(0.0) * ih.max(0.0);
    let area_g = g[2] * g[3];
    let area_d = d[2] * d[3];
    inter / (area_g + area_d - inter)
}

#[inline(always)]
fn lon_offset(g: [f64; 4], d: [f64; 4]) -> f64 {
    let raw = d[0] - g[0];
    raw + (wrap_lon(raw) - raw)
}

/// FoV-IoU of a ground-truth box and a detection.
#[inline]
pub fn fov_iou(bg: &FovBBox, bd: &FovBBox) -> f64 {
    let (g, d) = (bg.to_array(), bd.to_array());
    let mean_lat = (g[1] + d[1]) * 0.5 * (std::f64::consts::PI / 180.0);
    rect_iou(g, d, lon_offset(g, d) * mean_lat.cos())
}

/// Sph-IoU with planar `fov_h * fov_v` areas.
#[inline]
pub fn sph_iou(bg: &FovBBox, bd: &FovBBox) -> f64 {
    let (g, d) = (bg.to_array(), bd.to_array());
    rect_iou(g, d, lon_offset(g, d))
}

/// Sph-IoU with a selectable area measure.
#[inline]
pub fn sph_iou_with(bg: &FovBBox, bd: &FovBBox, mode: SphArea) -> f64 {
    match mode {
        SphArea::Planar => sph_iou(bg, bd),
        SphArea::Segment => terms(bg.to_array(), bd.to_array(), Offset::Longitude, mode, &mut Kinks::default()).iou(),
    }
}

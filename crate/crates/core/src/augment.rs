//! Spherically consistent augmentation of equirectangular panoramas.
//!
//! A [`RotationSpec`] (yaw about the polar axis, then pitch about the `x`
//! axis) is applied to the image by inverse-mapping resampling and to the
//! boxes by moving their centers and enlarging their fields of view to cover
//! the local roll the rotation introduces.

use log::warn;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bfov::{FovBBox, MAX_FOV};
use crate::dataio::{Annotation, DatasetFile, ImageRecord};
use crate::error::{Error, Result};
use crate::sphere::{
    cart_to_sph, check_erp_dims, lonlat_to_cart, lonlat_to_pixel, pixel_to_lonlat, sph_to_cart, RotationSpec,
    SphPoint, Vec3,
};

/// 8-bit equirectangular raster, row-major, interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErpImage {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl ErpImage {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        check_erp_dims(width, height)?;
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!("unsupported channel count {channels}")));
        }
        if data.len() != width as usize * height as usize * channels as usize {
            return Err(Error::InvalidArgument(format!(
                "pixel buffer holds {} bytes, expected {}",
                data.len(),
                width as usize * height as usize * channels as usize
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width as usize * height as usize * channels as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, u: u32, v: u32) -> &[u8] {
        let c = self.channels as usize;
        let i = (v as usize * self.width as usize + u as usize) * c;
        &self.data[i..i + c]
    }

    pub fn pixel_mut(&mut self, u: u32, v: u32) -> &mut [u8] {
        let c = self.channels as usize;
        let i = (v as usize * self.width as usize + u as usize) * c;
        &mut self.data[i..i + c]
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centers on
    /// integers), wrapping horizontally and clamping vertically.
    fn sample_into(&self, u: f64, v: f64, out: &mut [u8]) {
        let (w, h) = (self.width as i64, self.height as i64);
        let v = v.clamp(0.0, (h - 1) as f64);
        let u0 = u.floor();
        let v0 = v.floor();
        let (fu, fv) = (u - u0, v - v0);
        let x0 = (u0 as i64).rem_euclid(w) as usize;
        let x1 = (u0 as i64 + 1).rem_euclid(w) as usize;
        let y0 = v0 as usize;
        let y1 = (v0 as i64 + 1).min(h - 1) as usize;
        let c = self.channels as usize;
        let row = self.width as usize;
        for (ch, o) in out.iter_mut().enumerate() {
            let p = |x: usize, y: usize| self.data[(y * row + x) * c + ch] as f64;
            let top = p(x0, y0) * (1.0 - fu) + p(x1, y0) * fu;
            let bottom = p(x0, y1) * (1.0 - fu) + p(x1, y1) * fu;
            *o = (top * (1.0 - fv) + bottom * fv).round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// Resamples `img` as seen after rotating the sphere by `spec`.
///
/// Each output pixel looks up the source direction `spec⁻¹(p)`.
pub fn remap_erp(img: &ErpImage, spec: RotationSpec) -> ErpImage {
    if spec.is_identity() {
        return img.clone();
    }
    remap_with(img, |v| spec.apply_inverse(v))
}

/// Undoes [`remap_erp`] up to interpolation loss.
pub fn remap_erp_inverse(img: &ErpImage, spec: RotationSpec) -> ErpImage {
    if spec.is_identity() {
        return img.clone();
    }
    remap_with(img, |v| spec.apply(v))
}

/// `lookup` maps an output direction to the source direction.
fn remap_with(img: &ErpImage, lookup: impl Fn(Vec3) -> Vec3 + Sync) -> ErpImage {
    let (w, h) = (img.width, img.height);
    let c = img.channels as usize;
    let mut data = vec![0u8; img.data.len()];
    data.par_chunks_mut(w as usize * c).enumerate().for_each(|(v, row)| {
        for u in 0..w as usize {
            let (lon, lat) = pixel_to_lonlat(u as f64, v as f64, w, h);
            let p = cart_to_sph(lookup(lonlat_to_cart(lon, lat))).expect("rotation of a unit vector");
            let (su, sv) = lonlat_to_pixel(p.lon(), p.lat(), w, h);
            img.sample_into(su, sv, &mut row[u * c..(u + 1) * c]);
        }
    });
    ErpImage {
        width: w,
        height: h,
        channels: img.channels,
        data,
    }
}

/// Unit eastward tangent at `p`.
fn east(p: SphPoint) -> Vec3 {
    let (s, c) = p.lon().to_radians().sin_cos();
    Vec3::new(c, 0.0, -s)
}

/// Unit northward tangent at `p`.
fn north(p: SphPoint) -> Vec3 {
    let (sl, cl) = p.lon().to_radians().sin_cos();
    let (sp, cp) = p.lat().to_radians().sin_cos();
    Vec3::new(-sl * sp, cp, -cl * sp)
}

/// Signed roll, in degrees, between the rotated east direction at `center`
/// and the east direction at the rotated center; positive towards north.
pub fn local_roll_angle(center: SphPoint, spec: RotationSpec) -> Result<f64> {
    let moved_vec = spec.apply(sph_to_cart(center));
    if moved_vec.x.hypot(moved_vec.z) < 1e-12 {
        return Err(Error::AtPole);
    }
    let moved = cart_to_sph(moved_vec)?;
    let carried = if center.lat().abs() == 90.0 {
        // east at a pole is taken at lon 0
        spec.apply(Vec3::new(1.0, 0.0, 0.0))
    } else {
        spec.apply(east(center))
    };
    Ok(carried.dot(north(moved)).atan2(carried.dot(east(moved))).to_degrees())
}

/// Moves a box with the sphere and grows it to the tightest axis-aligned
/// cover of its rolled footprint.
pub fn transform_bbox(b: &FovBBox, spec: RotationSpec) -> Result<FovBBox> {
    let center = b.center();
    let roll = local_roll_angle(center, spec)?;
    let moved = cart_to_sph(spec.apply(sph_to_cart(center)))?;
    let (s, c) = roll.to_radians().sin_cos();
    let (s, c) = (s.abs(), c.abs());
    let (w, h) = (b.fov_h(), b.fov_v());
    let clamp = |x: f64| x.clamp(f64::MIN_POSITIVE, MAX_FOV - 1e-6);
    FovBBox::new(moved.lon(), moved.lat(), clamp(w * c + h * s), clamp(w * s + h * c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub yaw_range: (f64, f64),
    pub pitch_range: (f64, f64),
    pub fraction: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            yaw_range: (0.0, 360.0),
            pitch_range: (-30.0, 30.0),
            fraction: 0.5,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let (ylo, yhi) = self.yaw_range;
        let (plo, phi) = self.pitch_range;
        if !(0.0..=360.0).contains(&ylo) || !(0.0..=360.0).contains(&yhi) || ylo > yhi {
            return Err(Error::InvalidArgument(format!("yaw range {ylo}:{yhi} must lie in [0, 360]")));
        }
        if !(-90.0..=90.0).contains(&plo) || !(-90.0..=90.0).contains(&phi) || plo > phi {
            return Err(Error::InvalidArgument(format!("pitch range {plo}:{phi} must lie in [-90, 90]")));
        }
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::InvalidArgument(format!("fraction {} outside [0, 1]", self.fraction)));
        }
        Ok(())
    }
}

/// Boxes whose rotated center lands this close to a pole are dropped.
pub const POLE_DROP_DEG: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct AugmentedImage {
    pub source_id: i64,
    pub record: ImageRecord,
    pub spec: RotationSpec,
    pub image: ErpImage,
}

#[derive(Debug, Clone)]
pub struct AugmentOutput {
    /// Input dataset with the new images and annotations appended.
    pub dataset: DatasetFile,
    pub images: Vec<AugmentedImage>,
    pub dropped_boxes: usize,
}

/// Rotation drawn for `image_id`: its own stream of the seeded generator, so
/// the draw does not depend on processing order.
pub fn draw_rotation(cfg: &AugmentConfig, image_id: i64) -> RotationSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(image_id as u64);
    let (ylo, yhi) = cfg.yaw_range;
    let (plo, phi) = cfg.pitch_range;
    let yaw = ylo + rng.random::<f64>() * (yhi - ylo);
    let pitch = plo + rng.random::<f64>() * (phi - plo);
    RotationSpec::new(yaw, pitch).expect("ranges validated")
}

/// Name of the augmented copy: `<stem>_aug.png`.
fn augmented_name(file_name: &str) -> String {
    let stem = std::path::Path::new(file_name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file_name.to_string());
    format!("{stem}_aug.png")
}

/// Adds `ceil(fraction * N)` rotated copies of images chosen without
/// replacement. `load` fetches the pixels of a selected image.
pub fn augment_dataset<F>(dataset: &DatasetFile, cfg: &AugmentConfig, load: F) -> Result<AugmentOutput>
where
    F: Fn(&ImageRecord) -> Result<ErpImage> + Sync,
{
    cfg.validate()?;
    dataset.validate()?;
    let n = dataset.images.len();
    let count = ((cfg.fraction * n as f64).ceil() as usize).min(n);
    if count == 0 {
        return Ok(AugmentOutput {
            dataset: dataset.clone(),
            images: Vec::new(),
            dropped_boxes: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen: Vec<usize> = sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable_by_key(|&i| dataset.images[i].id);

    let rendered: Vec<(usize, RotationSpec, ErpImage)> = chosen
        .par_iter()
        .map(|&i| {
            let rec = &dataset.images[i];
            let spec = draw_rotation(cfg, rec.id);
            let img = load(rec)?;
            if img.width() != rec.width || img.height() != rec.height {
                return Err(Error::Validation {
                    record: "image",
                    id: rec.id,
                    message: format!(
                        "file is {}x{}, dataset says {}x{}",
                        img.width(),
                        img.height(),
                        rec.width,
                        rec.height
                    ),
                });
            }
            Ok((i, spec, remap_erp(&img, spec)))
        })
        .collect::<Result<_>>()?;

    let mut out = dataset.clone();
    let first_image = dataset.images.iter().map(|r| r.id).max().unwrap_or(0) + 1;
    let mut next_ann = dataset.annotations.iter().map(|a| a.id).max().unwrap_or(0) + 1;
    let mut dropped = 0usize;
    let mut images = Vec::with_capacity(rendered.len());
    for (image_id, (i, spec, image)) in (first_image..).zip(rendered) {
        let src = &dataset.images[i];
        let record = ImageRecord {
            id: image_id,
            file_name: augmented_name(&src.file_name),
            width: src.width,
            height: src.height,
        };
        let mut anns: Vec<&Annotation> = dataset.annotations.iter().filter(|a| a.image_id == src.id).collect();
        anns.sort_by_key(|a| a.id);
        for a in anns {
            let moved = cart_to_sph(spec.apply(sph_to_cart(a.bbox.center())))?;
            if moved.lat().abs() > 90.0 - POLE_DROP_DEG {
                warn!("annotation {} dropped: rotated center at latitude {:.3}", a.id, moved.lat());
                dropped += 1;
                continue;
            }
            out.annotations.push(Annotation {
                id: next_ann,
                image_id: record.id,
                category_id: a.category_id,
                bbox: transform_bbox(&a.bbox, spec)?,
            });
            next_ann += 1;
        }
        out.images.push(record.clone());
        images.push(AugmentedImage {
            source_id: src.id,
            record,
            spec,
            image,
        });
    }
    Ok(AugmentOutput {
        dataset: out,
        images,
        dropped_boxes: dropped,
    })
}

//! Greedy non-maximum suppression over field-of-view boxes.

use serde::{Deserialize, Serialize};

use crate::bfov::FovBBox;
use crate::error::{Error, Result};
use crate::iou::IouMethod;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: i64,
    pub category_id: i64,
    pub bbox: FovBBox,
    pub score: f64,
}

impl Detection {
    pub fn new(image_id: i64, category_id: i64, bbox: FovBBox, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore(score));
        }
        Ok(Self {
            image_id,
            category_id,
            bbox,
            score,
        })
    }
}

pub(crate) fn check_threshold(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(t))
    }
}

/// Indices of the detections kept by per-category greedy NMS, in score order.
///
/// A candidate is dropped when its IoU with an already kept detection of the
/// same category is strictly greater than `iou_threshold`. Equal scores keep
/// input order.
pub fn nms_indices(dets: &[Detection], iou_threshold: f64, method: IouMethod) -> Result<Vec<usize>> {
    check_threshold(iou_threshold)?;
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));

    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let d = &dets[i];
        let suppressed = kept.iter().any(|&k| {
            let kd = &dets[k];
            kd.category_id == d.category_id && method.iou(&kd.bbox, &d.bbox) > iou_threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// Greedy NMS over the detections of a single image.
pub fn nms(dets: &[Detection], iou_threshold: f64, method: IouMethod) -> Result<Vec<Detection>> {
    Ok(nms_indices(dets, iou_threshold, method)?.into_iter().map(|i| dets[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iou::fov_iou;

    fn det(lon: f64, lat: f64, size: f64, score: f64, cat: i64) -> Detection {
        Detection::new(1, cat, FovBBox::new(lon, lat, size, size).unwrap(), score).unwrap()
    }

    #[test]
    fn empty() {
        assert!(nms(&[], 0.5, IouMethod::Fov).unwrap().is_empty());
    }

    #[test]
    fn bad_threshold() {
        assert!(matches!(nms(&[], 1.5, IouMethod::Fov), Err(Error::InvalidThreshold(_))));
        assert!(nms(&[], -0.1, IouMethod::Fov).is_err());
    }

    #[test]
    fn duplicate_keeps_higher_score() {
        let dets = [det(0.0, 0.0, 20.0, 0.8, 1), det(0.0, 0.0, 20.0, 0.9, 1)];
        let kept = nms(&dets, 0.5, IouMethod::Fov).unwrap();
        assert_eq!(kept, vec![dets[1]]);
    }

    #[test]
    fn disjoint_equal_scores_kept_in_input_order() {
        let dets = [det(0.0, 0.0, 20.0, 0.5, 1), det(90.0, 0.0, 20.0, 0.5, 1)];
        assert_eq!(nms_indices(&dets, 0.5, IouMethod::Fov).unwrap(), vec![0, 1]);
    }

    #[test]
    fn categories_do_not_suppress_each_other() {
        let dets = [det(0.0, 0.0, 20.0, 0.9, 1), det(0.0, 0.0, 20.0, 0.8, 2)];
        assert_eq!(nms(&dets, 0.5, IouMethod::Fov).unwrap().len(), 2);
    }

    #[test]
    fn boundary_equal_iou_survives() {
        // offset 10 on 20x20 equator boxes: I = 10 * 20, U = 600 -> 1/3
        let dets = [det(0.0, 0.0, 20.0, 0.9, 1), det(10.0, 0.0, 20.0, 0.8, 1)];
        let iou = fov_iou(&dets[0].bbox, &dets[1].bbox);
        assert_eq!(nms(&dets, iou, IouMethod::Fov).unwrap().len(), 2);
        assert_eq!(nms(&dets, iou - 1e-9, IouMethod::Fov).unwrap().len(), 1);
    }

    /// Smallest equal-size equator spacing found by scanning whole-degree
    /// offsets such that neighbours overlap at 0.6 but second neighbours stay
    /// below 0.5.
    fn chain_spacing() -> (f64, f64) {
        for size in 10..=60 {
            for off in 1..size {
                let a = FovBBox::new(0.0, 0.0, size as f64, size as f64).unwrap();
                let b = FovBBox::new(off as f64, 0.0, size as f64, size as f64).unwrap();
                let c = FovBBox::new(2.0 * off as f64, 0.0, size as f64, size as f64).unwrap();
                let ab = fov_iou(&a, &b);
                if (ab - 0.6).abs() < 0.02 && fov_iou(&a, &c) < 0.5 {
                    return (size as f64, off as f64);
                }
            }
        }
        panic!("no chain configuration");
    }

    #[test]
    fn chain_keeps_ends() {
        let (size, off) = chain_spacing();
        let dets = [det(0.0, 0.0, size, 0.9, 1), det(off, 0.0, size, 0.8, 1), det(2.0 * off, 0.0, size, 0.7, 1)];
        let ab = fov_iou(&dets[0].bbox, &dets[1].bbox);
        let bc = fov_iou(&dets[1].bbox, &dets[2].bbox);
        assert!(ab > 0.5 && bc > 0.5);
        assert!(fov_iou(&dets[0].bbox, &dets[2].bbox) < 0.5);
        assert_eq!(nms(&dets, 0.5, IouMethod::Fov).unwrap(), vec![dets[0], dets[2]]);
    }

    #[test]
    fn fov_suppresses_high_latitude_duplicates_that_sph_keeps() {
        let dets = [det(0.0, 70.0, 20.0, 0.9, 1), det(10.0, 70.0, 20.0, 0.8, 1)];
        assert_eq!(nms(&dets, 0.5, IouMethod::Fov).unwrap().len(), 1);
        assert_eq!(nms(&dets, 0.5, IouMethod::Sph).unwrap().len(), 2);
    }

    #[test]
    fn score_validation() {
        let b = FovBBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        assert!(Detection::new(0, 0, b, 1.2).is_err());
    }
}

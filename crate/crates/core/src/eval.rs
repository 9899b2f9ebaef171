//! COCO-style average precision over field-of-view boxes.
//!
//! Matching and the 101-point interpolated AP follow the COCO protocol.
//! Differences: no crowd/ignore annotations and no per-image detection cap.
//! Size buckets and latitude bands *filter* both ground truth and detections
//! before matching (by planar FoV area and by absolute center latitude).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bfov::FovBBox;
use crate::error::{Error, Result};
use crate::iou::IouMethod;
use crate::nms::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub id: i64,
    pub image_id: i64,
    pub category_id: i64,
    pub bbox: FovBBox,
}

/// Ground truth plus the image and category universe detections may refer to.
#[derive(Debug, Clone, Default)]
pub struct EvalDataset {
    pub image_ids: Vec<i64>,
    pub category_ids: Vec<i64>,
    pub annotations: Vec<GroundTruth>,
}

/// Closed band of absolute center latitude, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatBand {
    pub lo: f64,
    pub hi: f64,
}

impl LatBand {
    pub const HIGH_LATITUDE: LatBand = LatBand { lo: 50.0, hi: 90.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=90.0).contains(&lo) || !(0.0..=90.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidArgument(format!("latitude band {lo}:{hi} must satisfy 0 <= lo <= hi <= 90")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, b: &FovBBox) -> bool {
        (self.lo..=self.hi).contains(&b.lat().abs())
    }
}

/// Planar-area thresholds in square degrees: small `< small_max`, medium
/// `< medium_max`, large otherwise. The defaults are COCO's 32 px and 96 px
/// at 0.1875 degrees per pixel (1920x960 panoramas).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeBuckets {
    pub small_max: f64,
    pub medium_max: f64,
}

impl Default for SizeBuckets {
    fn default() -> Self {
        Self {
            small_max: 36.0,
            medium_max: 324.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Size {
    Small,
    Medium,
    Large,
}

impl SizeBuckets {
    fn classify(&self, b: &FovBBox) -> Size {
        let a = b.planar_area();
        if a < self.small_max {
            Size::Small
        } else if a < self.medium_max {
            Size::Medium
        } else {
            Size::Large
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub method: IouMethod,
    pub thresholds: Vec<f64>,
    pub bands: Vec<LatBand>,
    pub sizes: SizeBuckets,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            method: IouMethod::Fov,
            thresholds: coco_thresholds(),
            bands: vec![LatBand::HIGH_LATITUDE],
            sizes: SizeBuckets::default(),
        }
    }
}

/// 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// Outcome of greedy matching at one threshold. `order` lists detection
/// indices by descending score; `det_to_gt[k]` is the matched ground-truth id
/// of `order[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub order: Vec<usize>,
    pub det_to_gt: Vec<Option<i64>>,
    pub gt_matched: Vec<bool>,
}

impl Matching {
    pub fn true_positives(&self) -> usize {
        self.det_to_gt.iter().filter(|m| m.is_some()).count()
    }

    pub fn false_positives(&self) -> usize {
        self.det_to_gt.len() - self.true_positives()
    }

    pub fn false_negatives(&self) -> usize {
        self.gt_matched.iter().filter(|m| !**m).count()
    }
}

fn score_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order
}

fn match_with_ious(gts: &[GroundTruth], order: &[usize], ious: &[Vec<f64>], thr: f64) -> Matching {
    let mut gt_matched = vec![false; gts.len()];
    let mut det_to_gt = Vec::with_capacity(order.len());
    for &d in order {
        let mut best: Option<usize> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_matched[g] {
                continue;
            }
            let iou = ious[d][g];
            if iou < thr {
                continue;
            }
            best = match best {
                Some(b) if ious[d][b] > iou || (ious[d][b] == iou && gts[b].id < gt.id) => Some(b),
                _ => Some(g),
            };
        }
        if let Some(g) = best {
            gt_matched[g] = true;
        }
        det_to_gt.push(best.map(|g| gts[g].id));
    }
    Matching {
        order: order.to_vec(),
        det_to_gt,
        gt_matched,
    }
}

fn iou_table(gts: &[GroundTruth], dets: &[Detection], method: IouMethod) -> Vec<Vec<f64>> {
    dets.iter()
        .map(|d| gts.iter().map(|g| method.iou(&g.bbox, &d.bbox)).collect())
        .collect()
}

/// Greedy one-to-one matching of one image/category subset.
///
/// Detections in descending score order each take the unmatched ground truth
/// with the highest IoU at or above `iou_thr`, ties going to the lower id.
pub fn match_detections(gts: &[GroundTruth], dets: &[Detection], iou_thr: f64, method: IouMethod) -> Matching {
    let ious = iou_table(gts, dets, method);
    match_with_ious(gts, &score_order(dets), &ious, iou_thr)
}

/// 101-point interpolated AP from `(score, is_true_positive)` pairs sorted
/// by descending score. `None` when there is no ground truth.
pub fn average_precision(ranked: &[(f64, bool)], num_gt: usize) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    let mut tp = 0usize;
    let mut precision = Vec::with_capacity(ranked.len());
    let mut recall = Vec::with_capacity(ranked.len());
    for (k, &(_, hit)) in ranked.iter().enumerate() {
        tp += hit as usize;
        precision.push(tp as f64 / (k + 1) as f64);
        recall.push(tp as f64 / num_gt as f64);
    }
    // precision envelope, non-increasing in rank
    for k in (1..precision.len()).rev() {
        if precision[k] > precision[k - 1] {
            precision[k - 1] = precision[k];
        }
    }
    let mut sum = 0.0;
    for r in 0..=100 {
        let r = r as f64 / 100.0;
        let idx = recall.partition_point(|&x| x < r);
        if idx < precision.len() {
            sum += precision[idx];
        }
    }
    Some(sum / 101.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdAp {
    pub threshold: f64,
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryReport {
    pub category_id: i64,
    pub num_gt: usize,
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandReport {
    pub lo: f64,
    pub hi: f64,
    pub num_gt: usize,
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
}

/// Every AP is `None` when no category in the subset has ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub num_gt: usize,
    pub num_det: usize,
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
    pub per_threshold: Vec<ThresholdAp>,
    pub bands: Vec<BandReport>,
    pub per_category: Vec<CategoryReport>,
}

/// AP table `[threshold][category]` for one filtered subset.
struct Grid {
    categories: Vec<i64>,
    num_gt: Vec<usize>,
    ap: Vec<Vec<Option<f64>>>,
}

fn mean(vals: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in vals.flatten() {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

impl Grid {
    fn at(&self, thresholds: &[f64], t: f64) -> Option<f64> {
        let i = thresholds.iter().position(|&x| (x - t).abs() < 1e-9)?;
        mean(self.ap[i].iter().copied())
    }

    fn overall(&self) -> Option<f64> {
        mean(self.ap.iter().flat_map(|row| row.iter().copied()))
    }

    fn category(&self, thresholds: &[f64], k: usize) -> (Option<f64>, Option<f64>, Option<f64>) {
        let pick = |t: f64| thresholds.iter().position(|&x| (x - t).abs() < 1e-9).and_then(|i| self.ap[i][k]);
        (mean(self.ap.iter().map(|row| row[k])), pick(0.5), pick(0.75))
    }
}

fn grid(gts: &[&GroundTruth], dets: &[&Detection], categories: &[i64], cfg: &EvalConfig) -> Grid {
    // (category, image) -> subsets; BTreeMap keeps image order deterministic
    let mut units: BTreeMap<(i64, i64), (Vec<GroundTruth>, Vec<Detection>)> = BTreeMap::new();
    for g in gts {
        units.entry((g.category_id, g.image_id)).or_default().0.push(**g);
    }
    for d in dets {
        units.entry((d.category_id, d.image_id)).or_default().1.push(**d);
    }
    let units: Vec<_> = units.into_iter().collect();
    // per unit: score order, and per threshold the TP flags in that order
    let matched: Vec<(i64, usize, Vec<f64>, Vec<Vec<bool>>)> = units
        .par_iter()
        .map(|((cat, _), (g, d))| {
            let ious = iou_table(g, d, cfg.method);
            let order = score_order(d);
            let flags = cfg
                .thresholds
                .iter()
                .map(|&t| match_with_ious(g, &order, &ious, t).det_to_gt.iter().map(|m| m.is_some()).collect())
                .collect();
            (*cat, g.len(), order.iter().map(|&i| d[i].score).collect(), flags)
        })
        .collect();

    let mut num_gt = vec![0usize; categories.len()];
    let mut ap = vec![vec![None; categories.len()]; cfg.thresholds.len()];
    for (k, &cat) in categories.iter().enumerate() {
        let mine: Vec<_> = matched.iter().filter(|m| m.0 == cat).collect();
        num_gt[k] = mine.iter().map(|m| m.1).sum();
        for (t, row) in ap.iter_mut().enumerate() {
            let mut ranked: Vec<(f64, bool)> = mine
                .iter()
                .flat_map(|m| m.2.iter().copied().zip(m.3[t].iter().copied()))
                .collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
            row[k] = average_precision(&ranked, num_gt[k]);
        }
    }
    Grid {
        categories: categories.to_vec(),
        num_gt,
        ap,
    }
}

fn validate(gt: &EvalDataset, dets: &[Detection]) -> Result<()> {
    let images: BTreeSet<i64> = gt.image_ids.iter().copied().collect();
    let cats: BTreeSet<i64> = gt.category_ids.iter().copied().collect();
    let mut ids = BTreeSet::new();
    for a in &gt.annotations {
        if !ids.insert(a.id) {
            return Err(Error::Validation {
                record: "annotation",
                id: a.id,
                message: "duplicate id".into(),
            });
        }
        if !images.contains(&a.image_id) {
            return Err(Error::UnknownImage(a.image_id));
        }
        if !cats.contains(&a.category_id) {
            return Err(Error::UnknownCategory(a.category_id));
        }
    }
    for d in dets {
        if !images.contains(&d.image_id) {
            return Err(Error::UnknownImage(d.image_id));
        }
        if !cats.contains(&d.category_id) {
            return Err(Error::UnknownCategory(d.category_id));
        }
        if !(0.0..=1.0).contains(&d.score) {
            return Err(Error::InvalidScore(d.score));
        }
    }
    Ok(())
}

pub fn evaluate(gt: &EvalDataset, dets: &[Detection], cfg: &EvalConfig) -> Result<EvalReport> {
    validate(gt, dets)?;
    for &t in &cfg.thresholds {
        crate::nms::check_threshold(t)?;
    }
    let mut categories = gt.category_ids.clone();
    categories.sort_unstable();
    categories.dedup();

    let all_g: Vec<&GroundTruth> = gt.annotations.iter().collect();
    let all_d: Vec<&Detection> = dets.iter().collect();
    let full = grid(&all_g, &all_d, &categories, cfg);

    let by_size = |s: Size| {
        let g: Vec<_> = all_g.iter().copied().filter(|a| cfg.sizes.classify(&a.bbox) == s).collect();
        let d: Vec<_> = all_d.iter().copied().filter(|a| cfg.sizes.classify(&a.bbox) == s).collect();
        grid(&g, &d, &categories, cfg).overall()
    };

    let bands = cfg
        .bands
        .iter()
        .map(|band| {
            let g: Vec<_> = all_g.iter().copied().filter(|a| band.contains(&a.bbox)).collect();
            let d: Vec<_> = all_d.iter().copied().filter(|a| band.contains(&a.bbox)).collect();
            let sub = grid(&g, &d, &categories, cfg);
            BandReport {
                lo: band.lo,
                hi: band.hi,
                num_gt: g.len(),
                ap: sub.overall(),
                ap50: sub.at(&cfg.thresholds, 0.5),
                ap75: sub.at(&cfg.thresholds, 0.75),
            }
        })
        .collect();

    let per_category = (0..full.categories.len())
        .map(|k| {
            let (ap, ap50, ap75) = full.category(&cfg.thresholds, k);
            CategoryReport {
                category_id: full.categories[k],
                num_gt: full.num_gt[k],
                ap,
                ap50,
                ap75,
            }
        })
        .collect();

    Ok(EvalReport {
        method: cfg.method.name().to_string(),
        num_gt: gt.annotations.len(),
        num_det: dets.len(),
        ap: full.overall(),
        ap50: full.at(&cfg.thresholds, 0.5),
        ap75: full.at(&cfg.thresholds, 0.75),
        ap_small: by_size(Size::Small),
        ap_medium: by_size(Size::Medium),
        ap_large: by_size(Size::Large),
        per_threshold: cfg
            .thresholds
            .iter()
            .enumerate()
            .map(|(i, &threshold)| ThresholdAp {
                threshold,
                ap: mean(full.ap[i].iter().copied()),
            })
            .collect(),
        bands,
        per_category,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Aligned plain-text summary.
pub fn format_table(r: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "IoU method: {}   ground truth: {}   detections: {}", r.method, r.num_gt, r.num_det);
    let _ = writeln!(s, "{:<12}{:>10}", "metric", "value");
    for (name, v) in [
        ("AP", r.ap),
        ("AP50", r.ap50),
        ("AP75", r.ap75),
        ("AP_s", r.ap_small),
        ("AP_m", r.ap_medium),
        ("AP_l", r.ap_large),
    ] {
        let _ = writeln!(s, "{name:<12}{:>10}", cell(v));
    }
    for b in &r.bands {
        let label = format!("|lat| {}:{}", b.lo, b.hi);
        if b.num_gt == 0 {
            let _ = writeln!(s, "{label:<16} no ground truth");
        } else {
            let _ = writeln!(
                s,
                "{label:<16} AP {:>8}  AP50 {:>8}  AP75 {:>8}  (gt {})",
                cell(b.ap),
                cell(b.ap50),
                cell(b.ap75),
                b.num_gt
            );
        }
    }
    let _ = writeln!(s, "{:<10}{:>8}{:>10}{:>10}{:>10}", "category", "gt", "AP", "AP50", "AP75");
    for c in &r.per_category {
        let _ = writeln!(
            s,
            "{:<10}{:>8}{:>10}{:>10}{:>10}",
            c.category_id,
            c.num_gt,
            cell(c.ap),
            cell(c.ap50),
            cell(c.ap75)
        );
    }
    s
}

//! Dataset, prediction and image files.
//!
//! Datasets are JSON documents tagged `"format": "bfov/1"`:
//!
//! ```json
//! {
//!   "format": "bfov/1",
//!   "images": [{"id": 1, "file_name": "a.png", "width": 1920, "height": 960}],
//!   "categories": [{"id": 1, "name": "chair"}],
//!   "annotations": [{"id": 1, "image_id": 1, "category_id": 1, "bbox": [30.0, 60.0, 60.0, 60.0]}]
//! }
//! ```
//!
//! `bbox` is `[center_lon, center_lat, fov_h, fov_v]` in degrees. Prediction
//! files use the same tag with a `predictions` list whose entries add a
//! `score`; a bare JSON array of predictions is accepted on load.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::augment::ErpImage;
use crate::bfov::FovBBox;
use crate::error::{Error, Result};
use crate::eval::{EvalDataset, GroundTruth};
use crate::nms::Detection;

pub const FORMAT_TAG: &str = "bfov/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: i64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: i64,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: i64,
    pub image_id: i64,
    pub category_id: i64,
    pub bbox: FovBBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub format: String,
    pub images: Vec<ImageRecord>,
    pub categories: Vec<Category>,
    pub annotations: Vec<Annotation>,
}

impl Default for DatasetFile {
    fn default() -> Self {
        Self {
            format: FORMAT_TAG.to_string(),
            images: Vec::new(),
            categories: Vec::new(),
            annotations: Vec::new(),
        }
    }
}

impl DatasetFile {
    /// Unique ids and referential integrity.
    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT_TAG {
            return Err(invalid("dataset", 0, format!("unsupported format {:?}", self.format)));
        }
        let mut images = BTreeSet::new();
        for im in &self.images {
            if !images.insert(im.id) {
                return Err(invalid("image", im.id, "duplicate id"));
            }
        }
        let mut cats = BTreeSet::new();
        for c in &self.categories {
            if !cats.insert(c.id) {
                return Err(invalid("category", c.id, "duplicate id"));
            }
        }
        let mut anns = BTreeSet::new();
        for a in &self.annotations {
            if !anns.insert(a.id) {
                return Err(invalid("annotation", a.id, "duplicate id"));
            }
            if !images.contains(&a.image_id) {
                return Err(invalid("annotation", a.id, format!("unknown image_id {}", a.image_id)));
            }
            if !cats.contains(&a.category_id) {
                return Err(invalid("annotation", a.id, format!("unknown category_id {}", a.category_id)));
            }
        }
        Ok(())
    }

    pub fn to_eval(&self) -> EvalDataset {
        EvalDataset {
            image_ids: self.images.iter().map(|i| i.id).collect(),
            category_ids: self.categories.iter().map(|c| c.id).collect(),
            annotations: self
                .annotations
                .iter()
                .map(|a| GroundTruth {
                    id: a.id,
                    image_id: a.image_id,
                    category_id: a.category_id,
                    bbox: a.bbox,
                })
                .collect(),
        }
    }
}

fn invalid(record: &'static str, id: i64, message: impl Into<String>) -> Error {
    Error::Validation {
        record,
        id,
        message: message.into(),
    }
}

fn schema(path: &Path, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn check_format(path: &Path, tag: &str) -> Result<()> {
    if tag == FORMAT_TAG {
        Ok(())
    } else {
        Err(schema(path, format!("unsupported format {tag:?}, expected {FORMAT_TAG:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub format: String,
    pub predictions: Vec<Detection>,
}

impl PredictionFile {
    pub fn new(predictions: Vec<Detection>) -> Self {
        Self {
            format: FORMAT_TAG.to_string(),
            predictions,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_value(path: &Path, text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| parse_error(path, e))
}

fn parse_error(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// The `id` field of a raw record, for error messages.
fn record_id(v: &Value) -> i64 {
    v.get("id").and_then(Value::as_i64).unwrap_or(-1)
}

fn parse_records<T: serde::de::DeserializeOwned>(
    path: &Path,
    root: &Value,
    key: &str,
    record: &'static str,
) -> Result<Vec<T>> {
    let list = match root.get(key) {
        Some(Value::Array(items)) => items,
        Some(_) => return Err(schema(path, format!("\"{key}\" must be an array"))),
        None => return Err(schema(path, format!("missing \"{key}\""))),
    };
    list.iter()
        .enumerate()
        .map(|(i, v)| {
            T::deserialize(v).map_err(|e| {
                let id = if record == "prediction" { i as i64 } else { record_id(v) };
                invalid(record, id, e.to_string())
            })
        })
        .collect()
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<DatasetFile> {
    let root = parse_value(path, text)?;
    let format = root
        .get("format")
        .and_then(Value::as_str)
        .ok_or_else(|| schema(path, "missing \"format\" tag"))?;
    check_format(path, format)?;
    let ds = DatasetFile {
        format: format.to_string(),
        images: parse_records(path, &root, "images", "image")?,
        categories: parse_records(path, &root, "categories", "category")?,
        annotations: parse_records(path, &root, "annotations", "annotation")?,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetFile> {
    let path = path.as_ref();
    parse_dataset(path, &read(path)?)
}

pub fn dataset_to_string(ds: &DatasetFile) -> String {
    let mut s = serde_json::to_string_pretty(ds).expect("dataset serializes");
    s.push('\n');
    s
}

pub fn save_dataset(ds: &DatasetFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_string(ds)).map_err(|e| Error::io(path, e))
}

pub fn parse_predictions(path: &Path, text: &str) -> Result<PredictionFile> {
    let root = parse_value(path, text)?;
    let wrapped;
    let root = match root {
        Value::Array(_) => {
            wrapped = serde_json::json!({ "format": FORMAT_TAG, "predictions": root });
            &wrapped
        }
        _ => &root,
    };
    let format = root.get("format").and_then(Value::as_str).unwrap_or(FORMAT_TAG);
    check_format(path, format)?;
    let predictions: Vec<Detection> = parse_records(path, root, "predictions", "prediction")?;
    for (i, p) in predictions.iter().enumerate() {
        if !(0.0..=1.0).contains(&p.score) {
            return Err(invalid("prediction", i as i64, format!("score {} outside [0, 1]", p.score)));
        }
    }
    Ok(PredictionFile::new(predictions))
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionFile> {
    let path = path.as_ref();
    parse_predictions(path, &read(path)?)
}

pub fn save_predictions(p: &PredictionFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut s = serde_json::to_string_pretty(p).expect("predictions serialize");
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Boxes from a bare `[[lon, lat, fov_h, fov_v], ...]` array or from the
/// annotations of a dataset file.
pub fn load_boxes(path: impl AsRef<Path>) -> Result<Vec<FovBBox>> {
    let path = path.as_ref();
    let text = read(path)?;
    let root = parse_value(path, &text)?;
    if let Value::Array(items) = &root {
        return items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let arr: [f64; 4] = serde_json::from_value(v.clone()).map_err(|e| invalid("box", i as i64, e.to_string()))?;
                FovBBox::from_array(arr).map_err(|e| invalid("box", i as i64, e.to_string()))
            })
            .collect();
    }
    Ok(parse_dataset(path, &text)?.annotations.iter().map(|a| a.bbox).collect())
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ErpImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })?;
    let (w, h) = (img.width(), img.height());
    crate::sphere::check_erp_dims(w, h)?;
    match img {
        image::DynamicImage::ImageLuma8(buf) => ErpImage::new(w, h, 1, buf.into_raw()),
        other => ErpImage::new(w, h, 3, other.into_rgb8().into_raw()),
    }
}

/// Format follows the extension (`.png`, `.jpg`, `.jpeg`).
pub fn save_image(img: &ErpImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let color = if img.channels() == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    image::save_buffer(path, img.data(), img.width(), img.height(), color).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })
}

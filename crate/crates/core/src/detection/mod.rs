//! 3-D detection scoring: mAP over classes and distance thresholds, the five
//! true-positive error terms, and the composite detection score (NDS).

mod ap;
mod matching;
mod tp;

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SampleId;

pub use ap::average_precision;
pub use matching::{match_boxes, Match, MatchResult};
pub use tp::{aligned_iou, class_tp_errors, mean_tp_errors, nds, nds_partial, yaw_difference, PartialTpErrors, TpErrors};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtBox {
    pub sample_id: SampleId,
    pub translation: [f64; 3],
    /// Width, length, height.
    pub size: [f64; 3],
    pub yaw: f64,
    #[serde(default)]
    pub velocity: [f64; 2],
    pub class_name: String,
    #[serde(default)]
    pub attribute: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetBox {
    pub sample_id: SampleId,
    pub translation: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
    #[serde(default)]
    pub velocity: [f64; 2],
    pub class_name: String,
    #[serde(default)]
    pub attribute: Option<String>,
    pub score: f64,
}

fn check_geometry(translation: &[f64; 3], size: &[f64; 3], yaw: f64, velocity: &[f64; 2], class: &str) -> Result<(), String> {
    if class.is_empty() {
        return Err("empty class_name".into());
    }
    if !translation.iter().chain(velocity).all(|v| v.is_finite()) || !yaw.is_finite() {
        return Err("non-finite translation, yaw or velocity".into());
    }
    if !size.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(format!("size {size:?} must be finite and positive"));
    }
    Ok(())
}

impl GtBox {
    pub fn validate(&self) -> Result<(), String> {
        check_geometry(&self.translation, &self.size, self.yaw, &self.velocity, &self.class_name)
    }
}

impl DetBox {
    pub fn validate(&self) -> Result<(), String> {
        check_geometry(&self.translation, &self.size, self.yaw, &self.velocity, &self.class_name)?;
        if !(0.0..=1.0).contains(&self.score) {
            return Err(format!("score {} outside [0, 1]", self.score));
        }
        Ok(())
    }

    /// A prediction that reproduces `gt` exactly.
    pub fn from_gt(gt: &GtBox, score: f64) -> Self {
        DetBox {
            sample_id: gt.sample_id.clone(),
            translation: gt.translation,
            size: gt.size,
            yaw: gt.yaw,
            velocity: gt.velocity,
            class_name: gt.class_name.clone(),
            attribute: gt.attribute.clone(),
            score,
        }
    }
}

fn default_thresholds() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

fn default_tp_threshold() -> f64 {
    2.0
}

fn default_floor() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub class_names: Vec<String>,
    #[serde(default = "default_thresholds")]
    pub dist_thresholds: Vec<f64>,
    #[serde(default = "default_tp_threshold")]
    pub tp_threshold: f64,
    #[serde(default = "default_floor")]
    pub min_recall: f64,
    #[serde(default = "default_floor")]
    pub min_precision: f64,
    /// Classes whose velocity and attribute errors are not scored.
    #[serde(default)]
    pub attributeless_classes: Vec<String>,
}

impl DetectionConfig {
    pub fn new<S: Into<String>>(class_names: impl IntoIterator<Item = S>) -> Self {
        Self {
            class_names: class_names.into_iter().map(Into::into).collect(),
            dist_thresholds: default_thresholds(),
            tp_threshold: default_tp_threshold(),
            min_recall: default_floor(),
            min_precision: default_floor(),
            attributeless_classes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.class_names.is_empty() {
            return bad("no detection classes".into());
        }
        let unique: HashSet<&String> = self.class_names.iter().collect();
        if unique.len() != self.class_names.len() {
            return bad("duplicate detection class".into());
        }
        let t = &self.dist_thresholds;
        if t.is_empty() || !t.iter().all(|d| d.is_finite() && *d > 0.0) || !t.windows(2).all(|w| w[0] < w[1]) {
            return bad(format!("distance thresholds {t:?} must be positive and ascending"));
        }
        if !t.contains(&self.tp_threshold) {
            return bad(format!("tp threshold {} not among {t:?}", self.tp_threshold));
        }
        for (name, v) in [("min_recall", self.min_recall), ("min_precision", self.min_precision)] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1)"));
            }
        }
        if let Some(c) = self.attributeless_classes.iter().find(|c| !unique.contains(c)) {
            return bad(format!("attribute-less class `{c}` is not a detection class"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_name: String,
    pub num_gt: usize,
    /// AP at each distance threshold, in config order.
    pub ap: Vec<f64>,
    pub tp: PartialTpErrors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// Classes present in the ground truth; absent classes are not scored.
    pub classes: Vec<ClassMetrics>,
    pub map: f64,
    /// Velocity and attribute errors are `None` when every scored class is
    /// attribute-less; NDS then renormalizes over the defined terms.
    pub tp: PartialTpErrors,
    pub nds: f64,
}

/// Score predictions over the samples that appear in `gts`.
pub fn evaluate_detection(preds: &[DetBox], gts: &[GtBox], cfg: &DetectionConfig) -> Result<DetectionResult> {
    let samples: BTreeSet<SampleId> = gts.iter().map(|g| g.sample_id.clone()).collect();
    evaluate_detection_on(preds, gts, &samples, cfg)
}

/// Score predictions over an explicit sample set. Samples without
/// predictions count as having none; predictions outside the set are an error.
pub fn evaluate_detection_on(
    preds: &[DetBox],
    gts: &[GtBox],
    samples: &BTreeSet<SampleId>,
    cfg: &DetectionConfig,
) -> Result<DetectionResult> {
    cfg.validate()?;
    let known: HashSet<&str> = cfg.class_names.iter().map(String::as_str).collect();
    for (index, p) in preds.iter().enumerate() {
        p.validate().map_err(|reason| Error::InvalidBox { index, reason })?;
    }
    for (index, g) in gts.iter().enumerate() {
        g.validate()
            .map_err(|reason| Error::InvalidBox { index, reason: format!("ground truth: {reason}") })?;
        if !known.contains(g.class_name.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "ground truth class `{}` is not a detection class",
                g.class_name
            )));
        }
        if !samples.contains(&g.sample_id) {
            return Err(Error::InvalidConfig(format!("ground truth sample `{}` is not evaluated", g.sample_id)));
        }
    }
    let unknown: BTreeSet<&str> = preds
        .iter()
        .map(|p| p.class_name.as_str())
        .filter(|c| !known.contains(c))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownClasses(unknown.into_iter().map(String::from).collect()));
    }
    let stray: BTreeSet<&str> = preds
        .iter()
        .filter(|p| !samples.contains(&p.sample_id))
        .map(|p| p.sample_id.as_str())
        .collect();
    if !stray.is_empty() {
        return Err(Error::UnknownSamples(stray.into_iter().map(String::from).collect()));
    }

    let classes: Vec<ClassMetrics> = cfg
        .class_names
        .par_iter()
        .filter_map(|class| {
            let num_gt = gts.iter().filter(|g| &g.class_name == class).count();
            if num_gt == 0 {
                return None;
            }
            let mut tp_matches = None;
            let ap = cfg
                .dist_thresholds
                .iter()
                .map(|&d| {
                    let m = match_boxes(preds, gts, class, d);
                    let ap = average_precision(&m.hits(), num_gt, cfg.min_recall, cfg.min_precision)
                        .expect("class has ground truth");
                    if d == cfg.tp_threshold {
                        tp_matches = Some(m.matches().copied().collect::<Vec<_>>());
                    }
                    ap
                })
                .collect();
            let with_attributes = !cfg.attributeless_classes.contains(class);
            let matches = tp_matches.expect("tp threshold is validated");
            let tp = class_tp_errors(&matches, preds, gts, with_attributes);
            Some(ClassMetrics { class_name: class.clone(), num_gt, ap, tp })
        })
        .collect();
    if classes.is_empty() {
        return Err(Error::NoGroundTruth);
    }

    let aps: Vec<f64> = classes.iter().flat_map(|c| c.ap.iter().copied()).collect();
    let map = aps.iter().sum::<f64>() / aps.len() as f64;
    let class_tp: Vec<PartialTpErrors> = classes.iter().map(|c| c.tp).collect();
    let tp = mean_tp_errors(&class_tp);
    let nds = nds_partial(map, &tp);
    Ok(DetectionResult { classes, map, tp, nds })
}

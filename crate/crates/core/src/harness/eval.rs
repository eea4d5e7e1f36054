use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::corruption::CorruptionType;
use crate::depth::{evaluate_depth_set, DepthConfig, DepthMap};
use crate::detection::{evaluate_detection_on, DetBox, GtBox};
use crate::error::{Error, Result};
use crate::grid::{iou_per_class, labels_from_probabilities, miou, ConfusionMatrix, LabelGrid};
use crate::io::container::GridPayload;
use crate::io::gt::{decode_depth, read_dense, read_gt_boxes, DenseData};
use crate::io::manifest::{Manifest, Sample};
use crate::io::submission::{DenseRecord, Predictions, Submission};
use crate::seed::SampleId;
use crate::track::Metric;

use super::table::{ScoreRow, ScoreTable, TableMetadata, TOOLKIT_VERSION};
use super::with_jobs;

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub depth: DepthConfig,
    /// Recorded when the manifest carries no provenance.
    pub seed: u64,
    pub params_hash: String,
    /// Overrides the submission header's timestamp.
    pub timestamp: Option<String>,
    pub jobs: Option<usize>,
}

struct Group<'a> {
    corruption: CorruptionType,
    samples: Vec<&'a Sample>,
}

fn groups(manifest: &Manifest) -> Vec<Group<'_>> {
    let mut by_tag: BTreeMap<CorruptionType, Vec<&Sample>> = BTreeMap::new();
    for s in &manifest.samples {
        by_tag.entry(s.corruption).or_default().push(s);
    }
    by_tag.into_iter().map(|(corruption, samples)| Group { corruption, samples }).collect()
}

fn gt_path(s: &Sample) -> Result<&std::path::Path> {
    s.gt.as_deref()
        .ok_or_else(|| Error::Manifest(format!("sample `{}` has no ground truth", s.id)))
}

struct Scored {
    value: Option<f64>,
    details: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

/// Score a submission against a manifest, one row per corruption tag.
pub fn evaluate_submission(manifest: &Manifest, sub: &Submission, opts: &EvalOptions) -> Result<ScoreTable> {
    sub.check_against(manifest)?;
    let scored = with_jobs(opts.jobs, || -> Result<Vec<(CorruptionType, usize, Scored)>> {
        let groups = groups(manifest);
        let mut out = Vec::new();
        match (manifest.track.metric(), &sub.predictions) {
            (Metric::Nds, Predictions::Detection(boxes)) => {
                let preds: Vec<DetBox> = boxes.iter().map(|(_, b)| b.clone()).collect();
                for g in &groups {
                    out.push((g.corruption, g.samples.len(), score_detection(manifest, g, &preds)?));
                }
            }
            (Metric::Miou, Predictions::Dense(records)) => {
                let by_id: HashMap<&SampleId, &DenseRecord> = records.iter().map(|r| (&r.sample_id, r)).collect();
                for g in &groups {
                    out.push((g.corruption, g.samples.len(), score_grid(manifest, g, &by_id)?));
                }
            }
            (Metric::AbsRel, Predictions::Dense(records)) => {
                let by_id: HashMap<&SampleId, &DenseRecord> = records.iter().map(|r| (&r.sample_id, r)).collect();
                for g in &groups {
                    out.push((g.corruption, g.samples.len(), score_depth(g, &by_id, &opts.depth)?));
                }
            }
            _ => return Err(Error::Internal("prediction kind does not match the track".into())),
        }
        Ok(out)
    })??;

    let mut rows = Vec::new();
    let mut clean = None;
    let mut warnings = Vec::new();
    for (corruption, samples, s) in scored {
        warnings.extend(s.warnings.into_iter().map(|w| format!("{corruption}: {w}")));
        let row = ScoreRow { corruption, value: s.value, samples, details: s.details };
        if corruption == CorruptionType::Clean {
            clean = Some(row);
        } else {
            if row.value.is_none() {
                warnings.push(format!("{corruption}: row is absent and excluded from the headline"));
            }
            rows.push(row);
        }
    }
    let (seed, params_hash) = match &manifest.provenance {
        Some(p) => (p.seed, p.params_hash.clone()),
        None => (opts.seed, opts.params_hash.clone()),
    };
    let metadata = TableMetadata {
        team: sub.header.team.clone(),
        method: sub.header.method.clone(),
        timestamp: opts.timestamp.clone().or_else(|| sub.header.submitted_at.clone()),
        toolkit_version: TOOLKIT_VERSION.to_string(),
        params_hash,
        seed,
    };
    ScoreTable::from_rows(manifest.track, rows, clean, metadata, warnings)
}

fn score_detection(manifest: &Manifest, g: &Group<'_>, preds: &[DetBox]) -> Result<Scored> {
    let ids: BTreeSet<SampleId> = g.samples.iter().map(|s| s.id.clone()).collect();
    let gts: Vec<GtBox> = g
        .samples
        .par_iter()
        .map(|s| read_gt_boxes(gt_path(s)?, &s.id))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let preds: Vec<DetBox> = preds.iter().filter(|p| ids.contains(&p.sample_id)).cloned().collect();
    match evaluate_detection_on(&preds, &gts, &ids, &manifest.detection_config()) {
        Ok(r) => {
            let details = [
                ("map", Some(r.map)),
                ("mate", Some(r.tp.ate)),
                ("mase", Some(r.tp.ase)),
                ("maoe", Some(r.tp.aoe)),
                ("mave", r.tp.ave),
                ("maae", r.tp.aae),
            ]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
            Ok(Scored { value: Some(r.nds), details, warnings: vec![] })
        }
        Err(Error::NoGroundTruth) => Ok(Scored {
            value: None,
            details: BTreeMap::new(),
            warnings: vec!["no ground-truth boxes".into()],
        }),
        Err(e) => Err(e),
    }
}

fn submission_err(r: &DenseRecord, e: Error) -> Error {
    Error::Submission { record: r.line, msg: format!("sample `{}`: {e}", r.sample_id) }
}

fn prediction_grid(manifest: &Manifest, gt: &LabelGrid, r: &DenseRecord) -> Result<LabelGrid> {
    let DenseData::Grid(file) = crate::io::gt::decode_dense(&r.bytes()?)? else {
        return Err(Error::format("grid prediction", "expected an RBGRID1 container"));
    };
    match &file.payload {
        GridPayload::F32(probs) => {
            let k = manifest.classes.len();
            let dims: Vec<usize> = file.dims.iter().map(|&d| d as usize).collect();
            if dims.first() != Some(&k) || dims[1..] != *gt.dims() {
                return Err(Error::ShapeMismatch { pred: dims, gt: gt.dims().to_vec() });
            }
            let labels = labels_from_probabilities(probs, k, manifest.grid_fallback_label())?;
            LabelGrid::new(gt.dims().to_vec(), labels, manifest.ignore_value)
        }
        _ => file.to_labels(),
    }
}

fn score_grid(manifest: &Manifest, g: &Group<'_>, preds: &HashMap<&SampleId, &DenseRecord>) -> Result<Scored> {
    let k = manifest.classes.len();
    let missing = g.samples.iter().filter(|s| !preds.contains_key(&s.id)).count();
    let per_sample: Vec<ConfusionMatrix> = g
        .samples
        .par_iter()
        .map(|s| {
            let gt = match read_dense(gt_path(s)?)? {
                DenseData::Grid(f) => f.to_labels()?,
                DenseData::Depth(_) => return Err(Error::format("grid ground truth", "expected an RBGRID1 container")),
            };
            let pred = match preds.get(&s.id) {
                Some(r) => prediction_grid(manifest, &gt, r).map_err(|e| submission_err(r, e))?,
                None => LabelGrid::all_ignored(gt.dims().to_vec(), manifest.ignore_value)?,
            };
            let mut cm = ConfusionMatrix::new(k);
            match preds.get(&s.id) {
                Some(r) => cm.accumulate(&pred, &gt).map_err(|e| submission_err(r, e))?,
                None => cm.accumulate(&pred, &gt)?,
            }
            Ok(cm)
        })
        .collect::<Result<_>>()?;
    let mut cm = ConfusionMatrix::new(k);
    for part in &per_sample {
        cm.merge(part)?;
    }
    let excluded = manifest.excluded_grid_classes();
    let included: Vec<usize> = (0..k).filter(|c| !excluded.contains(c)).collect();
    let mut warnings = Vec::new();
    if missing > 0 {
        warnings.push(format!("{missing} sample(s) without prediction scored as all-missed"));
    }
    let details = iou_per_class(&cm)
        .into_iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (format!("iou_{}", manifest.classes[i]), v)))
        .collect();
    match miou(&cm, &included) {
        Ok(v) => Ok(Scored { value: Some(v), details, warnings }),
        Err(Error::UndefinedMiou) => {
            warnings.push("every scored class is absent".into());
            Ok(Scored { value: None, details, warnings })
        }
        Err(e) => Err(e),
    }
}

fn score_depth(g: &Group<'_>, preds: &HashMap<&SampleId, &DenseRecord>, cfg: &DepthConfig) -> Result<Scored> {
    let maps: Vec<(DepthMap, DepthMap)> = g
        .samples
        .par_iter()
        .map(|s| {
            let path = gt_path(s)?;
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let gt = decode_depth(&bytes)?;
            let r = preds.get(&s.id).ok_or_else(|| Error::MissingPrediction(s.id.to_string()))?;
            let pred = r.bytes().and_then(|b| decode_depth(&b)).map_err(|e| submission_err(r, e))?;
            if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
                return Err(submission_err(
                    r,
                    Error::ShapeMismatch {
                        pred: vec![pred.height() as usize, pred.width() as usize],
                        gt: vec![gt.height() as usize, gt.width() as usize],
                    },
                ));
            }
            Ok((pred, gt))
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(&DepthMap, &DepthMap)> = maps.iter().map(|(p, g)| (p, g)).collect();
    match evaluate_depth_set(&pairs, cfg) {
        Ok(r) => {
            let mut warnings = Vec::new();
            if r.images_skipped > 0 {
                warnings.push(format!("{} image(s) without valid ground truth skipped", r.images_skipped));
            }
            if r.nonfinite_predictions > 0 {
                warnings.push(format!("{} non-finite predicted pixel(s) clamped", r.nonfinite_predictions));
            }
            let m = r.metrics;
            let details = BTreeMap::from([
                ("rmse".to_string(), m.rmse),
                ("delta1_pct".to_string(), m.delta1),
                ("delta2_pct".to_string(), m.delta2),
                ("delta3_pct".to_string(), m.delta3),
            ]);
            Ok(Scored { value: Some(m.abs_rel), details, warnings })
        }
        Err(Error::NoValidDepth) => Ok(Scored {
            value: None,
            details: BTreeMap::new(),
            warnings: vec!["no image has valid ground truth".into()],
        }),
        Err(e) => Err(e),
    }
}

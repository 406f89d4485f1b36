use serde::{Deserialize, Serialize};

use super::labels::{LabelImage, UNKNOWN};
use crate::error::{Error, Result};

/// Pixel accuracy and confusion counts for one or more frames.
///
/// `confusion[gt * classes + pred]` counts evaluated pixels by ground truth
/// and prediction. Evaluated pixels predicted as [`UNKNOWN`] count as wrong
/// and are tallied per ground-truth class in `unknown_predictions` instead,
/// so `sum(confusion) + sum(unknown_predictions) == evaluated_pixels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: usize,
    pub pixel_accuracy: f64,
    pub evaluated_pixels: u64,
    pub ignored_pixels: u64,
    pub correct_pixels: u64,
    pub confusion: Vec<u64>,
    pub unknown_predictions: Vec<u64>,
}

impl EvalReport {
    pub fn empty(classes: usize) -> Self {
        Self {
            classes,
            pixel_accuracy: 0.0,
            evaluated_pixels: 0,
            ignored_pixels: 0,
            correct_pixels: 0,
            confusion: vec![0; classes * classes],
            unknown_predictions: vec![0; classes],
        }
    }

    /// Adds another report's counts; accuracy is recomputed from the totals.
    pub fn merge(&mut self, other: &EvalReport) {
        assert_eq!(self.classes, other.classes, "merging reports with different class counts");
        self.evaluated_pixels += other.evaluated_pixels;
        self.ignored_pixels += other.ignored_pixels;
        self.correct_pixels += other.correct_pixels;
        for (a, b) in self.confusion.iter_mut().zip(&other.confusion) {
            *a += b;
        }
        for (a, b) in self.unknown_predictions.iter_mut().zip(&other.unknown_predictions) {
            *a += b;
        }
        self.update_accuracy();
    }

    pub fn confusion_at(&self, gt: usize, pred: usize) -> u64 {
        self.confusion[gt * self.classes + pred]
    }

    /// Per-class intersection over union; `None` for classes absent from
    /// both prediction and ground truth.
    pub fn class_iou(&self) -> Vec<Option<f64>> {
        let c = self.classes;
        (0..c)
            .map(|k| {
                let tp = self.confusion_at(k, k);
                let gt_total: u64 = (0..c).map(|p| self.confusion_at(k, p)).sum::<u64>() + self.unknown_predictions[k];
                let pred_total: u64 = (0..c).map(|g| self.confusion_at(g, k)).sum();
                let union = gt_total + pred_total - tp;
                (union > 0).then(|| tp as f64 / union as f64)
            })
            .collect()
    }

    /// `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = format!(
            "pixel_accuracy={}\nevaluated_pixels={}\nignored_pixels={}\ncorrect_pixels={}\nclasses={}\n",
            self.pixel_accuracy, self.evaluated_pixels, self.ignored_pixels, self.correct_pixels, self.classes
        );
        for (k, iou) in self.class_iou().iter().enumerate() {
            if let Some(iou) = iou {
                s.push_str(&format!("iou_{k}={iou}\n"));
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn update_accuracy(&mut self) {
        self.pixel_accuracy = if self.evaluated_pixels == 0 {
            0.0
        } else {
            self.correct_pixels as f64 / self.evaluated_pixels as f64
        };
    }
}

/// Compares `pred` against `gt`. Pixels whose ground truth is UNKNOWN or in
/// `ignore` are skipped.
pub fn pixel_accuracy(pred: &LabelImage, gt: &LabelImage, ignore: &[u16], classes: usize) -> Result<EvalReport> {
    if !pred.same_size(gt) {
        return Err(Error::data(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let mut r = EvalReport::empty(classes);
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if g == UNKNOWN || ignore.contains(&g) {
            r.ignored_pixels += 1;
            continue;
        }
        if g as usize >= classes {
            return Err(Error::data(format!("ground truth class {g} out of range for {classes} classes")));
        }
        r.evaluated_pixels += 1;
        if p == UNKNOWN {
            r.unknown_predictions[g as usize] += 1;
            continue;
        }
        if p as usize >= classes {
            return Err(Error::data(format!("predicted class {p} out of range for {classes} classes")));
        }
        r.confusion[g as usize * classes + p as usize] += 1;
        if p == g {
            r.correct_pixels += 1;
        }
    }
    r.update_accuracy();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_perfect() {
        let gt = LabelImage::new(4, 1, vec![0, 1, 2, 1]);
        let r = pixel_accuracy(&gt, &gt, &[], 3).unwrap();
        assert_eq!(r.pixel_accuracy, 1.0);
        assert_eq!(r.evaluated_pixels, 4);
        assert_eq!(r.confusion.iter().sum::<u64>(), 4);
    }

    #[test]
    fn half_flipped_binary() {
        let gt = LabelImage::new(4, 1, vec![0, 1, 0, 1]);
        let pred = LabelImage::new(4, 1, vec![1, 1, 0, 0]);
        let r = pixel_accuracy(&pred, &gt, &[], 2).unwrap();
        assert_eq!(r.pixel_accuracy, 0.5);
        assert_eq!(r.confusion, vec![1, 1, 1, 1]);
    }

    #[test]
    fn ignore_and_unknown() {
        let gt = LabelImage::new(5, 1, vec![0, 1, UNKNOWN, 2, 2]);
        let pred = LabelImage::new(5, 1, vec![0, UNKNOWN, 0, 2, 0]);
        let r = pixel_accuracy(&pred, &gt, &[1], 3).unwrap();
        assert_eq!(r.ignored_pixels, 2);
        assert_eq!(r.evaluated_pixels, 3);
        assert_eq!(r.correct_pixels, 2);
        let r = pixel_accuracy(&pred, &gt, &[], 3).unwrap();
        assert_eq!(r.evaluated_pixels, 4);
        assert_eq!(r.unknown_predictions, vec![0, 1, 0]);
        assert_eq!(
            r.confusion.iter().sum::<u64>() + r.unknown_predictions.iter().sum::<u64>(),
            r.evaluated_pixels
        );
        assert_eq!(r.pixel_accuracy, 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        let a = LabelImage::filled(2, 2, 0);
        let b = LabelImage::filled(2, 3, 0);
        assert!(pixel_accuracy(&a, &b, &[], 2).is_err());
    }

    #[test]
    fn merge_weights_by_pixel_count() {
        let gt = LabelImage::filled(10, 1, 0);
        let mut p1 = gt.clone();
        p1.labels_mut()[..4].fill(1);
        let mut p2 = gt.clone();
        p2.labels_mut()[..2].fill(1);
        let mut r = pixel_accuracy(&p1, &gt, &[], 2).unwrap();
        assert!((r.pixel_accuracy - 0.6).abs() < 1e-12);
        r.merge(&pixel_accuracy(&p2, &gt, &[], 2).unwrap());
        assert!((r.pixel_accuracy - 0.7).abs() < 1e-12);
        assert_eq!(r.evaluated_pixels, 20);
    }

    #[test]
    fn iou_and_serialization() {
        let gt = LabelImage::new(4, 1, vec![0, 0, 1, 1]);
        let pred = LabelImage::new(4, 1, vec![0, 1, 1, 1]);
        let r = pixel_accuracy(&pred, &gt, &[], 3).unwrap();
        assert_eq!(r.class_iou(), vec![Some(0.5), Some(2.0 / 3.0), None]);
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_key_value().starts_with("pixel_accuracy=0.75\n"));
    }
}

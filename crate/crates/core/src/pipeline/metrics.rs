use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::BinMask;
use crate::ranking::{Label, ThreeChannelMask};
use crate::synthgen::{read_bin_mask, read_three_channel};

/// Pixel-level precision, recall and F1 of one mask pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Both sets empty scores 1; an empty denominator with the other set
    /// nonempty scores 0.
    pub fn from_counts(tp: usize, pred: usize, gt: usize) -> Self {
        if pred == 0 && gt == 0 {
            return Self {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, pred);
        let recall = ratio(tp, gt);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }

    pub fn mean(items: impl IntoIterator<Item = Prf>) -> Option<Prf> {
        let mut n = 0usize;
        let mut acc = (0.0, 0.0, 0.0);
        for p in items {
            n += 1;
            acc.0 += p.precision;
            acc.1 += p.recall;
            acc.2 += p.f1;
        }
        (n > 0).then(|| Prf {
            precision: acc.0 / n as f64,
            recall: acc.1 / n as f64,
            f1: acc.2 / n as f64,
        })
    }
}

pub fn binary_prf(pred: &BinMask, gt: &BinMask) -> Result<Prf> {
    if pred.dims() != gt.dims() {
        return Err(Error::ShapeMismatch(format!("prediction {:?} vs ground truth {:?}", pred.dims(), gt.dims())));
    }
    let tp = pred.data().iter().zip(gt.data()).filter(|(a, b)| **a && **b).count();
    Ok(Prf::from_counts(tp, pred.count(), gt.count()))
}

/// Per-class scores of a three-channel prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassPrf {
    pub background: Prf,
    pub source: Prf,
    pub target: Prf,
}

pub fn class_prf(pred: &ThreeChannelMask, gt: &ThreeChannelMask) -> Result<ClassPrf> {
    let one = |l: Label| binary_prf(&pred.channel(l), &gt.channel(l));
    Ok(ClassPrf {
        background: one(Label::Background)?,
        source: one(Label::Source)?,
        target: one(Label::Target)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub name: String,
    pub single: Prf,
    pub three_channel: Option<ClassPrf>,
}

/// Per-image scores and their unweighted means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub images: Vec<ImageMetrics>,
    pub mean_single: Option<Prf>,
    pub mean_three_channel: Option<ClassPrf>,
}

impl EvaluationSummary {
    pub fn from_images(images: Vec<ImageMetrics>) -> Self {
        let mean_single = Prf::mean(images.iter().map(|m| m.single));
        let tc: Vec<ClassPrf> = images.iter().filter_map(|m| m.three_channel).collect();
        let mean_three_channel = (!tc.is_empty()).then(|| ClassPrf {
            background: Prf::mean(tc.iter().map(|c| c.background)).expect("nonempty"),
            source: Prf::mean(tc.iter().map(|c| c.source)).expect("nonempty"),
            target: Prf::mean(tc.iter().map(|c| c.target)).expect("nonempty"),
        });
        Self {
            images,
            mean_single,
            mean_three_channel,
        }
    }
}

fn first_existing(dir: &Path, names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

/// Scores `pred/<name>/m_b.png` (and `m_c.png`) against
/// `gt/<name>/m_gt.png` (and `mc_gt.png`) for every ground-truth folder.
/// Ground-truth file names are accepted on the prediction side too, so a
/// fixture set evaluates against itself.
pub fn evaluate_dirs(pred: &Path, gt: &Path) -> Result<EvaluationSummary> {
    if !gt.is_dir() {
        return Err(Error::FileNotFound(gt.to_path_buf()));
    }
    let mut names: Vec<String> = std::fs::read_dir(gt)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("m_gt.png").is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut images = Vec::with_capacity(names.len());
    for name in names {
        let gdir = gt.join(&name);
        let pdir = pred.join(&name);
        let pm = first_existing(&pdir, &["m_b.png", "m_gt.png"]).ok_or_else(|| Error::FileNotFound(pdir.join("m_b.png")))?;
        let single = binary_prf(&read_bin_mask(&pm)?, &read_bin_mask(&gdir.join("m_gt.png"))?)?;
        let three_channel = match first_existing(&gdir, &["mc_gt.png"]) {
            Some(gc) => {
                let pc = first_existing(&pdir, &["m_c.png", "mc_gt.png"]).ok_or_else(|| Error::FileNotFound(pdir.join("m_c.png")))?;
                Some(class_prf(&read_three_channel(&pc)?, &read_three_channel(&gc)?)?)
            }
            None => None,
        };
        images.push(ImageMetrics {
            name,
            single,
            three_channel,
        });
    }
    Ok(EvaluationSummary::from_images(images))
}

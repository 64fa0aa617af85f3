use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::dlf::{multiscale, DlfErrorMaps};
use crate::error::{Error, Result};
use crate::imagecore::{build_pyramid, load_image, resize_bilinear, save_gray_png, save_rgb_png, to_grayscale, write_atomic, Image, ScalarMap};
use crate::patchmatch::{self, Level, LevelSet, MatchResult};
use crate::predictor::{binarize, predict, refine_max, BinMask, ProbMask};
use crate::ranking::{build_features, fuse_offsets, rank_map, score_map, three_channel, FusedOffsets, Label, ScorerParams, ThreeChannelMask};
use crate::zernike::{extract, make_kernels, ZernikeFeatures};

/// Wall time of one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

/// Everything produced for one image at working resolution.
#[derive(Clone, Debug)]
pub struct Detection {
    pub m: ProbMask,
    pub m_b: BinMask,
    pub m_c: ThreeChannelMask,
    pub complex_match: MatchResult,
    pub magnitude_match: MatchResult,
    pub dlf: [DlfErrorMaps; 2],
    pub fused: FusedOffsets,
    pub rank: ScalarMap,
    pub timings: Vec<StageTiming>,
}

struct Timer(Vec<StageTiming>);

impl Timer {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.0.push(StageTiming {
            stage: stage.to_string(),
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }
}

fn levels_of<'a>(feats: &'a [ZernikeFeatures], scales: &[f64], complex: bool) -> Result<LevelSet<'a>> {
    LevelSet::new(
        feats
            .iter()
            .zip(scales)
            .map(|(f, &scale)| Level {
                map: if complex { &f.complex_map } else { &f.magnitude_map },
                scale,
            })
            .collect(),
    )
}

fn load_scorer(cfg: &PipelineConfig) -> Result<ScorerParams> {
    match &cfg.scorer {
        Some(p) => ScorerParams::load(p),
        None => Ok(ScorerParams::default()),
    }
}

/// Runs the whole detector on an image already at working resolution.
pub fn detect_in_memory(img: &Image, cfg: &PipelineConfig) -> Result<Detection> {
    cfg.validate()?;
    let mut t = Timer(Vec::new());
    let scorer = t.run("scorer", || load_scorer(cfg))?;
    let gray = to_grayscale(img);
    let pyramid = t.run("pyramid", || build_pyramid(&gray))?;
    let levels = pyramid.levels();
    let scales: Vec<f64> = levels.iter().map(|l| l.1).collect();
    let [dc, dm] = cfg.zernike_diameter;
    let (feats, wide) = t.run("zernike", || {
        let extract_all = |d: usize| -> Result<Vec<ZernikeFeatures>> {
            let kernels = make_kernels(cfg.zernike_order, d)?;
            levels.iter().map(|(im, _)| extract(im, &kernels)).collect()
        };
        let feats = extract_all(dc)?;
        let wide = if dm == dc { None } else { Some(extract_all(dm)?) };
        Ok((feats, wide))
    })?;
    let mag_feats = wide.as_ref().unwrap_or(&feats);
    let complex_match = t.run("patchmatch_complex", || patchmatch::run(levels_of(&feats, &scales, true)?, &cfg.pm1))?;
    let magnitude_match = t.run("patchmatch_magnitude", || patchmatch::run(levels_of(mag_feats, &scales, false)?, &cfg.pm2))?;
    let dlf = t.run("dlf", || Ok([multiscale(&complex_match.offsets)?, multiscale(&magnitude_match.offsets)?]))?;
    let (m, m_b) = t.run("predict", || {
        let m_prime = predict(&dlf, [&complex_match, &magnitude_match], &cfg.predictor)?;
        // The learned target refiner is not part of this detector; the max
        // hook stays so one can be slotted in.
        let (h, w) = m_prime.dims();
        let m = refine_max(&ProbMask::zeros(h, w), &m_prime)?;
        let m_b = binarize(&m, cfg.predictor.binarize_threshold);
        Ok((m, m_b))
    })?;
    let (fused, rank, m_c) = t.run("ranking", || {
        let fused = fuse_offsets(&complex_match.offsets, &magnitude_match.offsets, &m_b)?;
        let combined = min_dlf(&dlf);
        let feats = build_features(img, &combined, &fused, &m, cfg.predictor.binarize_threshold)?;
        let sf = score_map(&feats, &scorer)?;
        let rank = rank_map(&sf, &fused)?;
        let m_c = three_channel(&rank, &m_b)?;
        Ok((fused, rank, m_c))
    })?;
    Ok(Detection {
        m,
        m_b,
        m_c,
        complex_match,
        magnitude_match,
        dlf,
        fused,
        rank,
        timings: t.0,
    })
}

fn min_dlf(d: &[DlfErrorMaps; 2]) -> DlfErrorMaps {
    let pick = |a: &ScalarMap, b: &ScalarMap| {
        ScalarMap::from_vec(a.height(), a.width(), a.data().iter().zip(b.data()).map(|(x, y)| x.min(*y)).collect())
            .expect("shape preserved")
    };
    DlfErrorMaps {
        eps1: pick(&d[0].eps1, &d[1].eps1),
        eps2: pick(&d[0].eps2, &d[1].eps2),
        eps3: pick(&d[0].eps3, &d[1].eps3),
    }
}

/// Nearest-neighbor resampling of per-pixel labels.
fn nearest<T: Copy>(src: &[T], h: usize, w: usize, oh: usize, ow: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(oh * ow);
    for i in 0..oh {
        let si = (((i as f64 + 0.5) * h as f64 / oh as f64) as usize).min(h - 1);
        for j in 0..ow {
            let sj = (((j as f64 + 0.5) * w as f64 / ow as f64) as usize).min(w - 1);
            out.push(src[si * w + sj]);
        }
    }
    out
}

/// Paths of the emitted files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub m: PathBuf,
    pub m_b: PathBuf,
    pub m_c: PathBuf,
    pub report: PathBuf,
}

/// JSON summary written next to the masks as `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub image: PathBuf,
    pub name: String,
    /// Original `[height, width]`.
    pub input_size: [usize; 2],
    /// Working `[height, width]`.
    pub working_size: [usize; 2],
    pub outputs: OutputPaths,
    pub timings: Vec<StageTiming>,
    pub total_ms: f64,
    pub foreground_pixels: usize,
    pub source_pixels: usize,
    pub target_pixels: usize,
    pub config: serde_json::Value,
}

/// Output folder name of an image: its file stem, or the parent folder's
/// name for fixture files called `image.*`.
pub fn image_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem == "image" {
        if let Some(parent) = path.parent().and_then(|p| p.file_name()) {
            return parent.to_string_lossy().into_owned();
        }
    }
    stem
}

/// Detects copy-move regions in one image file and writes `m.png`,
/// `m_b.png`, `m_c.png` and `report.json` under `out/<name>/`.
pub fn detect_image(path: &Path, out: &Path, cfg: &PipelineConfig) -> Result<DetectionReport> {
    let start = Instant::now();
    let mut t = Timer(Vec::new());
    let img = t.run("load", || load_image(path))?;
    let (h0, w0) = (img.height(), img.width());
    let (h, w) = (cfg.input_height, cfg.input_width);
    let work = t.run("resize", || resize_bilinear(&img, h, w))?;
    let det = detect_in_memory(&work, cfg)?;
    t.0.extend(det.timings.iter().cloned());

    let name = image_name(path);
    let dir = out.join(&name);
    let outputs = OutputPaths {
        m: dir.join("m.png"),
        m_b: dir.join("m_b.png"),
        m_c: dir.join("m_c.png"),
        report: dir.join("report.json"),
    };
    let (_, m_b_out, m_c_out) = t.run("write", || {
        let m_full = resize_bilinear(&Image::from_vec(h, w, 1, det.m.data().to_vec())?, h0, w0)?;
        let m_b_full = BinMask::from_vec(h0, w0, nearest(det.m_b.data(), h, w, h0, w0))?;
        let m_c_full = ThreeChannelMask::from_labels(h0, w0, nearest(det.m_c.labels(), h, w, h0, w0))?;
        save_gray_png(&outputs.m, h0, w0, m_full.data())?;
        save_gray_png(&outputs.m_b, h0, w0, m_b_full.to_scalar().data())?;
        save_rgb_png(&outputs.m_c, &m_c_full.to_image())?;
        Ok((m_full, m_b_full, m_c_full))
    })?;
    let report = DetectionReport {
        image: path.to_path_buf(),
        name,
        input_size: [h0, w0],
        working_size: [h, w],
        outputs: outputs.clone(),
        timings: t.0,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
        foreground_pixels: m_b_out.count(),
        source_pixels: m_c_out.count(Label::Source),
        target_pixels: m_c_out.count(Label::Target),
        config: serde_json::to_value(cfg)?,
    };
    write_atomic(&outputs.report, serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

/// Detects every image in parallel; each entry carries its own outcome.
pub fn detect_batch(paths: &[PathBuf], out: &Path, cfg: &PipelineConfig) -> Vec<Result<DetectionReport>> {
    use rayon::prelude::*;
    paths.par_iter().map(|p| detect_image(p, out, cfg)).collect()
}

/// Image files directly inside `dir`, or `image.*` files one level down.
pub fn collect_images(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    if !input.is_dir() {
        return Err(Error::FileNotFound(input.to_path_buf()));
    }
    let is_image = |p: &Path| {
        matches!(
            p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
            Some("png" | "jpg" | "jpeg")
        )
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(input)? {
        let p = entry?.path();
        if p.is_dir() {
            for name in ["image.png", "image.jpg", "image.jpeg"] {
                if p.join(name).is_file() {
                    out.push(p.join(name));
                    break;
                }
            }
        } else if is_image(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

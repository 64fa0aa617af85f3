//! Synthetic copy-move forgeries with exact ground truth.
//!
//! A region of a procedural base image is rotated and scaled about its
//! bounding-box center, moved to a paste center and composited back. Masks
//! are rasterized from the transformed geometry at pixel centers, never
//! derived from pixel differences.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{load_image, save_gray_png, save_rgb_png, write_atomic, Image};
use crate::predictor::BinMask;
use crate::ranking::{Label, ThreeChannelMask};

/// Multi-octave colored value noise in `[0, 1]`.
pub fn base_texture(height: usize, width: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Coarse cells give structure, fine cells give enough texture for
    // every patch to be distinctive.
    let octaves: [(f64, f64); 6] = [(96.0, 1.0), (48.0, 0.7), (24.0, 0.5), (12.0, 0.35), (6.0, 0.25), (3.0, 0.18)];
    let mut planes = Vec::with_capacity(4);
    for _ in 0..4 {
        let mut acc = vec![0.0; height * width];
        let mut norm = 0.0;
        for &(cell, amp) in &octaves {
            let gh = (height as f64 / cell).ceil() as usize + 2;
            let gw = (width as f64 / cell).ceil() as usize + 2;
            let lattice: Vec<f64> = (0..gh * gw).map(|_| rng.gen::<f64>()).collect();
            let ox: f64 = rng.gen();
            let oy: f64 = rng.gen();
            for i in 0..height {
                let y = i as f64 / cell + oy;
                let (y0, ty) = (y.floor() as usize, smooth(y.fract()));
                for j in 0..width {
                    let x = j as f64 / cell + ox;
                    let (x0, tx) = (x.floor() as usize, smooth(x.fract()));
                    let v00 = lattice[y0 * gw + x0];
                    let v01 = lattice[y0 * gw + x0 + 1];
                    let v10 = lattice[(y0 + 1) * gw + x0];
                    let v11 = lattice[(y0 + 1) * gw + x0 + 1];
                    let top = v00 + (v01 - v00) * tx;
                    let bot = v10 + (v11 - v10) * tx;
                    acc[i * width + j] += amp * (top + (bot - top) * ty);
                }
            }
            norm += amp;
        }
        acc.iter_mut().for_each(|v| *v /= norm);
        planes.push(acc);
    }
    let mut data = Vec::with_capacity(height * width * 3);
    for k in 0..height * width {
        let luma = planes[3][k];
        for plane in &planes[..3] {
            // Stretch contrast around mid-gray; noise sums concentrate near 0.5.
            let v = 0.5 + 1.8 * (0.6 * luma + 0.4 * plane[k] - 0.5);
            data.push(v.clamp(0.0, 1.0));
        }
    }
    Image::from_vec(height, width, 3, data).expect("three channels")
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Region to duplicate, in pixel coordinates (`x` = column, `y` = row).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Region {
    /// Pixels `top..top + height` by `left..left + width`.
    Rect { top: usize, left: usize, height: usize, width: usize },
    /// Vertices `(x, y)`; pixels whose centers fall inside are selected.
    Polygon { vertices: Vec<(f64, f64)> },
}

impl Region {
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        match self {
            Region::Rect { top, left, height, width } => {
                let (x0, y0) = (*left as f64 - 0.5, *top as f64 - 0.5);
                let (x1, y1) = (x0 + *width as f64, y0 + *height as f64);
                vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
            }
            Region::Polygon { vertices } => vertices.clone(),
        }
    }

    /// Center of the vertex bounding box.
    pub fn anchor(&self) -> (f64, f64) {
        let (x0, y0, x1, y1) = bbox(&self.vertices());
        ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    }
}

fn bbox(v: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    v.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
    )
}

/// Even-odd rasterization at pixel centers.
pub fn rasterize(vertices: &[(f64, f64)], height: usize, width: usize) -> BinMask {
    let mut mask = BinMask::filled(height, width, false);
    if vertices.len() < 3 {
        return mask;
    }
    let (x0, y0, x1, y1) = bbox(vertices);
    let i0 = y0.ceil().max(0.0) as usize;
    let i1 = (y1.floor().min(height as f64 - 1.0)).max(-1.0);
    let j0 = x0.ceil().max(0.0) as usize;
    let j1 = (x1.floor().min(width as f64 - 1.0)).max(-1.0);
    if i1 < 0.0 || j1 < 0.0 {
        return mask;
    }
    let n = vertices.len();
    for i in i0..=i1 as usize {
        let py = i as f64;
        for j in j0..=j1 as usize {
            let px = j as f64;
            let mut inside = false;
            for k in 0..n {
                let (ax, ay) = vertices[k];
                let (bx, by) = vertices[(k + 1) % n];
                if (ay > py) != (by > py) && px < ax + (py - ay) * (bx - ax) / (by - ay) {
                    inside = !inside;
                }
            }
            if inside {
                mask.set(i, j, true);
            }
        }
    }
    mask
}

/// One copy-move operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgerySpec {
    pub region: Region,
    /// Degrees, counterclockwise as displayed.
    pub rotation: f64,
    pub scale: f64,
    /// Where the region anchor lands, `(x, y)`.
    pub paste_center: (f64, f64),
    #[serde(default)]
    pub allow_overlap: bool,
    pub seed: u64,
}

impl ForgerySpec {
    /// Pure translation of `region` by `(tx, ty)`.
    pub fn translation(region: Region, tx: f64, ty: f64, seed: u64) -> Self {
        let (ax, ay) = region.anchor();
        Self {
            region,
            rotation: 0.0,
            scale: 1.0,
            paste_center: (ax + tx, ay + ty),
            allow_overlap: false,
            seed,
        }
    }

    /// Maps a source point to its pasted location.
    pub fn forward(&self, p: (f64, f64)) -> (f64, f64) {
        let (ax, ay) = self.region.anchor();
        let (c, s) = self.cos_sin();
        let (dx, dy) = (p.0 - ax, p.1 - ay);
        // Rows grow downward, so a visually counterclockwise turn negates
        // the usual sine terms.
        (
            self.paste_center.0 + self.scale * (c * dx + s * dy),
            self.paste_center.1 + self.scale * (-s * dx + c * dy),
        )
    }

    /// Maps a pasted location back to the source point it copies.
    pub fn inverse(&self, t: (f64, f64)) -> (f64, f64) {
        let (ax, ay) = self.region.anchor();
        let (c, s) = self.cos_sin();
        let (dx, dy) = ((t.0 - self.paste_center.0) / self.scale, (t.1 - self.paste_center.1) / self.scale);
        (ax + c * dx - s * dy, ay + s * dx + c * dy)
    }

    fn cos_sin(&self) -> (f64, f64) {
        let r = self.rotation.to_radians();
        (r.cos(), r.sin())
    }

    pub fn target_vertices(&self) -> Vec<(f64, f64)> {
        self.region.vertices().into_iter().map(|p| self.forward(p)).collect()
    }

    fn validate(&self, height: usize, width: usize) -> Result<()> {
        if !(self.scale > 0.0) || !self.rotation.is_finite() {
            return Err(Error::InvalidForgery("scale must be positive and rotation finite".into()));
        }
        let inside = |v: &[(f64, f64)]| {
            let (x0, y0, x1, y1) = bbox(v);
            x0 >= -0.5 && y0 >= -0.5 && x1 <= width as f64 - 0.5 && y1 <= height as f64 - 0.5
        };
        let src = self.region.vertices();
        if src.len() < 3 {
            return Err(Error::InvalidForgery("region needs at least three vertices".into()));
        }
        if !inside(&src) {
            return Err(Error::InvalidForgery("source region exits the image".into()));
        }
        if !inside(&self.target_vertices()) {
            return Err(Error::InvalidForgery("pasted region would exit the image".into()));
        }
        Ok(())
    }
}

/// A forged image with its three ground-truth masks.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledForgery {
    pub image: Image,
    pub m_gt: BinMask,
    pub mc_gt: ThreeChannelMask,
    pub mt_gt: BinMask,
}

/// Resamples the region and pastes it per `spec`.
pub fn generate(base: &Image, spec: &ForgerySpec) -> Result<LabeledForgery> {
    let (h, w) = (base.height(), base.width());
    spec.validate(h, w)?;
    let base = base.to_rgb();
    let source = rasterize(&spec.region.vertices(), h, w);
    let target = rasterize(&spec.target_vertices(), h, w);
    if target.count() == 0 || source.count() == 0 {
        return Err(Error::InvalidForgery("region covers no pixel centers".into()));
    }
    let overlap = source.data().iter().zip(target.data()).any(|(a, b)| *a && *b);
    if overlap && !spec.allow_overlap {
        return Err(Error::InvalidForgery("source and pasted regions overlap".into()));
    }
    let mut image = base.clone();
    let fm = base.to_feature_map();
    let mut px = [0.0; 3];
    for i in 0..h {
        for j in 0..w {
            if !target.get(i, j) {
                continue;
            }
            let (sx, sy) = spec.inverse((j as f64, i as f64));
            crate::imagecore::sample_bilinear(&fm, sx, sy, &mut px);
            for (c, v) in px.iter().enumerate() {
                image.set(i, j, c, *v);
            }
        }
    }
    let mc_gt = ThreeChannelMask::from_fn(h, w, |i, j| {
        if target.get(i, j) {
            Label::Target
        } else if source.get(i, j) {
            Label::Source
        } else {
            Label::Background
        }
    });
    Ok(LabeledForgery {
        image,
        m_gt: mc_gt.foreground(),
        mt_gt: target,
        mc_gt,
    })
}

/// Additive Gaussian noise followed by an optional JPEG round trip.
pub fn degrade(img: &Image, noise_sigma: f64, jpeg_quality: Option<u8>, seed: u64) -> Result<Image> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument("noise sigma must be non-negative".into()));
    }
    let mut out = img.clone();
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = img.data().iter().map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0)).collect();
        out = Image::from_vec(img.height(), img.width(), img.channels(), data)?;
    }
    if let Some(q) = jpeg_quality {
        out = jpeg_round_trip(&out, q)?;
    }
    Ok(out)
}

pub fn jpeg_round_trip(img: &Image, quality: u8) -> Result<Image> {
    let rgb = img.to_rgb();
    let mut bytes = Vec::new();
    image::codecs::jpeg::JpegEncoder::new_with_quality(&mut bytes, quality.clamp(1, 100)).encode(
        &rgb.to_u8(),
        rgb.width() as u32,
        rgb.height() as u32,
        image::ExtendedColorType::Rgb8,
    )?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Jpeg)?.to_rgb8();
    let data = decoded.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
    Image::from_vec(rgb.height(), rgb.width(), 3, data)
}

/// Families of generated fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    /// Integer translation of a rectangle of side 64 to 96.
    Translation,
    /// Rotation within 45 degrees and scale in `[0.8, 1.25]`.
    RotatedScaled,
    /// Full protocol ranges: rotation in `[-180, 180]`, scale in `[0.5, 2]`.
    Protocol,
    /// Translation plus noise and JPEG compression.
    Degraded,
    /// No duplication at all.
    Pristine,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 5] = [
        FixtureKind::Translation,
        FixtureKind::RotatedScaled,
        FixtureKind::Protocol,
        FixtureKind::Degraded,
        FixtureKind::Pristine,
    ];

    fn rotation_scale(self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match self {
            FixtureKind::RotatedScaled => (rng.gen_range(-45.0..=45.0), rng.gen_range(0.8f64.ln()..=1.25f64.ln()).exp()),
            FixtureKind::Protocol => (rng.gen_range(-180.0..=180.0), rng.gen_range(0.5f64.ln()..=2.0f64.ln()).exp()),
            _ => (0.0, 1.0),
        }
    }
}

fn random_polygon(rng: &mut ChaCha8Rng, cx: f64, cy: f64, radius: f64) -> Vec<(f64, f64)> {
    // Jittered, evenly spread angles keep the shape convex-ish and fat, so
    // its area tracks the radius instead of collapsing into slivers.
    let n = rng.gen_range(5..=8);
    let step = std::f64::consts::TAU / n as f64;
    let phase = rng.gen_range(0.0..step);
    (0..n)
        .map(|k| {
            let a = phase + step * (k as f64 + rng.gen_range(-0.3..0.3));
            let r = radius * rng.gen_range(0.8..1.0);
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

fn polygon_area(v: &[(f64, f64)]) -> f64 {
    let n = v.len();
    (0..n).map(|k| v[k].0 * v[(k + 1) % n].1 - v[(k + 1) % n].0 * v[k].1).sum::<f64>().abs() / 2.0
}

/// Draws a valid spec of the given family, retrying until it fits.
pub fn random_spec(kind: FixtureKind, height: usize, width: usize, seed: u64) -> Result<ForgerySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let (rotation, scale) = kind.rotation_scale(&mut rng);
        let side_max = 96.min(height / 3).min(width / 3);
        if side_max < 8 {
            return Err(Error::ImageTooSmall(format!("{height}x{width} is too small for a forgery")));
        }
        let side_min = 64.min(side_max);
        let region = if matches!(kind, FixtureKind::Translation | FixtureKind::Degraded) || rng.gen_bool(0.5) {
            let rh = rng.gen_range(side_min..=side_max);
            let rw = rng.gen_range(side_min..=side_max);
            Region::Rect {
                top: rng.gen_range(0..=height - rh),
                left: rng.gen_range(0..=width - rw),
                height: rh,
                width: rw,
            }
        } else {
            let radius = rng.gen_range(side_min as f64..=side_max as f64) * 0.65;
            let cx = rng.gen_range(radius..width as f64 - radius);
            let cy = rng.gen_range(radius..height as f64 - radius);
            let vertices = random_polygon(&mut rng, cx, cy, radius);
            if polygon_area(&vertices) < (side_min * side_min) as f64 {
                continue;
            }
            Region::Polygon { vertices }
        };
        let (ax, ay) = region.anchor();
        // Whole-pixel displacement of the anchor keeps translations exact.
        let tx = rng.gen_range(-(width as i64)..=width as i64) as f64;
        let ty = rng.gen_range(-(height as i64)..=height as i64) as f64;
        let spec = ForgerySpec {
            region,
            rotation,
            scale,
            paste_center: (ax + tx, ay + ty),
            allow_overlap: false,
            seed,
        };
        if spec.validate(height, width).is_err() {
            continue;
        }
        let src = rasterize(&spec.region.vertices(), height, width);
        let dst = rasterize(&spec.target_vertices(), height, width);
        // Keep a gap so matches are not confused by adjacency.
        let too_close = (tx.abs().max(ty.abs())) < 16.0;
        if too_close || src.data().iter().zip(dst.data()).any(|(a, b)| *a && *b) {
            continue;
        }
        return Ok(spec);
    }
    Err(Error::InvalidForgery("could not place a non-overlapping forgery".into()))
}

/// Everything recorded about one fixture in `spec.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub name: String,
    pub kind: FixtureKind,
    pub height: usize,
    pub width: usize,
    pub base_seed: u64,
    /// Absent for pristine fixtures.
    pub forgery: Option<ForgerySpec>,
    pub noise_sigma: f64,
    pub jpeg_quality: Option<u8>,
    pub source_pixels: usize,
    pub target_pixels: usize,
}

/// Builds one fixture of `kind` from a seed.
pub fn make_fixture(kind: FixtureKind, name: &str, height: usize, width: usize, seed: u64) -> Result<(LabeledForgery, FixtureRecord)> {
    let base = base_texture(height, width, seed);
    let (mut lf, forgery) = if kind == FixtureKind::Pristine {
        let m = BinMask::filled(height, width, false);
        let lf = LabeledForgery {
            image: base,
            m_gt: m.clone(),
            mc_gt: ThreeChannelMask::from_fn(height, width, |_, _| Label::Background),
            mt_gt: m,
        };
        (lf, None)
    } else {
        let spec = random_spec(kind, height, width, seed ^ 0x5EED)?;
        (generate(&base, &spec)?, Some(spec))
    };
    let (noise_sigma, jpeg_quality) = if kind == FixtureKind::Degraded { (0.01, Some(90)) } else { (0.0, None) };
    if kind == FixtureKind::Degraded {
        lf.image = degrade(&lf.image, noise_sigma, jpeg_quality, seed)?;
    }
    let record = FixtureRecord {
        name: name.to_string(),
        kind,
        height,
        width,
        base_seed: seed,
        forgery,
        noise_sigma,
        jpeg_quality,
        source_pixels: lf.mc_gt.count(Label::Source),
        target_pixels: lf.mc_gt.count(Label::Target),
    };
    Ok((lf, record))
}

/// Writes `image.png`, `m_gt.png`, `mc_gt.png`, `mt_gt.png` and `spec.json`.
pub fn write_fixture(dir: &Path, lf: &LabeledForgery, record: &FixtureRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (h, w) = lf.m_gt.dims();
    save_rgb_png(dir.join("image.png"), &lf.image)?;
    save_gray_png(dir.join("m_gt.png"), h, w, lf.m_gt.to_scalar().data())?;
    save_rgb_png(dir.join("mc_gt.png"), &lf.mc_gt.to_image())?;
    save_gray_png(dir.join("mt_gt.png"), h, w, lf.mt_gt.to_scalar().data())?;
    write_atomic(&dir.join("spec.json"), serde_json::to_string_pretty(record)?.as_bytes())
}

/// Reads a binary mask PNG (foreground where the gray level exceeds half).
pub fn read_bin_mask(path: &Path) -> Result<BinMask> {
    let img = load_image(path)?;
    let (h, w) = (img.height(), img.width());
    Ok(BinMask::from_fn(h, w, |i, j| img.get(i, j, 0) > 0.5))
}

pub fn read_three_channel(path: &Path) -> Result<ThreeChannelMask> {
    Ok(ThreeChannelMask::from_image(&load_image(path)?))
}

/// Generates `count` fixtures cycling through `kinds` and writes them under
/// `out`, together with a `specs.json` index. Returns the records.
pub fn generate_set(out: &Path, count: usize, seed: u64, height: usize, width: usize, kinds: &[FixtureKind]) -> Result<Vec<FixtureRecord>> {
    if kinds.is_empty() {
        return Err(Error::InvalidArgument("no fixture kinds requested".into()));
    }
    fs::create_dir_all(out)?;
    let records: Vec<FixtureRecord> = (0..count)
        .into_par_iter()
        .map(|k| {
            let kind = kinds[k % kinds.len()];
            let name = format!("fixture_{k:03}");
            let fixture_seed = seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
            let (lf, rec) = make_fixture(kind, &name, height, width, fixture_seed)?;
            write_fixture(&out.join(&name), &lf, &rec)?;
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    write_atomic(&out.join("specs.json"), serde_json::to_string_pretty(&records)?.as_bytes())?;
    Ok(records)
}

/// Fixture directories listed in a `specs.json` index.
pub fn fixture_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(root.join("specs.json"))?;
    let records: Vec<FixtureRecord> = serde_json::from_str(&text)?;
    Ok(records.into_iter().map(|r| root.join(r.name)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn texture_is_deterministic_and_bounded() {
        let a = base_texture(40, 50, 3);
        assert_eq!(a, base_texture(40, 50, 3));
        assert_ne!(a, base_texture(40, 50, 4));
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn rect_rasterizes_exactly() {
        let r = Region::Rect {
            top: 3,
            left: 4,
            height: 5,
            width: 6,
        };
        let m = rasterize(&r.vertices(), 20, 20);
        assert_eq!(m.count(), 30);
        assert!(m.get(3, 4) && m.get(7, 9) && !m.get(8, 9) && !m.get(3, 10));
    }

    #[test]
    fn translation_copies_bitwise() {
        let base = base_texture(64, 64, 1);
        let region = Region::Rect {
            top: 4,
            left: 5,
            height: 12,
            width: 10,
        };
        let spec = ForgerySpec::translation(region, 30.0, 20.0, 0);
        let lf = generate(&base, &spec).unwrap();
        for i in 4..16 {
            for j in 5..15 {
                assert_eq!(lf.image.pixel(i + 20, j + 30), base.pixel(i, j));
            }
        }
        assert_eq!(lf.mc_gt.count(Label::Source), 120);
        assert_eq!(lf.mc_gt.count(Label::Target), 120);
        assert_eq!(lf.m_gt.count(), 240);
        assert_eq!(lf.mt_gt, lf.mc_gt.channel(Label::Target));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let base = base_texture(32, 32, 1);
        let region = Region::Rect {
            top: 2,
            left: 2,
            height: 10,
            width: 10,
        };
        let off = ForgerySpec::translation(region.clone(), 25.0, 0.0, 0);
        assert!(matches!(generate(&base, &off), Err(Error::InvalidForgery(_))));
        let overlap = ForgerySpec::translation(region.clone(), 5.0, 0.0, 0);
        assert!(generate(&base, &overlap).is_err());
        let allowed = ForgerySpec {
            allow_overlap: true,
            ..overlap
        };
        let lf = generate(&base, &allowed).unwrap();
        // The pasted copy wins where the two overlap.
        assert_eq!(lf.mc_gt.count(Label::Target), 100);
        assert_eq!(lf.mc_gt.count(Label::Source), 50);
    }

    #[test]
    fn forward_and_inverse_agree() {
        let spec = ForgerySpec {
            region: Region::Polygon {
                vertices: vec![(10.0, 10.0), (30.0, 12.0), (20.0, 25.0)],
            },
            rotation: 37.0,
            scale: 1.3,
            paste_center: (60.0, 50.0),
            allow_overlap: false,
            seed: 1,
        };
        let p = (14.5, 17.25);
        let q = spec.inverse(spec.forward(p));
        assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
        // A quarter turn sends +x to -y on screen (up).
        let quarter = ForgerySpec { rotation: 90.0, scale: 1.0, ..spec };
        let (ax, ay) = quarter.region.anchor();
        let t = quarter.forward((ax + 1.0, ay));
        assert!((t.0 - 60.0).abs() < 1e-12 && (t.1 - 49.0).abs() < 1e-12);
    }

    #[test]
    fn degrade_identity_and_jpeg() {
        let img = base_texture(16, 16, 2);
        assert_eq!(degrade(&img, 0.0, None, 0).unwrap(), img);
        assert!(degrade(&img, -1.0, None, 0).is_err());
        let j = degrade(&img, 0.0, Some(90), 0).unwrap();
        assert_eq!((j.height(), j.width(), j.channels()), (16, 16, 3));
    }

    #[test]
    fn random_specs_respect_family_ranges() {
        for seed in 0..20 {
            let s = random_spec(FixtureKind::Protocol, 448, 448, seed).unwrap();
            assert!((-180.0..=180.0).contains(&s.rotation));
            assert!((0.5..=2.0).contains(&s.scale));
            let t = random_spec(FixtureKind::RotatedScaled, 448, 448, seed).unwrap();
            assert!(t.rotation.abs() <= 45.0 && (0.8..=1.25).contains(&t.scale));
            let u = random_spec(FixtureKind::Translation, 448, 448, seed).unwrap();
            assert_eq!((u.rotation, u.scale), (0.0, 1.0));
        }
    }
}

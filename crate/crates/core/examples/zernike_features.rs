//! Dense Zernike features on a synthetic texture, and how little the
//! magnitudes move when the image is rotated about a pixel.
//!
//! cargo run --release --example zernike_features

use cmfd::imagecore::{sample_scalar, to_grayscale, Image};
use cmfd::synthgen::base_texture;
use cmfd::zernike::{extract, make_kernels, DEFAULT_DIAMETER, DEFAULT_MAX_ORDER};

fn rotate_about(img: &Image, cx: f64, cy: f64, deg: f64) -> Image {
    let (s, c) = deg.to_radians().sin_cos();
    let (h, w) = (img.height(), img.width());
    let plane = img.to_feature_map().channel(0);
    let data = (0..h * w)
        .map(|k| {
            let (x, y) = ((k % w) as f64 - cx, (k / w) as f64 - cy);
            sample_scalar(&plane, cx + c * x + s * y, cy - s * x + c * y)
        })
        .collect();
    Image::from_vec(h, w, 1, data).unwrap()
}

fn main() -> cmfd::Result<()> {
    let gray = to_grayscale(&base_texture(96, 96, 7));
    let kernels = make_kernels(DEFAULT_MAX_ORDER, DEFAULT_DIAMETER)?;
    println!("{} moments per pixel, window {} px", kernels.len(), kernels.diameter());

    let base = extract(&gray, &kernels)?;
    let (ci, cj) = (48, 48);
    let reference = base.magnitude_map.vector(ci, cj).to_vec();
    for deg in [30.0, 60.0, 90.0, 150.0] {
        let rotated = extract(&rotate_about(&gray, cj as f64, ci as f64, deg), &kernels)?;
        let v = rotated.magnitude_map.vector(ci, cj);
        let num: f64 = v.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = reference.iter().map(|b| b * b).sum();
        println!("rotated {deg:>5.1} deg: relative change {:.4}", (num / den).sqrt());
    }
    Ok(())
}

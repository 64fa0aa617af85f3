use std::fs;
use std::io::Write;
use std::path::Path;

use super::raster::Image;
use crate::error::{Error, Result};

/// Decodes a PNG or JPEG file into a 3-channel unit-interval image.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = image::ImageReader::open(path)?.with_guessed_format()?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: {:?}",
                path.display(),
                other
            )))
        }
    }
    let rgb = reader.decode()?.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
    Image::from_vec(h as usize, w as usize, 3, data)
}

/// Writes bytes to `path` through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("no file name in {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn encode_png(raw: &[u8], height: usize, width: usize, color: image::ExtendedColorType) -> Result<Vec<u8>> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out).write_image(raw, width as u32, height as u32, color)?;
    Ok(out)
}

/// Saves an 8-bit grayscale PNG. `values` are unit-interval reals.
pub fn save_gray_png(path: impl AsRef<Path>, height: usize, width: usize, values: &[f64]) -> Result<()> {
    let raw: Vec<u8> = values
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    if raw.len() != height * width {
        return Err(Error::ShapeMismatch("gray buffer size".into()));
    }
    write_atomic(path.as_ref(), &encode_png(&raw, height, width, image::ExtendedColorType::L8)?)
}

/// Saves an image as 8-bit RGB PNG.
pub fn save_rgb_png(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let rgb = img.to_rgb();
    let raw = rgb.to_u8();
    write_atomic(path.as_ref(), &encode_png(&raw, rgb.height(), rgb.width(), image::ExtendedColorType::Rgb8)?)
}

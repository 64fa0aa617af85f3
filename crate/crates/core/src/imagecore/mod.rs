//! Rasters, dense maps, resampling and the on-disk tensor format.
//!
//! Coordinates follow one convention throughout the crate: pixel `(i, j)` is
//! row `i`, column `j`, and its center sits at continuous position
//! `(x = j, y = i)`. Resizing uses the align-corners-false mapping
//! `src = (dst + 0.5) * (in / out) - 0.5`, clamped to the source grid.

mod io;
mod raster;
mod resize;
mod sample;
mod tensor;

pub use io::{load_image, save_gray_png, save_rgb_png, write_atomic};
pub use raster::{FeatureMap, Image, ScalarMap};
pub use resize::{build_pyramid, level_coord, resize_bilinear, ScalePyramid, SCALE_DOWN, SCALE_UP};
pub use sample::{sample_bilinear, sample_scalar, BilinearTap};
pub use tensor::{read_tensor, write_tensor, Tensor, TENSOR_MAGIC};

/// Converts a 3-channel image to ITU-R 601 luma. One-channel inputs are
/// returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.channels() == 1 {
        return img.clone();
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]).clamp(0.0, 1.0))
        .collect();
    Image::from_vec(img.height(), img.width(), 1, data).expect("luma conversion keeps shape")
}

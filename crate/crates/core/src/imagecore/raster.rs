use crate::error::{Error, Result};

/// An `H x W x C` raster with channel values in `[0, 1]`, row-major,
/// channels interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x{} image needs {} values, got {}",
                height,
                width,
                channels,
                height * width * channels,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pixel value {v} outside the unit interval"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self::from_vec(height, width, channels, vec![value; height * width * channels])
            .expect("filled image is well formed")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.width + j) * self.channels + c]
    }

    /// Writes one channel value, clamping it into the unit interval.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f64) {
        self.data[(i * self.width + j) * self.channels + c] = v.clamp(0.0, 1.0);
    }

    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let base = (i * self.width + j) * self.channels;
        &self.data[base..base + self.channels]
    }

    /// Expands a one-channel image to three identical channels.
    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Image {
            height: self.height,
            width: self.width,
            channels: 3,
            data,
        }
    }

    /// Views the raster as a dense map without copying semantics.
    pub fn to_feature_map(&self) -> FeatureMap {
        FeatureMap {
            height: self.height,
            width: self.width,
            depth: self.channels,
            data: self.data.clone(),
        }
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// An `H x W x D` grid of real feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    depth: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn from_vec(height: usize, width: usize, depth: usize, data: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("feature depth must be at least 1".into()));
        }
        if data.len() != height * width * depth {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x{} feature map needs {} values, got {}",
                height,
                width,
                depth,
                height * width * depth,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map".into()));
        }
        Ok(Self {
            height,
            width,
            depth,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, depth: usize) -> Self {
        assert!(depth >= 1, "feature depth must be at least 1");
        Self {
            height,
            width,
            depth,
            data: vec![0.0; height * width * depth],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn vector(&self, i: usize, j: usize) -> &[f64] {
        let base = (i * self.width + j) * self.depth;
        &self.data[base..base + self.depth]
    }

    #[inline]
    pub fn vector_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let base = (i * self.width + j) * self.depth;
        &mut self.data[base..base + self.depth]
    }

    /// Extracts channel `c` as a scalar map.
    pub fn channel(&self, c: usize) -> ScalarMap {
        assert!(c < self.depth);
        let data = self.data.iter().skip(c).step_by(self.depth).copied().collect();
        ScalarMap::from_vec(self.height, self.width, data).expect("channel keeps shape")
    }
}

/// An `H x W` grid of reals: error maps, score maps, rank maps and
/// probability masks all use this layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ScalarMap {
    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} map needs {} values, got {}",
                height,
                width,
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.width + j] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarMap {
        ScalarMap {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.sum() / self.data.len() as f64
        }
    }

    pub fn to_feature_map(&self) -> FeatureMap {
        FeatureMap {
            height: self.height,
            width: self.width,
            depth: 1,
            data: self.data.clone(),
        }
    }
}

//! Binary tensor files: the 8-byte magic `DPRLTNSR`, a little-endian `u32`
//! rank, `rank` little-endian `u32` dimensions, then the row-major values as
//! little-endian IEEE-754 binary32.

use std::convert::TryFrom;
use std::path::Path;

use super::io::write_atomic;
use super::raster::{FeatureMap, ScalarMap};
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"DPRLTNSR";

/// Refuse to allocate more than this many values from a file header.
const MAX_ELEMENTS: usize = 1 << 31;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n = element_count(&dims)?;
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_f64(dims: Vec<usize>, data: &[f64]) -> Result<Self> {
        Self::new(dims, data.iter().map(|&v| v as f32).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(12 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(TENSOR_MAGIC);
        let rank = u32::try_from(self.dims.len()).map_err(|_| Error::DimensionOverflow)?;
        out.extend_from_slice(&rank.to_le_bytes());
        for &d in &self.dims {
            let d = u32::try_from(d).map_err(|_| Error::DimensionOverflow)?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < TENSOR_MAGIC.len() || &bytes[..8] != TENSOR_MAGIC {
            return Err(Error::NotATensor);
        }
        let mut cursor = 8;
        let mut next_u32 = |what: &str| -> Result<u32> {
            let chunk = bytes
                .get(cursor..cursor + 4)
                .ok_or_else(|| Error::CorruptTensor(format!("truncated {what}")))?;
            cursor += 4;
            Ok(u32::from_le_bytes(chunk.try_into().expect("4-byte chunk")))
        };
        let rank = next_u32("rank")? as usize;
        if rank > 16 {
            return Err(Error::CorruptTensor(format!("implausible rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(next_u32("dimension")? as usize);
        }
        let n = element_count(&dims)?;
        let body = &bytes[8 + 4 + 4 * rank..];
        if body.len() != 4 * n {
            return Err(Error::CorruptTensor(format!(
                "expected {} data bytes, found {}",
                4 * n,
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
            .collect();
        Ok(Self { dims, data })
    }
}

fn element_count(dims: &[usize]) -> Result<usize> {
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(Error::DimensionOverflow)?;
    if n > MAX_ELEMENTS {
        return Err(Error::DimensionOverflow);
    }
    Ok(n)
}

pub fn write_tensor(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &tensor.to_bytes()?)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    Tensor::from_bytes(&bytes)
}

impl From<&FeatureMap> for Tensor {
    fn from(fm: &FeatureMap) -> Self {
        Tensor::from_f64(vec![fm.height(), fm.width(), fm.depth()], fm.data())
            .expect("feature map shape is consistent")
    }
}

impl From<&ScalarMap> for Tensor {
    fn from(map: &ScalarMap) -> Self {
        Tensor::from_f64(vec![map.height(), map.width()], map.data())
            .expect("scalar map shape is consistent")
    }
}

impl TryFrom<&Tensor> for FeatureMap {
    type Error = Error;

    fn try_from(t: &Tensor) -> Result<Self> {
        match t.dims[..] {
            [h, w, d] => FeatureMap::from_vec(h, w, d, t.to_f64()),
            _ => Err(Error::ShapeMismatch(format!(
                "feature maps are rank 3, tensor has dims {:?}",
                t.dims
            ))),
        }
    }
}

impl TryFrom<&Tensor> for ScalarMap {
    type Error = Error;

    fn try_from(t: &Tensor) -> Result<Self> {
        match t.dims[..] {
            [h, w] => ScalarMap::from_vec(h, w, t.to_f64()),
            _ => Err(Error::ShapeMismatch(format!(
                "scalar maps are rank 2, tensor has dims {:?}",
                t.dims
            ))),
        }
    }
}

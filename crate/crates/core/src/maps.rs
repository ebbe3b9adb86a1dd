//! Dense confidence grids and channel stacks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output grid geometry. Grid pixel `(row, col)` is evaluated at the
/// continuous map location `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Side of the square network input, in input-image pixels.
    pub input_size: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            width: 46,
            height: 46,
            input_size: 368,
        }
    }
}

impl GridSpec {
    pub fn new(width: usize, height: usize, input_size: usize) -> Result<Self> {
        let g = Self {
            width,
            height,
            input_size,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.input_size == 0 {
            return Err(Error::Config(format!(
                "grid dimensions must be positive, got {}x{} for input {}",
                self.width, self.height, self.input_size
            )));
        }
        Ok(())
    }

    /// Map pixels per input-image pixel.
    pub fn scale(&self) -> f64 {
        self.width as f64 / self.input_size as f64
    }

    /// Input-image pixels per map pixel.
    pub fn stride(&self) -> f64 {
        self.input_size as f64 / self.width as f64
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// One channel: a row-major `height x width` grid of confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskMap<T = f32> {
    pub width: usize,
    pub height: usize,
    pub label: String,
    pub data: Vec<T>,
}

impl<T: Copy + Default> MaskMap<T> {
    pub fn zeros(width: usize, height: usize, label: impl Into<String>) -> Self {
        Self {
            width,
            height,
            label: label.into(),
            data: vec![T::default(); width * height],
        }
    }
}

impl<T: Copy> MaskMap<T> {
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Channels sharing one grid, stored contiguously as `C x H x W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack<T = f32> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub labels: Vec<String>,
    pub data: Vec<T>,
}

impl<T: Copy + Default> ChannelStack<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            labels: (0..channels).map(|c| c.to_string()).collect(),
            data: vec![T::default(); channels * height * width],
        }
    }
}

impl<T: Copy> ChannelStack<T> {
    pub fn from_raw(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<T>,
    ) -> Result<Self> {
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{channels}x{height}x{width} = {expected} values"),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            labels: (0..channels).map(|c| c.to_string()).collect(),
            data,
        })
    }

    /// Stacks maps in order. Fails on an empty list or mismatched sizes.
    pub fn from_maps(maps: Vec<MaskMap<T>>) -> Result<Self> {
        let first = maps.first().ok_or(Error::EmptyComposition)?;
        let (height, width) = first.dims();
        let mut data = Vec::with_capacity(maps.len() * height * width);
        let mut labels = Vec::with_capacity(maps.len());
        for m in &maps {
            if m.dims() != (height, width) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{height}x{width}"),
                    found: format!("{}x{}", m.height, m.width),
                });
            }
            data.extend_from_slice(&m.data);
            labels.push(m.label.clone());
        }
        Ok(Self {
            channels: maps.len(),
            height,
            width,
            labels,
            data,
        })
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn map(&self, c: usize) -> MaskMap<T> {
        MaskMap {
            width: self.width,
            height: self.height,
            label: self.labels[c].clone(),
            data: self.channel(c).to_vec(),
        }
    }

    pub fn maps(&self) -> Vec<MaskMap<T>> {
        (0..self.channels).map(|c| self.map(c)).collect()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub(crate) fn check_shape<U: Copy>(&self, other: &ChannelStack<U>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: fmt_shape(other.shape()),
                found: fmt_shape(self.shape()),
            });
        }
        Ok(())
    }
}

fn fmt_shape((c, h, w): (usize, usize, usize)) -> String {
    format!("{c}x{h}x{w}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_geometry() {
        let g = GridSpec::default();
        assert_eq!(g.scale(), 0.125);
        assert_eq!(g.stride(), 8.0);
        assert!(GridSpec::new(0, 46, 368).is_err());
    }

    #[test]
    fn stack_from_maps_checks_dims() {
        let a = MaskMap::<f32>::zeros(3, 2, "a");
        let b = MaskMap::<f32>::zeros(2, 3, "b");
        assert!(ChannelStack::from_maps(vec![a.clone(), b]).is_err());
        assert!(ChannelStack::<f32>::from_maps(vec![]).is_err());
        let s = ChannelStack::from_maps(vec![a.clone(), a]).unwrap();
        assert_eq!(s.shape(), (2, 2, 3));
        assert_eq!(s.labels, vec!["a", "a"]);
    }

    #[test]
    fn raw_length_checked() {
        assert!(ChannelStack::from_raw(2, 2, 2, vec![0f32; 7]).is_err());
        let s = ChannelStack::from_raw(2, 2, 2, (0..8).map(|v| v as f32).collect()).unwrap();
        assert_eq!(s.channel(1), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(s.map(1).get(1, 0), 6.0);
    }
}

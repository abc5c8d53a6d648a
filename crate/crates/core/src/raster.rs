use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major 2D grid, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type RgbImage = Raster<[f32; 3]>;
pub type GrayImage = Raster<f32>;

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: self.shape(),
            });
        }
        Ok(())
    }
}

impl RgbImage {
    /// Flattened channel values, `[r, g, b, r, g, b, ...]`.
    pub fn channels(&self) -> impl Iterator<Item = f32> + '_ {
        self.data.iter().flat_map(|p| p.iter().copied())
    }
}

impl<T: Send> Raster<T> {
    /// Like [`Raster::from_fn`] but evaluated row-parallel when the `parallel`
    /// feature is enabled. Output is identical either way.
    pub fn from_fn_rows(width: usize, height: usize, f: impl Fn(usize, usize) -> T + Sync) -> Self {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let rows: Vec<Vec<T>> = (0..height)
                .into_par_iter()
                .map(|y| (0..width).map(|x| f(x, y)).collect())
                .collect();
            let data = rows.into_iter().flatten().collect();
            Self {
                width,
                height,
                data,
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Self::from_fn(width, height, f)
        }
    }
}

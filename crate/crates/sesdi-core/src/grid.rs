//! Dense scalar grids shared by velocity models, labels and predictions.

use crate::error::{Error, Result};

/// Row-major scalar field of 2 (`[nz, nx]`) or 3 (`[nz, ny, nx]`) dimensions,
/// with the last axis varying fastest in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::param(format!("grid rank {} unsupported", dims.len())));
        }
        if data.len() != n {
            return Err(Error::shape(format!(
                "grid data length {} != product of dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Grid { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Grid {
            dims,
            data: vec![0.0; n],
        }
    }

    pub fn constant(dims: Vec<usize>, value: f64) -> Self {
        let n = dims.iter().product();
        Grid {
            dims,
            data: vec![value; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// 2D accessor; panics if the grid is not rank 2.
    pub fn at2(&self, iz: usize, ix: usize) -> f64 {
        debug_assert_eq!(self.dims.len(), 2);
        self.data[iz * self.dims[1] + ix]
    }

    /// 3D accessor; panics if the grid is not rank 3.
    pub fn at3(&self, iz: usize, iy: usize, ix: usize) -> f64 {
        debug_assert_eq!(self.dims.len(), 3);
        self.data[(iz * self.dims[1] + iy) * self.dims[2] + ix]
    }

    /// Depth-major slices of a 3D grid, viewed as a stack of 2D planes.
    /// A 2D grid yields itself as the only slice.
    pub fn depth_slices(&self) -> Vec<Grid> {
        match self.dims.len() {
            2 => vec![self.clone()],
            3 => {
                let (nz, ny, nx) = (self.dims[0], self.dims[1], self.dims[2]);
                (0..nz)
                    .map(|iz| Grid {
                        dims: vec![ny, nx],
                        data: self.data[iz * ny * nx..(iz + 1) * ny * nx].to_vec(),
                    })
                    .collect()
            }
            _ => unreachable!("grids are rank 2 or 3"),
        }
    }
}

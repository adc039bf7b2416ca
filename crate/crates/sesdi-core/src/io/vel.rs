//! VEL1 velocity model files.
//!
//! Layout: magic "VEL1", version u32, ndim u8, dims u32 each (depth first),
//! spacing f32 (m), f32 values in m/s stored depth-fastest, trailing CRC32.
//! All integers and floats little-endian.

use std::path::Path;

use crate::error::Result;
use crate::grid::Grid;
use crate::io::{check_version, finish_and_write, read_checked, ByteReader};
use crate::velocity::VelocityModel;

const MAGIC: &[u8; 4] = b"VEL1";
const VERSION: u32 = 1;

pub fn write_velocity(path: &Path, model: &VelocityModel) -> Result<()> {
    let dims = &model.grid.dims;
    let mut bytes = Vec::with_capacity(16 + 4 * model.grid.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.push(dims.len() as u8);
    for d in dims {
        bytes.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    bytes.extend_from_slice(&(model.spacing as f32).to_le_bytes());
    for_each_depth_fastest(dims, |idx| {
        bytes.extend_from_slice(&(model.grid.data[idx] as f32).to_le_bytes());
    });
    finish_and_write(path, bytes)
}

pub fn read_velocity(path: &Path) -> Result<VelocityModel> {
    let bytes = read_checked(path)?;
    let mut r = ByteReader::new(&bytes);
    r.magic(MAGIC)?;
    check_version(&mut r, VERSION)?;
    let ndim = r.u8("ndim")? as usize;
    if ndim != 2 && ndim != 3 {
        return Err(crate::error::Error::format(
            r.offset() - 1,
            format!("ndim {ndim} not in {{2, 3}}"),
        ));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(r.u32("dims")? as usize);
    }
    let spacing = r.f32("spacing")? as f64;
    let n: usize = dims.iter().product();
    let raw = r.f32_vec(n, "velocity values")?;
    r.expect_end()?;
    let mut data = vec![0.0f64; n];
    let mut k = 0;
    for_each_depth_fastest(&dims, |idx| {
        data[idx] = raw[k] as f64;
        k += 1;
    });
    VelocityModel::new(Grid::new(dims, data)?, spacing)
}

/// Visit row-major (x fastest) flat indices in file order, depth fastest.
fn for_each_depth_fastest(dims: &[usize], mut f: impl FnMut(usize)) {
    match dims.len() {
        2 => {
            let (nz, nx) = (dims[0], dims[1]);
            for ix in 0..nx {
                for iz in 0..nz {
                    f(iz * nx + ix);
                }
            }
        }
        3 => {
            let (nz, ny, nx) = (dims[0], dims[1], dims[2]);
            for ix in 0..nx {
                for iy in 0..ny {
                    for iz in 0..nz {
                        f((iz * ny + iy) * nx + ix);
                    }
                }
            }
        }
        _ => unreachable!("validated by callers"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::gen_layered_background;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vel");
        let model = gen_layered_background(&[20, 30], 10.0, 4, 3).unwrap();
        write_velocity(&path, &model).unwrap();
        let back = read_velocity(&path).unwrap();
        assert_eq!(back.grid, model.grid);
        assert_eq!(back.spacing as f32, model.spacing as f32);
    }

    #[test]
    fn round_trip_3d() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m3.vel");
        let model = gen_layered_background(&[10, 6, 8], 25.0, 3, 5).unwrap();
        write_velocity(&path, &model).unwrap();
        let back = read_velocity(&path).unwrap();
        assert_eq!(back.grid, model.grid);
    }

    #[test]
    fn truncation_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.vel");
        let model = gen_layered_background(&[20, 30], 10.0, 4, 3).unwrap();
        write_velocity(&path, &model).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        match read_velocity(&path) {
            Err(crate::error::Error::Format { .. }) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected_with_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.vel");
        let mut bytes = b"XXL1".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        let crc = crc32fast::hash(&bytes);
        bytes.extend_from_slice(&crc.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        match read_velocity(&path) {
            Err(crate::error::Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}

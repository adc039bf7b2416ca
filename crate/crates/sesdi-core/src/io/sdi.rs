//! SDI1 survey files: geometry-aware traces with f32 amplitudes.
//!
//! Layout: magic "SDI1", version u32, trace count u32, samples-per-trace u32,
//! record_dt f32 (s); per trace shot_id u32, rcv_index u32, src xyz f32,
//! rcv xyz f32, amplitudes f32; trailing CRC32.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{check_version, finish_and_write, read_checked, ByteReader};
use crate::survey::{GeometryAwareTrace, Survey};

const MAGIC: &[u8; 4] = b"SDI1";
const VERSION: u32 = 1;

pub fn write_survey(path: &Path, survey: &Survey) -> Result<()> {
    let traces = survey.traces();
    let samples = traces.first().map_or(0, |t| t.data.len());
    if traces.iter().any(|t| t.data.len() != samples) {
        return Err(Error::shape("all traces in a survey file share one length"));
    }
    let mut bytes = Vec::with_capacity(20 + traces.len() * (32 + 4 * samples));
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(traces.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(samples as u32).to_le_bytes());
    bytes.extend_from_slice(&(survey.record_dt as f32).to_le_bytes());
    for t in traces {
        bytes.extend_from_slice(&t.shot_id.to_le_bytes());
        bytes.extend_from_slice(&t.rcv_index.to_le_bytes());
        for p in [t.src, t.rcv] {
            for axis in p {
                bytes.extend_from_slice(&(axis as f32).to_le_bytes());
            }
        }
        for v in &t.data {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    finish_and_write(path, bytes)
}

pub fn read_survey(path: &Path) -> Result<Survey> {
    let bytes = read_checked(path)?;
    let mut r = ByteReader::new(&bytes);
    r.magic(MAGIC)?;
    check_version(&mut r, VERSION)?;
    let count = r.u32("trace count")? as usize;
    let samples = r.u32("samples per trace")? as usize;
    let record_dt = r.f32("record_dt")? as f64;
    let mut traces = Vec::with_capacity(count);
    for _ in 0..count {
        let shot_id = r.u32("shot_id")?;
        let rcv_index = r.u32("rcv_index")?;
        let mut src = [0.0; 3];
        for a in &mut src {
            *a = r.f32("src position")? as f64;
        }
        let mut rcv = [0.0; 3];
        for a in &mut rcv {
            *a = r.f32("rcv position")? as f64;
        }
        let data = r
            .f32_vec(samples, "amplitudes")?
            .into_iter()
            .map(|v| v as f64)
            .collect();
        traces.push(GeometryAwareTrace {
            data,
            src,
            rcv,
            shot_id,
            rcv_index,
        });
    }
    r.expect_end()?;
    Survey::new(traces, record_dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use rand::Rng;

    fn sample_survey(n: usize, samples: usize) -> Survey {
        let mut rng = rng_for(1, "io.sdi");
        let traces = (0..n)
            .map(|i| GeometryAwareTrace {
                data: (0..samples)
                    .map(|_| rng.random_range(-1.0f32..1.0) as f64)
                    .collect(),
                src: [rng.random_range(0.0f32..700.0) as f64, 0.0, 0.0],
                rcv: [rng.random_range(0.0f32..700.0) as f64, 0.0, 0.0],
                shot_id: (i / 8) as u32,
                rcv_index: (i % 8) as u32,
            })
            .collect();
        Survey::new(traces, 1e-3).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.sdi");
        let survey = sample_survey(24, 50);
        write_survey(&path, &survey).unwrap();
        let back = read_survey(&path).unwrap();
        assert_eq!(back.len(), survey.len());
        assert_eq!(back.traces(), survey.traces());
        assert_eq!(back.record_dt as f32, survey.record_dt as f32);
    }

    #[test]
    fn file_size_follows_the_layout() {
        // header 20 bytes + per trace (8 id + 24 positions + 4 * samples)
        // + 4 CRC; at survey scale (29 x 301 traces x 2000 samples) this is
        // the documented ~69.9 MB payload
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sz.sdi");
        let (n, samples) = (24, 50);
        write_survey(&path, &sample_survey(n, samples)).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 20 + (n as u64) * (32 + 4 * samples as u64) + 4);
        // 29 x 301 traces x 2000 f32 samples: 69,832,000 amplitude bytes
        let amp_payload = 29u64 * 301 * 2000 * 4;
        assert_eq!(amp_payload, 69_832_000);
        assert_eq!(20 + 29 * 301 * (32 + 4 * 2000) + 4, amp_payload + 29 * 301 * 32 + 24);
    }

    #[test]
    fn corrupted_byte_fails_crc() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.sdi");
        write_survey(&path, &sample_survey(4, 10)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_survey(&path),
            Err(Error::Format { .. })
        ));
    }
}

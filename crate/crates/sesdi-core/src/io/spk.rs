//! SPK1 parameter checkpoints.
//!
//! Bare MLP: magic "SPK1", version u32, layer count u32, per layer rows u32,
//! cols u32, f64 weights (row-major) then f64 biases, trailing CRC32.
//! Weights are stored at full precision so round trips are bit-exact.
//!
//! Full network checkpoints prepend a plain-text spec header (key=value, one
//! per line, terminated by `end`) to a single SPK1 blob holding the layers of
//! every block in order F_d, F_aq, F_t, rho.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{check_version, finish_and_write, read_checked, ByteReader};
use crate::model::{Aggregate, LocScale, SesdiParams, SesdiSpec};
use crate::nn::{Activation, DenseLayer, Matrix, MlpParams, MlpSpec};

const MAGIC: &[u8; 4] = b"SPK1";
const VERSION: u32 = 1;
const HEADER_MAGIC: &str = "SESDI 1";

fn encode_params(banks: &[&MlpParams]) -> Vec<u8> {
    let n_layers: usize = banks.iter().map(|p| p.layers.len()).sum();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(n_layers as u32).to_le_bytes());
    for bank in banks {
        for layer in &bank.layers {
            bytes.extend_from_slice(&(layer.weights.rows() as u32).to_le_bytes());
            bytes.extend_from_slice(&(layer.weights.cols() as u32).to_le_bytes());
            for v in layer.weights.data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            for v in &layer.bias {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    bytes
}

fn decode_layers(r: &mut ByteReader) -> Result<Vec<DenseLayer>> {
    r.magic(MAGIC)?;
    check_version(r, VERSION)?;
    let n_layers = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let rows = r.u32("rows")? as usize;
        let cols = r.u32("cols")? as usize;
        let weights = Matrix::from_vec(rows, cols, r.f64_vec(rows * cols, "weights")?)?;
        let bias = r.f64_vec(rows, "biases")?;
        layers.push(DenseLayer { weights, bias });
    }
    Ok(layers)
}

/// Write a bare MLP checkpoint.
pub fn write_mlp(path: &Path, params: &MlpParams) -> Result<()> {
    finish_and_write(path, encode_params(&[params]))
}

/// Read a bare MLP checkpoint.
pub fn read_mlp(path: &Path) -> Result<MlpParams> {
    let bytes = read_checked(path)?;
    let mut r = ByteReader::new(&bytes);
    let layers = decode_layers(&mut r)?;
    r.expect_end()?;
    Ok(MlpParams { layers })
}

fn dims_csv(spec: &MlpSpec) -> String {
    spec.layer_dims
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn acts_csv(spec: &MlpSpec) -> String {
    spec.activations
        .iter()
        .map(|a| match a {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn floats_csv(vals: &[f64]) -> String {
    vals.iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Write a full network checkpoint: spec header plus one SPK1 blob.
pub fn write_sesdi(path: &Path, params: &SesdiParams) -> Result<()> {
    let spec = &params.spec;
    let mut header = String::new();
    header.push_str(HEADER_MAGIC);
    header.push('\n');
    header.push_str(&format!("trace_len={}\n", spec.trace_len));
    header.push_str(&format!("loc_dim={}\n", spec.loc_dim));
    for (name, mlp) in [
        ("f_d", &spec.f_d),
        ("f_aq", &spec.f_aq),
        ("f_t", &spec.f_t),
        ("rho", &spec.rho),
    ] {
        header.push_str(&format!("{name}_dims={}\n", dims_csv(mlp)));
        header.push_str(&format!("{name}_act={}\n", acts_csv(mlp)));
    }
    header.push_str(&format!(
        "output_dims={}\n",
        spec.output_dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    header.push_str(&format!(
        "aggregate={}\n",
        match spec.aggregate {
            Aggregate::Mean => "mean",
            Aggregate::Sum => "sum",
        }
    ));
    header.push_str(&format!("v_mid={}\n", spec.v_mid));
    header.push_str(&format!("v_half={}\n", spec.v_half));
    header.push_str(&format!("loc_center={}\n", floats_csv(&params.loc_scale.center)));
    header.push_str(&format!("loc_half={}\n", floats_csv(&params.loc_scale.half)));
    header.push_str("end\n");

    let mut bytes = header.into_bytes();
    bytes.extend_from_slice(&encode_params(&[
        &params.f_d,
        &params.f_aq,
        &params.f_t,
        &params.rho,
    ]));
    finish_and_write(path, bytes)
}

fn parse_usizes(v: &str, key: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::format(0, format!("bad integer list for {key}: {v}")))
        })
        .collect()
}

fn parse_floats3(v: &str, key: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = v
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::format(0, format!("bad float list for {key}: {v}")))
        })
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        return Err(Error::format(0, format!("{key} needs 3 values")));
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn parse_acts(v: &str, key: &str) -> Result<Vec<Activation>> {
    v.split(',')
        .map(|s| match s.trim() {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::format(0, format!("bad activation for {key}: {other}"))),
        })
        .collect()
}

/// Read a full network checkpoint.
pub fn read_sesdi(path: &Path) -> Result<SesdiParams> {
    let bytes = read_checked(path)?;
    // split the text header from the binary blob
    let mut offset = 0usize;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format(offset as u64, "unterminated checkpoint header"))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::format(offset as u64, "header is not UTF-8"))?
            .trim()
            .to_string();
        offset += nl + 1;
        if line == "end" {
            break;
        }
        lines.push(line);
        if lines.len() > 64 {
            return Err(Error::format(offset as u64, "runaway checkpoint header"));
        }
    }
    if lines.first().map(String::as_str) != Some(HEADER_MAGIC) {
        return Err(Error::format(0, format!("bad header magic, expected {HEADER_MAGIC:?}")));
    }
    let mut kv = std::collections::BTreeMap::new();
    for line in &lines[1..] {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(0, format!("bad header line {line:?}")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| -> Result<&String> {
        kv.get(key)
            .ok_or_else(|| Error::format(0, format!("missing header key {key}")))
    };

    let mlp_spec = |name: &str| -> Result<MlpSpec> {
        Ok(MlpSpec {
            layer_dims: parse_usizes(get(&format!("{name}_dims"))?, name)?,
            activations: parse_acts(get(&format!("{name}_act"))?, name)?,
        })
    };
    let spec = SesdiSpec {
        trace_len: get("trace_len")?
            .parse()
            .map_err(|_| Error::format(0, "bad trace_len"))?,
        loc_dim: get("loc_dim")?
            .parse()
            .map_err(|_| Error::format(0, "bad loc_dim"))?,
        f_d: mlp_spec("f_d")?,
        f_aq: mlp_spec("f_aq")?,
        f_t: mlp_spec("f_t")?,
        rho: mlp_spec("rho")?,
        output_dims: parse_usizes(get("output_dims")?, "output_dims")?,
        aggregate: match get("aggregate")?.as_str() {
            "mean" => Aggregate::Mean,
            "sum" => Aggregate::Sum,
            other => return Err(Error::format(0, format!("bad aggregate {other}"))),
        },
        v_mid: get("v_mid")?
            .parse()
            .map_err(|_| Error::format(0, "bad v_mid"))?,
        v_half: get("v_half")?
            .parse()
            .map_err(|_| Error::format(0, "bad v_half"))?,
    };
    spec.validate()?;
    let loc_scale = LocScale {
        center: parse_floats3(get("loc_center")?, "loc_center")?,
        half: parse_floats3(get("loc_half")?, "loc_half")?,
    };

    let mut r = ByteReader::new(&bytes[offset..]);
    let mut layers = decode_layers(&mut r)?;
    r.expect_end()?;
    let take = |layers: &mut Vec<DenseLayer>, spec: &MlpSpec| -> Result<MlpParams> {
        let n = spec.n_layers();
        if layers.len() < n {
            return Err(Error::format(0, "checkpoint has fewer layers than the spec"));
        }
        let rest = layers.split_off(n);
        let params = MlpParams {
            layers: std::mem::replace(layers, rest),
        };
        if !params.matches(spec) {
            return Err(Error::format(0, "layer shapes do not match the spec header"));
        }
        Ok(params)
    };
    let f_d = take(&mut layers, &spec.f_d)?;
    let f_aq = take(&mut layers, &spec.f_aq)?;
    let f_t = take(&mut layers, &spec.f_t)?;
    let rho = take(&mut layers, &spec.rho)?;
    if !layers.is_empty() {
        return Err(Error::format(0, "checkpoint has more layers than the spec"));
    }
    Ok(SesdiParams {
        spec,
        f_d,
        f_aq,
        f_t,
        rho,
        loc_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;

    #[test]
    fn mlp_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.spk");
        let spec = MlpSpec::relu_head(&[7, 13, 4]);
        let mut rng = rng_for(2, "io.spk");
        let params = MlpParams::init(&spec, &mut rng).unwrap();
        write_mlp(&path, &params).unwrap();
        let back = read_mlp(&path).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn sesdi_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let spec = SesdiSpec::tiny();
        let mut rng = rng_for(3, "io.sesdi");
        let loc = LocScale {
            center: [375.0, 0.0, 0.1234567890123],
            half: [375.0, 1.0, 1.0],
        };
        let params = SesdiParams::init(&spec, loc, &mut rng).unwrap();
        write_sesdi(&path, &params).unwrap();
        let back = read_sesdi(&path).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn flipped_bit_fails_crc() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ckpt");
        let spec = SesdiSpec::tiny();
        let mut rng = rng_for(4, "io.flip");
        let params = SesdiParams::init(&spec, LocScale::identity(), &mut rng).unwrap();
        write_sesdi(&path, &params).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 3;
        bytes[mid] ^= 1;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_sesdi(&path), Err(Error::Format { .. })));
    }
}

//! On-disk formats.
//!
//! Dense tensors use a small binary container:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FLT3"
//! 4       4     version, u32 little-endian (= 1)
//! 8       8     M, u64 little-endian
//! 16      8     N, u64 little-endian
//! 24      8     T, u64 little-endian
//! 32      8·MNT values, f64 little-endian, t fastest, then j, then i
//! ```
//!
//! Observations are CSV with a `i,j,t,value` header, 0-based indices, and leading
//! `# key=value` comment lines for `m`, `n`, `t`, `p` and `p_source`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{FlostModel, Observation, ObservationSet, PSource};
use crate::tensor::{DenseTensor3, Dims};

pub const TENSOR_MAGIC: &[u8; 4] = b"FLT3";
pub const TENSOR_VERSION: u32 = 1;
pub const TENSOR_HEADER_LEN: usize = 32;
const MODEL_FORMAT: &str = "flost-model";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad magic bytes {0:?}, expected \"FLT3\"")]
    BadMagic([u8; 4]),

    #[error("unsupported tensor file version {0}")]
    BadVersion(u32),

    #[error("tensor file has {got} payload bytes, expected {expected}")]
    TruncatedFile { expected: u64, got: u64 },

    #[error("tensor dimensions {0}x{1}x{2} are zero or overflow")]
    DimOverflow(u64, u64, u64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing metadata line '# {0}=...'")]
    MissingMetadata(&'static str),

    #[error("model file: {0}")]
    Model(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

pub fn encode_tensor<W: Write>(mut w: W, x: &DenseTensor3) -> Result<(), FormatError> {
    let d = x.dims();
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&TENSOR_VERSION.to_le_bytes())?;
    for extent in [d.m, d.n, d.t] {
        w.write_all(&(extent as u64).to_le_bytes())?;
    }
    for v in x.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor3, FormatError> {
    if bytes.len() < TENSOR_HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != TENSOR_MAGIC {
            return Err(FormatError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(FormatError::TruncatedFile {
            expected: TENSOR_HEADER_LEN as u64,
            got: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic != TENSOR_MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != TENSOR_VERSION {
        return Err(FormatError::BadVersion(version));
    }
    let read_u64 = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let (m, n, t) = (read_u64(8), read_u64(16), read_u64(24));
    let overflow = FormatError::DimOverflow(m, n, t);
    let payload_len = m
        .checked_mul(n)
        .and_then(|v| v.checked_mul(t))
        .and_then(|v| v.checked_mul(8))
        .filter(|_| m > 0 && n > 0 && t > 0)
        .ok_or(overflow)?;
    let got = (bytes.len() - TENSOR_HEADER_LEN) as u64;
    if got != payload_len {
        return Err(FormatError::TruncatedFile {
            expected: payload_len,
            got,
        });
    }
    let dims = Dims::new(m as usize, n as usize, t as usize)
        .map_err(|_| FormatError::DimOverflow(m, n, t))?;
    let values = bytes[TENSOR_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseTensor3::from_vec(dims, values).map_err(|e| FormatError::Model(e.to_string()))
}

pub fn write_tensor(path: impl AsRef<Path>, x: &DenseTensor3) -> Result<(), FormatError> {
    encode_tensor(BufWriter::new(File::create(path)?), x)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor3, FormatError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_tensor(&bytes)
}

pub fn encode_observations<W: Write>(mut w: W, obs: &ObservationSet) -> Result<(), FormatError> {
    let d = obs.dims();
    let source = match obs.p_source() {
        PSource::Given => "given",
        PSource::Estimated => "estimated",
    };
    writeln!(
        w,
        "# m={}\n# n={}\n# t={}\n# p={}\n# p_source={}",
        d.m,
        d.n,
        d.t,
        obs.p(),
        source
    )?;
    writeln!(w, "i,j,t,value")?;
    for e in obs.entries() {
        writeln!(w, "{},{},{},{}", e.i, e.j, e.t, e.value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn decode_observations<R: BufRead>(r: R) -> Result<ObservationSet, FormatError> {
    let (mut m, mut n, mut t, mut p, mut source) = (None, None, None, None, None);
    let mut header_seen = false;
    let mut entries = Vec::new();
    let mut line_nos = Vec::new();

    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            if header_seen {
                return Err(parse_err(line_no, "metadata after the column header"));
            }
            let Some((key, value)) = meta.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            let as_usize = || {
                value
                    .parse::<usize>()
                    .map_err(|_| parse_err(line_no, format!("bad {key}: {value}")))
            };
            match key.trim() {
                "m" => m = Some(as_usize()?),
                "n" => n = Some(as_usize()?),
                "t" => t = Some(as_usize()?),
                "p" => {
                    p = Some(
                        value
                            .parse::<f64>()
                            .map_err(|_| parse_err(line_no, format!("bad p: {value}")))?,
                    )
                }
                "p_source" => {
                    source = Some(match value {
                        "given" => PSource::Given,
                        "estimated" => PSource::Estimated,
                        other => return Err(parse_err(line_no, format!("bad p_source: {other}"))),
                    })
                }
                _ => {}
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != ["i", "j", "t", "value"] {
                return Err(parse_err(
                    line_no,
                    format!("expected header 'i,j,t,value', got '{trimmed}'"),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(
                line_no,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let index = |k: usize| {
            fields[k]
                .parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("bad index '{}'", fields[k])))
        };
        let value = fields[3]
            .parse::<f64>()
            .map_err(|_| parse_err(line_no, format!("bad value '{}'", fields[3])))?;
        entries.push(Observation {
            i: index(0)?,
            j: index(1)?,
            t: index(2)?,
            value,
        });
        line_nos.push(line_no);
    }
    if !header_seen {
        return Err(parse_err(0, "missing 'i,j,t,value' header"));
    }
    let dims = Dims::new(
        m.ok_or(FormatError::MissingMetadata("m"))?,
        n.ok_or(FormatError::MissingMetadata("n"))?,
        t.ok_or(FormatError::MissingMetadata("t"))?,
    )
    .map_err(|e| parse_err(0, e.to_string()))?;

    // Report range and duplicate errors against the offending line.
    let mut seen = vec![false; dims.len()];
    for (e, &line_no) in entries.iter().zip(&line_nos) {
        if !dims.contains(e.i, e.j, e.t) {
            return Err(parse_err(
                line_no,
                format!("index ({}, {}, {}) out of range", e.i, e.j, e.t),
            ));
        }
        let flat = dims.index(e.i, e.j, e.t);
        if std::mem::replace(&mut seen[flat], true) {
            return Err(parse_err(
                line_no,
                format!("duplicate index ({}, {}, {})", e.i, e.j, e.t),
            ));
        }
    }
    let built = match (p, source) {
        (Some(p), src) => {
            ObservationSet::with_source(dims, entries, p, src.unwrap_or(PSource::Given))
        }
        (None, _) => ObservationSet::with_estimated_p(dims, entries),
    };
    built.map_err(|e| parse_err(0, e.to_string()))
}

pub fn write_observations(path: impl AsRef<Path>, obs: &ObservationSet) -> Result<(), FormatError> {
    encode_observations(BufWriter::new(File::create(path)?), obs)
}

pub fn read_observations(path: impl AsRef<Path>) -> Result<ObservationSet, FormatError> {
    decode_observations(BufReader::new(File::open(path)?))
}

/// JSON envelope for a fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub model: FlostModel,
    pub parameter_count: usize,
    #[serde(default)]
    pub fit_seconds: Option<f64>,
}

impl ModelFile {
    pub fn new(model: FlostModel, fit_seconds: Option<f64>) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: 1,
            parameter_count: model.parameter_count(),
            model,
            fit_seconds,
        }
    }
}

pub fn write_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<(), FormatError> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(w, file).map_err(|e| FormatError::Model(e.to_string()))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile, FormatError> {
    let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| FormatError::Model(e.to_string()))?;
    if file.format != MODEL_FORMAT || file.version != 1 {
        return Err(FormatError::Model(format!(
            "unsupported {} v{}",
            file.format, file.version
        )));
    }
    Ok(file)
}

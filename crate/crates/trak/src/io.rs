//! On-disk formats and ingestion.
//!
//! Two containers, both little-endian:
//!
//! * `TRAK` — a field sequence. Magic `"TRAK"` (4 bytes), format version
//!   `u32 = 1`, dtype code `u32` (0 = f32, 1 = f64), `n: u64`, `h: u64`,
//!   `w: u64`, then exactly `n*h*w` payload elements, row-major within each
//!   field, fields concatenated in time order.
//! * `TRKS` — a persisted spatial distance matrix, so repeated analyses with
//!   different `(d, e, k)` can skip the dominant phase. Magic `"TRKS"`,
//!   version `u32 = 1`, dtype code `u32`, `n: u64`, then `n*n` row-major
//!   entries.
//!
//! A CSV fallback holds sequences as text: header line `n,h,w`, then one line
//! of `h*w` comma-separated values per time step. CSV carries no dtype and
//! loads as f64; values are written in shortest round-trip form, so a
//! f64 -> CSV -> f64 trip is value-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{io_error, Error, Result};
use crate::field::{Dtype, FieldSequence};
use crate::spatial::SpatialDistanceMatrix;

pub const TRAK_MAGIC: [u8; 4] = *b"TRAK";
pub const TRKS_MAGIC: [u8; 4] = *b"TRKS";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8;

/// Load a sequence, sniffing the container: files starting with the `TRAK`
/// magic parse as binary, anything else as CSV.
pub fn load(path: impl AsRef<Path>) -> Result<FieldSequence> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut magic = [0u8; 4];
    let got = read_up_to(&mut file, &mut magic).map_err(|e| io_error(path, e))?;
    if got == 4 && magic == TRAK_MAGIC {
        drop(file);
        load_trak(path)
    } else {
        drop(file);
        load_csv(path)
    }
}

/// Save a sequence, picking the container from the file extension:
/// `.csv` writes text, anything else writes the binary format.
pub fn save(seq: &FieldSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => save_csv(seq, path),
        _ => save_trak(seq, path),
    }
}

pub fn load_trak(path: impl AsRef<Path>) -> Result<FieldSequence> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let file_len = file.metadata().map_err(|e| io_error(path, e))?.len();
    let mut reader = BufReader::new(file);

    let mut header = [0u8; HEADER_LEN];
    let got = read_up_to(&mut reader, &mut header).map_err(|e| io_error(path, e))?;
    if got < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "file is {got} bytes long, header needs {HEADER_LEN}"
        )));
    }
    if header[0..4] != TRAK_MAGIC {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:?}",
            &header[0..4]
        )));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = Dtype::from_code(u32::from_le_bytes(header[8..12].try_into().unwrap()))?;
    let n = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let h = u64::from_le_bytes(header[20..28].try_into().unwrap());
    let w = u64::from_le_bytes(header[28..36].try_into().unwrap());
    if n == 0 || h == 0 || w == 0 {
        return Err(Error::InvalidDims { n, h, w });
    }
    let count = n
        .checked_mul(h)
        .and_then(|x| x.checked_mul(w))
        .ok_or(Error::InvalidDims { n, h, w })?;

    let esize = dtype.size_bytes() as u64;
    let payload_bytes = file_len - HEADER_LEN as u64;
    if payload_bytes != count * esize {
        return Err(Error::PayloadMismatch {
            expected: count,
            actual: payload_bytes / esize,
        });
    }

    let values = read_elements(&mut reader, count as usize, dtype).map_err(|e| io_error(path, e))?;
    FieldSequence::new(n as usize, h as usize, w as usize, values, dtype)
}

pub fn save_trak(seq: &FieldSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        w.write_all(&TRAK_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&seq.dtype().code().to_le_bytes())?;
        w.write_all(&(seq.n() as u64).to_le_bytes())?;
        w.write_all(&(seq.h() as u64).to_le_bytes())?;
        w.write_all(&(seq.w() as u64).to_le_bytes())?;
        write_elements(&mut w, seq.values(), seq.dtype())?;
        w.flush()
    })()
    .map_err(|e| io_error(path, e))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<FieldSequence> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| Error::CsvParse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header.map_err(|e| io_error(path, e))?;
    let dims: Vec<&str> = header.trim().split(',').collect();
    if dims.len() != 3 {
        return Err(Error::CsvParse {
            line: 1,
            msg: format!("expected header n,h,w, got {header:?}"),
        });
    }
    let parse_dim = |s: &str| -> Result<usize> {
        s.trim().parse::<usize>().map_err(|_| Error::CsvParse {
            line: 1,
            msg: format!("bad dimension {s:?}"),
        })
    };
    let (n, h, w) = (parse_dim(dims[0])?, parse_dim(dims[1])?, parse_dim(dims[2])?);
    if n == 0 || h == 0 || w == 0 {
        return Err(Error::InvalidDims {
            n: n as u64,
            h: h as u64,
            w: w as u64,
        });
    }

    let hw = h * w;
    let mut values = Vec::with_capacity(n * hw);
    let mut rows = 0usize;
    for (idx, line) in lines {
        let line = line.map_err(|e| io_error(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != hw {
            return Err(Error::CsvParse {
                line: lineno,
                msg: format!("expected {hw} values, got {}", fields.len()),
            });
        }
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::CsvParse {
                line: lineno,
                msg: format!("bad value {f:?}"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::PayloadMismatch {
            expected: (n * hw) as u64,
            actual: (rows * hw) as u64,
        });
    }
    FieldSequence::new(n, h, w, values, Dtype::F64)
}

pub fn save_csv(seq: &FieldSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "{},{},{}", seq.n(), seq.h(), seq.w())?;
        for t in 0..seq.n() {
            let field = seq.field(t);
            let mut first = true;
            for v in field {
                if !first {
                    w.write_all(b",")?;
                }
                write!(w, "{v}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    })()
    .map_err(|e| io_error(path, e))
}

/// Persist a spatial distance matrix.
pub fn save_matrix(matrix: &SpatialDistanceMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        w.write_all(&TRKS_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&matrix.dtype().code().to_le_bytes())?;
        w.write_all(&(matrix.n() as u64).to_le_bytes())?;
        // n is padded to the same header width as sequences for symmetry
        // between the two containers.
        w.write_all(&0u64.to_le_bytes())?;
        w.write_all(&0u64.to_le_bytes())?;
        matrix.write_payload(&mut w)?;
        w.flush()
    })()
    .map_err(|e| io_error(path, e))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<SpatialDistanceMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let file_len = file.metadata().map_err(|e| io_error(path, e))?.len();
    let mut reader = BufReader::new(file);

    let mut header = [0u8; HEADER_LEN];
    let got = read_up_to(&mut reader, &mut header).map_err(|e| io_error(path, e))?;
    if got < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "file is {got} bytes long, header needs {HEADER_LEN}"
        )));
    }
    if header[0..4] != TRKS_MAGIC {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:?}",
            &header[0..4]
        )));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = Dtype::from_code(u32::from_le_bytes(header[8..12].try_into().unwrap()))?;
    let n = u64::from_le_bytes(header[12..20].try_into().unwrap());
    if n == 0 {
        return Err(Error::InvalidDims { n, h: 0, w: 0 });
    }
    let count = n.checked_mul(n).ok_or(Error::InvalidDims { n, h: 0, w: 0 })?;
    let esize = dtype.size_bytes() as u64;
    let payload_bytes = file_len - HEADER_LEN as u64;
    if payload_bytes != count * esize {
        return Err(Error::PayloadMismatch {
            expected: count,
            actual: payload_bytes / esize,
        });
    }
    SpatialDistanceMatrix::read_payload(&mut reader, n as usize, dtype)
        .map_err(|e| io_error(path, e))?
        .validate()
}

/// SHA-256 of a file's raw bytes, hex encoded. Used as the input digest in
/// report provenance.
pub fn sha256_hex(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let got = file.read(&mut buf).map_err(|e| io_error(path, e))?;
        if got == 0 {
            break;
        }
        hasher.update(&buf[..got]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn read_up_to(reader: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let got = reader.read(&mut buf[filled..])?;
        if got == 0 {
            break;
        }
        filled += got;
    }
    Ok(filled)
}

fn read_elements(reader: &mut impl Read, count: usize, dtype: Dtype) -> std::io::Result<Vec<f64>> {
    let esize = dtype.size_bytes();
    let mut bytes = vec![0u8; count * esize];
    reader.read_exact(&mut bytes)?;
    let mut values = Vec::with_capacity(count);
    match dtype {
        Dtype::F32 => {
            for chunk in bytes.chunks_exact(4) {
                values.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
            }
        }
        Dtype::F64 => {
            for chunk in bytes.chunks_exact(8) {
                values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
        }
    }
    Ok(values)
}

fn write_elements(w: &mut impl Write, values: &[f64], dtype: Dtype) -> std::io::Result<()> {
    match dtype {
        Dtype::F32 => {
            for &v in values {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Dtype::F64 => {
            for &v in values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

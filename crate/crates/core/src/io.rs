//! File formats: volume files, complex vectors with JSON sidecars, PGM images.
//!
//! Volume file layout (all integers little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `SPFTIVOL`                        |
//! | 8      | 4    | version (u32, currently 1)              |
//! | 12     | 4    | layout (u32, see [`Layout`])            |
//! | 16     | 8    | `n_xi` (u64)                            |
//! | 24     | 8    | `n_p_bar` (u64)                         |
//! | 32     | 8·N  | f64 payload                             |

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::transforms::{Dims, HSVolume, C64};

pub const VOLUME_MAGIC: &[u8; 8] = b"SPFTIVOL";
pub const VOLUME_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

/// Payload ordering of a volume file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Layout {
    /// Flat sensing-index order: pixel fastest, then wavenumber.
    Flat = 1,
    /// In-memory order: wavenumber fastest, then pixel.
    WavenumberFastest = 2,
}

impl Layout {
    fn from_code(code: u32) -> Option<Layout> {
        match code {
            1 => Some(Layout::Flat),
            2 => Some(Layout::WavenumberFastest),
            _ => None,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Writes a volume in flat-index order.
pub fn save_volume(path: &Path, vol: &HSVolume) -> Result<()> {
    save_volume_with_layout(path, vol, Layout::Flat)
}

pub fn save_volume_with_layout(path: &Path, vol: &HSVolume, layout: Layout) -> Result<()> {
    let d = vol.dims();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * d.n_hs());
    buf.extend_from_slice(VOLUME_MAGIC);
    buf.extend_from_slice(&VOLUME_VERSION.to_le_bytes());
    buf.extend_from_slice(&(layout as u32).to_le_bytes());
    buf.extend_from_slice(&(d.n_xi() as u64).to_le_bytes());
    buf.extend_from_slice(&(d.n_p_bar() as u64).to_le_bytes());
    let data = vol.data();
    match layout {
        Layout::WavenumberFastest => {
            for v in data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        Layout::Flat => {
            for nu in 0..d.n_xi() {
                for p in 0..d.n_p() {
                    buf.extend_from_slice(&data[d.n_xi() * p + nu].to_le_bytes());
                }
            }
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_volume(path: &Path) -> Result<HSVolume> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_volume(&bytes)
}

pub fn decode_volume(bytes: &[u8]) -> Result<HSVolume> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(bytes.len(), "truncated header"));
    }
    if &bytes[..8] != VOLUME_MAGIC {
        return Err(format_err(0, "bad magic, not a volume file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(8);
    if version != VOLUME_VERSION {
        return Err(format_err(8, format!("unsupported version {version}")));
    }
    let layout =
        Layout::from_code(u32_at(12)).ok_or_else(|| format_err(12, format!("unknown layout {}", u32_at(12))))?;
    let n_xi = u64_at(16);
    let n_p_bar = u64_at(24);
    let dims = usize::try_from(n_xi)
        .ok()
        .zip(usize::try_from(n_p_bar).ok())
        .and_then(|(a, b)| Dims::new(a, b).ok())
        .ok_or_else(|| format_err(16, format!("invalid dims ({n_xi}, {n_p_bar})")))?;
    let payload = &bytes[HEADER_LEN..];
    let want = dims
        .n_hs()
        .checked_mul(8)
        .ok_or_else(|| format_err(16, "dims overflow"))?;
    if payload.len() != want {
        return Err(format_err(
            HEADER_LEN + payload.len().min(want),
            format!("payload has {} bytes, header dims need {want}", payload.len()),
        ));
    }
    let vals: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
        return Err(format_err(HEADER_LEN + 8 * i, "non-finite value"));
    }
    let data = match layout {
        Layout::WavenumberFastest => vals,
        Layout::Flat => {
            let mut out = vec![0.0; dims.n_hs()];
            for nu in 0..dims.n_xi() {
                for p in 0..dims.n_p() {
                    out[dims.n_xi() * p + nu] = vals[dims.n_p() * nu + p];
                }
            }
            out
        }
    };
    HSVolume::new(dims, data)
}

/// Path of the JSON sidecar for a binary file.
pub fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes interleaved `re, im` little-endian f64 pairs.
pub fn write_complex(path: &Path, v: &[C64]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 * v.len());
    for z in v {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_complex(path: &Path) -> Result<Vec<C64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 16 != 0 {
        return Err(format_err(
            bytes.len() - bytes.len() % 16,
            "trailing bytes, expected re/im pairs of f64",
        ));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

/// Writes a binary (P5) 8-bit PGM, mapping `[min, max]` of `values` linearly
/// to `[0, 255]`. A constant image maps to 0. Rows are `width` values long.
pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::dim(format!(
            "image has {} values, {width}x{height} needs {}",
            values.len(),
            width * height
        )));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    let mut buf = format!("P5\n{width} {height}\n255\n").into_bytes();
    buf.extend(values.iter().map(|&v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round() as u8
        } else {
            0
        }
    }));
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads a P5 or P2 PGM as `(width, height, values)` with values scaled to
/// `[0, 1]` by the header maximum.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut pos = 0;
    let token = |pos: &mut usize| -> Result<(usize, String)> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(format_err(start, "unexpected end of header"));
        }
        Ok((start, String::from_utf8_lossy(&bytes[start..*pos]).into_owned()))
    };
    let (_, magic) = token(&mut pos)?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        _ => return Err(format_err(0, "not a P5/P2 PGM")),
    };
    let num = |pos: &mut usize| -> Result<usize> {
        let (at, t) = token(pos)?;
        t.parse()
            .map_err(|_| format_err(at, format!("bad header number {t:?}")))
    };
    let width = num(&mut pos)?;
    let height = num(&mut pos)?;
    let maxval = num(&mut pos)?;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(pos, format!("maxval {maxval} out of range")));
    }
    let n = width * height;
    let scale = 1.0 / maxval as f64;
    let values = if binary {
        pos += 1;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let data = bytes
            .get(pos..pos + need)
            .ok_or_else(|| format_err(bytes.len(), "truncated pixel data"))?;
        if wide {
            data.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
                .collect()
        } else {
            data.iter().map(|&b| b as f64 * scale).collect()
        }
    } else {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(num(&mut pos)? as f64 * scale);
        }
        out
    };
    Ok((width, height, values))
}

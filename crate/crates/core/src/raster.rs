//! Single-band float raster with windowed access and bit-exact file I/O.
//!
//! Two on-disk formats are supported:
//!
//! * `F32BIN` — raw little-endian `f32` payload (`<base>.f32`) with a JSON
//!   sidecar header (`<base>.json`). Round-trips bit-exact.
//! * `ASCIIGRID` — the ESRI ASCII grid format.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const DEFAULT_NODATA: f32 = -9999.0;
pub const DEFAULT_PIXEL_SIZE: f32 = 0.5;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("size mismatch in {path}: header declares {expected} values, payload has {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("window center ({row}, {col}) outside {width}x{height} raster")]
    CenterOutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid raster: {0}")]
    Invalid(String),
}

/// On-disk raster format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    F32Bin,
    AsciiGrid,
}

/// Row-major single-band raster of 32-bit floats.
///
/// Row 0 is the northern/top edge; pixel `(r, c)` maps to world
/// coordinates `(x, y) = (c * pixel_size, -r * pixel_size)` meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// Meters per pixel, > 0.
    pub pixel_size: f32,
    pub nodata: f32,
    pub values: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixel_size: f32, nodata: f32) -> Self {
        Self {
            width,
            height,
            pixel_size,
            nodata,
            values: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            pixel_size: DEFAULT_PIXEL_SIZE,
            nodata: DEFAULT_NODATA,
            values: vec![value; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Self {
        assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            pixel_size: DEFAULT_PIXEL_SIZE,
            nodata: DEFAULT_NODATA,
            values,
        }
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        if self.values.len() != self.width * self.height {
            return Err(RasterError::Invalid(format!(
                "value count {} != {}x{}",
                self.values.len(),
                self.width,
                self.height
            )));
        }
        if !(self.pixel_size > 0.0) {
            return Err(RasterError::Invalid(format!(
                "pixel_size {} must be > 0",
                self.pixel_size
            )));
        }
        for (i, &v) in self.values.iter().enumerate() {
            if v != self.nodata && !v.is_finite() {
                return Err(RasterError::Invalid(format!(
                    "non-finite value {v} at index {i}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[self.idx(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f32) {
        let i = self.idx(row, col);
        self.values[i] = value;
    }

    #[inline]
    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.get(row, col) == self.nodata
    }

    #[inline]
    pub fn in_bounds(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    pub fn same_dims(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// A square window around a center pixel; side = `2 * half + 1`, clipped
/// at the raster border.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub row: usize,
    pub col: usize,
    pub half: usize,
}

impl Window {
    pub fn new(row: usize, col: usize, half: usize) -> Self {
        Self { row, col, half }
    }

    /// Inclusive `(r0, r1, c0, c1)` bounds clipped to the raster.
    pub fn clipped(&self, r: &Raster) -> (usize, usize, usize, usize) {
        let r0 = self.row.saturating_sub(self.half);
        let c0 = self.col.saturating_sub(self.half);
        let r1 = (self.row + self.half).min(r.height - 1);
        let c1 = (self.col + self.half).min(r.width - 1);
        (r0, r1, c0, c1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumMode {
    Max,
    Min,
}

/// Extremum over the non-nodata pixels of the clipped window.
/// A window with only nodata pixels returns the raster's nodata value.
pub fn window_extremum(r: &Raster, w: Window, mode: ExtremumMode) -> Result<f32, RasterError> {
    if w.row >= r.height || w.col >= r.width {
        return Err(RasterError::CenterOutOfBounds {
            row: w.row,
            col: w.col,
            width: r.width,
            height: r.height,
        });
    }
    let (r0, r1, c0, c1) = w.clipped(r);
    let mut best: Option<f32> = None;
    for row in r0..=r1 {
        for col in c0..=c1 {
            let v = r.get(row, col);
            if v == r.nodata {
                continue;
            }
            best = Some(match (best, mode) {
                (None, _) => v,
                (Some(b), ExtremumMode::Max) => b.max(v),
                (Some(b), ExtremumMode::Min) => b.min(v),
            });
        }
    }
    Ok(best.unwrap_or(r.nodata))
}

#[derive(Debug, Serialize, Deserialize)]
struct F32BinHeader {
    width: usize,
    height: usize,
    pixel_size: f32,
    nodata: f32,
    dtype: String,
    order: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn load_raster(path: &Path, format: RasterFormat) -> Result<Raster, RasterError> {
    match format {
        RasterFormat::F32Bin => load_f32bin(path),
        RasterFormat::AsciiGrid => load_asciigrid(path),
    }
}

pub fn save_raster(r: &Raster, path: &Path, format: RasterFormat) -> Result<(), RasterError> {
    r.validate()?;
    match format {
        RasterFormat::F32Bin => save_f32bin(r, path),
        RasterFormat::AsciiGrid => save_asciigrid(r, path),
    }
}

/// Guess the format from the file extension (`.asc` = ASCII grid,
/// everything else = F32BIN).
pub fn format_for_path(path: &Path) -> RasterFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("asc") => RasterFormat::AsciiGrid,
        _ => RasterFormat::F32Bin,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RasterError + '_ {
    move |source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_f32bin(path: &Path) -> Result<Raster, RasterError> {
    let header_path = sidecar_path(path);
    let header_text = fs::read_to_string(&header_path).map_err(io_err(&header_path))?;
    let header: F32BinHeader =
        serde_json::from_str(&header_text).map_err(|e| RasterError::MalformedHeader {
            path: header_path.clone(),
            reason: e.to_string(),
        })?;
    if header.dtype != "f32le" || header.order != "row-major" {
        return Err(RasterError::MalformedHeader {
            path: header_path,
            reason: format!(
                "unsupported dtype/order {}/{}",
                header.dtype, header.order
            ),
        });
    }
    if !(header.pixel_size > 0.0) {
        return Err(RasterError::MalformedHeader {
            path: header_path,
            reason: format!("pixel_size {} must be > 0", header.pixel_size),
        });
    }
    let payload = fs::read(path).map_err(io_err(path))?;
    let expected = header.width * header.height;
    if payload.len() != expected * 4 {
        return Err(RasterError::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            actual: payload.len() / 4,
        });
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(Raster {
        width: header.width,
        height: header.height,
        pixel_size: header.pixel_size,
        nodata: header.nodata,
        values,
    })
}

fn save_f32bin(r: &Raster, path: &Path) -> Result<(), RasterError> {
    let header = F32BinHeader {
        width: r.width,
        height: r.height,
        pixel_size: r.pixel_size,
        nodata: r.nodata,
        dtype: "f32le".to_string(),
        order: "row-major".to_string(),
    };
    let header_path = sidecar_path(path);
    fs::write(
        &header_path,
        serde_json::to_string(&header).expect("header serialization"),
    )
    .map_err(io_err(&header_path))?;
    let mut payload = Vec::with_capacity(r.values.len() * 4);
    for v in &r.values {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, payload).map_err(io_err(path))
}

fn load_asciigrid(path: &Path) -> Result<Raster, RasterError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut tokens = text.split_whitespace();
    let mut ncols = None;
    let mut nrows = None;
    let mut cellsize = None;
    let mut nodata = DEFAULT_NODATA;
    // Header: KEY VALUE pairs until the first purely numeric token.
    let mut first_value: Option<f32> = None;
    while let Some(tok) = tokens.next() {
        if let Ok(v) = tok.parse::<f32>() {
            first_value = Some(v);
            break;
        }
        let key = tok.to_ascii_uppercase();
        let val = tokens.next().ok_or_else(|| RasterError::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("missing value for header key {key}"),
        })?;
        let parse = |v: &str| {
            v.parse::<f64>().map_err(|_| RasterError::MalformedHeader {
                path: path.to_path_buf(),
                reason: format!("bad numeric value {v} for {key}"),
            })
        };
        match key.as_str() {
            "NCOLS" => ncols = Some(parse(val)? as usize),
            "NROWS" => nrows = Some(parse(val)? as usize),
            "CELLSIZE" => cellsize = Some(parse(val)? as f32),
            "NODATA_VALUE" => nodata = parse(val)? as f32,
            "XLLCORNER" | "YLLCORNER" => {
                parse(val)?;
            }
            other => {
                return Err(RasterError::MalformedHeader {
                    path: path.to_path_buf(),
                    reason: format!("unknown header key {other}"),
                })
            }
        }
    }
    let (width, height) = match (ncols, nrows) {
        (Some(w), Some(h)) => (w, h),
        _ => {
            return Err(RasterError::MalformedHeader {
                path: path.to_path_buf(),
                reason: "missing NCOLS/NROWS".to_string(),
            })
        }
    };
    let mut values = Vec::with_capacity(width * height);
    if let Some(v) = first_value {
        values.push(v);
    }
    for tok in tokens {
        let v = tok.parse::<f32>().map_err(|_| RasterError::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("bad data token {tok}"),
        })?;
        values.push(v);
    }
    if values.len() != width * height {
        return Err(RasterError::SizeMismatch {
            path: path.to_path_buf(),
            expected: width * height,
            actual: values.len(),
        });
    }
    Ok(Raster {
        width,
        height,
        pixel_size: cellsize.unwrap_or(DEFAULT_PIXEL_SIZE),
        nodata,
        values,
    })
}

fn save_asciigrid(r: &Raster, path: &Path) -> Result<(), RasterError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "NCOLS {}", r.width)?;
        writeln!(w, "NROWS {}", r.height)?;
        writeln!(w, "XLLCORNER 0.0")?;
        writeln!(w, "YLLCORNER 0.0")?;
        writeln!(w, "CELLSIZE {}", r.pixel_size)?;
        writeln!(w, "NODATA_VALUE {}", r.nodata)?;
        for row in 0..r.height {
            let mut line = String::new();
            for col in 0..r.width {
                if col > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{}", r.get(row, col)));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()
    })();
    res.map_err(io_err(path))
}

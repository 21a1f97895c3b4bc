//! Bit-exact snapshot persistence, metrics tables and raster export.
//!
//! Snapshot layout: magic `MVAC`, format version `u32`, grid side `u32`,
//! matrix dimension `u32`, time `f64`, epsilon `f64` (NaN for the projection
//! scheme), scheme tag `u8`, then `N^2 n^2` little-endian `f64` payload in
//! scanline point order with row-major matrices. All numbers little-endian
//! regardless of host.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::field::MatrixField;
use crate::grid::Grid;
use crate::linalg;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"MVAC";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("bad magic bytes: expected MVAC")]
    BadMagic,
    #[error("snapshot format version {found} is not {SNAPSHOT_VERSION}")]
    VersionMismatch { found: u32 },
    #[error("payload ended early: expected {expected} bytes of field data")]
    TruncatedPayload { expected: usize },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum SchemeTag {
    Mbo = 0,
    Pde = 1,
    OnDiffusion = 2,
}

impl SchemeTag {
    pub fn from_byte(b: u8) -> Result<Self, SnapshotError> {
        match b {
            0 => Ok(SchemeTag::Mbo),
            1 => Ok(SchemeTag::Pde),
            2 => Ok(SchemeTag::OnDiffusion),
            other => Err(SnapshotError::InvalidHeader(format!("unknown scheme tag {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeTag::Mbo => "mbo",
            SchemeTag::Pde => "pde",
            SchemeTag::OnDiffusion => "ondiff",
        }
    }
}

/// A serialized field state. `epsilon` is NaN for the projection scheme,
/// which has no diffuse-interface parameter.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub epsilon: f64,
    pub scheme: SchemeTag,
    pub field: MatrixField,
}

impl Snapshot {
    pub fn header_matches(&self, other: &Snapshot) -> bool {
        self.field.grid() == other.field.grid()
            && self.field.matrix_dim() == other.field.matrix_dim()
            && self.scheme == other.scheme
    }
}

pub fn write_snapshot<W: Write>(snapshot: &Snapshot, writer: &mut W) -> Result<(), SnapshotError> {
    let field = &snapshot.field;
    writer.write_all(&SNAPSHOT_MAGIC)?;
    writer.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    writer.write_all(&(field.grid().points_per_side() as u32).to_le_bytes())?;
    writer.write_all(&(field.matrix_dim() as u32).to_le_bytes())?;
    writer.write_all(&snapshot.time.to_le_bytes())?;
    writer.write_all(&snapshot.epsilon.to_le_bytes())?;
    writer.write_all(&[snapshot.scheme as u8])?;
    let mut buf = Vec::with_capacity(8 * 8192);
    for chunk in field.data().chunks(8192) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        writer.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(reader: &mut R) -> Result<Snapshot, SnapshotError> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let mut u32buf = [0u8; 4];
    reader.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::VersionMismatch { found: version });
    }
    reader.read_exact(&mut u32buf)?;
    let side = u32::from_le_bytes(u32buf) as usize;
    reader.read_exact(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    reader.read_exact(&mut f64buf)?;
    let time = f64::from_le_bytes(f64buf);
    reader.read_exact(&mut f64buf)?;
    let epsilon = f64::from_le_bytes(f64buf);
    let mut tag = [0u8; 1];
    reader.read_exact(&mut tag)?;
    let scheme = SchemeTag::from_byte(tag[0])?;

    let grid = Grid::new(side)
        .map_err(|e| SnapshotError::InvalidHeader(e.to_string()))?;
    if n == 0 || n > 64 {
        return Err(SnapshotError::InvalidHeader(format!("matrix dimension {n} out of range")));
    }
    let count = grid.num_points() * n * n;
    let mut payload = vec![0u8; count * 8];
    reader
        .read_exact(&mut payload)
        .map_err(|_| SnapshotError::TruncatedPayload { expected: count * 8 })?;
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Snapshot { time, epsilon, scheme, field: MatrixField::from_raw(grid, n, data) })
}

pub fn write_snapshot_file(snapshot: &Snapshot, path: &Path) -> Result<(), SnapshotError> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_snapshot(snapshot, &mut writer)?;
    writer.flush()?;
    Ok(())
}

pub fn read_snapshot_file(path: &Path) -> Result<Snapshot, SnapshotError> {
    let mut reader = BufReader::new(File::open(path)?);
    read_snapshot(&mut reader)
}

/// One row of per-step diagnostics; optional columns stay empty in the CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsRecord {
    pub step: usize,
    pub time: f64,
    pub increment: Option<f64>,
    pub lyapunov: Option<f64>,
    pub energy_dirichlet: Option<f64>,
    pub energy_potential: Option<f64>,
    pub energy_total: Option<f64>,
    pub interface_count: Option<usize>,
    pub mean_radius: Option<f64>,
    pub index_m: Option<i64>,
    pub index_k: Option<i64>,
}

pub const METRICS_HEADER: &str = "step,time,increment,lyapunov,energy_dirichlet,energy_potential,energy_total,interface_count,mean_radius,index_m,index_k";

/// Shortest representation that round-trips an f64 exactly: 17 significant
/// digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], writer: &mut W) -> std::io::Result<()> {
    writeln!(writer, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            format_f64(r.time),
            format_opt(r.increment),
            format_opt(r.lyapunov),
            format_opt(r.energy_dirichlet),
            format_opt(r.energy_potential),
            format_opt(r.energy_total),
            r.interface_count.map(|c| c.to_string()).unwrap_or_default(),
            format_opt(r.mean_radius),
            r.index_m.map(|m| m.to_string()).unwrap_or_default(),
            r.index_k.map(|k| k.to_string()).unwrap_or_default(),
        )?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("raster export supports 2x2 fields only, got n = {0}")]
    UnsupportedN(usize),
    #[error("raster size must be positive")]
    EmptyRaster,
}

#[derive(Debug, Clone, Copy)]
pub struct RenderStyle {
    /// Output image is `raster_size x raster_size` pixels, exactly.
    pub raster_size: usize,
    /// Draw one direction glyph every this many grid cells; 0 disables
    /// glyphs.
    pub arrow_stride: usize,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle { raster_size: 512, arrow_stride: 16 }
    }
}

const COLOR_POSITIVE: [u8; 3] = [240, 220, 40]; // yellow: det +1
const COLOR_NEGATIVE: [u8; 3] = [60, 160, 70]; // green: det -1
const COLOR_GLYPH: [u8; 3] = [20, 20, 20];

/// Binary PPM (P6) raster: background colored by determinant sign, sparse
/// glyphs along the first-column direction.
pub fn render_ppm(field: &MatrixField, style: &RenderStyle) -> Result<Vec<u8>, RenderError> {
    if field.matrix_dim() != 2 {
        return Err(RenderError::UnsupportedN(field.matrix_dim()));
    }
    if style.raster_size == 0 {
        return Err(RenderError::EmptyRaster);
    }
    let size = style.raster_size;
    let side = field.grid().points_per_side();
    let mut pixels = vec![0u8; size * size * 3];
    for py in 0..size {
        // top raster row is the largest x2
        let j = side - 1 - (py * side) / size;
        for px in 0..size {
            let i = (px * side) / size;
            let det = linalg::determinant(field.at(i, j), 2);
            let color = if det >= 0.0 { COLOR_POSITIVE } else { COLOR_NEGATIVE };
            pixels[(py * size + px) * 3..(py * size + px) * 3 + 3].copy_from_slice(&color);
        }
    }
    if style.arrow_stride > 0 {
        let stride = style.arrow_stride;
        let scale = size as f64 / side as f64;
        let half = 0.42 * stride as f64 * scale;
        for j in (stride / 2..side).step_by(stride) {
            for i in (stride / 2..side).step_by(stride) {
                let m = field.at(i, j);
                let norm = m[0].hypot(m[2]);
                if norm < 1e-12 {
                    continue;
                }
                let (dx, dy) = (m[0] / norm, m[2] / norm);
                let cx = (i as f64 + 0.5) * scale;
                let cy = (side - 1 - j) as f64 * scale + 0.5 * scale;
                draw_segment(
                    &mut pixels,
                    size,
                    cx - half * dx,
                    cy + half * dy,
                    cx + half * dx,
                    cy - half * dy,
                );
            }
        }
    }
    let mut out = format!("P6\n{size} {size}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    Ok(out)
}

fn draw_segment(pixels: &mut [u8], size: usize, x0: f64, y0: f64, x1: f64, y1: f64) {
    let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = x0 + t * (x1 - x0);
        let y = y0 + t * (y1 - y0);
        if x < 0.0 || y < 0.0 {
            continue;
        }
        let (px, py) = (x as usize, y as usize);
        if px < size && py < size {
            pixels[(py * size + px) * 3..(py * size + px) * 3 + 3].copy_from_slice(&COLOR_GLYPH);
        }
    }
}

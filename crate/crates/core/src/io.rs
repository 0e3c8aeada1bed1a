//! CSV matrices, vectors and images, and PGM (P2/P5) images.
//!
//! PGM pixels map linearly to `[0, 1]` via `p / maxval`; on output values
//! are clamped to `[0, 1]` and written with `maxval = 255`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::imaging::{DualField, ImageGrid};
use crate::spaces::Vector;

fn parse_rows(text: &str, origin: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("{origin}:{}: {e}: {:?}", i + 1, f.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::Format(format!(
                    "{origin}:{}: expected {first} columns, found {}",
                    i + 1,
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format(format!("{origin}: no data")));
    }
    Ok(rows)
}

/// Header-free, row-major, comma-separated.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)?;
    let rows = parse_rows(&text, &path.display().to_string())?;
    let (m, n) = (rows.len(), rows[0].len());
    Ok(Array2::from_shape_vec((m, n), rows.concat()).expect("rows checked rectangular"))
}

pub fn format_matrix_csv(a: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// One value per line, with full round-trip precision.
pub fn format_vector_csv(v: &Vector) -> String {
    v.iter().fold(String::new(), |mut s, x| {
        let _ = writeln!(s, "{x:?}");
        s
    })
}

pub fn write_vector_csv(path: &Path, v: &Vector) -> Result<()> {
    Ok(fs::write(path, format_vector_csv(v))?)
}

pub fn read_vector_csv(path: &Path) -> Result<Vector> {
    let text = fs::read_to_string(path)?;
    let rows = parse_rows(&text, &path.display().to_string())?;
    Ok(Vector::from(rows.concat()))
}

pub fn read_image_csv(path: &Path) -> Result<ImageGrid> {
    let a = read_matrix_csv(path)?;
    let (h, w) = a.dim();
    ImageGrid::new(w, h, Vector::from(a.into_raw_vec_and_offset().0))
}

pub fn format_image_csv(img: &ImageGrid) -> String {
    let a =
        Array2::from_shape_vec((img.height(), img.width()), img.pixels().to_vec()).expect("shape");
    format_matrix_csv(&a)
}

pub fn write_image_csv(path: &Path, img: &ImageGrid) -> Result<()> {
    Ok(fs::write(path, format_image_csv(img))?)
}

/// Writes `<prefix>_h.csv` and `<prefix>_v.csv`.
pub fn write_dual_field_csv(dir: &Path, prefix: &str, field: &DualField) -> Result<()> {
    write_image_csv(&dir.join(format!("{prefix}_h.csv")), &field.horizontal())?;
    write_image_csv(&dir.join(format!("{prefix}_v.csv")), &field.vertical())
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("unexpected end of PGM data".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::Format("non-ASCII PGM header".into()))
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse()
            .map_err(|_| Error::Format(format!("bad PGM number {t:?}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut c = PgmCursor { bytes, pos: 0 };
    let magic = c.token()?.to_string();
    let (w, h, maxval) = (c.number()?, c.number()?, c.number()?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    let n = w * h;
    let scale = 1.0 / maxval as f64;
    let mut pixels = Vec::with_capacity(n);
    match magic.as_str() {
        "P2" => {
            for _ in 0..n {
                pixels.push(c.number()? as f64 * scale);
            }
        }
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let start = c.pos + 1;
            let bpp = if maxval < 256 { 1 } else { 2 };
            let raster = bytes
                .get(start..start + n * bpp)
                .ok_or_else(|| Error::Format("truncated PGM raster".into()))?;
            for chunk in raster.chunks(bpp) {
                let v = if bpp == 1 {
                    chunk[0] as usize
                } else {
                    (chunk[0] as usize) << 8 | chunk[1] as usize
                };
                pixels.push(v as f64 * scale);
            }
        }
        other => return Err(Error::Format(format!("unsupported PGM magic {other:?}"))),
    }
    if pixels.iter().any(|p| *p > 1.0) {
        return Err(Error::Format("PGM sample exceeds maxval".into()));
    }
    ImageGrid::new(w, h, Vector::from(pixels))
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary P5 with `maxval = 255`.
pub fn encode_pgm(img: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|v| quantize(*v)));
    out
}

/// ASCII P2 with `maxval = 255`.
pub fn encode_pgm_ascii(img: &ImageGrid) -> String {
    let mut out = format!("P2\n{} {}\n255\n", img.width(), img.height());
    for row in img
        .pixels()
        .as_slice()
        .expect("contiguous")
        .chunks(img.width())
    {
        let line: Vec<String> = row.iter().map(|v| quantize(*v).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<ImageGrid> {
    decode_pgm(&fs::read(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_pgm(path: &Path, img: &ImageGrid) -> Result<()> {
    Ok(fs::write(path, encode_pgm(img))?)
}

/// Reads `.pgm` files as PGM and anything else as a CSV grid.
pub fn read_image(path: &Path) -> Result<ImageGrid> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => read_pgm(path),
        _ => read_image_csv(path),
    }
}

//! 16-bit PGM for viewing, PFM for values.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::array::{require_finite, Image, Spectrum, VectorField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageFormat {
    Pgm16,
    Pfm,
}

/// Linear scaling stored next to a PGM as `<file>.json`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgmScaling {
    pub min: f64,
    pub max: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `image` and returns every file created (a PGM also gets its sidecar).
pub fn write_image(path: &Path, image: &Image, format: ImageFormat) -> Result<Vec<PathBuf>> {
    match format {
        ImageFormat::Pgm16 => {
            let sidecar = write_pgm16(path, image)?;
            Ok(vec![path.to_path_buf(), sidecar])
        }
        ImageFormat::Pfm => {
            write_pfm_image(path, image)?;
            Ok(vec![path.to_path_buf()])
        }
    }
}

/// Binary `P5` graymap with maxval 65535, linearly mapping `[min, max]` onto
/// `[0, 65535]` (all zeros for a constant image). Returns the sidecar path.
pub fn write_pgm16(path: &Path, image: &Image) -> Result<PathBuf> {
    require_finite(image.iter(), "image")?;
    let (h, w) = image.dim();
    let min = image.iter().copied().fold(f64::INFINITY, f64::min);
    let max = image.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (min, max) = if image.is_empty() { (0.0, 0.0) } else { (min, max) };
    let span = max - min;
    let mut bytes = format!("P5\n{w} {h}\n65535\n").into_bytes();
    bytes.reserve(2 * w * h);
    for &v in image.iter() {
        let level = if span > 0.0 {
            ((v - min) / span * 65535.0).round() as u16
        } else {
            0
        };
        bytes.extend_from_slice(&level.to_be_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(&PgmScaling { min, max }).expect("plain struct");
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}

fn header_tokens<R: BufRead>(reader: &mut R, count: usize, path: &Path) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut line = String::new();
    while tokens.len() < count {
        line.clear();
        if reader.read_line(&mut line).map_err(|e| Error::io(path, e))? == 0 {
            return Err(Error::format(path, "truncated header"));
        }
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(str::to_owned));
    }
    if tokens.len() != count {
        return Err(Error::format(path, "unexpected tokens in header"));
    }
    Ok(tokens)
}

fn parse<T: std::str::FromStr>(token: &str, path: &Path) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::format(path, format!("bad header value {token:?}")))
}

/// Reads an 8- or 16-bit binary PGM. With a sidecar the original value range
/// is restored; otherwise levels are divided by maxval.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let tokens = header_tokens(&mut reader, 4, path)?;
    if tokens[0] != "P5" {
        return Err(Error::format(path, format!("expected P5, found {}", tokens[0])));
    }
    let w: usize = parse(&tokens[1], path)?;
    let h: usize = parse(&tokens[2], path)?;
    let maxval: u32 = parse(&tokens[3], path)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(path, format!("maxval {maxval} out of range")));
    }
    let wide = maxval > 255;
    let mut data = vec![0u8; w * h * if wide { 2 } else { 1 }];
    reader.read_exact(&mut data).map_err(|e| Error::io(path, e))?;
    let levels: Vec<f64> = if wide {
        data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
    } else {
        data.iter().map(|&b| b as f64).collect()
    };
    let sidecar = sidecar_path(path);
    let scaling = if sidecar.exists() {
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        Some(
            serde_json::from_str::<PgmScaling>(&text)
                .map_err(|e| Error::format(&sidecar, e.to_string()))?,
        )
    } else {
        None
    };
    let m = maxval as f64;
    let values = levels.into_iter().map(|l| match scaling {
        Some(s) => s.min + (s.max - s.min) * l / m,
        None => l / m,
    });
    Ok(Array2::from_shape_vec((h, w), values.collect()).expect("sized from header"))
}

/// Pixel data of a PFM file, top row first.
#[derive(Clone, Debug, PartialEq)]
pub enum Pfm {
    Gray(Array2<f32>),
    Color(Array3<f32>),
}

/// Portable floatmap: `Pf` (one channel) or `PF` (three), little-endian
/// (scale `-1.0`), rows stored bottom to top.
pub fn write_pfm(path: &Path, data: &Pfm) -> Result<()> {
    let (h, w, c) = match data {
        Pfm::Gray(a) => (a.nrows(), a.ncols(), 1),
        Pfm::Color(a) => {
            let (h, w, c) = a.dim();
            if c != 3 {
                return Err(Error::Input(format!("colour PFM needs 3 channels, got {c}")));
            }
            (h, w, 3)
        }
    };
    let tag = if c == 1 { "Pf" } else { "PF" };
    let mut bytes = format!("{tag}\n{w} {h}\n-1.0\n").into_bytes();
    bytes.reserve(4 * w * h * c);
    for i in (0..h).rev() {
        for j in 0..w {
            match data {
                Pfm::Gray(a) => bytes.extend_from_slice(&a[[i, j]].to_le_bytes()),
                Pfm::Color(a) => {
                    for k in 0..3 {
                        bytes.extend_from_slice(&a[[i, j, k]].to_le_bytes());
                    }
                }
            }
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<Pfm> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let tokens = header_tokens(&mut reader, 4, path)?;
    let channels = match tokens[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(Error::format(path, format!("expected Pf or PF, found {other}"))),
    };
    let w: usize = parse(&tokens[1], path)?;
    let h: usize = parse(&tokens[2], path)?;
    let scale: f64 = parse(&tokens[3], path)?;
    if scale == 0.0 {
        return Err(Error::format(path, "zero scale"));
    }
    let little = scale < 0.0;
    let mut raw = vec![0u8; 4 * w * h * channels];
    reader.read_exact(&mut raw).map_err(|e| Error::io(path, e))?;
    let floats: Vec<f32> = raw
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let row = w * channels;
    Ok(if channels == 1 {
        Pfm::Gray(Array2::from_shape_fn((h, w), |(i, j)| floats[(h - 1 - i) * row + j]))
    } else {
        Pfm::Color(Array3::from_shape_fn((h, w, 3), |(i, j, k)| {
            floats[(h - 1 - i) * row + 3 * j + k]
        }))
    })
}

pub fn write_pfm_image(path: &Path, image: &Image) -> Result<()> {
    require_finite(image.iter(), "image")?;
    write_pfm(path, &Pfm::Gray(image.mapv(|v| v as f32)))
}

/// Vector field as a colour PFM: channels `(vertical, horizontal, 0)`.
pub fn write_pfm_field(path: &Path, field: &VectorField) -> Result<()> {
    require_finite(field.iter(), "field")?;
    let (h, w, _) = field.dim();
    let data = Array3::from_shape_fn((h, w, 3), |(i, j, k)| if k < 2 { field[[i, j, k]] as f32 } else { 0.0 });
    write_pfm(path, &Pfm::Color(data))
}

/// Complex grid as a colour PFM: channels `(re, im, 0)`.
pub fn write_pfm_spectrum(path: &Path, spectrum: &Spectrum) -> Result<()> {
    if spectrum.iter().any(|c| !c.is_finite()) {
        return Err(Error::Input("spectrum contains non-finite values".into()));
    }
    let (h, w) = spectrum.dim();
    let data = Array3::from_shape_fn((h, w, 3), |(i, j, k)| match k {
        0 => spectrum[[i, j]].re as f32,
        1 => spectrum[[i, j]].im as f32,
        _ => 0.0,
    });
    write_pfm(path, &Pfm::Color(data))
}

pub fn read_pfm_image(path: &Path) -> Result<Image> {
    match read_pfm(path)? {
        Pfm::Gray(a) => Ok(a.mapv(|v| v as f64)),
        Pfm::Color(_) => Err(Error::format(path, "expected a single-channel (Pf) image")),
    }
}

pub fn read_pfm_field(path: &Path) -> Result<VectorField> {
    match read_pfm(path)? {
        Pfm::Color(a) => {
            let (h, w, _) = a.dim();
            Ok(Array3::from_shape_fn((h, w, 2), |(i, j, k)| a[[i, j, k]] as f64))
        }
        Pfm::Gray(_) => Err(Error::format(path, "expected a three-channel (PF) field")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn constant_zero_pgm() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("z.pgm");
        write_pgm16(&p, &Image::zeros((3, 5))).unwrap();
        let bytes = fs::read(&p).unwrap();
        let header = b"P5\n5 3\n65535\n";
        assert_eq!(bytes.len(), header.len() + 30);
        assert!(bytes[header.len()..].iter().all(|&b| b == 0));
        let s: PgmScaling = serde_json::from_str(&fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!((s.min, s.max), (0.0, 0.0));
    }

    #[test]
    fn pgm_round_trip_within_quantisation() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("r.pgm");
        let img = Array2::from_shape_fn((7, 4), |(i, j)| -1.0 + 0.3 * i as f64 + 0.01 * j as f64);
        write_pgm16(&p, &img).unwrap();
        let back = read_pgm(&p).unwrap();
        let span = 1.8 + 0.03;
        for (a, b) in img.iter().zip(back.iter()) {
            assert!((a - b).abs() <= span / 65535.0);
        }
        // extremes are exact
        assert_eq!(back[[0, 0]], -1.0);
    }

    #[test]
    fn pfm_round_trip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let gray = Array2::from_shape_fn((3, 4), |(i, j)| (i as f32 - 0.1) * (j as f32 + 0.7));
        let color = Array3::from_shape_fn((2, 5, 3), |(i, j, k)| (i * 100 + j * 10 + k) as f32 / 7.0);
        for data in [Pfm::Gray(gray), Pfm::Color(color)] {
            let p = dir.path().join("x.pfm");
            write_pfm(&p, &data).unwrap();
            assert_eq!(read_pfm(&p).unwrap(), data);
        }
    }

    #[test]
    fn pfm_rows_are_stored_bottom_up() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("o.pfm");
        write_pfm(&p, &Pfm::Gray(ndarray::array![[1.0f32], [2.0]])).unwrap();
        let bytes = fs::read(&p).unwrap();
        let n = bytes.len();
        assert_eq!(&bytes[n - 8..n - 4], &2.0f32.to_le_bytes());
        assert!(bytes.starts_with(b"Pf\n1 2\n-1.0\n"));
    }

    #[test]
    fn field_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("q.pfm");
        let q = Array3::from_shape_fn((3, 3, 2), |(i, j, k)| (i + 2 * j) as f64 * if k == 0 { 0.5 } else { -0.25 });
        write_pfm_field(&p, &q).unwrap();
        assert_eq!(read_pfm_field(&p).unwrap(), q);
        assert!(read_pfm_image(&p).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let dir = tempdir().unwrap();
        let img = ndarray::array![[f64::NAN]];
        assert!(write_pgm16(&dir.path().join("n.pgm"), &img).is_err());
    }
}

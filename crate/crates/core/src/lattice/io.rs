//! Frame and centroid files: 16-bit binary graymap plus sidecar metadata.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::fitting::PsfFit;
use super::imaging::AtomImage;
use crate::error::{Error, Result};

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    PathBuf::from(os)
}

/// Write a frame as a binary graymap (`P5`, maxval 65535, big-endian) with a
/// sidecar `<path>.meta` holding the pixel scale and exposure metadata.
/// Counts are rounded and clamped to the 16-bit range.
pub fn write_image(path: &Path, image: &AtomImage) -> Result<()> {
    image.validate()?;
    let (rows, cols) = image.shape();
    let mut buf = Vec::with_capacity(32 + 2 * rows * cols);
    write!(buf, "P5\n{cols} {rows}\n65535\n")?;
    for v in image.counts.iter() {
        let q = v.round().clamp(0.0, 65535.0) as u16;
        buf.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, buf)?;

    let meta = format!(
        "pixel_scale_um_per_px = {}\nbackground_counts = {}\ncounts_per_atom = {}\n",
        image.pixel_scale, image.background, image.amplitude
    );
    fs::write(sidecar_path(path), meta)?;
    Ok(())
}

/// Read a frame written by [`write_image`], including its sidecar metadata.
pub fn read_image(path: &Path) -> Result<AtomImage> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let magic = next_token(&bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::Format(format!(
            "expected a binary graymap (magic P5), found {magic:?}"
        )));
    }
    let cols: usize = parse_header_number(&bytes, &mut pos, "width")?;
    let rows: usize = parse_header_number(&bytes, &mut pos, "height")?;
    let maxval: usize = parse_header_number(&bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} out of range")));
    }
    // A single whitespace byte separates the header from the raster.
    pos += 1;
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let expected = rows * cols * bytes_per;
    let raster = bytes
        .get(pos..pos + expected)
        .ok_or_else(|| Error::Format(format!(
            "raster truncated: need {expected} bytes, found {}",
            bytes.len().saturating_sub(pos)
        )))?;
    let counts = Array2::from_shape_fn((rows, cols), |(r, c)| {
        let i = (r * cols + c) * bytes_per;
        if bytes_per == 2 {
            u16::from_be_bytes([raster[i], raster[i + 1]]) as f64
        } else {
            raster[i] as f64
        }
    });

    let (pixel_scale, background, amplitude) = read_sidecar(&sidecar_path(path))?;
    let image = AtomImage {
        counts,
        pixel_scale,
        background,
        amplitude,
    };
    image.validate()?;
    Ok(image)
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
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
        return Err(Error::Format("graymap header ended early".into()));
    }
    String::from_utf8(bytes[start..*pos].to_vec())
        .map_err(|_| Error::Format("graymap header is not ASCII".into()))
}

fn parse_header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let token = next_token(bytes, pos)?;
    token
        .parse()
        .map_err(|_| Error::Format(format!("bad {what} in graymap header: {token:?}")))
}

fn read_sidecar(path: &Path) -> Result<(f64, f64, f64)> {
    let text = fs::read_to_string(path)?;
    let mut pixel_scale = None;
    let mut background = None;
    let mut amplitude = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("sidecar line {}: expected key = value", lineno + 1))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::Format(format!("sidecar line {}: bad number {:?}", lineno + 1, value.trim()))
        })?;
        let slot = match key.trim() {
            "pixel_scale_um_per_px" => &mut pixel_scale,
            "background_counts" => &mut background,
            "counts_per_atom" => &mut amplitude,
            other => {
                return Err(Error::Format(format!(
                    "sidecar line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        };
        if slot.replace(value).is_some() {
            return Err(Error::Format(format!(
                "sidecar line {}: duplicate key {:?}",
                lineno + 1,
                key.trim()
            )));
        }
    }
    match (pixel_scale, background, amplitude) {
        (Some(p), Some(b), Some(a)) => Ok((p, b, a)),
        _ => Err(Error::Format(
            "sidecar must set pixel_scale_um_per_px, background_counts and counts_per_atom".into(),
        )),
    }
}

/// Write fitted centroids as CSV, one row per atom, frames numbered by their
/// position in the slice.
pub fn write_centroids(path: &Path, fits: &[PsfFit]) -> Result<()> {
    let mut out = String::new();
    out.push_str("frame,atom,x_px,y_px,fwhm_x_px,fwhm_y_px,peak_counts,background_counts\n");
    for (frame, fit) in fits.iter().enumerate() {
        for (i, atom) in fit.atoms.iter().enumerate() {
            out.push_str(&format!(
                "{frame},{i},{:.6},{:.6},{:.6},{:.6},{:.3},{:.3}\n",
                atom.x, atom.y, atom.fwhm_x, atom.fwhm_y, atom.peak, fit.background
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

//! Binary 16-bit PGM (P5) encoding of depth and amplitude maps.
//!
//! Depth maps use 1 level = 1 mm (so the representable range is 0.001 to
//! 65.535 m); amplitude maps use 1 level = 0.001 dimensionless units. Level
//! 0 is reserved for invalid pixels and the scale is recorded in a header
//! comment. Samples are big-endian per the netpbm specification.

use crate::error::{Error, Result};
use crate::scene_sim::DepthMap;

/// Meters per level in depth PGMs.
pub const DEPTH_METERS_PER_LEVEL: f64 = 0.001;

/// Dimensionless units per level in amplitude PGMs.
pub const AMPLITUDE_UNITS_PER_LEVEL: f64 = 0.001;

const MAXVAL: u32 = 65535;

/// A decoded 16-bit PGM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm16 {
    pub width: usize,
    pub height: usize,
    pub levels: Vec<u16>,
}

/// Encode raw 16-bit levels as a binary PGM with the given header comments.
pub fn encode_pgm16(width: usize, height: usize, levels: &[u16], comments: &[&str]) -> Vec<u8> {
    assert_eq!(levels.len(), width * height, "level buffer size mismatch");
    let mut out = Vec::with_capacity(32 + 2 * levels.len());
    out.extend_from_slice(b"P5\n");
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    out.extend_from_slice(format!("{width} {height}\n{MAXVAL}\n").as_bytes());
    for &v in levels {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

/// Decode a binary 16-bit PGM. Parse failures name the byte offset.
pub fn decode_pgm16(bytes: &[u8]) -> Result<Pgm16> {
    let err = |pos: usize, message: &str| Error::Parse {
        offset: pos,
        message: message.into(),
    };

    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(err(0, "expected binary PGM magic 'P5'"));
    }
    let mut pos = 2usize;

    let read_token = |pos: &mut usize, what: &str| -> Result<u32> {
        // Skip whitespace and '#' comments.
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
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if *pos == start {
            return Err(err(start, &format!("expected {what}")));
        }
        std::str::from_utf8(&bytes[start..*pos])
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| err(start, &format!("invalid {what}")))
    };

    let width = read_token(&mut pos, "width")? as usize;
    let height = read_token(&mut pos, "height")? as usize;
    let maxval = read_token(&mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(err(2, "image dimensions must be at least 1x1"));
    }
    if maxval <= 255 || maxval > MAXVAL {
        return Err(err(
            pos,
            &format!("expected 16-bit maxval (256..=65535), got {maxval}"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(err(pos, "expected whitespace before raster"));
    }
    pos += 1;

    let n = width * height;
    let need = 2 * n;
    if bytes.len() - pos < need {
        return Err(err(
            bytes.len(),
            &format!("raster truncated: need {need} bytes, have {}", bytes.len() - pos),
        ));
    }
    let mut levels = Vec::with_capacity(n);
    for i in 0..n {
        let b = &bytes[pos + 2 * i..pos + 2 * i + 2];
        levels.push(u16::from_be_bytes([b[0], b[1]]));
    }
    Ok(Pgm16 {
        width,
        height,
        levels,
    })
}

fn quantize(
    values: &[f64],
    valid: &[bool],
    units_per_level: f64,
    what: &str,
) -> Result<Vec<u16>> {
    values
        .iter()
        .zip(valid)
        .enumerate()
        .map(|(i, (&v, &ok))| {
            if !ok {
                return Ok(0u16);
            }
            let level = (v / units_per_level).round();
            if level > MAXVAL as f64 {
                return Err(Error::invalid(format!(
                    "{what} {v} at pixel {i} exceeds the encodable maximum {}",
                    MAXVAL as f64 * units_per_level
                )));
            }
            if level < 1.0 {
                return Err(Error::invalid(format!(
                    "{what} {v} at pixel {i} rounds to the invalid-pixel sentinel 0"
                )));
            }
            Ok(level as u16)
        })
        .collect()
}

/// Encode the depth channel of a map (1 level = 1 mm, 0 = invalid).
pub fn encode_depth_pgm(map: &DepthMap) -> Result<Vec<u8>> {
    let levels = quantize(map.depth(), map.valid(), DEPTH_METERS_PER_LEVEL, "depth")?;
    Ok(encode_pgm16(
        map.width(),
        map.height(),
        &levels,
        &["depth map: 1 level = 1 mm, level 0 = invalid pixel"],
    ))
}

/// Encode the amplitude channel of a map (1 level = 0.001, 0 = invalid).
pub fn encode_amplitude_pgm(map: &DepthMap) -> Result<Vec<u8>> {
    let levels = quantize(
        map.amplitude(),
        map.valid(),
        AMPLITUDE_UNITS_PER_LEVEL,
        "amplitude",
    )?;
    Ok(encode_pgm16(
        map.width(),
        map.height(),
        &levels,
        &["amplitude map: 1 level = 0.001, level 0 = invalid pixel"],
    ))
}

/// Decode a depth PGM back into a map. Level 0 pixels come back invalid;
/// the amplitude channel is filled with 1.0 for valid pixels.
pub fn decode_depth_pgm(bytes: &[u8]) -> Result<DepthMap> {
    let pgm = decode_pgm16(bytes)?;
    let depth: Vec<f64> = pgm
        .levels
        .iter()
        .map(|&l| {
            if l == 0 {
                f64::NAN
            } else {
                l as f64 * DEPTH_METERS_PER_LEVEL
            }
        })
        .collect();
    let valid: Vec<bool> = pgm.levels.iter().map(|&l| l != 0).collect();
    let amplitude: Vec<f64> = valid.iter().map(|&ok| if ok { 1.0 } else { f64::NAN }).collect();
    DepthMap::from_channels(pgm.width, pgm.height, depth, amplitude, valid)
}

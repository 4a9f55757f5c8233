//! Depth-frame and label-mask I/O.
//!
//! Depth frames are 16-bit binary PGM (P5, maxval 65535, big-endian samples
//! per the PGM spec) or headerless `.raw` little-endian u16 in row-major
//! order with dimensions taken from the intrinsics. Label masks are 8-bit
//! PGM (P5, maxval 255).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::camera::{DepthFrame, LabelMask};
use crate::error::{Error, Result};
use crate::io::intrinsics::read_intrinsics;

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Header tokens of a PGM file: width, height, maxval.
fn read_pgm_header<R: Read>(reader: &mut R, path: &Path) -> Result<(usize, usize, u32)> {
    let mut magic = [0u8; 2];
    reader
        .read_exact(&mut magic)
        .map_err(|_| parse_err(path, "file too short for PGM magic"))?;
    if &magic != b"P5" {
        return Err(parse_err(path, "not a binary PGM (missing P5 magic)"));
    }

    // Three whitespace-separated integers follow, with '#' comments allowed.
    let mut fields = [0u32; 3];
    let mut byte = [0u8; 1];
    for field in fields.iter_mut() {
        let mut value: Option<u32> = None;
        loop {
            if reader.read_exact(&mut byte).is_err() {
                return Err(parse_err(path, "truncated PGM header"));
            }
            match byte[0] {
                b'#' => {
                    // comment runs to end of line
                    while reader.read_exact(&mut byte).is_ok() && byte[0] != b'\n' {}
                }
                b'0'..=b'9' => {
                    let digit = (byte[0] - b'0') as u32;
                    value = Some(value.unwrap_or(0) * 10 + digit);
                }
                b' ' | b'\t' | b'\r' | b'\n' => {
                    if value.is_some() {
                        break;
                    }
                }
                other => {
                    return Err(parse_err(
                        path,
                        format!("unexpected byte 0x{other:02x} in PGM header"),
                    ))
                }
            }
        }
        *field = value.unwrap();
    }
    Ok((fields[0] as usize, fields[1] as usize, fields[2]))
}

/// Reads a depth frame (`.pgm` or `.raw`) together with its intrinsics JSON.
pub fn read_depth(
    depth_path: impl AsRef<Path>,
    intrinsics_path: impl AsRef<Path>,
) -> Result<DepthFrame> {
    let depth_path = depth_path.as_ref();
    let intr = read_intrinsics(intrinsics_path)?;

    let is_raw = depth_path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("raw"))
        .unwrap_or(false);

    let mut reader = BufReader::new(File::open(depth_path)?);
    let (width, height, data) = if is_raw {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let expected = intr.width * intr.height * 2;
        if bytes.len() != expected {
            return Err(parse_err(
                depth_path,
                format!("raw depth has {} bytes, expected {expected}", bytes.len()),
            ));
        }
        let data = bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        (intr.width, intr.height, data)
    } else {
        let (width, height, maxval) = read_pgm_header(&mut reader, depth_path)?;
        if maxval != 65535 {
            return Err(parse_err(
                depth_path,
                format!("depth PGM must have maxval 65535, got {maxval}"),
            ));
        }
        let mut bytes = vec![0u8; width * height * 2];
        reader
            .read_exact(&mut bytes)
            .map_err(|_| parse_err(depth_path, "truncated PGM payload"))?;
        // PGM stores multi-byte samples most significant byte first
        let data = bytes
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        (width, height, data)
    };

    if width != intr.width || height != intr.height {
        return Err(Error::DimensionMismatch(format!(
            "depth file is {width}x{height} but intrinsics declare {}x{}",
            intr.width, intr.height
        )));
    }
    DepthFrame::new(intr, data)
}

/// Writes a depth frame as 16-bit binary PGM.
pub fn write_depth(frame: &DepthFrame, path: impl AsRef<Path>) -> Result<()> {
    frame.validate()?;
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    write!(w, "P5\n{} {}\n65535\n", frame.width, frame.height)?;
    for &sample in &frame.data {
        w.write_all(&sample.to_be_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a depth frame as headerless little-endian u16.
pub fn write_depth_raw(frame: &DepthFrame, path: impl AsRef<Path>) -> Result<()> {
    frame.validate()?;
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    for &sample in &frame.data {
        w.write_all(&sample.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an 8-bit PGM label mask.
pub fn read_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let (width, height, maxval) = read_pgm_header(&mut reader, path)?;
    if maxval != 255 {
        return Err(parse_err(
            path,
            format!("label mask PGM must have maxval 255, got {maxval}"),
        ));
    }
    let mut labels = vec![0u8; width * height];
    reader
        .read_exact(&mut labels)
        .map_err(|_| parse_err(path, "truncated PGM payload"))?;
    LabelMask::new(width, height, labels)
}

/// Writes an 8-bit PGM label mask.
pub fn write_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    mask.validate()?;
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    write!(w, "P5\n{} {}\n255\n", mask.width, mask.height)?;
    w.write_all(&mask.labels)?;
    w.flush()?;
    Ok(())
}

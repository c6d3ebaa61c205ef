//! File formats: binary 8-bit PGM images and the "SLPF" little-endian
//! float-grid container used for slope images and heightmaps.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Writes a binary (P5) 8-bit PGM.
pub fn write_pgm<W: Write>(w: &mut W, width: u32, height: u32, data: &[u8]) -> Result<()> {
    if data.len() != (width as usize) * (height as usize) {
        return Err(Error::InvalidParameter("pgm data length mismatch".into()));
    }
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(data)?;
    Ok(())
}

/// Reads a binary (P5) 8-bit PGM. Comments are not supported.
pub fn read_pgm<R: Read>(r: &mut R) -> Result<(u32, u32, Vec<u8>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Malformed("truncated pgm header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token(&bytes)? != "P5" {
        return Err(Error::Malformed("not a P5 pgm".into()));
    }
    let width: u32 = token(&bytes)?.parse().map_err(|_| Error::Malformed("bad pgm width".into()))?;
    let height: u32 = token(&bytes)?.parse().map_err(|_| Error::Malformed("bad pgm height".into()))?;
    let maxval: u32 = token(&bytes)?.parse().map_err(|_| Error::Malformed("bad pgm maxval".into()))?;
    if maxval != 255 {
        return Err(Error::Malformed("only 8-bit pgm supported".into()));
    }
    pos += 1; // single whitespace after maxval
    let n = (width as usize) * (height as usize);
    if bytes.len() < pos + n {
        return Err(Error::Malformed("truncated pgm payload".into()));
    }
    Ok((width, height, bytes[pos..pos + n].to_vec()))
}

const SLPF_MAGIC: &[u8; 4] = b"SLPF";

/// Writes a float grid: 16-byte header (magic "SLPF", u32 width, u32 height,
/// u32 reserved) followed by row-major little-endian f32 values.
pub fn write_float_grid<W: Write>(w: &mut W, width: u32, height: u32, data: &[f32]) -> Result<()> {
    if data.len() != (width as usize) * (height as usize) {
        return Err(Error::InvalidParameter("float grid length mismatch".into()));
    }
    w.write_all(SLPF_MAGIC)?;
    w.write_all(&width.to_le_bytes())?;
    w.write_all(&height.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_float_grid<R: Read>(r: &mut R) -> Result<(u32, u32, Vec<f32>)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|_| Error::Malformed("truncated SLPF header".into()))?;
    if &header[0..4] != SLPF_MAGIC {
        return Err(Error::Malformed("bad SLPF magic".into()));
    }
    let width = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let n = (width as usize) * (height as usize);
    let mut payload = vec![0u8; n * 4];
    r.read_exact(&mut payload).map_err(|_| Error::Malformed("truncated SLPF payload".into()))?;
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((width, height, data))
}

//! Minimal binary PGM (P5, maxval 255) reader and writer.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Decoded 8-bit grayscale raster, row-major, row 0 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
/// Consumes exactly one whitespace byte after the token.
fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        match bytes.get(*pos) {
            None => return Err(format_err("truncated PGM header")),
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while let Some(&b) = bytes.get(*pos) {
        if b.is_ascii_whitespace() {
            break;
        }
        *pos += 1;
    }
    let token = std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| format_err("non-ASCII PGM header"))?
        .to_owned();
    match bytes.get(*pos) {
        Some(b) if b.is_ascii_whitespace() => *pos += 1,
        _ => return Err(format_err("truncated PGM header")),
    }
    Ok(token)
}

fn parse_dim(token: &str, what: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| format_err(format!("bad PGM {what}: {token:?}")))
}

pub fn read_p5<R: Read>(mut source: R) -> Result<Raster> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        return Err(format_err("empty PGM stream"));
    }
    let mut pos = 0;
    let magic = next_token(&bytes, &mut pos)?;
    if magic != "P5" {
        return Err(format_err(format!("expected P5 magic, found {magic:?}")));
    }
    let width = parse_dim(&next_token(&bytes, &mut pos)?, "width")?;
    let height = parse_dim(&next_token(&bytes, &mut pos)?, "height")?;
    let maxval = parse_dim(&next_token(&bytes, &mut pos)?, "maxval")?;
    if maxval != 255 {
        return Err(format_err(format!("unsupported PGM maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(format_err("PGM with zero width or height"));
    }
    let pixels = bytes[pos..].to_vec();
    if pixels.len() != width * height {
        return Err(Error::Dimension(format!(
            "PGM declares {width}x{height} = {} pixels but carries {}",
            width * height,
            pixels.len()
        )));
    }
    Ok(Raster {
        width,
        height,
        pixels,
    })
}

pub fn write_p5<W: Write>(mut sink: W, raster: &Raster) -> Result<()> {
    write!(sink, "P5\n{} {}\n255\n", raster.width, raster.height)?;
    sink.write_all(&raster.pixels)?;
    Ok(())
}

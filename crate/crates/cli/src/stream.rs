//! Stream files.
//!
//! Text: one decimal item id per line. Binary: the 8-byte magic `DPHHSTR1`
//! followed by little-endian `u32` ids. Ids are 1-based.

use std::io::{Read, Write};

use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"DPHHSTR1";

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read stream: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected an item id, found {content:?}")]
    Malformed { line: usize, content: String },
    #[error("position {position}: item {item} outside 1..={universe}")]
    OutOfRange { position: usize, item: u64, universe: u32 },
    #[error("missing {:?} header", std::str::from_utf8(MAGIC).unwrap())]
    BadMagic,
    #[error("binary payload of {0} bytes is not a whole number of u32 ids")]
    Truncated(usize),
    #[error("stream is empty")]
    Empty,
    #[error("stream has {found} updates but the length bound is {bound}")]
    TooLong { found: usize, bound: u64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    /// Binary if the data starts with the magic header, text otherwise.
    #[default]
    Auto,
    Text,
    Binary,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Format::Auto),
            "text" => Ok(Format::Text),
            "binary" => Ok(Format::Binary),
            _ => Err(format!("unknown format {s:?} (auto, text, binary)")),
        }
    }
}

/// Reads a whole stream and checks every id against `1..=universe`.
pub fn read_stream<R: Read>(mut source: R, format: Format, universe: u32) -> Result<Vec<u32>, InputError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    parse_stream(&bytes, format, universe)
}

pub fn parse_stream(bytes: &[u8], format: Format, universe: u32) -> Result<Vec<u32>, InputError> {
    let binary = match format {
        Format::Binary => true,
        Format::Text => false,
        Format::Auto => bytes.starts_with(MAGIC),
    };
    if binary {
        parse_binary(bytes, universe)
    } else {
        parse_text(bytes, universe)
    }
}

fn check(position: usize, item: u64, universe: u32) -> Result<u32, InputError> {
    if item == 0 || item > universe as u64 {
        Err(InputError::OutOfRange { position, item, universe })
    } else {
        Ok(item as u32)
    }
}

fn parse_binary(bytes: &[u8], universe: u32) -> Result<Vec<u32>, InputError> {
    let body = bytes.strip_prefix(MAGIC.as_slice()).ok_or(InputError::BadMagic)?;
    if body.len() % 4 != 0 {
        return Err(InputError::Truncated(body.len()));
    }
    body.chunks_exact(4)
        .enumerate()
        .map(|(i, c)| {
            let v = u32::from_le_bytes(c.try_into().expect("chunk of 4"));
            check(i + 1, v as u64, universe)
        })
        .collect()
}

fn parse_text(bytes: &[u8], universe: u32) -> Result<Vec<u32>, InputError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        InputError::Malformed { line, content: "<invalid utf-8>".into() }
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        let v: u64 =
            s.parse().map_err(|_| InputError::Malformed { line: i + 1, content: line.to_string() })?;
        out.push(check(i + 1, v, universe)?);
    }
    Ok(out)
}

pub fn write_text<W: Write>(mut w: W, stream: &[u32]) -> std::io::Result<()> {
    let mut buf = String::with_capacity(stream.len() * 4);
    for &x in stream {
        buf.push_str(&x.to_string());
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())
}

pub fn write_binary<W: Write>(mut w: W, stream: &[u32]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(8 + 4 * stream.len());
    buf.extend_from_slice(MAGIC);
    for &x in stream {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)
}

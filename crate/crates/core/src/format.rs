//! Shared pieces of the text-header binary file formats.

use crate::{Error, Result};

/// Newline-terminated ASCII header reader shared by the binary formats.
pub(crate) struct LineReader<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> LineReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn expect_magic(&mut self, magic: &[u8]) -> Result<()> {
        if !self.bytes.starts_with(magic) {
            return Err(Error::format(0, "bad magic"));
        }
        self.pos = magic.len();
        Ok(())
    }

    /// Next header line (without the newline) and its starting offset.
    pub(crate) fn line(&mut self) -> Result<(usize, &'a str)> {
        let start = self.pos;
        let rest = &self.bytes[start..];
        let len = rest
            .iter()
            .take(4096)
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format(start, "truncated or oversized header line"))?;
        let line = std::str::from_utf8(&rest[..len]).map_err(|_| Error::format(start, "header is not UTF-8"))?;
        self.pos = start + len + 1;
        Ok((start, line))
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.pos, format!("truncated: need {n} more bytes")))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub(crate) fn parse_keyed<T: std::str::FromStr>(off: usize, line: &str, key: &str) -> Result<T> {
    let value = line
        .strip_prefix(key)
        .and_then(|v| v.strip_prefix(' '))
        .ok_or_else(|| Error::format(off, format!("expected `{key} <value>`")))?;
    parse_num(off, value)
}

pub(crate) fn parse_num<T: std::str::FromStr>(off: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format(off, format!("cannot parse `{s}`")))
}

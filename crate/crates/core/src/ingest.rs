//! Token ingestion.
//!
//! Text input is newline-delimited UTF-8; a trailing `\r` is stripped and
//! empty lines are skipped. Each line is mapped to a 64-bit token by 64-bit
//! FNV-1a over its bytes. Binary input is a sequence of 8-byte little-endian
//! records taken as tokens verbatim, so a binary file holding the FNV-1a
//! hashes of some lines estimates identically to the text file.

use std::hash::Hasher;
use std::io::{self, BufRead, Read};

use fnv::FnvHasher;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenFormat {
    Text,
    Binary,
}

/// 64-bit FNV-1a of `bytes`.
pub fn hash_token(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub struct TextTokens<R> {
    reader: R,
    line: Vec<u8>,
}

impl<R: BufRead> Iterator for TextTokens<R> {
    type Item = io::Result<u64>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line.clear();
            match self.reader.read_until(b'\n', &mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e)),
            }
            let mut bytes = self.line.as_slice();
            if let Some(rest) = bytes.strip_suffix(b"\n") {
                bytes = rest;
            }
            if let Some(rest) = bytes.strip_suffix(b"\r") {
                bytes = rest;
            }
            if bytes.is_empty() {
                continue;
            }
            if let Err(e) = std::str::from_utf8(bytes) {
                return Some(Err(io::Error::new(io::ErrorKind::InvalidData, e)));
            }
            return Some(Ok(hash_token(bytes)));
        }
    }
}

pub struct BinaryTokens<R> {
    reader: R,
}

impl<R: Read> Iterator for BinaryTokens<R> {
    type Item = io::Result<u64>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = [0u8; 8];
        let mut filled = 0;
        while filled < 8 {
            match self.reader.read(&mut buf[filled..]) {
                Ok(0) if filled == 0 => return None,
                Ok(0) => {
                    return Some(Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("truncated binary record ({filled} of 8 bytes)"),
                    )))
                }
                Ok(k) => filled += k,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(u64::from_le_bytes(buf)))
    }
}

pub fn text_tokens<R: BufRead>(reader: R) -> TextTokens<R> {
    TextTokens {
        reader,
        line: Vec::with_capacity(64),
    }
}

pub fn binary_tokens<R: Read>(reader: R) -> BinaryTokens<R> {
    BinaryTokens { reader }
}

pub fn tokens<'a, R: BufRead + 'a>(
    format: TokenFormat,
    reader: R,
) -> Box<dyn Iterator<Item = io::Result<u64>> + 'a> {
    match format {
        TokenFormat::Text => Box::new(text_tokens(reader)),
        TokenFormat::Binary => Box::new(binary_tokens(reader)),
    }
}

/// Serializes tokens as binary records.
pub fn write_binary<W: io::Write>(mut w: W, tokens: &[u64]) -> io::Result<()> {
    for t in tokens {
        w.write_all(&t.to_le_bytes())?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(hash_token(b""), 0xcbf29ce484222325);
        assert_eq!(hash_token(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(hash_token(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn text_lines() {
        let input = b"a\nb\r\n\na\nfoobar";
        let toks: Vec<u64> = text_tokens(&input[..]).map(Result::unwrap).collect();
        assert_eq!(
            toks,
            vec![hash_token(b"a"), hash_token(b"b"), hash_token(b"a"), hash_token(b"foobar")]
        );
    }

    #[test]
    fn invalid_utf8_rejected() {
        let input = b"ok\n\xff\xfe\n";
        let res: Vec<_> = text_tokens(&input[..]).collect();
        assert!(res[0].is_ok());
        assert_eq!(res[1].as_ref().unwrap_err().kind(), io::ErrorKind::InvalidData);
    }

    #[test]
    fn binary_round_trip() {
        let toks = vec![0, 1, u64::MAX, 0xdeadbeef];
        let mut buf = Vec::new();
        write_binary(&mut buf, &toks).unwrap();
        let back: Vec<u64> = binary_tokens(&buf[..]).map(Result::unwrap).collect();
        assert_eq!(back, toks);
    }

    #[test]
    fn truncated_binary_record() {
        let buf = [1u8, 0, 0, 0, 0, 0, 0, 0, 9, 9];
        let res: Vec<_> = binary_tokens(&buf[..]).collect();
        assert_eq!(*res[0].as_ref().unwrap(), 1);
        assert!(res[1].is_err());
    }
}

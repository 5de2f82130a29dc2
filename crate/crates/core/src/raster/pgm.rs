//! Binary PGM (`P5`) reading and writing.

use thiserror::Error;

use super::GrayImage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("byte {offset}: expected magic \"P5\"")]
    BadMagic { offset: usize },

    #[error("byte {offset}: malformed header, {reason}")]
    Header { offset: usize, reason: String },

    #[error("byte {offset}: unsupported maxval {maxval} (must be 1..=255)")]
    UnsupportedMaxval { offset: usize, maxval: u64 },

    #[error("byte {offset}: truncated payload, expected {expected} bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<(u64, usize), PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| PgmError::Header {
                    offset: start,
                    reason: format!("{what} overflows"),
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PgmError::Header {
                offset: start,
                reason: format!("expected {what}"),
            });
        }
        Ok((value, start))
    }
}

/// Parses a binary PGM. Samples with maxval below 255 are rescaled to 0..=255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::BadMagic { offset: 0 });
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        _ => {
            return Err(PgmError::Header {
                offset: 2,
                reason: "expected whitespace after magic".into(),
            })
        }
    }

    let (width, w_at) = cur.number("width")?;
    let (height, h_at) = cur.number("height")?;
    let (maxval, m_at) = cur.number("maxval")?;
    if width == 0 {
        return Err(PgmError::Header {
            offset: w_at,
            reason: "width must be positive".into(),
        });
    }
    if height == 0 {
        return Err(PgmError::Header {
            offset: h_at,
            reason: "height must be positive".into(),
        });
    }
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::UnsupportedMaxval {
            offset: m_at,
            maxval,
        });
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => {
            return Err(PgmError::Header {
                offset: cur.pos,
                reason: "expected a single whitespace byte after maxval".into(),
            })
        }
        None => {
            return Err(PgmError::Truncated {
                offset: cur.pos,
                expected: 1,
                found: 0,
            })
        }
    }

    let (width, height) = (width as usize, height as usize);
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| PgmError::Header {
            offset: w_at,
            reason: "image dimensions overflow".into(),
        })?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PgmError::Truncated {
            offset: cur.pos,
            expected,
            found: payload.len(),
        });
    }
    let mut samples = payload[..expected].to_vec();
    if maxval != 255 {
        for s in &mut samples {
            let v = u64::from(*s).min(maxval);
            *s = ((v * 255 + maxval / 2) / maxval) as u8;
        }
    }
    Ok(GrayImage::new(width, height, samples).expect("dimensions checked above"))
}

/// Serializes as `P5`, maxval 255.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.samples().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.samples());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(header: &str, payload: &[u8]) -> Vec<u8> {
        let mut v = header.as_bytes().to_vec();
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn minimal_file() {
        let img = read_pgm(&file("P5\n2 2\n255\n", &[0, 255, 255, 0])).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.samples(), &[0, 255, 255, 0]);
    }

    #[test]
    fn comment_after_magic() {
        let img = read_pgm(&file("P5\n# c\n3 3\n255\n", &[9; 9])).unwrap();
        assert_eq!((img.width(), img.height()), (3, 3));
        assert_eq!(img.samples(), &[9; 9]);
    }

    #[test]
    fn comments_between_tokens() {
        let img = read_pgm(&file("P5 # a\n2 # b\n1\n#c\n255\n", &[1, 2])).unwrap();
        assert_eq!(img.samples(), &[1, 2]);
    }

    #[test]
    fn payload_may_start_with_whitespace_byte() {
        let img = read_pgm(&file("P5\n2 1\n255\n", b"\n ")).unwrap();
        assert_eq!(img.samples(), b"\n ");
    }

    #[test]
    fn sixteen_bit_rejected() {
        let err = read_pgm(&file("P5\n2 2\n65535\n", &[0; 8])).unwrap_err();
        assert_eq!(
            err,
            PgmError::UnsupportedMaxval {
                offset: 7,
                maxval: 65535
            }
        );
    }

    #[test]
    fn malformed_headers() {
        assert_eq!(
            read_pgm(b"P2\n1 1\n255\n0").unwrap_err(),
            PgmError::BadMagic { offset: 0 }
        );
        assert!(matches!(
            read_pgm(b"P5\nx 1\n255\n0").unwrap_err(),
            PgmError::Header { offset: 3, .. }
        ));
        assert!(matches!(
            read_pgm(b"P5\n0 1\n255\n").unwrap_err(),
            PgmError::Header { offset: 3, .. }
        ));
        assert!(matches!(
            read_pgm(b"P5\n1 1\n255").unwrap_err(),
            PgmError::Truncated { offset: 10, .. }
        ));
    }

    #[test]
    fn truncated_payload() {
        let err = read_pgm(&file("P5\n3 3\n255\n", &[0; 5])).unwrap_err();
        assert_eq!(
            err,
            PgmError::Truncated {
                offset: 11,
                expected: 9,
                found: 5
            }
        );
    }

    #[test]
    fn low_maxval_rescaled() {
        let img = read_pgm(&file("P5\n3 1\n15\n", &[0, 15, 7])).unwrap();
        assert_eq!(img.samples(), &[0, 255, 119]);
    }

    #[test]
    fn write_examples() {
        let one = GrayImage::new(1, 1, vec![0]).unwrap();
        assert_eq!(write_pgm(&one), b"P5\n1 1\n255\n\0");
        let two_by_three = GrayImage::new(2, 3, vec![0; 6]).unwrap();
        assert!(write_pgm(&two_by_three).starts_with(b"P5\n2 3\n255\n"));
    }
}

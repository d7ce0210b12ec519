//! Minimal DNS message walker: header, first question, answers.

use thiserror::Error;

const HEADER_LEN: usize = 12;
const MAX_POINTER_HOPS: usize = 32;
const TYPE_A: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnsInfo {
    pub query_id: u16,
    pub query_type: u16,
    /// TTL of the first A answer; only set for responses that carry one.
    pub ttl_first_a: Option<u32>,
    pub is_response: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DnsParseError {
    #[error("message shorter than the 12-byte header")]
    ShortHeader,
    #[error("name runs past the end of the message at offset {0}")]
    TruncatedName(usize),
    #[error("compression pointer chain longer than {MAX_POINTER_HOPS} hops")]
    PointerLoop,
    #[error("record section runs past the end of the message at offset {0}")]
    TruncatedRecord(usize),
    #[error("label type bits {0:#04x} not supported")]
    BadLabel(u8),
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u16(&mut self) -> Result<u16, DnsParseError> {
        let b = self.buf.get(self.pos..self.pos + 2).ok_or(DnsParseError::TruncatedRecord(self.pos))?;
        self.pos += 2;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, DnsParseError> {
        let hi = self.u16()?;
        let lo = self.u16()?;
        Ok(u32::from(hi) << 16 | u32::from(lo))
    }

    fn skip(&mut self, n: usize) -> Result<(), DnsParseError> {
        if self.pos + n > self.buf.len() {
            return Err(DnsParseError::TruncatedRecord(self.pos));
        }
        self.pos += n;
        Ok(())
    }

    /// Step over a possibly compressed name. Pointer targets are followed
    /// only to validate them; the cursor ends after the in-place encoding.
    fn skip_name(&mut self) -> Result<(), DnsParseError> {
        let mut at = self.pos;
        let mut resume: Option<usize> = None;
        let mut hops = 0;
        loop {
            let len = *self.buf.get(at).ok_or(DnsParseError::TruncatedName(at))?;
            match len & 0xc0 {
                0x00 => {
                    if len == 0 {
                        self.pos = resume.unwrap_or(at + 1);
                        return Ok(());
                    }
                    at += 1 + usize::from(len);
                    if at > self.buf.len() {
                        return Err(DnsParseError::TruncatedName(at));
                    }
                }
                0xc0 => {
                    let lo = *self.buf.get(at + 1).ok_or(DnsParseError::TruncatedName(at))?;
                    hops += 1;
                    if hops > MAX_POINTER_HOPS {
                        return Err(DnsParseError::PointerLoop);
                    }
                    if resume.is_none() {
                        resume = Some(at + 2);
                    }
                    at = usize::from(len & 0x3f) << 8 | usize::from(lo);
                }
                other => return Err(DnsParseError::BadLabel(other)),
            }
        }
    }
}

/// Parse the fields needed for flow enrichment from a UDP DNS payload.
pub fn parse_dns(payload: &[u8]) -> Result<DnsInfo, DnsParseError> {
    if payload.len() < HEADER_LEN {
        return Err(DnsParseError::ShortHeader);
    }
    let mut cur = Cursor { buf: payload, pos: 0 };
    let query_id = cur.u16()?;
    let flags = cur.u16()?;
    let qdcount = cur.u16()?;
    let ancount = cur.u16()?;
    cur.skip(4)?; // NSCOUNT, ARCOUNT

    let is_response = flags & 0x8000 != 0;
    let mut query_type = 0;
    for i in 0..qdcount {
        cur.skip_name()?;
        let qtype = cur.u16()?;
        cur.skip(2)?; // QCLASS
        if i == 0 {
            query_type = qtype;
        }
    }

    let mut ttl_first_a = None;
    if is_response {
        for _ in 0..ancount {
            cur.skip_name()?;
            let rtype = cur.u16()?;
            cur.skip(2)?; // CLASS
            let ttl = cur.u32()?;
            let rdlen = cur.u16()?;
            cur.skip(usize::from(rdlen))?;
            if rtype == TYPE_A {
                ttl_first_a = Some(ttl);
                break;
            }
        }
    }

    Ok(DnsInfo { query_id, query_type, ttl_first_a, is_response })
}

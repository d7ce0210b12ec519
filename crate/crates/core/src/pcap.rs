//! Classic libpcap file reader.
//!
//! Only the classic format is handled (not pcapng), with Ethernet as the
//! link type. Microsecond and nanosecond magic numbers are recognized in both
//! byte orders. Nanosecond timestamps are truncated to microseconds.

use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::Path;

use thiserror::Error;

use crate::packet::{decode_ethernet, PacketRecord, SkipReason};

pub const GLOBAL_HEADER_LEN: usize = 24;
pub const RECORD_HEADER_LEN: usize = 16;
pub const LINKTYPE_ETHERNET: u32 = 1;

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unknown pcap magic number {0:#010x}")]
    UnknownMagic(u32),
    #[error("unsupported link type {0} (only Ethernet is supported)")]
    UnsupportedLinkType(u32),
    #[error("pcap global header truncated")]
    TruncatedHeader,
    #[error("corrupt packet header at byte {offset}: {reason}")]
    CorruptPacketHeader { offset: u64, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampResolution {
    Microsecond,
    Nanosecond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Native,
    Swapped,
}

/// Result of one [`CaptureReader::next_packet`] call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Next {
    Packet(PacketRecord),
    Skipped(SkipReason),
    End,
}

/// Sequential cursor over the records of a classic pcap stream.
#[derive(Debug)]
pub struct CaptureReader<R> {
    source: R,
    resolution: TimestampResolution,
    byte_order: ByteOrder,
    link_type: u32,
    packets_read: u64,
    packets_skipped: u64,
    bytes_consumed: u64,
    frame: Vec<u8>,
}

/// Open a capture file and parse its global header.
pub fn open_capture(path: impl AsRef<Path>) -> Result<CaptureReader<BufReader<File>>, IngestError> {
    let file = File::open(path)?;
    CaptureReader::new(BufReader::with_capacity(1 << 16, file))
}

/// Fill `buf` as far as the source allows; returns bytes read.
fn read_up_to(source: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

impl<R: Read> CaptureReader<R> {
    pub fn new(mut source: R) -> Result<Self, IngestError> {
        let mut header = [0u8; GLOBAL_HEADER_LEN];
        let n = read_up_to(&mut source, &mut header)?;
        if n < 4 {
            return Err(IngestError::TruncatedHeader);
        }
        let magic_le = u32::from_le_bytes([header[0], header[1], header[2], header[3]]);
        let (resolution, byte_order) = match magic_le {
            MAGIC_MICROS => (TimestampResolution::Microsecond, ByteOrder::Native),
            MAGIC_NANOS => (TimestampResolution::Nanosecond, ByteOrder::Native),
            m if m.swap_bytes() == MAGIC_MICROS => (TimestampResolution::Microsecond, ByteOrder::Swapped),
            m if m.swap_bytes() == MAGIC_NANOS => (TimestampResolution::Nanosecond, ByteOrder::Swapped),
            // Report the magic as it reads big-endian, which is how it is usually quoted.
            m => return Err(IngestError::UnknownMagic(m.swap_bytes())),
        };
        if n < GLOBAL_HEADER_LEN {
            return Err(IngestError::TruncatedHeader);
        }
        let mut reader = CaptureReader {
            source,
            resolution,
            byte_order,
            link_type: 0,
            packets_read: 0,
            packets_skipped: 0,
            bytes_consumed: GLOBAL_HEADER_LEN as u64,
            frame: Vec::with_capacity(2048),
        };
        reader.link_type = reader.u32_at(&header, 20);
        if reader.link_type != LINKTYPE_ETHERNET {
            return Err(IngestError::UnsupportedLinkType(reader.link_type));
        }
        Ok(reader)
    }

    fn u32_at(&self, b: &[u8], at: usize) -> u32 {
        let raw = [b[at], b[at + 1], b[at + 2], b[at + 3]];
        // "Native" means the file was written little-endian, the order of the
        // magic as declared (0xa1b2c3d4 stored as d4 c3 b2 a1).
        match self.byte_order {
            ByteOrder::Native => u32::from_le_bytes(raw),
            ByteOrder::Swapped => u32::from_be_bytes(raw),
        }
    }

    pub fn resolution(&self) -> TimestampResolution {
        self.resolution
    }

    pub fn byte_order(&self) -> ByteOrder {
        self.byte_order
    }

    pub fn link_type(&self) -> u32 {
        self.link_type
    }

    pub fn packets_read(&self) -> u64 {
        self.packets_read
    }

    pub fn packets_skipped(&self) -> u64 {
        self.packets_skipped
    }

    pub fn bytes_consumed(&self) -> u64 {
        self.bytes_consumed
    }

    /// Consume exactly one per-packet record.
    pub fn next_packet(&mut self) -> Result<Next, IngestError> {
        let mut header = [0u8; RECORD_HEADER_LEN];
        let n = read_up_to(&mut self.source, &mut header)?;
        if n == 0 {
            return Ok(Next::End);
        }
        let offset = self.bytes_consumed;
        if n < RECORD_HEADER_LEN {
            return Err(IngestError::CorruptPacketHeader {
                offset,
                reason: format!("record header has only {n} of {RECORD_HEADER_LEN} bytes"),
            });
        }
        let ts_sec = u64::from(self.u32_at(&header, 0));
        let ts_sub = u64::from(self.u32_at(&header, 4));
        let incl_len = self.u32_at(&header, 8);

        self.frame.clear();
        let got = (&mut self.source).take(u64::from(incl_len)).read_to_end(&mut self.frame)?;
        if got < incl_len as usize {
            return Err(IngestError::CorruptPacketHeader {
                offset,
                reason: format!("declared {incl_len} captured bytes but only {got} remain"),
            });
        }
        self.bytes_consumed += (RECORD_HEADER_LEN + got) as u64;

        let ts_micros = ts_sec * 1_000_000
            + match self.resolution {
                TimestampResolution::Microsecond => ts_sub,
                TimestampResolution::Nanosecond => ts_sub / 1000,
            };
        match decode_ethernet(&self.frame, ts_micros) {
            Ok(rec) => {
                self.packets_read += 1;
                Ok(Next::Packet(rec))
            }
            Err(reason) => {
                self.packets_skipped += 1;
                Ok(Next::Skipped(reason))
            }
        }
    }
}

/// Iterates decoded packets, silently passing over skipped frames.
impl<R: Read> Iterator for CaptureReader<R> {
    type Item = Result<PacketRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.next_packet() {
                Ok(Next::Packet(p)) => return Some(Ok(p)),
                Ok(Next::Skipped(_)) => continue,
                Ok(Next::End) => return None,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

use std::fmt;
use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

/// Default cap on the framed payload length (16 MiB).
pub const DEFAULT_MAX_DATAGRAM_BYTES: u32 = 16 * 1024 * 1024;

/// Nanoseconds between 1601-01-01T00:00:00Z and 1970-01-01T00:00:00Z.
pub const EPOCH_OFFSET_NS: i128 = 11_644_473_600 * 1_000_000_000;

/// Type code plus the two FILETIME words.
const FRAME_HEADER_BYTES: u32 = 12;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("leading length {leading} does not match trailing length {trailing}")]
    LengthMismatch { leading: u32, trailing: u32 },
    #[error("stream ended mid-frame: needed {needed} more bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("datagram length {len} exceeds the cap of {cap} bytes")]
    Oversize { len: u32, cap: u32 },
    #[error("datagram length {0} is shorter than the 12-byte header")]
    ShortFrame(u32),
    #[error("non-printable datagram type code {0:02x?}")]
    BadType([u8; 4]),
    #[error("timestamp {0} ns is not representable as a FILETIME")]
    UnrepresentableTimestamp(i128),
    #[error("body of {0} bytes does not fit a u32 length field")]
    BodyTooLarge(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Four printable ASCII characters naming a datagram kind.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeCode([u8; 4]);

impl TypeCode {
    pub const RAW0: TypeCode = TypeCode(*b"RAW0");
    pub const NME0: TypeCode = TypeCode(*b"NME0");
    pub const CON0: TypeCode = TypeCode(*b"CON0");

    pub fn new(bytes: [u8; 4]) -> Result<Self, FrameError> {
        if bytes.iter().all(|b| (0x20..=0x7e).contains(b)) {
            Ok(TypeCode(bytes))
        } else {
            Err(FrameError::BadType(bytes))
        }
    }

    /// Compile-time constructor; panics on a non-printable byte.
    pub const fn from_static(bytes: [u8; 4]) -> Self {
        let mut i = 0;
        while i < 4 {
            assert!(bytes[i] >= 0x20 && bytes[i] <= 0x7e, "type code must be printable ASCII");
            i += 1;
        }
        TypeCode(bytes)
    }

    pub fn bytes(&self) -> [u8; 4] {
        self.0
    }

    pub fn as_str(&self) -> &str {
        // printable ASCII is valid UTF-8
        std::str::from_utf8(&self.0).unwrap_or("????")
    }
}

impl fmt::Debug for TypeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TypeCode({})", self.as_str())
    }
}

impl fmt::Display for TypeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One length-framed record.
///
/// The timestamp is kept as `i128` nanoseconds so every 64-bit FILETIME,
/// including the 1601 epoch itself, maps to a distinct exact value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub type_code: TypeCode,
    pub timestamp_ns: i128,
    pub body: Vec<u8>,
}

impl Datagram {
    pub fn new(type_code: TypeCode, timestamp_ns: i128, body: Vec<u8>) -> Self {
        Datagram {
            type_code,
            timestamp_ns,
            body,
        }
    }

    /// Total number of bytes this datagram occupies on the wire.
    pub fn framed_len(&self) -> usize {
        4 + FRAME_HEADER_BYTES as usize + self.body.len() + 4
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, FrameError> {
        let mut out = Vec::with_capacity(self.framed_len());
        write_datagram(&mut out, self)?;
        Ok(out)
    }
}

/// Converts a FILETIME (100 ns ticks since 1601-01-01 UTC) to Unix nanoseconds.
pub fn filetime_to_unix_ns(low: u32, high: u32) -> i128 {
    let ticks = ((high as u64) << 32) | low as u64;
    ticks as i128 * 100 - EPOCH_OFFSET_NS
}

/// Inverse of [`filetime_to_unix_ns`]; `None` when the instant is not a
/// whole number of ticks or lies outside the 64-bit tick range.
pub fn unix_ns_to_filetime(ns: i128) -> Option<(u32, u32)> {
    let since_1601 = ns + EPOCH_OFFSET_NS;
    if since_1601 < 0 || since_1601 % 100 != 0 {
        return None;
    }
    let ticks = u64::try_from(since_1601 / 100).ok()?;
    Some((ticks as u32, (ticks >> 32) as u32))
}

pub fn write_datagram<W: Write>(w: &mut W, dg: &Datagram) -> Result<(), FrameError> {
    let (low, high) = unix_ns_to_filetime(dg.timestamp_ns)
        .ok_or(FrameError::UnrepresentableTimestamp(dg.timestamp_ns))?;
    let len = u32::try_from(dg.body.len())
        .ok()
        .and_then(|n| n.checked_add(FRAME_HEADER_BYTES))
        .ok_or(FrameError::BodyTooLarge(dg.body.len()))?;
    w.write_u32::<LittleEndian>(len)?;
    w.write_all(&dg.type_code.bytes())?;
    w.write_u32::<LittleEndian>(low)?;
    w.write_u32::<LittleEndian>(high)?;
    w.write_all(&dg.body)?;
    w.write_u32::<LittleEndian>(len)?;
    Ok(())
}

/// Sequential reader over a stream of framed datagrams.
pub struct DatagramReader<R> {
    inner: R,
    max_len: u32,
    offset: u64,
}

impl<R: Read> DatagramReader<R> {
    pub fn new(inner: R) -> Self {
        Self::with_max_len(inner, DEFAULT_MAX_DATAGRAM_BYTES)
    }

    pub fn with_max_len(inner: R, max_len: u32) -> Self {
        DatagramReader {
            inner,
            max_len,
            offset: 0,
        }
    }

    /// Bytes consumed so far; always a frame boundary between successful reads.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn into_inner(self) -> R {
        self.inner
    }

    /// Reads the next frame, or `None` at a clean end of stream.
    pub fn read_datagram(&mut self) -> Result<Option<Datagram>, FrameError> {
        let mut len_buf = [0u8; 4];
        let got = self.fill(&mut len_buf)?;
        if got == 0 {
            return Ok(None);
        }
        if got < 4 {
            return Err(FrameError::Truncated {
                needed: 4,
                got,
            });
        }
        let len = u32::from_le_bytes(len_buf);
        if len > self.max_len {
            return Err(FrameError::Oversize {
                len,
                cap: self.max_len,
            });
        }
        if len < FRAME_HEADER_BYTES {
            return Err(FrameError::ShortFrame(len));
        }

        let mut frame = vec![0u8; len as usize + 4];
        let got = self.fill(&mut frame)?;
        if got < frame.len() {
            return Err(FrameError::Truncated {
                needed: frame.len(),
                got,
            });
        }

        let trailing = (&frame[len as usize..]).read_u32::<LittleEndian>()?;
        if trailing != len {
            return Err(FrameError::LengthMismatch {
                leading: len,
                trailing,
            });
        }
        let mut head = &frame[..FRAME_HEADER_BYTES as usize];
        let mut code = [0u8; 4];
        head.read_exact(&mut code)?;
        let type_code = TypeCode::new(code)?;
        let low = head.read_u32::<LittleEndian>()?;
        let high = head.read_u32::<LittleEndian>()?;

        frame.truncate(len as usize);
        frame.drain(..FRAME_HEADER_BYTES as usize);
        Ok(Some(Datagram {
            type_code,
            timestamp_ns: filetime_to_unix_ns(low, high),
            body: frame,
        }))
    }

    /// Reads until `buf` is full or the stream ends; returns the byte count.
    fn fill(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            }
        }
        self.offset += filled as u64;
        Ok(filled)
    }
}

impl<R: Read> Iterator for DatagramReader<R> {
    type Item = Result<Datagram, FrameError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_datagram().transpose()
    }
}

//! Framed duplex transport.
//!
//! A frame is a one-byte tag, a little-endian `u32` payload length and the
//! payload. [`Wire`] wraps any [`Link`] with a running SHA-256 transcript so
//! two runs can be compared byte for byte regardless of the carrier.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::sync::mpsc;

use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{Abort, Error, Stage, TransportError};
use crate::rng::Seed;

pub const HEADER_LEN: usize = 5;
pub const MAX_PAYLOAD: usize = 1 << 28;

macro_rules! tags {
    ($($name:ident = $code:expr, $wire:expr;)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        #[repr(u8)]
        pub enum Tag {
            $($name = $code,)*
        }

        impl Tag {
            pub const ALL: &'static [Tag] = &[$(Tag::$name,)*];

            pub fn from_u8(code: u8) -> Option<Tag> {
                match code {
                    $($code => Some(Tag::$name),)*
                    _ => None,
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $(Tag::$name => $wire,)*
                }
            }
        }
    };
}

tags! {
    Hello = 0x01, "HELLO";
    Abort = 0x02, "ABORT";
    LossReport = 0x03, "LOSS_REPORT";
    NaorKey = 0x10, "NAOR_KEY";
    NaorPayload = 0x11, "NAOR_PAYLOAD";
    EqChallenge = 0x12, "EQ_CHALLENGE";
    EqOpen = 0x13, "EQ_OPEN";
    EqMask = 0x14, "EQ_MASK";
    EqDecommit = 0x15, "EQ_DECOMMIT";
    EreBb84Batch = 0x20, "ERE_BB84_BATCH";
    EreChallengeSet = 0x21, "ERE_CHALLENGE_SET";
    EreFamilyMeta = 0x22, "ERE_FAMILY_META";
    ErePairChallenge = 0x23, "ERE_PAIR_CHALLENGE";
    ErePairReveal = 0x24, "ERE_PAIR_REVEAL";
    ErePayloadCommit = 0x25, "ERE_PAYLOAD_COMMIT";
    EreOpen = 0x26, "ERE_OPEN";
    OtBb84Batch = 0x30, "OT_BB84_BATCH";
    OtChallengeSet = 0x31, "OT_CHALLENGE_SET";
    OtBases = 0x32, "OT_BASES";
    OtPartition = 0x33, "OT_PARTITION";
    OtSyndromes = 0x34, "OT_SYNDROMES";
    OtCiphertexts = 0x35, "OT_CIPHERTEXTS";
    OtAbort = 0x36, "OT_ABORT";
    OtAssignment = 0x37, "OT_ASSIGNMENT";
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(tag: Tag, payload: Vec<u8>) -> Result<Self, TransportError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(TransportError::Oversize(payload.len()));
        }
        Ok(Frame { tag, payload })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.push(self.tag as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one frame from the front of `bytes`, returning it with the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, usize), TransportError> {
        let (tag, len) = parse_header(bytes)?;
        let total = HEADER_LEN + len;
        if bytes.len() < total {
            return Err(TransportError::Truncated {
                needed: total,
                available: bytes.len(),
            });
        }
        let payload = bytes[HEADER_LEN..total].to_vec();
        Ok((Frame { tag, payload }, total))
    }

    /// Reads one frame from a byte stream.
    pub fn read_from<R: Read>(reader: &mut R) -> Result<Frame, TransportError> {
        let mut header = [0u8; HEADER_LEN];
        read_exact(reader, &mut header, 0)?;
        let (tag, len) = parse_header(&header)?;
        let mut payload = vec![0u8; len];
        read_exact(reader, &mut payload, HEADER_LEN)?;
        Ok(Frame { tag, payload })
    }
}

fn parse_header(bytes: &[u8]) -> Result<(Tag, usize), TransportError> {
    if bytes.is_empty() {
        return Err(TransportError::Truncated {
            needed: HEADER_LEN,
            available: 0,
        });
    }
    let tag = Tag::from_u8(bytes[0]).ok_or(TransportError::UnknownTag(bytes[0]))?;
    if bytes.len() < HEADER_LEN {
        return Err(TransportError::Truncated {
            needed: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let len = u32::from_le_bytes(bytes[1..HEADER_LEN].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(TransportError::Oversize(len));
    }
    Ok((tag, len))
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8], offset: usize) -> Result<(), TransportError> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 && offset == 0 => return Err(TransportError::Disconnected),
            Ok(0) => {
                return Err(TransportError::Truncated {
                    needed: offset + buf.len(),
                    available: offset + filled,
                })
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// A reliable, ordered, duplex frame carrier.
pub trait Link: Send {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError>;
    fn recv_frame(&mut self) -> Result<Frame, TransportError>;

    fn flush(&mut self) -> Result<(), TransportError> {
        Ok(())
    }
}

/// In-process link over a pair of channels carrying encoded frames.
pub struct Loopback {
    tx: mpsc::Sender<Vec<u8>>,
    rx: mpsc::Receiver<Vec<u8>>,
}

impl Loopback {
    pub fn pair() -> (Loopback, Loopback) {
        let (tx_a, rx_b) = mpsc::channel();
        let (tx_b, rx_a) = mpsc::channel();
        (Loopback { tx: tx_a, rx: rx_a }, Loopback { tx: tx_b, rx: rx_b })
    }
}

impl Link for Loopback {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.tx
            .send(frame.encode())
            .map_err(|_| TransportError::Disconnected)
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        let bytes = self.rx.recv().map_err(|_| TransportError::Disconnected)?;
        let (frame, used) = Frame::decode(&bytes)?;
        if used != bytes.len() {
            return Err(TransportError::Malformed("trailing bytes after frame".into()));
        }
        Ok(frame)
    }
}

/// Frames over a TCP stream. Writes are buffered and flushed before every
/// receive.
pub struct TcpLink {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TcpLink {
    pub fn new(stream: TcpStream) -> Result<Self, TransportError> {
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(TcpLink {
            reader,
            writer: BufWriter::new(stream),
        })
    }

    pub fn connect(addr: &str) -> Result<Self, TransportError> {
        TcpLink::new(TcpStream::connect(addr)?)
    }
}

impl Link for TcpLink {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.writer.write_all(&frame.encode())?;
        Ok(())
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        self.writer.flush()?;
        Frame::read_from(&mut self.reader)
    }

    fn flush(&mut self) -> Result<(), TransportError> {
        self.writer.flush()?;
        Ok(())
    }
}

impl Drop for TcpLink {
    fn drop(&mut self) {
        let _ = self.writer.flush();
    }
}

/// Which end of a two-party session this wire belongs to. The initiator
/// speaks first in the handshake.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Initiator,
    Responder,
}

impl Side {
    fn byte(self) -> u8 {
        match self {
            Side::Initiator => 0,
            Side::Responder => 1,
        }
    }

    fn peer(self) -> Side {
        match self {
            Side::Initiator => Side::Responder,
            Side::Responder => Side::Initiator,
        }
    }
}

/// A link plus the session transcript. Both ends of an honest session end
/// with the same digest.
pub struct Wire {
    link: Box<dyn Link>,
    side: Side,
    transcript: Sha256,
    frames: usize,
    bytes: usize,
    send_failed: bool,
}

impl Wire {
    pub fn new(link: Box<dyn Link>, side: Side) -> Self {
        Wire {
            link,
            side,
            transcript: Sha256::new(),
            frames: 0,
            bytes: 0,
            send_failed: false,
        }
    }

    pub fn loopback_pair() -> (Wire, Wire) {
        let (a, b) = Loopback::pair();
        (
            Wire::new(Box::new(a), Side::Initiator),
            Wire::new(Box::new(b), Side::Responder),
        )
    }

    pub fn side(&self) -> Side {
        self.side
    }

    fn absorb(&mut self, from: Side, frame: &Frame) {
        self.transcript.update([from.byte(), frame.tag as u8]);
        self.transcript.update((frame.payload.len() as u32).to_le_bytes());
        self.transcript.update(&frame.payload);
        self.frames += 1;
        self.bytes += HEADER_LEN + frame.payload.len();
    }

    /// A failed send is not reported here: the peer may already have hung up
    /// after sending an ABORT, which the next receive then surfaces.
    pub fn send(&mut self, tag: Tag, payload: Vec<u8>) -> Result<(), Error> {
        let frame = Frame::new(tag, payload)?;
        self.absorb(self.side, &frame);
        if !self.send_failed && self.link.send_frame(&frame).is_err() {
            self.send_failed = true;
        }
        Ok(())
    }

    /// Receives the next frame, which must carry `expected`. An ABORT frame
    /// becomes [`Error::PeerAbort`].
    pub fn recv(&mut self, expected: Tag) -> Result<Vec<u8>, Error> {
        let frame = self.link.recv_frame()?;
        self.absorb(self.side.peer(), &frame);
        if frame.tag == expected {
            return Ok(frame.payload);
        }
        if frame.tag == Tag::Abort {
            return Err(Error::PeerAbort(decode_abort(&frame.payload)?));
        }
        Err(TransportError::Unexpected {
            expected: expected.name(),
            got: frame.tag.name(),
        }
        .into())
    }

    /// Tells the peer why this side stops and returns the matching error.
    pub fn abort(&mut self, abort: Abort) -> Error {
        let _ = self.send(Tag::Abort, encode_abort(abort));
        let _ = self.link.flush();
        Error::Abort(abort)
    }

    /// Exchanges 32-byte parameter digests; both sides abort on mismatch
    /// before any protocol traffic.
    pub fn handshake(&mut self, digest: [u8; 32]) -> Result<(), Error> {
        let mismatch = |wire: &mut Wire| wire.abort(Abort::at(Stage::ParamsMismatch));
        match self.side {
            Side::Initiator => {
                self.send(Tag::Hello, digest.to_vec())?;
                let peer = self.recv(Tag::Hello)?;
                if peer != digest {
                    return Err(mismatch(self));
                }
            }
            Side::Responder => {
                let peer = self.recv(Tag::Hello)?;
                if peer != digest {
                    return Err(mismatch(self));
                }
                self.send(Tag::Hello, digest.to_vec())?;
            }
        }
        Ok(())
    }

    pub fn transcript_digest(&self) -> [u8; 32] {
        self.transcript.clone().finalize().into()
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bytes(&self) -> usize {
        self.bytes
    }
}

pub fn encode_abort(abort: Abort) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(abort.stage.code());
    match abort.index {
        Some(i) => w.bool(true).u64(i as u64),
        None => w.bool(false),
    };
    w.finish()
}

pub fn decode_abort(payload: &[u8]) -> Result<Abort, TransportError> {
    let mut r = Reader::new(payload);
    let code = r.u8()?;
    let stage = Stage::from_code(code)
        .ok_or_else(|| TransportError::Malformed(format!("abort stage code {code}")))?;
    let index = if r.bool()? { Some(r.u64()? as usize) } else { None };
    r.finish()?;
    Ok(Abort { stage, index })
}

/// Payload builder. Variable-length fields carry explicit lengths.
#[derive(Default)]
pub struct Writer(Vec<u8>);

impl Writer {
    pub fn new() -> Self {
        Writer(Vec::new())
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.0.push(v);
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn len(&mut self, v: usize) -> &mut Self {
        self.u32(u32::try_from(v).expect("length fits in u32"))
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.len(v.len());
        self.0.extend_from_slice(v);
        self
    }

    /// Bit length, then the MSB-first packing.
    pub fn bits(&mut self, v: &BitString) -> &mut Self {
        self.len(v.len());
        self.0.extend_from_slice(&v.to_bytes());
        self
    }

    pub fn indices(&mut self, v: &[usize]) -> &mut Self {
        self.len(v.len());
        for &i in v {
            self.len(i);
        }
        self
    }

    pub fn seed(&mut self, v: &Seed) -> &mut Self {
        self.0.extend_from_slice(&v.0);
        self
    }

    pub fn finish(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.0)
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], TransportError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.buf.len())
            .ok_or_else(|| TransportError::Malformed(format!("payload ends before byte {}", self.pos + n)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, TransportError> {
        Ok(self.take(1)?[0])
    }

    pub fn bool(&mut self) -> Result<bool, TransportError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(TransportError::Malformed(format!("boolean byte {v}"))),
        }
    }

    pub fn u32(&mut self) -> Result<u32, TransportError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, TransportError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn len(&mut self) -> Result<usize, TransportError> {
        Ok(self.u32()? as usize)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, TransportError> {
        let n = self.len()?;
        Ok(self.take(n)?.to_vec())
    }

    pub fn bits(&mut self) -> Result<BitString, TransportError> {
        let n = self.len()?;
        let raw = self.take(n.div_ceil(8))?;
        BitString::from_bytes(raw, n)
            .ok_or_else(|| TransportError::Malformed("nonzero padding in bit string".into()))
    }

    /// A bit string that must have exactly `n` bits.
    pub fn bits_of(&mut self, n: usize) -> Result<BitString, TransportError> {
        let v = self.bits()?;
        if v.len() != n {
            return Err(TransportError::Malformed(format!("expected {n} bits, got {}", v.len())));
        }
        Ok(v)
    }

    pub fn indices(&mut self) -> Result<Vec<usize>, TransportError> {
        let n = self.len()?;
        if n > self.buf.len() / 4 {
            return Err(TransportError::Malformed(format!("index count {n} too large")));
        }
        (0..n).map(|_| self.len()).collect()
    }

    pub fn seed(&mut self) -> Result<Seed, TransportError> {
        Ok(Seed(self.take(32)?.try_into().unwrap()))
    }

    pub fn finish(&self) -> Result<(), TransportError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(TransportError::Malformed(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )))
        }
    }
}

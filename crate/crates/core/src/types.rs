//! Identities, geometry, energy budgets and the wire messages exchanged by sensors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::WireError;

/// Sensor identity. Totally ordered; the order is used for every tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    /// Largest id representable in the 16-bit wire field.
    pub const MAX_WIRE: u32 = u16::MAX as u32;

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point on the skin patch, in centimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Remaining and initial battery energy of one sensor, in nanojoules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    remaining: f64,
    initial: f64,
}

impl EnergyBudget {
    pub fn new(initial: f64) -> Self {
        let initial = initial.max(0.0);
        Self {
            remaining: initial,
            initial,
        }
    }

    /// Budget that started at `initial` and now holds `remaining` (clamped into `[0, initial]`).
    pub fn with_remaining(initial: f64, remaining: f64) -> Self {
        let initial = initial.max(0.0);
        Self {
            remaining: remaining.clamp(0.0, initial),
            initial,
        }
    }

    pub fn remaining(&self) -> f64 {
        self.remaining
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn is_dead(&self) -> bool {
        self.remaining <= 0.0
    }

    pub(crate) fn set_remaining(&mut self, remaining: f64) {
        self.remaining = remaining.clamp(0.0, self.initial);
    }
}

/// Direction of a detected boundary change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChangeSign {
    Growth,
    Shrinkage,
}

impl ChangeSign {
    pub fn symbol(self) -> char {
        match self {
            ChangeSign::Growth => '+',
            ChangeSign::Shrinkage => '-',
        }
    }
}

/// One angular bin shipped to a relay in a periodic batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaySample {
    pub bin: u8,
    pub loc: Location,
    pub dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageKind {
    Status,
    Location,
    Change,
    Relay,
}

impl MessageKind {
    /// Leading two-bit tag.
    pub fn tag(self) -> u8 {
        match self {
            MessageKind::Status => 0b00,
            MessageKind::Location => 0b01,
            MessageKind::Change => 0b10,
            MessageKind::Relay => 0b11,
        }
    }

    pub fn from_tag(tag: u8) -> Self {
        match tag & 0b11 {
            0b00 => MessageKind::Status,
            0b01 => MessageKind::Location,
            0b10 => MessageKind::Change,
            _ => MessageKind::Relay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Message {
    Status {
        sender: NodeId,
        root: NodeId,
        root_energy: f64,
    },
    Location {
        sender: NodeId,
        loc: Location,
        parent: NodeId,
    },
    Change {
        sender: NodeId,
        root_loc: Location,
        boundary_loc: Location,
        sign: ChangeSign,
    },
    Relay {
        sender: NodeId,
        samples: Vec<RelaySample>,
    },
}

pub const TAG_BITS: u64 = 2;
pub const ID_BITS: u64 = 16;
pub const ENERGY_BITS: u64 = 16;
pub const COORD_BITS: u64 = 16;
pub const SIGN_BITS: u64 = 2;
pub const COUNT_BITS: u64 = 8;
pub const BIN_BITS: u64 = 8;
pub const DIST_BITS: u64 = 16;

pub const STATUS_BITS: u64 = TAG_BITS + ID_BITS + ID_BITS + ENERGY_BITS;
pub const LOCATION_BITS: u64 = TAG_BITS + ID_BITS + 2 * COORD_BITS + ID_BITS;
pub const CHANGE_BITS: u64 = TAG_BITS + ID_BITS + 4 * COORD_BITS + SIGN_BITS;
pub const RELAY_HEADER_BITS: u64 = TAG_BITS + ID_BITS + COUNT_BITS;
pub const RELAY_SAMPLE_BITS: u64 = BIN_BITS + 2 * COORD_BITS + DIST_BITS;

/// Largest number of samples a relay batch can carry (8-bit count field).
pub const MAX_RELAY_SAMPLES: usize = u8::MAX as usize;

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Status { .. } => MessageKind::Status,
            Message::Location { .. } => MessageKind::Location,
            Message::Change { .. } => MessageKind::Change,
            Message::Relay { .. } => MessageKind::Relay,
        }
    }

    pub fn sender(&self) -> NodeId {
        match self {
            Message::Status { sender, .. }
            | Message::Location { sender, .. }
            | Message::Change { sender, .. }
            | Message::Relay { sender, .. } => *sender,
        }
    }
}

/// Bit length of `msg` under the fixed-width wire format.
pub fn message_bits(msg: &Message) -> u64 {
    match msg {
        Message::Status { .. } => STATUS_BITS,
        Message::Location { .. } => LOCATION_BITS,
        Message::Change { .. } => CHANGE_BITS,
        Message::Relay { samples, .. } => relay_bits(samples.len()),
    }
}

pub fn relay_bits(samples: usize) -> u64 {
    RELAY_HEADER_BITS + samples as u64 * RELAY_SAMPLE_BITS
}

/// Encoded message: a bit string packed MSB-first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub bytes: Vec<u8>,
    pub bits: u64,
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    fn push(&mut self, value: u64, width: u64) {
        for shift in (0..width).rev() {
            let bit = ((value >> shift) & 1) as u8;
            let byte = (self.bits / 8) as usize;
            if byte == self.bytes.len() {
                self.bytes.push(0);
            }
            self.bytes[byte] |= bit << (7 - (self.bits % 8));
            self.bits += 1;
        }
    }

    fn finish(self) -> Frame {
        Frame {
            bytes: self.bytes,
            bits: self.bits,
        }
    }
}

struct BitReader<'a> {
    frame: &'a Frame,
    pos: u64,
}

impl BitReader<'_> {
    fn take(&mut self, width: u64) -> Result<u64, WireError> {
        if self.pos + width > self.frame.bits {
            return Err(WireError::Truncated {
                needed: self.pos + width,
                available: self.frame.bits,
            });
        }
        let mut value = 0u64;
        for _ in 0..width {
            let byte = self.frame.bytes[(self.pos / 8) as usize];
            let bit = (byte >> (7 - (self.pos % 8))) & 1;
            value = (value << 1) | u64::from(bit);
            self.pos += 1;
        }
        Ok(value)
    }
}

/// Fixed-point quantization context for the wire format.
///
/// Coordinates are patch-relative over `[0, width]` / `[0, height]`, energies over
/// `[0, initial_energy]`, distances over `[0, patch diagonal]`, each in 2^16 levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireCodec {
    pub patch_width: f64,
    pub patch_height: f64,
    pub initial_energy: f64,
}

const LEVELS: f64 = 65535.0;

fn quantize(value: f64, span: f64) -> u64 {
    if span <= 0.0 {
        return 0;
    }
    (value / span * LEVELS).round().clamp(0.0, LEVELS) as u64
}

fn dequantize(level: u64, span: f64) -> f64 {
    level as f64 * span / LEVELS
}

impl WireCodec {
    fn diagonal(&self) -> f64 {
        self.patch_width.hypot(self.patch_height)
    }

    fn id(value: NodeId) -> Result<u64, WireError> {
        if value.0 > NodeId::MAX_WIRE {
            return Err(WireError::IdOverflow(value.0));
        }
        Ok(u64::from(value.0))
    }

    fn push_loc(&self, w: &mut BitWriter, loc: &Location) {
        w.push(quantize(loc.x, self.patch_width), COORD_BITS);
        w.push(quantize(loc.y, self.patch_height), COORD_BITS);
    }

    fn take_loc(&self, r: &mut BitReader<'_>) -> Result<Location, WireError> {
        let x = dequantize(r.take(COORD_BITS)?, self.patch_width);
        let y = dequantize(r.take(COORD_BITS)?, self.patch_height);
        Ok(Location::new(x, y))
    }

    pub fn encode(&self, msg: &Message) -> Result<Frame, WireError> {
        let mut w = BitWriter::default();
        w.push(u64::from(msg.kind().tag()), TAG_BITS);
        w.push(Self::id(msg.sender())?, ID_BITS);
        match msg {
            Message::Status {
                root, root_energy, ..
            } => {
                w.push(Self::id(*root)?, ID_BITS);
                w.push(quantize(*root_energy, self.initial_energy), ENERGY_BITS);
            }
            Message::Location { loc, parent, .. } => {
                self.push_loc(&mut w, loc);
                w.push(Self::id(*parent)?, ID_BITS);
            }
            Message::Change {
                root_loc,
                boundary_loc,
                sign,
                ..
            } => {
                self.push_loc(&mut w, root_loc);
                self.push_loc(&mut w, boundary_loc);
                let code = match sign {
                    ChangeSign::Growth => 0b01,
                    ChangeSign::Shrinkage => 0b10,
                };
                w.push(code, SIGN_BITS);
            }
            Message::Relay { samples, .. } => {
                if samples.len() > MAX_RELAY_SAMPLES {
                    return Err(WireError::TooManySamples(samples.len()));
                }
                w.push(samples.len() as u64, COUNT_BITS);
                for s in samples {
                    w.push(u64::from(s.bin), BIN_BITS);
                    self.push_loc(&mut w, &s.loc);
                    w.push(quantize(s.dist, self.diagonal()), DIST_BITS);
                }
            }
        }
        let frame = w.finish();
        debug_assert_eq!(frame.bits, message_bits(msg));
        Ok(frame)
    }

    pub fn decode(&self, frame: &Frame) -> Result<Message, WireError> {
        let mut r = BitReader { frame, pos: 0 };
        let kind = MessageKind::from_tag(r.take(TAG_BITS)? as u8);
        let sender = NodeId(r.take(ID_BITS)? as u32);
        let msg = match kind {
            MessageKind::Status => {
                let root = NodeId(r.take(ID_BITS)? as u32);
                let root_energy = dequantize(r.take(ENERGY_BITS)?, self.initial_energy);
                Message::Status {
                    sender,
                    root,
                    root_energy,
                }
            }
            MessageKind::Location => {
                let loc = self.take_loc(&mut r)?;
                let parent = NodeId(r.take(ID_BITS)? as u32);
                Message::Location {
                    sender,
                    loc,
                    parent,
                }
            }
            MessageKind::Change => {
                let root_loc = self.take_loc(&mut r)?;
                let boundary_loc = self.take_loc(&mut r)?;
                let sign = match r.take(SIGN_BITS)? {
                    0b01 => ChangeSign::Growth,
                    0b10 => ChangeSign::Shrinkage,
                    other => return Err(WireError::BadSign(other as u8)),
                };
                Message::Change {
                    sender,
                    root_loc,
                    boundary_loc,
                    sign,
                }
            }
            MessageKind::Relay => {
                let count = r.take(COUNT_BITS)? as usize;
                let mut samples = Vec::with_capacity(count);
                for _ in 0..count {
                    let bin = r.take(BIN_BITS)? as u8;
                    let loc = self.take_loc(&mut r)?;
                    let dist = dequantize(r.take(DIST_BITS)?, self.diagonal());
                    samples.push(RelaySample { bin, loc, dist });
                }
                Message::Relay { sender, samples }
            }
        };
        if r.pos != frame.bits {
            return Err(WireError::TrailingBits(frame.bits - r.pos));
        }
        Ok(msg)
    }
}

use std::fmt;

use crate::error::{Error, Result};

/// Largest block width that fits the packed representation.
pub const MAX_BLOCK_WIDTH: u8 = 64;

const BOTTOM_WIDTH: u8 = u8::MAX;

/// A fixed-width bit string, or the failure symbol ⊥.
///
/// Bits are packed big-endian: the first character of the textual form is the
/// most significant bit of `value`. Ordering is lexicographic within a width,
/// and ⊥ sorts after every bit string.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block {
    width: u8,
    value: u64,
}

/// One outcome of a [`FiniteDist`](super::FiniteDist): a tuple of blocks.
pub type Outcome = Vec<Block>;

impl Block {
    pub fn new(value: u64, width: u8) -> Self {
        assert!(width <= MAX_BLOCK_WIDTH, "block width {width} exceeds 64");
        assert!(
            width == 64 || value < (1u64 << width),
            "value {value} does not fit in {width} bits"
        );
        Block { width, value }
    }

    /// The empty bit string (used for zero-width seeds).
    pub fn empty() -> Self {
        Block { width: 0, value: 0 }
    }

    pub fn bottom() -> Self {
        Block { width: BOTTOM_WIDTH, value: 0 }
    }

    pub fn is_bottom(&self) -> bool {
        self.width == BOTTOM_WIDTH
    }

    /// Width in bits. Panics on ⊥.
    pub fn width(&self) -> u8 {
        assert!(!self.is_bottom(), "⊥ has no width");
        self.width
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// True if the block is ⊥ or a bit string of exactly `width` bits.
    pub fn fits(&self, width: u8) -> bool {
        self.is_bottom() || self.width == width
    }

    /// Concatenate bit strings left to right.
    pub fn concat(blocks: &[Block]) -> Result<Block> {
        let mut width: u32 = 0;
        let mut value: u64 = 0;
        for b in blocks {
            if b.is_bottom() {
                return Err(Error::WidthMismatch("cannot concatenate ⊥".into()));
            }
            width += b.width as u32;
            if width > MAX_BLOCK_WIDTH as u32 {
                return Err(Error::WidthMismatch(format!(
                    "concatenation exceeds {MAX_BLOCK_WIDTH} bits"
                )));
            }
            value = if b.width == 64 { b.value } else { (value << b.width) | b.value };
        }
        Ok(Block { width: width as u8, value })
    }

    /// Split into consecutive chunks of the given widths (must sum to `self.width`).
    pub fn split(&self, widths: &[u8]) -> Result<Vec<Block>> {
        if self.is_bottom() {
            return Err(Error::WidthMismatch("cannot split ⊥".into()));
        }
        let total: u32 = widths.iter().map(|&w| w as u32).sum();
        if total != self.width as u32 {
            return Err(Error::WidthMismatch(format!(
                "block of {} bits cannot be split into {:?}",
                self.width, widths
            )));
        }
        let mut remaining = self.width as u32;
        let mut out = Vec::with_capacity(widths.len());
        for &w in widths {
            remaining -= w as u32;
            let chunk = if w == 0 {
                0
            } else {
                let shifted = if remaining >= 64 { 0 } else { self.value >> remaining };
                if w == 64 { shifted } else { shifted & ((1u64 << w) - 1) }
            };
            out.push(Block { width: w, value: chunk });
        }
        Ok(out)
    }

    /// Parse `"0110"`, `""` (empty string) or `"⊥"`.
    pub fn parse(s: &str) -> Result<Block> {
        if s == "⊥" {
            return Ok(Block::bottom());
        }
        if s.len() > MAX_BLOCK_WIDTH as usize {
            return Err(Error::Parse(format!("bit string `{s}` longer than 64")));
        }
        let mut value = 0u64;
        for c in s.chars() {
            value = match c {
                '0' => value << 1,
                '1' => (value << 1) | 1,
                _ => return Err(Error::Parse(format!("`{s}` is not a bit string"))),
            };
        }
        Ok(Block { width: s.len() as u8, value })
    }

    /// Parse a hex string such as `"0x3"` into a block of the given width.
    pub fn from_hex(s: &str, width: u8) -> Result<Block> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        let value = u64::from_str_radix(digits, 16)
            .map_err(|e| Error::Parse(format!("`{s}`: {e}")))?;
        if width < 64 && value >= (1u64 << width) {
            return Err(Error::Parse(format!("`{s}` does not fit in {width} bits")));
        }
        Ok(Block { width, value })
    }

    pub fn to_hex(&self) -> String {
        if self.is_bottom() {
            "⊥".to_string()
        } else {
            format!("0x{:x}", self.value)
        }
    }

    /// Bit `i` counting from the most significant (leftmost) bit.
    pub fn bit(&self, i: u8) -> bool {
        assert!(i < self.width());
        (self.value >> (self.width - 1 - i)) & 1 == 1
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bottom() {
            return f.write_str("⊥");
        }
        for i in 0..self.width {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

pub fn outcome_to_string(o: &[Block]) -> String {
    let parts: Vec<String> = o.iter().map(|b| b.to_string()).collect();
    format!("({})", parts.join(","))
}

/// Parse an outcome given as bit strings, e.g. `["01", "1"]`.
pub fn outcome(parts: &[&str]) -> Outcome {
    parts
        .iter()
        .map(|p| Block::parse(p).expect("valid bit string"))
        .collect()
}

/// MSB-first bit writer.
#[derive(Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `n` bits of `v`, `n <= 32`.
    #[inline]
    pub fn put(&mut self, v: u32, n: u32) {
        debug_assert!(n <= 32);
        if n == 0 {
            return;
        }
        self.acc = (self.acc << n) | (v as u64 & ((1u64 << n) - 1));
        self.nbits += n;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.buf.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    /// `n` one-bits.
    pub fn ones(&mut self, mut n: u32) {
        while n >= 32 {
            self.put(u32::MAX, 32);
            n -= 32;
        }
        self.put((1u32 << n).wrapping_sub(1), n);
    }

    /// Zero-pads the final byte.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put(0, pad);
        }
        self.buf
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitError {
    /// Ran past the end of the payload at this byte offset.
    Eof(usize),
    /// Non-zero padding or unconsumed bytes after this byte offset.
    Trailing(usize),
}

pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    bit: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader { data, pos: 0, bit: 0 }
    }

    pub fn byte_offset(&self) -> usize {
        self.pos
    }

    #[inline]
    pub fn bit(&mut self) -> Result<u32, BitError> {
        let b = *self.data.get(self.pos).ok_or(BitError::Eof(self.pos))?;
        let v = (b >> (7 - self.bit)) & 1;
        self.bit += 1;
        if self.bit == 8 {
            self.bit = 0;
            self.pos += 1;
        }
        Ok(v as u32)
    }

    pub fn bits(&mut self, n: u32) -> Result<u32, BitError> {
        debug_assert!(n <= 32);
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.bit()? as u64;
        }
        Ok(v as u32)
    }

    /// Counts leading one-bits up to `limit`, consuming the terminating zero
    /// when one is found before the limit.
    pub fn unary(&mut self, limit: u32) -> Result<u32, BitError> {
        let mut n = 0;
        while n < limit {
            if self.bit()? == 0 {
                return Ok(n);
            }
            n += 1;
        }
        Ok(n)
    }

    /// Checks that only zero padding remains in the current byte and that no
    /// bytes follow it.
    pub fn finish(self) -> Result<(), BitError> {
        let mut end = self.pos;
        if self.bit > 0 {
            let rest = self.data[self.pos] & (0xFF >> self.bit);
            if rest != 0 {
                return Err(BitError::Trailing(self.pos));
            }
            end += 1;
        }
        if end != self.data.len() {
            return Err(BitError::Trailing(end));
        }
        Ok(())
    }
}

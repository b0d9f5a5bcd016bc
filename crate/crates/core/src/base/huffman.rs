use super::BaseError;

/// Canonical Huffman table as carried in a DHT segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanSpec {
    pub bits: [u8; 16],
    pub values: Vec<u8>,
}

impl HuffmanSpec {
    pub fn new(bits: &[u8; 16], values: &[u8]) -> Self {
        HuffmanSpec {
            bits: *bits,
            values: values.to_vec(),
        }
    }

    /// Code words in the order of `values`, as `(code, length)`.
    fn codes(&self) -> Result<Vec<(u16, u8)>, &'static str> {
        let total: usize = self.bits.iter().map(|&b| b as usize).sum();
        if total != self.values.len() || total > 256 {
            return Err("symbol count does not match code lengths");
        }
        let mut out = Vec::with_capacity(total);
        let mut code: u32 = 0;
        for (i, &n) in self.bits.iter().enumerate() {
            let len = i as u8 + 1;
            for _ in 0..n {
                if code >= (1 << len) {
                    return Err("code lengths overflow the code space");
                }
                out.push((code as u16, len));
                code += 1;
            }
            code <<= 1;
        }
        Ok(out)
    }
}

pub struct HuffmanEncoder {
    table: [(u16, u8); 256],
}

impl HuffmanEncoder {
    pub fn new(spec: &HuffmanSpec) -> Self {
        let mut table = [(0u16, 0u8); 256];
        let codes = spec.codes().expect("built-in tables are valid");
        for (&sym, code) in spec.values.iter().zip(codes) {
            table[sym as usize] = code;
        }
        HuffmanEncoder { table }
    }

    #[inline]
    pub fn code(&self, symbol: u8) -> (u16, u8) {
        let c = self.table[symbol as usize];
        debug_assert!(c.1 > 0, "symbol {symbol:#x} has no code");
        c
    }
}

#[derive(Debug, Clone)]
pub struct HuffmanDecoder {
    // Per code length 1..=16: smallest code, largest code (or -1) and the
    // index of the first symbol of that length.
    mincode: [i32; 17],
    maxcode: [i32; 18],
    valptr: [usize; 17],
    values: Vec<u8>,
}

impl HuffmanDecoder {
    pub fn new(spec: &HuffmanSpec) -> Result<Self, BaseError> {
        let codes = spec
            .codes()
            .map_err(|r| BaseError::malformed(0, r))?;
        let mut mincode = [0i32; 17];
        let mut maxcode = [-1i32; 18];
        let mut valptr = [0usize; 17];
        let mut k = 0usize;
        for len in 1..=16usize {
            let n = spec.bits[len - 1] as usize;
            if n > 0 {
                valptr[len] = k;
                mincode[len] = codes[k].0 as i32;
                k += n;
                maxcode[len] = codes[k - 1].0 as i32;
            }
        }
        maxcode[17] = i32::MAX;
        Ok(HuffmanDecoder {
            mincode,
            maxcode,
            valptr,
            values: spec.values.clone(),
        })
    }

    /// Decodes one symbol, pulling bits from `next_bit`.
    pub fn decode(
        &self,
        mut next_bit: impl FnMut() -> Result<u32, BaseError>,
    ) -> Result<u8, BaseError> {
        let mut code = next_bit()? as i32;
        for len in 1..=16 {
            if code <= self.maxcode[len] {
                let idx = self.valptr[len] + (code - self.mincode[len]) as usize;
                return Ok(self.values[idx]);
            }
            code = (code << 1) | next_bit()? as i32;
        }
        Err(BaseError::malformed(0, "invalid Huffman code"))
    }
}

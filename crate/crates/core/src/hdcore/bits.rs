use super::{BipolarVector, HdError};

/// Bit-packed bipolar vector. Bit `i` (LSB-first within each 64-bit word)
/// is 1 for component `+1` and 0 for `-1`; bits past `d` are zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    d: usize,
    words: Vec<u64>,
}

pub(crate) fn words_for(d: usize) -> usize {
    d.div_ceil(64)
}

/// Mask of the valid bits in the last word of a `d`-bit vector.
pub(crate) fn tail_mask(d: usize) -> u64 {
    match d % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl BitVector {
    /// All components `-1`.
    pub fn zeros(d: usize) -> Self {
        BitVector { d, words: vec![0; words_for(d)] }
    }

    /// Takes ownership of packed words, clearing any pad bits.
    pub fn from_words(d: usize, mut words: Vec<u64>) -> Result<Self, HdError> {
        if words.len() != words_for(d) {
            return Err(HdError::Corrupt(format!(
                "{} words cannot hold {} bits",
                words.len(),
                d
            )));
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(d);
        }
        Ok(BitVector { d, words })
    }

    pub fn from_signs<I: IntoIterator<Item = bool>>(d: usize, positive: I) -> Self {
        let mut v = BitVector::zeros(d);
        for (i, p) in positive.into_iter().take(d).enumerate() {
            if p {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, positive: bool) {
        assert!(i < self.d, "bit index {i} out of range for d={}", self.d);
        if positive {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Component `i` as `+1.0` / `-1.0`.
    pub fn to_f32(&self) -> Vec<f32> {
        (0..self.d).map(|i| if self.bit(i) { 1.0 } else { -1.0 }).collect()
    }

    /// Serialized form: u32 `d` then little-endian words.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.words.len());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HdError> {
        let header: [u8; 4] = bytes
            .get(..4)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| HdError::Corrupt("missing dimension header".into()))?;
        let d = u32::from_le_bytes(header) as usize;
        let body = &bytes[4..];
        if body.len() != 8 * words_for(d) {
            return Err(HdError::Corrupt(format!(
                "expected {} payload bytes, found {}",
                8 * words_for(d),
                body.len()
            )));
        }
        let words = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let v = BitVector::from_words(d, words)?;
        Ok(v)
    }
}

pub fn pack(v: &BipolarVector) -> BitVector {
    BitVector::from_signs(v.dim(), v.values().iter().map(|&x| x > 0))
}

pub fn unpack(b: &BitVector) -> BipolarVector {
    BipolarVector::from_values_unchecked((0..b.dim()).map(|i| if b.bit(i) { 1 } else { -1 }).collect())
}

/// Number of differing components.
pub fn hamming(a: &BitVector, b: &BitVector) -> Result<u32, HdError> {
    if a.d != b.d {
        return Err(HdError::DimMismatch { left: a.d, right: b.d });
    }
    let n = a.words.len();
    let mut dist = 0u32;
    for i in 0..n {
        let mut x = a.words[i] ^ b.words[i];
        if i + 1 == n {
            x &= tail_mask(a.d);
        }
        dist += x.count_ones();
    }
    Ok(dist)
}

/// Inner product of the bipolar vectors, `d - 2 * hamming`.
pub fn dot(a: &BitVector, b: &BitVector) -> Result<i64, HdError> {
    Ok(a.d as i64 - 2 * hamming(a, b)? as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bip(v: &[i8]) -> BipolarVector {
        BipolarVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pack_layout_is_lsb_first() {
        let b = pack(&bip(&[1, 1, -1, 1]));
        assert_eq!(b.words(), &[0b1011]);
        let b = pack(&BipolarVector::new(vec![-1; 64]).unwrap());
        assert_eq!(b.words(), &[0]);
    }

    #[test]
    fn dot_examples() {
        let a = pack(&bip(&[1, 1, -1, 1]));
        let b = pack(&bip(&[-1, 1, 1, 1]));
        assert_eq!(dot(&a, &b).unwrap(), 0);
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(dot(&a, &a).unwrap(), 4);
        assert!(matches!(
            hamming(&a, &BitVector::zeros(5)),
            Err(HdError::DimMismatch { .. })
        ));
    }

    #[test]
    fn pad_bits_are_cleared() {
        let v = BitVector::from_words(3, vec![u64::MAX]).unwrap();
        assert_eq!(v.words(), &[0b111]);
        assert!(BitVector::from_words(65, vec![0]).is_err());
    }

    #[test]
    fn byte_form() {
        let v = BitVector::from_signs(65, (0..65).map(|i| i % 3 == 0));
        let bytes = v.to_bytes();
        assert_eq!(bytes.len(), 4 + 16);
        assert_eq!(BitVector::from_bytes(&bytes).unwrap(), v);
        assert!(BitVector::from_bytes(&bytes[..10]).is_err());
    }

    proptest! {
        #[test]
        fn unpack_inverts_pack(bits in proptest::collection::vec(any::<bool>(), 1..300)) {
            let v = BipolarVector::new(bits.iter().map(|&b| if b { 1 } else { -1 }).collect()).unwrap();
            let p = pack(&v);
            prop_assert_eq!(p.words().len(), v.dim().div_ceil(64));
            prop_assert_eq!(unpack(&p), v);
        }

        #[test]
        fn popcount_dot_equals_integer_dot(
            pairs in proptest::collection::vec(any::<(bool, bool)>(), 1..200)
        ) {
            let x: Vec<i8> = pairs.iter().map(|p| if p.0 { 1 } else { -1 }).collect();
            let y: Vec<i8> = pairs.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
            let expected: i64 = x.iter().zip(&y).map(|(&a, &b)| (a as i64) * (b as i64)).sum();
            let got = dot(&pack(&bip(&x)), &pack(&bip(&y))).unwrap();
            prop_assert_eq!(got, expected);
        }
    }
}

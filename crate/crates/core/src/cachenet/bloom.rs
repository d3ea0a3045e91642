/// Bloom filter summarising a content router's store.
///
/// Bit positions come from double hashing of the 64-bit chunk digest:
/// `h1 + i * h2 (mod m)` with `h2` a mixed, odd variant of the digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomDigest {
    bits: Vec<u64>,
    m: u64,
    k: u32,
    inserted: usize,
}

/// Smallest filter ever allocated, so an empty store still has a filter.
pub const MIN_BITS: u64 = 64;

fn mix(mut z: u64) -> u64 {
    // splitmix64 finaliser
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn positions(m: u64, k: u32, digest: u64) -> impl Iterator<Item = u64> {
    let h2 = mix(digest) | 1;
    (0..k as u64).map(move |i| digest.wrapping_add(i.wrapping_mul(h2)) % m)
}

impl BloomDigest {
    pub fn new(m: u64, k: u32) -> Self {
        let m = m.max(MIN_BITS);
        BloomDigest {
            bits: vec![0; m.div_ceil(64) as usize],
            m,
            k: k.max(1),
            inserted: 0,
        }
    }

    /// Sized for a store of `capacity` chunks.
    pub fn for_capacity(capacity: usize, bits_per_chunk: u64, k: u32) -> Self {
        Self::new(capacity as u64 * bits_per_chunk, k)
    }

    pub fn from_digests(m: u64, k: u32, digests: impl IntoIterator<Item = u64>) -> Self {
        let mut filter = Self::new(m, k);
        for d in digests {
            filter.insert(d);
        }
        filter
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    pub fn is_clear(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn insert(&mut self, digest: u64) {
        for bit in positions(self.m, self.k, digest) {
            self.bits[(bit / 64) as usize] |= 1 << (bit % 64);
        }
        self.inserted += 1;
    }

    pub fn query(&self, digest: u64) -> bool {
        positions(self.m, self.k, digest)
            .all(|bit| self.bits[(bit / 64) as usize] & (1 << (bit % 64)) != 0)
    }

    /// Empties the filter in place.
    pub fn clear(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
        self.inserted = 0;
    }

    /// Analytic false-positive rate `(1 - e^(-k n / m))^k` at the current
    /// fill.
    pub fn expected_fpr(&self) -> f64 {
        let exponent = -(self.k as f64) * self.inserted as f64 / self.m as f64;
        (1.0 - exponent.exp()).powi(self.k as i32)
    }
}

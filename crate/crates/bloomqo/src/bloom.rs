//! Bloom filter runtime: construction, probing, sizing, analytic FPR,
//! bit-vector union, and the partitioned/broadcast application strategies.
//!
//! Two hash functions, always. Positions come from double hashing
//! `h1 + i*h2` over a seeded 64-bit hash of the key's canonical byte
//! encoding, so filters are deterministic across runs.

use crate::error::{Error, Result};

pub const HASH_COUNT: u32 = 2;
const MIN_BITS: u64 = 64;

/// A hashable key in its canonical encoding: integers as 8 little-endian
/// bytes, strings as UTF-8.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Key {
    Int(i64),
    Str(String),
}

impl Key {
    fn bytes(&self) -> Vec<u8> {
        match self {
            Key::Int(v) => v.to_le_bytes().to_vec(),
            Key::Str(s) => s.as_bytes().to_vec(),
        }
    }
}

/// FNV-1a with a seed folded in; cheap, portable, deterministic.
fn hash64(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ seed.wrapping_mul(0x9e3779b97f4a7c15);
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    // Final avalanche (splitmix64 tail) to decorrelate low bits.
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58476d1ce4e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d049bb133111eb);
    h ^ (h >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BloomParams {
    /// n: upper bound on distinct keys inserted.
    pub expected_distinct: u64,
    pub bits_per_distinct: f64,
    pub seed: u64,
}

impl BloomParams {
    pub fn new(expected_distinct: u64) -> Self {
        BloomParams {
            expected_distinct,
            bits_per_distinct: 10.0,
            seed: 0,
        }
    }

    pub fn with_bits_per_distinct(mut self, b: f64) -> Self {
        self.bits_per_distinct = b;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// m = ceil(bits_per_distinct × n), floored at 64 bits.
    pub fn num_bits(&self) -> u64 {
        let m = (self.bits_per_distinct * self.expected_distinct as f64).ceil() as u64;
        m.max(MIN_BITS)
    }
}

/// `(1 − e^(−k·n/m))^k`
pub fn analytic_fpr(n: u64, m: u64, k: u32) -> f64 {
    assert!(m > 0);
    if n == 0 {
        return 0.0;
    }
    let exponent = -(k as f64) * (n as f64) / (m as f64);
    (1.0 - exponent.exp()).powi(k as i32)
}

#[derive(Debug, Clone)]
pub struct BloomFilter {
    bits: Vec<u64>,
    num_bits: u64,
    params: BloomParams,
    inserted_count: u64,
    sealed: bool,
}

impl BloomFilter {
    pub fn create(params: BloomParams) -> BloomFilter {
        let num_bits = params.num_bits();
        let words = num_bits.div_ceil(64) as usize;
        BloomFilter {
            bits: vec![0u64; words],
            num_bits,
            params,
            inserted_count: 0,
            sealed: false,
        }
    }

    pub fn num_bits(&self) -> u64 {
        self.num_bits
    }

    pub fn params(&self) -> &BloomParams {
        &self.params
    }

    pub fn inserted_count(&self) -> u64 {
        self.inserted_count
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    fn positions(&self, key: &Key) -> [u64; 2] {
        let bytes = key.bytes();
        let h1 = hash64(&bytes, self.params.seed);
        let h2 = hash64(&bytes, self.params.seed ^ 0xa5a5_a5a5_a5a5_a5a5) | 1;
        [h1 % self.num_bits, h1.wrapping_add(h2) % self.num_bits]
    }

    pub fn insert(&mut self, key: &Key) -> Result<()> {
        if self.sealed {
            return Err(Error::SealedFilter);
        }
        for pos in self.positions(key) {
            self.bits[(pos / 64) as usize] |= 1u64 << (pos % 64);
        }
        self.inserted_count += 1;
        Ok(())
    }

    pub fn maybe_contains(&self, key: &Key) -> bool {
        self.positions(key)
            .iter()
            .all(|&pos| self.bits[(pos / 64) as usize] & (1u64 << (pos % 64)) != 0)
    }

    pub fn seal(&mut self) {
        self.sealed = true;
    }

    /// FPR implied by the bits actually set is hard to reason about, so this
    /// reports the analytic figure for the keys inserted so far.
    pub fn estimated_fpr(&self) -> f64 {
        analytic_fpr(self.inserted_count, self.num_bits, HASH_COUNT)
    }

    /// Bitwise OR. Requires identical m and hash seed.
    pub fn union(&self, other: &BloomFilter) -> Result<BloomFilter> {
        if self.num_bits != other.num_bits || self.params.seed != other.params.seed {
            return Err(Error::IncompatibleParams(format!(
                "union of {}-bit/seed {} with {}-bit/seed {}",
                self.num_bits, self.params.seed, other.num_bits, other.params.seed
            )));
        }
        let mut out = self.clone();
        for (w, o) in out.bits.iter_mut().zip(&other.bits) {
            *w |= o;
        }
        out.inserted_count += other.inserted_count;
        out.sealed = false;
        Ok(out)
    }

    pub fn bit_vector(&self) -> &[u64] {
        &self.bits
    }
}

/// How a filter is built and applied across `n` streams (§3.7-style).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionStrategy {
    /// Build side broadcast: every stream holds the full build input, so one
    /// filter built from any single stream suffices.
    BroadcastBuild,
    /// Probe side broadcast: n partial filters, merged by bit-vector union.
    BroadcastProbe,
    /// Both sides partitioned on unrelated keys: n partial filters plus a
    /// routing function to pick the partition to probe.
    PartitionUnaligned,
    /// Both sides partitioned on the join key: probe stream i consults
    /// partial filter i only.
    PartitionAligned,
}

#[derive(Debug, Clone)]
pub struct PartitionedBloomFilter {
    parts: Vec<BloomFilter>,
    n_parts: usize,
    strategy: PartitionStrategy,
    seed: u64,
    /// Merged filter for the broadcast-probe strategy.
    merged: Option<BloomFilter>,
}

impl PartitionedBloomFilter {
    pub fn strategy(&self) -> PartitionStrategy {
        self.strategy
    }

    pub fn parts(&self) -> &[BloomFilter] {
        &self.parts
    }

    /// Deterministic key → partition routing, shared by build and probe.
    pub fn partition_of(&self, key: &Key) -> usize {
        partition_of(key, self.n_parts, self.seed)
    }

    /// Probe as the strategy dictates. For partition-aligned the caller
    /// passes its stream index; the other strategies ignore it.
    pub fn maybe_contains(&self, key: &Key, probe_part: usize) -> bool {
        match self.strategy {
            PartitionStrategy::BroadcastBuild => self.parts[0].maybe_contains(key),
            PartitionStrategy::BroadcastProbe => {
                self.merged.as_ref().expect("merged at build").maybe_contains(key)
            }
            PartitionStrategy::PartitionUnaligned => {
                self.parts[self.partition_of(key)].maybe_contains(key)
            }
            PartitionStrategy::PartitionAligned => self.parts[probe_part].maybe_contains(key),
        }
    }
}

fn partition_of(key: &Key, n_parts: usize, seed: u64) -> usize {
    (hash64(&key.bytes(), seed ^ 0x5151_5151_5151_5151) % n_parts as u64) as usize
}

/// Builds the partitioned filter for `keys` under the given strategy.
///
/// Broadcast-build sees the whole build input on every stream and builds one
/// full-size filter. The partitioned strategies split the keys with the
/// routing function and size each part for its share. Broadcast-probe builds
/// n partials over the partitioned build input and merges them.
pub fn build_partitioned(
    keys: &[Key],
    n_parts: usize,
    strategy: PartitionStrategy,
    params: BloomParams,
) -> Result<PartitionedBloomFilter> {
    if n_parts == 0 {
        return Err(Error::InvalidPartitions(0));
    }
    let seed = params.seed;
    let mut pf = match strategy {
        PartitionStrategy::BroadcastBuild => {
            let mut f = BloomFilter::create(params);
            for k in keys {
                f.insert(k)?;
            }
            f.seal();
            PartitionedBloomFilter {
                parts: vec![f],
                n_parts,
                strategy,
                seed,
                merged: None,
            }
        }
        _ => {
            // Each part must admit union with its peers (same m), so size all
            // parts identically for an even share of the expected keys.
            let share = BloomParams {
                expected_distinct: params.expected_distinct.div_ceil(n_parts as u64),
                ..params
            };
            let mut parts: Vec<BloomFilter> =
                (0..n_parts).map(|_| BloomFilter::create(share.clone())).collect();
            for k in keys {
                parts[partition_of(k, n_parts, seed)].insert(k)?;
            }
            for p in &mut parts {
                p.seal();
            }
            PartitionedBloomFilter {
                parts,
                n_parts,
                strategy,
                seed,
                merged: None,
            }
        }
    };
    if strategy == PartitionStrategy::BroadcastProbe {
        let mut merged = pf.parts[0].clone();
        for p in &pf.parts[1..] {
            merged = merged.union(p)?;
        }
        merged.seal();
        pf.merged = Some(merged);
    }
    Ok(pf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizing_rule() {
        assert_eq!(BloomParams::new(1_000_000).num_bits(), 10_000_000);
        assert_eq!(BloomParams::new(0).num_bits(), 64);
        assert_eq!(BloomParams::new(2_000_000).num_bits(), 20_000_000);
    }

    #[test]
    fn no_false_negatives_and_fresh_filter_empty() {
        let mut f = BloomFilter::create(BloomParams::new(1000));
        assert!(!f.maybe_contains(&Key::Int(42)));
        for i in 0..1000 {
            f.insert(&Key::Int(i)).unwrap();
        }
        f.seal();
        for i in 0..1000 {
            assert!(f.maybe_contains(&Key::Int(i)));
        }
    }

    #[test]
    fn sealed_rejects_insert() {
        let mut f = BloomFilter::create(BloomParams::new(10));
        f.seal();
        assert!(matches!(f.insert(&Key::Int(1)), Err(Error::SealedFilter)));
    }

    #[test]
    fn analytic_fpr_values() {
        assert_eq!(analytic_fpr(0, 64, 2), 0.0);
        let f = analytic_fpr(1_000_000, 10_000_000, 2);
        assert!((f - 0.03286).abs() < 0.0005, "fpr={f}");
        // ≈0.0302 needs bits_per_distinct ≈ 10.5 at k=2.
        let f2 = analytic_fpr(1_000_000, 10_500_000, 2);
        assert!((f2 - 0.0302).abs() < 0.0005, "fpr={f2}");
    }

    #[test]
    fn empirical_fpr_matches_analytic() {
        let mut f = BloomFilter::create(BloomParams::new(10_000).with_seed(7));
        for i in 0..10_000 {
            f.insert(&Key::Int(i)).unwrap();
        }
        f.seal();
        let mut hits = 0u64;
        let probes = 100_000u64;
        for i in 0..probes {
            if f.maybe_contains(&Key::Int(1_000_000 + i as i64)) {
                hits += 1;
            }
        }
        let empirical = hits as f64 / probes as f64;
        let analytic = f.estimated_fpr();
        assert!(
            (empirical - analytic).abs() / analytic < 0.2,
            "empirical={empirical} analytic={analytic}"
        );
    }

    #[test]
    fn union_superset_and_identity() {
        let p = BloomParams::new(100).with_seed(3);
        let mut a = BloomFilter::create(p.clone());
        let mut b = BloomFilter::create(p.clone());
        a.insert(&Key::Str("k1".into())).unwrap();
        b.insert(&Key::Str("k2".into())).unwrap();
        let u = a.union(&b).unwrap();
        assert!(u.maybe_contains(&Key::Str("k1".into())));
        assert!(u.maybe_contains(&Key::Str("k2".into())));
        let empty = BloomFilter::create(p);
        assert_eq!(a.union(&empty).unwrap().bit_vector(), a.bit_vector());
    }

    #[test]
    fn union_rejects_mismatched_sizes() {
        let a = BloomFilter::create(BloomParams::new(100));
        let b = BloomFilter::create(BloomParams::new(200));
        assert!(matches!(a.union(&b), Err(Error::IncompatibleParams(_))));
    }

    #[test]
    fn unioned_partials_have_no_false_negatives() {
        let keys: Vec<Key> = (0..10_000).map(Key::Int).collect();
        let pf = build_partitioned(
            &keys,
            4,
            PartitionStrategy::BroadcastProbe,
            BloomParams::new(10_000).with_seed(11),
        )
        .unwrap();
        for k in &keys {
            assert!(pf.maybe_contains(k, 0));
        }
    }

    #[test]
    fn broadcast_build_single_part() {
        let pf = build_partitioned(
            &[Key::Int(1)],
            8,
            PartitionStrategy::BroadcastBuild,
            BloomParams::new(1),
        )
        .unwrap();
        assert_eq!(pf.parts().len(), 1);
        assert!(pf.maybe_contains(&Key::Int(1), 5));
    }

    #[test]
    fn aligned_routing_finds_all_keys() {
        let keys: Vec<Key> = (0..5_000).map(Key::Int).collect();
        let pf = build_partitioned(
            &keys,
            4,
            PartitionStrategy::PartitionAligned,
            BloomParams::new(5_000).with_seed(5),
        )
        .unwrap();
        for k in &keys {
            assert!(pf.maybe_contains(k, pf.partition_of(k)));
        }
        // Unaligned: the filter routes by key itself.
        let pf = build_partitioned(
            &keys,
            4,
            PartitionStrategy::PartitionUnaligned,
            BloomParams::new(5_000).with_seed(5),
        )
        .unwrap();
        for k in &keys {
            assert!(pf.maybe_contains(k, 0));
        }
    }

    #[test]
    fn single_partition_degenerates() {
        let keys: Vec<Key> = (0..100).map(Key::Int).collect();
        let reference = build_partitioned(
            &keys,
            1,
            PartitionStrategy::BroadcastBuild,
            BloomParams::new(100).with_seed(9),
        )
        .unwrap();
        for strat in [
            PartitionStrategy::BroadcastProbe,
            PartitionStrategy::PartitionUnaligned,
            PartitionStrategy::PartitionAligned,
        ] {
            let pf = build_partitioned(&keys, 1, strat, BloomParams::new(100).with_seed(9)).unwrap();
            for k in 0..200 {
                assert_eq!(
                    pf.maybe_contains(&Key::Int(k), 0),
                    reference.maybe_contains(&Key::Int(k), 0)
                );
            }
        }
        assert!(matches!(
            build_partitioned(&keys, 0, PartitionStrategy::BroadcastBuild, BloomParams::new(100)),
            Err(Error::InvalidPartitions(0))
        ));
    }
}

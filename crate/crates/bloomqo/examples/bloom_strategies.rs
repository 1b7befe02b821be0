//! Builds Bloom filters under each partitioning strategy and compares the
//! measured false-positive rate against the analytic two-hash model
//! (1 - e^(-2n/m))^2. No inserted key is ever reported absent.

use bloomqo::bloom::{build_partitioned, BloomParams, Key, PartitionStrategy};

fn main() {
    let n: u64 = 100_000;
    let keys: Vec<Key> = (0..n as i64).map(Key::Int).collect();
    let misses: Vec<Key> = (0..200_000i64).map(|i| Key::Int(1_000_000 + i)).collect();

    for bits in [8.0, 10.0, 16.0] {
        println!("bits_per_distinct = {bits}");
        for strategy in [
            PartitionStrategy::BroadcastBuild,
            PartitionStrategy::BroadcastProbe,
            PartitionStrategy::PartitionAligned,
            PartitionStrategy::PartitionUnaligned,
        ] {
            let params = BloomParams::new(n).with_bits_per_distinct(bits).with_seed(7);
            let pf = build_partitioned(&keys, 4, strategy, params).unwrap();
            let fn_count = keys
                .iter()
                .filter(|k| !pf.maybe_contains(k, pf.partition_of(k)))
                .count();
            let fp_count = misses
                .iter()
                .filter(|k| pf.maybe_contains(k, pf.partition_of(k)))
                .count();
            let measured = fp_count as f64 / misses.len() as f64;
            let analytic: f64 = pf
                .parts()
                .iter()
                .map(|p| p.estimated_fpr())
                .fold(0.0, f64::max);
            println!(
                "  {strategy:?}: false_negatives={fn_count} measured_fpr={measured:.5} analytic={analytic:.5}"
            );
            assert_eq!(fn_count, 0, "Bloom filters must never miss inserted keys");
        }
    }
}

//! Seed derivation. Every random choice in the project flows from one master
//! seed through this function, so runs are reproducible regardless of worker
//! parallelism or presentation order.

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent child seed for stream `stream` of `seed`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen values: any change here silently breaks reproducibility of
    // previously written experiment reports.
    #[test]
    fn derive_is_frozen() {
        assert_eq!(derive(0, 0), 0xa706dd2f4d197e6f);
        assert_eq!(derive(1, 2), 0xe06dd043328bd285);
        assert_eq!(derive(u64::MAX, 7), 0xa9a96b699dc41760);
    }

    #[test]
    fn streams_do_not_collide_for_small_indices() {
        let mut seen = std::collections::HashSet::new();
        for s in 0..1000 {
            assert!(seen.insert(derive(42, s)));
        }
    }
}

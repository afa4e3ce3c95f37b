//! Platform-stable hashing used for every seeded per-id decision.
//!
//! Flip decisions, subsample priorities and hashed features must not depend
//! on `std`'s randomized hasher or on the order examples are visited in, so
//! they all go through FNV-1a followed by a SplitMix64 finalizer.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Domain tags keep the decision streams independent for the same seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Domain {
    Flip,
    Subsample,
    Sample,
    Feature,
}

impl Domain {
    fn tag(self) -> &'static [u8] {
        match self {
            Domain::Flip => b"flip",
            Domain::Subsample => b"subsample",
            Domain::Sample => b"sample",
            Domain::Feature => b"feature",
        }
    }
}

fn fnv1a_extend(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn hash64(domain: Domain, seed: u64, bytes: &[u8]) -> u64 {
    let mut h = fnv1a_extend(FNV_OFFSET, domain.tag());
    h = fnv1a_extend(h, &[0]);
    h = fnv1a_extend(h, &seed.to_le_bytes());
    h = fnv1a_extend(h, bytes);
    mix64(h)
}

/// Uniform draw in `[0, 1)` determined by `(domain, seed, key)` alone.
pub(crate) fn unit_draw(domain: Domain, seed: u64, key: &str) -> f64 {
    (hash64(domain, seed, key.as_bytes()) >> 11) as f64 / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_reference_vectors() {
        assert_eq!(fnv1a_extend(FNV_OFFSET, b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a_extend(FNV_OFFSET, b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a_extend(FNV_OFFSET, b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn domains_are_independent() {
        let a = hash64(Domain::Flip, 7, b"id-1");
        let b = hash64(Domain::Subsample, 7, b"id-1");
        assert_ne!(a, b);
    }

    #[test]
    fn unit_draw_in_range_and_roughly_uniform() {
        let n = 20_000;
        let mut below_half = 0;
        for i in 0..n {
            let u = unit_draw(Domain::Flip, 3, &format!("ex-{i}"));
            assert!((0.0..1.0).contains(&u));
            if u < 0.5 {
                below_half += 1;
            }
        }
        // 4 sigma of Binomial(20000, 0.5) is ~283
        assert!((below_half as i64 - 10_000).abs() < 283, "{below_half}");
    }
}

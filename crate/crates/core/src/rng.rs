//! Counter-based deterministic random streams.
//!
//! Every stochastic operation in the crate takes an explicit [`SeedStream`],
//! so that a run is a pure function of its 64-bit seed. Streams split without
//! coordination: `substream(label)` derives an independent child stream, and
//! the parent is untouched. Output is a stateless hash of
//! `(key, counter)`, so identical streams always produce identical bits
//! regardless of platform or thread count.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A splittable counter-based random stream (splitmix64 core).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    key: u64,
    counter: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream {
            key: mix(seed.wrapping_add(GOLDEN)),
            counter: 0,
        }
    }

    /// Derives an independent child stream; the parent state is unchanged.
    pub fn substream(&self, label: u64) -> SeedStream {
        SeedStream {
            key: mix(self.key ^ mix(label.wrapping_mul(GOLDEN).wrapping_add(0x5851_f42d_4c95_7f2d))),
            counter: 0,
        }
    }

    /// Derives a child stream from a textual label (criterion names, file tags).
    pub fn substream_named(&self, label: &str) -> SeedStream {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.substream(h)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter += 1;
        mix(self.key.wrapping_add(c.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in {0, ..., n-1} (n > 0), by rejection to avoid modulo bias.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller. One normal per call; the paired
    /// variate is discarded so the draw count stays predictable.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Random sign, +1.0 or -1.0.
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Unit vector uniform on the sphere in `dim` dimensions.
    pub fn next_unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.next_normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_streams_identical_output() {
        let mut a = SeedStream::new(42);
        let mut b = SeedStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn substreams_are_independent_of_parent_use() {
        let parent = SeedStream::new(7);
        let child_before = parent.substream(3);
        let mut p = parent;
        p.next_u64();
        let child_after = parent.substream(3);
        assert_eq!(child_before, child_after);
        assert_ne!(child_before, parent.substream(4));
    }

    #[test]
    fn normal_moments() {
        let mut s = SeedStream::new(1);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = s.next_normal();
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn index_in_range_and_covers() {
        let mut s = SeedStream::new(9);
        let mut seen = [false; 7];
        for _ in 0..500 {
            seen[s.next_index(7)] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }
}

//! SplitMix64 and the random body models used by the sweeps.
//!
//! The generator is written out by hand so that a seed reproduces the same
//! bodies in any language.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::body::SymmetricBody;
use crate::error::Result;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Independent stream for trial `index` of a sweep seeded with `seed`.
    pub fn for_trial(seed: u64, index: u64) -> Self {
        SplitMix64::new(mix(seed ^ mix(index.wrapping_add(1).wrapping_mul(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next_u64() % (hi - lo + 1)
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u = 1.0 - self.next_f64();
        let v = self.next_f64();
        (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
    }
}

/// Random symmetric polygon: between 4 and 64 antipodal pairs in uniform
/// directions with log-uniform radii in [1/3, 3], then the symmetric hull.
pub fn random_polygon(rng: &mut SplitMix64) -> Result<SymmetricBody> {
    let m = rng.range_inclusive(4, 64) as usize;
    let pts: Vec<DVector<f64>> = (0..m)
        .map(|_| {
            let t = rng.uniform(0.0, PI);
            let r = rng.log_uniform(1.0 / 3.0, 3.0);
            DVector::from_vec(vec![r * t.cos(), r * t.sin()])
        })
        .collect();
    SymmetricBody::from_points_2d(&pts)
}

/// Random 2x2 map with condition number kept moderate.
pub fn random_map_2d(rng: &mut SplitMix64) -> nalgebra::DMatrix<f64> {
    loop {
        let m = nalgebra::DMatrix::from_fn(2, 2, |_, _| rng.uniform(-2.0, 2.0));
        let d = m.determinant().abs();
        if d > 0.3 && m.norm() < 3.5 {
            return m;
        }
    }
}

/// Random matrix in dimension `n` with |det| bounded away from zero.
pub fn random_map(rng: &mut SplitMix64, n: usize) -> nalgebra::DMatrix<f64> {
    loop {
        let m = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.uniform(-2.0, 2.0));
        let sv = m.singular_values();
        if sv.min() > 0.25 {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_stream() {
        // First outputs of SplitMix64 seeded with 0.
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn unit_interval() {
        let mut r = SplitMix64::new(7);
        for _ in 0..10_000 {
            let x = r.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn polygon_model_is_valid() {
        for i in 0..50 {
            let mut r = SplitMix64::for_trial(3, i);
            let k = random_polygon(&mut r).unwrap();
            assert_eq!(k.dim(), 2);
            assert!(k.vertices().len() >= 2);
        }
    }
}

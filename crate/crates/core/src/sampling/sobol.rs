//! Sobol points with Owen (nested uniform) scrambling.
//!
//! Points are generated in Gray-code order from the Joe–Kuo direction
//! numbers with 32-bit precision. Scrambling flips bit `b` of a coordinate
//! with a random bit that depends on the seed, the dimension and all bits
//! above `b`; this is Owen's nested permutation with the random bits supplied
//! by a hash. Digits past the 32nd are uniform random, which places every
//! scrambled coordinate in (0, 1] with a uniform marginal.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::rng::{self, splitmix64};
use crate::sobol_table::{MAX_DIM, M_INIT, POLY};
use crate::{Error, Result};

pub const SOBOL_MAX_DIM: usize = MAX_DIM;
const BITS: u32 = 32;

/// Monte Carlo or randomised quasi-Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mc,
    Rqmc,
}

/// `len` points in `(0, 1]^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointBatch {
    pub dim: usize,
    pub method: Method,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl PointBatch {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Plain pseudo-random batch of the same shape.
    pub fn pseudo_random(dim: usize, count: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, 0);
        let values = (0..dim * count).map(|_| 1.0 - r.random::<f64>()).collect();
        Self {
            dim,
            method: Method::Mc,
            seed,
            values,
        }
    }
}

fn direction_numbers(dim: usize) -> [u32; BITS as usize] {
    let mut v = [0u32; BITS as usize];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k as u32);
        }
        return v;
    }
    let poly = POLY[dim];
    let degree = (32 - poly.leading_zeros() - 1) as usize;
    let m = &M_INIT[dim];
    for k in 0..degree.min(BITS as usize) {
        v[k] = m[k] << (BITS - 1 - k as u32);
    }
    for k in degree..BITS as usize {
        let mut x = v[k - degree] ^ (v[k - degree] >> degree);
        for j in 1..degree {
            if (poly >> (degree - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// Unscrambled 32-bit Sobol integers, `count × dim`, Gray-code order,
/// starting at the origin.
pub fn sobol_points(dim: usize, count: usize) -> Result<Vec<u32>> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::invalid("dim", "must be between 1 and 64"));
    }
    let dirs: Vec<[u32; BITS as usize]> = (0..dim).map(direction_numbers).collect();
    let mut out = vec![0u32; count * dim];
    let mut x = vec![0u32; dim];
    for i in 1..count {
        // bit that changes between gray(i-1) and gray(i)
        let c = (i - 1).trailing_ones() as usize;
        if c >= BITS as usize {
            return Err(Error::invalid("count", "exceeds 2^32 points"));
        }
        for (d, xd) in x.iter_mut().enumerate() {
            *xd ^= dirs[d][c];
        }
        out[i * dim..(i + 1) * dim].copy_from_slice(&x);
    }
    Ok(out)
}

#[inline]
fn hash3(a: u64, b: u64, c: u64) -> u64 {
    splitmix64(splitmix64(a ^ splitmix64(b)) ^ c)
}

fn owen_scramble(x: u32, dim_key: u64) -> u32 {
    let mut y = x;
    for depth in 0..BITS {
        // prefix = the `depth` leading bits of the unscrambled value, tagged
        // with a marker bit so different depths never share a key
        let prefix = if depth == 0 {
            0u64
        } else {
            (x >> (BITS - depth)) as u64
        };
        let key = prefix | (1u64 << depth);
        let flip = (splitmix64(dim_key ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15)) >> 63) as u32;
        y ^= flip << (BITS - 1 - depth);
    }
    y
}

/// First `count` Owen-scrambled Sobol points in `(0, 1]^dim`.
pub fn sobol_owen(dim: usize, count: usize, seed: u64) -> Result<PointBatch> {
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    let raw = sobol_points(dim, count)?;
    let keys: Vec<u64> = (0..dim)
        .map(|d| hash3(seed, rng::tag::SCRAMBLE, d as u64))
        .collect();
    let values = raw
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let d = k % dim;
            let y = owen_scramble(x, keys[d]);
            // remaining 21 mantissa bits are the scrambled tail beyond depth 32
            let tail = hash3(keys[d], y as u64, 0x7A11) >> 43;
            let bits = ((y as u64) << 21) | tail;
            (bits as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
        })
        .collect();
    Ok(PointBatch {
        dim,
        method: Method::Rqmc,
        seed,
        values,
    })
}

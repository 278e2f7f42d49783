//! Lazily refined Brownian paths keyed by (seed, replica, particle).
//!
//! Time lives on a dyadic tick grid: one base step of length `base_step` is
//! split into 2^max_depth ticks. Values at base nodes are cumulative sums of
//! Gaussian increments read sequentially from a ChaCha stream; values strictly
//! inside a base interval are Brownian-bridge midpoints whose Gaussian is
//! addressed directly by the node's tick, so any refinement order produces the
//! same path.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: u32 = 40;

const BRIDGE_TAG: u64 = 0xb41d_6e00_0000_0001;

/// SplitMix64 finalizer, used to derive independent ChaCha keys.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}

#[inline]
fn box_muller(a: u64, b: u64) -> f64 {
    let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Dyadic time grid shared by a set of paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub base_step: f64,
    pub max_depth: u32,
}

impl PathGrid {
    pub fn new(base_step: f64, max_depth: u32) -> Result<Self> {
        if !(base_step.is_finite() && base_step > 0.0) {
            return Err(Error::param("base_step", "base step must be finite and > 0"));
        }
        if max_depth > 60 {
            return Err(Error::param("max_depth", "max depth must be <= 60"));
        }
        Ok(Self { base_step, max_depth })
    }

    pub fn ticks_per_base(&self) -> u128 {
        1u128 << self.max_depth
    }

    /// Number of ticks in a step of length base_step / 2^level.
    pub fn ticks_at_level(&self, level: u32) -> Result<u128> {
        if level > self.max_depth {
            return Err(Error::PathResolutionExhausted {
                level,
                max_depth: self.max_depth,
            });
        }
        Ok(1u128 << (self.max_depth - level))
    }

    pub fn time_of(&self, tick: u128) -> f64 {
        let p = self.ticks_per_base();
        let k = (tick / p) as f64;
        let r = (tick % p) as f64;
        (k + r / p as f64) * self.base_step
    }

    /// The tick of `t`, which must lie on the finest grid within relative 1e-12.
    pub fn tick_of(&self, t: f64) -> Result<u128> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::OffGrid {
                time: t,
                base_step: self.base_step,
            });
        }
        let scaled = t / self.base_step * self.ticks_per_base() as f64;
        let tick = scaled.round();
        let back = self.time_of(tick as u128);
        if (back - t).abs() > 1e-12 * t.abs().max(self.base_step) {
            return Err(Error::OffGrid {
                time: t,
                base_step: self.base_step,
            });
        }
        Ok(tick as u128)
    }
}

/// Key of one scalar Brownian path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathKey {
    pub seed: u64,
    pub replica: u64,
    pub particle: u64,
}

/// One scalar Brownian path with W(0) = 0.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    key: PathKey,
    grid: PathGrid,
    base_rng: ChaCha8Rng,
    bridge_rng: ChaCha8Rng,
    sqrt_base: f64,
    /// W at base node `cursor` and at `cursor - 1`.
    cursor: u64,
    current: f64,
    previous: f64,
    cache_interval: u64,
    cache: HashMap<u128, f64>,
}

impl BrownianPath {
    pub fn new(key: PathKey, grid: PathGrid) -> Self {
        let replica_seed = mix_seed(key.seed, key.replica);
        let mut base_rng = ChaCha8Rng::seed_from_u64(replica_seed);
        base_rng.set_stream(key.particle);
        let mut bridge_rng = ChaCha8Rng::seed_from_u64(mix_seed(replica_seed, BRIDGE_TAG));
        bridge_rng.set_stream(key.particle);
        Self {
            key,
            grid,
            base_rng,
            bridge_rng,
            sqrt_base: grid.base_step.sqrt(),
            cursor: 0,
            current: 0.0,
            previous: 0.0,
            cache_interval: u64::MAX,
            cache: HashMap::new(),
        }
    }

    pub fn key(&self) -> PathKey {
        self.key
    }

    pub fn grid(&self) -> PathGrid {
        self.grid
    }

    fn restart(&mut self) {
        self.base_rng.set_word_pos(0);
        self.cursor = 0;
        self.current = 0.0;
        self.previous = 0.0;
    }

    fn base_value(&mut self, k: u64) -> f64 {
        if k + 1 == self.cursor {
            return self.previous;
        }
        if k < self.cursor {
            self.restart();
        }
        while self.cursor < k {
            let z = box_muller(self.base_rng.next_u64(), self.base_rng.next_u64());
            self.previous = self.current;
            self.current += self.sqrt_base * z;
            self.cursor += 1;
        }
        self.current
    }

    fn bridge_normal(&mut self, tick: u128) -> f64 {
        // two u64 per node = four 32-bit words
        self.bridge_rng.set_word_pos(tick * 4);
        box_muller(self.bridge_rng.next_u64(), self.bridge_rng.next_u64())
    }

    /// W at a grid tick.
    pub fn value_at(&mut self, tick: u128) -> f64 {
        let p = self.grid.ticks_per_base();
        let k = (tick / p) as u64;
        let r = tick % p;
        if r == 0 {
            return self.base_value(k);
        }
        if self.cache_interval != k {
            self.cache.clear();
            self.cache_interval = k;
        }
        let left = self.base_value(k);
        let right = self.base_value(k + 1);
        self.interior_value(tick, k as u128 * p, left, right)
    }

    fn interior_value(&mut self, tick: u128, origin: u128, left: f64, right: f64) -> f64 {
        let r = tick - origin;
        let p = self.grid.ticks_per_base();
        if r == 0 {
            return left;
        }
        if r == p {
            return right;
        }
        if let Some(v) = self.cache.get(&tick) {
            return *v;
        }
        let half = 1u128 << r.trailing_zeros();
        let wl = self.interior_value(tick - half, origin, left, right);
        let wr = self.interior_value(tick + half, origin, left, right);
        let len = self.grid.base_step * (2 * half) as f64 / p as f64;
        let v = 0.5 * (wl + wr) + (0.25 * len).sqrt() * self.bridge_normal(tick);
        self.cache.insert(tick, v);
        v
    }

    /// W(t1) − W(t0) between grid ticks.
    pub fn increment_ticks(&mut self, t0: u128, t1: u128) -> f64 {
        let a = self.value_at(t0);
        let b = self.value_at(t1);
        b - a
    }

    /// W(t1) − W(t0) for times on the dyadic grid.
    pub fn increment(&mut self, t0: f64, t1: f64) -> Result<f64> {
        if !(t0 >= 0.0 && t0 < t1) {
            return Err(Error::param("interval", format!("need 0 <= t0 < t1, got [{t0}, {t1}]")));
        }
        let a = self.grid.tick_of(t0)?;
        let b = self.grid.tick_of(t1)?;
        Ok(self.increment_ticks(a, b))
    }
}

/// Independent paths for particles 0..n under one (seed, replica).
#[derive(Debug, Clone)]
pub struct PathSet {
    paths: Vec<BrownianPath>,
    grid: PathGrid,
}

impl PathSet {
    pub fn new(seed: u64, replica: u64, n: usize, grid: PathGrid) -> Self {
        let paths = (0..n as u64)
            .map(|particle| {
                BrownianPath::new(
                    PathKey {
                        seed,
                        replica,
                        particle,
                    },
                    grid,
                )
            })
            .collect();
        Self { paths, grid }
    }

    pub fn grid(&self) -> PathGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path_mut(&mut self, particle: usize) -> &mut BrownianPath {
        &mut self.paths[particle]
    }

    /// Writes W_i(t1) − W_i(t0) for every particle into `out`.
    pub fn increments_into(&mut self, t0: u128, t1: u128, out: &mut [f64]) {
        for (path, o) in self.paths.iter_mut().zip(out.iter_mut()) {
            *o = path.increment_ticks(t0, t1);
        }
    }
}

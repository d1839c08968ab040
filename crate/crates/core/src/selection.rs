//! Package-selection uncertainty: each prosumer independently picks the
//! wholesale-price package with probability `q_i`, so the number of WP
//! prosumers is Poisson-binomial.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Default upper bound on `N` for exhaustive scenario enumeration.
pub const DEFAULT_SCENARIO_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionModel {
    probs: Vec<f64>,
}

impl SelectionModel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(k) = probs.iter().position(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::Parameter(format!(
                "q[{}] = {} outside [0, 1]",
                k + 1,
                probs[k]
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `Q(n)` for `n = 0..=N`, by successive convolution with each
    /// Bernoulli factor (O(N²)).
    pub fn weights(&self) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.probs.len() + 1);
        q.push(1.0);
        for &p in &self.probs {
            q.push(0.0);
            for n in (0..q.len()).rev() {
                let stay = q[n] * (1.0 - p);
                let moved = if n > 0 { q[n - 1] * p } else { 0.0 };
                q[n] = stay + moved;
            }
        }
        q
    }

    /// Probability of one concrete selection scenario.
    pub fn scenario_prob(&self, s: &Scenario) -> Result<f64> {
        if s.len() != self.probs.len() {
            return Err(Error::Input(format!(
                "scenario covers {} prosumers, model has {}",
                s.len(),
                self.probs.len()
            )));
        }
        Ok(self
            .probs
            .iter()
            .zip(&s.wp)
            .map(|(&q, &wp)| if wp { q } else { 1.0 - q })
            .product())
    }
}

/// One realized package choice per prosumer (`true` = wholesale price).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    wp: Vec<bool>,
}

impl Scenario {
    pub fn new(wp: Vec<bool>) -> Self {
        Self { wp }
    }

    /// Bit `i` of `mask` set ⇔ prosumer `i + 1` chose WP.
    pub fn from_mask(mask: u64, n_prosumers: usize) -> Result<Self> {
        if n_prosumers > 64 {
            return Err(Error::Resource(format!(
                "bitmask scenarios support at most 64 prosumers, got {n_prosumers}"
            )));
        }
        if n_prosumers < 64 && mask >> n_prosumers != 0 {
            return Err(Error::Input(format!(
                "mask {mask:#b} has bits beyond {n_prosumers} prosumers"
            )));
        }
        Ok(Self {
            wp: (0..n_prosumers).map(|i| mask >> i & 1 == 1).collect(),
        })
    }

    pub fn all_wp(n_prosumers: usize) -> Self {
        Self {
            wp: vec![true; n_prosumers],
        }
    }

    pub fn all_ls(n_prosumers: usize) -> Self {
        Self {
            wp: vec![false; n_prosumers],
        }
    }

    pub fn mask(&self) -> u64 {
        self.wp
            .iter()
            .enumerate()
            .fold(0, |m, (i, &wp)| if wp { m | 1 << i } else { m })
    }

    pub fn len(&self) -> usize {
        self.wp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wp.is_empty()
    }

    /// Number of WP prosumers.
    pub fn n_wp(&self) -> usize {
        self.wp.iter().filter(|&&b| b).count()
    }

    pub fn is_wp(&self, i: usize) -> bool {
        self.wp[i]
    }

    pub fn packages(&self) -> &[bool] {
        &self.wp
    }

    /// 1-based ids of WP prosumers.
    pub fn wp_ids(&self) -> Vec<usize> {
        (0..self.wp.len())
            .filter(|&i| self.wp[i])
            .map(|i| i + 1)
            .collect()
    }

    pub fn ls_ids(&self) -> Vec<usize> {
        (0..self.wp.len())
            .filter(|&i| !self.wp[i])
            .map(|i| i + 1)
            .collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &wp in &self.wp {
            f.write_str(if wp { "W" } else { "L" })?;
        }
        Ok(())
    }
}

/// All `2^N` scenarios in binary-counting order (prosumer 1 is the least
/// significant bit), so scenario `k` has mask `k`.
pub fn enumerate_scenarios(n_prosumers: usize, cap: usize) -> Result<Vec<Scenario>> {
    if n_prosumers > cap.min(63) {
        return Err(Error::Resource(format!(
            "enumerating 2^{n_prosumers} scenarios exceeds the cap of N = {cap}"
        )));
    }
    (0..1u64 << n_prosumers)
        .map(|mask| Scenario::from_mask(mask, n_prosumers))
        .collect()
}

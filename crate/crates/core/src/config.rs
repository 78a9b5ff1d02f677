//! JSON model configurations and degree-parameter laws.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoreTensor, HdcbmParams};

/// Stream id for degree-parameter draws; sampling streams use node indices.
const THETA_STREAM: u64 = u64::MAX;

/// Mixes `parts` into `master` (splitmix64 finalizer per part).
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(master), |acc, &p| {
        mix(acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    Constant {
        value: f64,
    },
    /// Density proportional to `theta^{-alpha}` on `[lower, upper]`.
    Powerlaw {
        alpha: f64,
        #[serde(default = "default_lower")]
        lower: f64,
        #[serde(default = "default_upper")]
        upper: f64,
    },
    /// `scale / (slope * U + offset)` with `U ~ Unif(0, 1)`.
    ReciprocalUniform {
        #[serde(default = "default_slope")]
        slope: f64,
        #[serde(default = "default_offset")]
        offset: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

fn default_lower() -> f64 {
    0.2
}
fn default_upper() -> f64 {
    1.0
}
fn default_slope() -> f64 {
    7.0
}
fn default_offset() -> f64 {
    1.0
}
fn default_scale() -> f64 {
    1.0 / 5f64.sqrt()
}

/// Inverse-CDF draw from the bounded power law `theta^{-alpha}` on `[lo, hi]`.
pub fn powerlaw_quantile(alpha: f64, lo: f64, hi: f64, u: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        lo * (hi / lo).powf(u)
    } else {
        let e = 1.0 - alpha;
        let (a, b) = (lo.powf(e), hi.powf(e));
        (a + u * (b - a)).powf(1.0 / e)
    }
}

impl ThetaSpec {
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(THETA_STREAM);
        let theta = match *self {
            ThetaSpec::Constant { value } => vec![value; n],
            ThetaSpec::Powerlaw { alpha, lower, upper } => {
                if !(lower > 0.0 && upper > lower) {
                    return Err(Error::InvalidModel(format!("power-law support [{lower}, {upper}] is invalid")));
                }
                (0..n).map(|_| powerlaw_quantile(alpha, lower, upper, rng.random())).collect()
            }
            ThetaSpec::ReciprocalUniform { slope, offset, scale } => (0..n)
                .map(|_| scale / (slope * rng.random::<f64>() + offset))
                .collect(),
            ThetaSpec::Explicit { ref values } => {
                if values.len() != n {
                    return Err(Error::InvalidModel(format!("{} explicit theta values for n={n}", values.len())));
                }
                values.clone()
            }
        };
        Ok(theta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoreSpec {
    /// All `K^m` entries, first index slowest.
    Explicit { values: Vec<f64> },
    /// `1` on the super-diagonal, `b` elsewhere.
    SymmetricSbm { b: f64 },
    /// Entries keyed by 1-based community multisets such as `"122"` (or
    /// `"1,2,2"` when `K > 9`); missing multisets take `default`.
    Planted {
        entries: BTreeMap<String, f64>,
        #[serde(default)]
        default: f64,
    },
}

fn parse_multiset(key: &str, k: usize, m: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = if key.contains(',') {
        key.split(',').map(str::trim).collect()
    } else {
        key.split("").filter(|s| !s.is_empty()).collect()
    };
    let mut idx = parts
        .iter()
        .map(|p| match p.parse::<usize>() {
            Ok(c) if (1..=k).contains(&c) => Ok(c - 1),
            _ => Err(Error::InvalidModel(format!("bad community {p:?} in core key {key:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if idx.len() != m {
        return Err(Error::InvalidModel(format!("core key {key:?} needs {m} communities")));
    }
    idx.sort_unstable();
    Ok(idx)
}

impl CoreSpec {
    pub fn build(&self, k: usize, m: usize) -> Result<CoreTensor> {
        match self {
            CoreSpec::Explicit { values } => CoreTensor::new(k, m, values.clone()),
            CoreSpec::SymmetricSbm { b } => CoreTensor::symmetric_sbm(k, m, *b),
            CoreSpec::Planted { entries, default } => {
                let table = entries
                    .iter()
                    .map(|(key, &v)| Ok((parse_multiset(key, k, m)?, v)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                CoreTensor::from_multiset(k, m, |idx| table.get(idx).copied().unwrap_or(*default))
            }
        }
    }
}

/// Everything needed to draw one hDCBM instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    pub theta: ThetaSpec,
    pub core: CoreSpec,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Contiguous blocks: explicit labels, else explicit sizes, else sizes as
    /// equal as possible with the larger blocks first.
    pub fn labels(&self) -> Result<Vec<usize>> {
        if let Some(labels) = &self.labels {
            if labels.len() != self.n {
                return Err(Error::InvalidModel(format!("{} labels for n={}", labels.len(), self.n)));
            }
            return Ok(labels.clone());
        }
        let sizes = match &self.community_sizes {
            Some(s) => {
                if s.len() != self.k || s.iter().sum::<usize>() != self.n {
                    return Err(Error::InvalidModel(format!(
                        "community sizes {s:?} do not match K={} and n={}",
                        self.k, self.n
                    )));
                }
                s.clone()
            }
            None => (0..self.k)
                .map(|c| self.n / self.k + usize::from(c < self.n % self.k))
                .collect(),
        };
        Ok(sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
            .collect())
    }

    /// Builds the parameters; degree parameters are drawn from `self.seed`.
    pub fn build(&self) -> Result<HdcbmParams> {
        let labels = self.labels()?;
        let theta = self.theta.sample(self.n, self.seed)?;
        let core = self.core.build(self.k, self.m)?;
        HdcbmParams::new(labels, theta, core)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

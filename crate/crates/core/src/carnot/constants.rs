//! Unit-ball volume constants `c_d = |B(0, 1)|` and their on-disk cache.
//!
//! Cache format, one entry per line after the header:
//!
//! ```text
//! # carnot-lab volume constants
//! version 1
//! <group-id> <gauge-key> <c_d> <std_error> <samples> <ci_low> <ci_high>
//! ```
//!
//! Lines starting with `#` are comments. The gauge key fixes the gauge and
//! the layer shape, which is all `c_d` depends on.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CarnotGroup;
use crate::error::{LabError, Result};
use crate::reduce::block_sums;
use crate::rng::StreamKey;

pub const CACHE_VERSION: u32 = 1;
pub const DEFAULT_VOLUME_SAMPLES: usize = 10_000_000;
const Z95: f64 = 1.959_963_984_540_054;

const BUILTIN: &str = include_str!("../../data/volume_constants.txt");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeConstant {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact: bool,
}

impl VolumeConstant {
    pub fn exact(value: f64) -> Self {
        VolumeConstant { value, std_error: 0.0, samples: 0, ci_low: value, ci_high: value, exact: true }
    }
}

/// Monte Carlo estimate of `c_d` by hit counting in the unit coordinate box.
pub fn estimate_volume_constant(group: &CarnotGroup, samples: usize, seed: u64) -> VolumeConstant {
    let n = group.ambient_dim();
    let key = StreamKey::new(seed).fork_label("volume-constant").fork_label(&group.gauge_key());
    let (hits, _) = block_sums(samples, |i| {
        let mut rng = key.sample(i as u64);
        let mut z = [0.0f64; 16];
        let z = &mut z[..n];
        for v in z.iter_mut() {
            *v = 2.0 * rng.next_f64() - 1.0;
        }
        if group.gauge_polynomial(&*z) < 1.0 {
            1.0
        } else {
            0.0
        }
    });
    let box_volume = 2f64.powi(n as i32);
    let frac = hits / samples as f64;
    let value = box_volume * frac;
    let std_error = box_volume * (frac * (1.0 - frac) / samples as f64).sqrt();
    VolumeConstant {
        value,
        std_error,
        samples: samples as u64,
        ci_low: value - Z95 * std_error,
        ci_high: value + Z95 * std_error,
        exact: false,
    }
}

/// The constant shipped in the builtin table, or a fresh estimate.
pub(crate) fn builtin_or_estimate(group: &CarnotGroup) -> VolumeConstant {
    let table = ConstantsCache::parse(BUILTIN).expect("builtin constants table is well formed");
    match table.get(&group.gauge_key()) {
        Some(v) => v.clone(),
        None => {
            log::info!("estimating c_d for {} ({} samples)", group.gauge_key(), DEFAULT_VOLUME_SAMPLES);
            estimate_volume_constant(group, DEFAULT_VOLUME_SAMPLES, 0x5eed)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstantsCache {
    entries: BTreeMap<String, (String, VolumeConstant)>,
}

impl ConstantsCache {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("builtin constants table is well formed")
    }

    pub fn get(&self, gauge_key: &str) -> Option<&VolumeConstant> {
        self.entries.get(gauge_key).map(|e| &e.1)
    }

    pub fn insert(&mut self, group_id: String, gauge_key: String, value: VolumeConstant) {
        self.entries.insert(gauge_key, (group_id, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cache = ConstantsCache::default();
        let mut version = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "version" {
                let v: u32 = fields
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| LabError::Parse(format!("line {}: bad version", lineno + 1)))?;
                if v != CACHE_VERSION {
                    return Err(LabError::Parse(format!("unsupported constants version {v}")));
                }
                version = Some(v);
                continue;
            }
            if version.is_none() {
                return Err(LabError::Parse("constants file lacks a version line".into()));
            }
            if fields.len() != 7 {
                return Err(LabError::Parse(format!("line {}: expected 7 fields", lineno + 1)));
            }
            let num = |i: usize| -> Result<f64> {
                fields[i].parse::<f64>().map_err(|_| LabError::Parse(format!("line {}: bad number", lineno + 1)))
            };
            let samples = num(4)? as u64;
            let vc = VolumeConstant {
                value: num(2)?,
                std_error: num(3)?,
                samples,
                ci_low: num(5)?,
                ci_high: num(6)?,
                exact: samples == 0,
            };
            cache.insert(fields[0].to_string(), fields[1].to_string(), vc);
        }
        Ok(cache)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# carnot-lab volume constants\n");
        let _ = writeln!(out, "version {CACHE_VERSION}");
        for (key, (id, v)) in &self.entries {
            let _ = writeln!(
                out,
                "{id} {key} {:.9} {:.3e} {} {:.9} {:.9}",
                v.value, v.std_error, v.samples, v.ci_low, v.ci_high
            );
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut c = ConstantsCache::default();
        let mut v = VolumeConstant::exact(1.0);
        v.value = 4.934_802_2;
        v.std_error = 4.1e-4;
        v.samples = 10_000_000;
        v.exact = false;
        v.ci_low = 4.934;
        v.ci_high = 4.9356;
        c.insert("heisenberg:1".into(), "layered-quartic:2,1".into(), v);
        let back = ConstantsCache::parse(&c.render()).unwrap();
        let got = back.get("layered-quartic:2,1").unwrap();
        assert!((got.value - 4.934_802_2).abs() < 1e-9);
        assert_eq!(got.samples, 10_000_000);
    }

    #[test]
    fn rejects_missing_version_and_bad_rows() {
        assert!(ConstantsCache::parse("a b 1 2 3 4 5\n").is_err());
        assert!(ConstantsCache::parse("version 1\na b 1 2\n").is_err());
        assert!(ConstantsCache::parse("version 9\n").is_err());
    }

    #[test]
    fn builtin_table_parses() {
        let t = ConstantsCache::builtin();
        assert!(t.get("layered-quartic:2,1").is_some());
    }
}

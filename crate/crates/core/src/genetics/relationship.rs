use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IBD-sharing probabilities `(k0, k1, k2)` of a relative with the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relationship {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Relationship {
    pub const UNRELATED: Self = Self::preset(1.0, 0.0, 0.0);
    /// Also covers grandparent-grandchild and avuncular pairs.
    pub const HALF_SIBLING: Self = Self::preset(0.5, 0.5, 0.0);
    pub const PARENT_CHILD: Self = Self::preset(0.0, 1.0, 0.0);
    pub const FULL_SIBLING: Self = Self::preset(0.25, 0.5, 0.25);
    pub const IDENTITY: Self = Self::preset(0.0, 0.0, 1.0);

    const fn preset(k0: f64, k1: f64, k2: f64) -> Self {
        Self { k0, k1, k2 }
    }

    pub fn new(k0: f64, k1: f64, k2: f64) -> Result<Self> {
        let ks = [k0, k1, k2];
        if ks.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(Error::invalid(format!(
                "IBD coefficients must be non-negative, got ({k0}, {k1}, {k2})"
            )));
        }
        if (k0 + k1 + k2 - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "IBD coefficients must sum to 1, got ({k0}, {k1}, {k2})"
            )));
        }
        Ok(Self { k0, k1, k2 })
    }

    pub fn presets() -> [(&'static str, Relationship); 5] {
        [
            ("unrelated", Self::UNRELATED),
            ("half-sibling", Self::HALF_SIBLING),
            ("parent-child", Self::PARENT_CHILD),
            ("sibling", Self::FULL_SIBLING),
            ("identity", Self::IDENTITY),
        ]
    }

    pub fn preset_name(&self) -> Option<&'static str> {
        Self::presets()
            .into_iter()
            .find(|(_, r)| r == self)
            .map(|(n, _)| n)
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.preset_name() {
            Some(name) => f.write_str(name),
            None => write!(f, "{},{},{}", self.k0, self.k1, self.k2),
        }
    }
}

impl FromStr for Relationship {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let rel = match key.as_str() {
            "unrelated" => Self::UNRELATED,
            "half-sibling" | "half-sib" | "hs" | "hsi" => Self::HALF_SIBLING,
            "parent-child" | "pc" | "pi" | "paternity" => Self::PARENT_CHILD,
            "sibling" | "full-sibling" | "fs" | "si" => Self::FULL_SIBLING,
            "identity" | "match" => Self::IDENTITY,
            _ => {
                let parts: Vec<&str> = key.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::invalid(format!("unknown relationship `{s}`")));
                }
                let mut ks = [0.0; 3];
                for (k, p) in ks.iter_mut().zip(parts) {
                    *k = p
                        .trim()
                        .parse()
                        .map_err(|_| Error::invalid(format!("unknown relationship `{s}`")))?;
                }
                Self::new(ks[0], ks[1], ks[2])?
            }
        };
        Ok(rel)
    }
}

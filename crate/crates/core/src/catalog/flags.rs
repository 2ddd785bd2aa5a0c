use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shipped name-to-bit assignments. The bit positions are this crate's own.
const DEFAULT_FLAGS: [(&str, u8); 12] = [
    ("canonical_center", 0),
    ("bright", 1),
    ("saturated", 2),
    ("edge", 3),
    ("blended", 4),
    ("child", 5),
    ("nodeblend", 6),
    ("cosmic_ray", 7),
    ("moved", 8),
    ("primary", 9),
    ("secondary", 10),
    ("ok_run", 11),
];

/// Bijective map from flag names to bit positions in the 64-bit `flags` column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagDictionary {
    bits: BTreeMap<String, u8>,
}

impl Default for FlagDictionary {
    fn default() -> Self {
        Self {
            bits: DEFAULT_FLAGS.iter().map(|&(n, b)| (n.to_string(), b)).collect(),
        }
    }
}

impl FlagDictionary {
    /// Builds a dictionary from explicit assignments, rejecting reused bits or names.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, u8)>) -> Result<Self> {
        let mut bits = BTreeMap::new();
        let mut used = 0u64;
        for (name, bit) in pairs {
            if bit >= 64 || used & (1 << bit) != 0 || bits.contains_key(&name) {
                return Err(Error::Format(format!("flag {name:?} -> bit {bit} is not bijective")));
            }
            used |= 1 << bit;
            bits.insert(name, bit);
        }
        Ok(Self { bits })
    }

    pub fn bit(&self, name: &str) -> Result<u8> {
        self.bits.get(name).copied().ok_or_else(|| Error::UnknownFlag {
            name: name.to_string(),
            known: self.bits.keys().cloned().collect::<Vec<_>>().join(", "),
        })
    }

    pub fn mask(&self, name: &str) -> Result<u64> {
        Ok(1u64 << self.bit(name)?)
    }

    /// OR of several named masks.
    pub fn mask_all<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Result<u64> {
        names.into_iter().try_fold(0u64, |m, n| Ok(m | self.mask(n)?))
    }

    /// Adds a new flag on the lowest free bit; an existing name keeps its bit.
    pub fn define(&mut self, name: &str) -> Result<u8> {
        if let Some(&b) = self.bits.get(name) {
            return Ok(b);
        }
        let used = self.bits.values().fold(0u64, |m, &b| m | (1 << b));
        let bit = (!used).trailing_zeros();
        if bit >= 64 {
            return Err(Error::Config("all 64 flag bits are assigned".into()));
        }
        self.bits.insert(name.to_string(), bit as u8);
        Ok(bit as u8)
    }

    /// Names ordered by bit position.
    pub fn entries(&self) -> Vec<(&str, u8)> {
        let mut v: Vec<(&str, u8)> = self.bits.iter().map(|(n, &b)| (n.as_str(), b)).collect();
        v.sort_by_key(|&(_, b)| b);
        v
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_bits() {
        let d = FlagDictionary::default();
        assert_eq!(d.mask("saturated").unwrap(), 1 << 2);
        let m = d.mask_all(["primary", "ok_run"]).unwrap();
        assert_eq!(m.count_ones(), 2);
        let err = d.mask("banana").unwrap_err();
        assert!(err.to_string().contains("saturated"), "{err}");
    }

    #[test]
    fn define_and_bijectivity() {
        let mut d = FlagDictionary::default();
        assert_eq!(d.define("saturated").unwrap(), 2);
        assert_eq!(d.define("interp").unwrap(), 12);
        let rebuilt = FlagDictionary::from_pairs(d.entries().into_iter().map(|(n, b)| (n.to_string(), b))).unwrap();
        assert_eq!(rebuilt, d);
        assert!(FlagDictionary::from_pairs([("a".into(), 1), ("b".into(), 1)]).is_err());
    }
}

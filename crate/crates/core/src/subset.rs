use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Subset of {0, …, d−1} stored as a bitmask. Displayed and serialized 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(pub u32);

pub const MAX_INDEX_COUNT: usize = 20;

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(d: usize) -> Subset {
        assert!(d <= MAX_INDEX_COUNT);
        Subset(((1u64 << d) - 1) as u32)
    }

    pub fn from_indices(indices: &[usize]) -> Subset {
        Subset(indices.iter().fold(0, |m, &i| m | (1 << i)))
    }

    pub fn singleton(i: usize) -> Subset {
        Subset(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }

    /// All subsets of {0..d} in increasing bitmask order.
    pub fn all(d: usize) -> impl Iterator<Item = Subset> {
        assert!(d <= MAX_INDEX_COUNT);
        (0..(1u32 << d)).map(Subset)
    }

    /// All subsets of `self`, including ∅ and `self`.
    pub fn subsets(self) -> Vec<Subset> {
        let mut out = Vec::with_capacity(1 << self.len());
        let mut s = self.0;
        loop {
            out.push(Subset(s));
            if s == 0 {
                break;
            }
            s = (s - 1) & self.0;
        }
        out.reverse();
        out
    }

    pub fn check_within(self, d: usize) -> Result<()> {
        if d > MAX_INDEX_COUNT {
            return Err(Error::InvalidParameter(format!("d = {d} exceeds {MAX_INDEX_COUNT}")));
        }
        if self.0 >> d != 0 {
            return Err(Error::InvalidParameter(format!("subset {self} not inside 1..={d}")));
        }
        Ok(())
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let one_based: Vec<usize> = self.indices().iter().map(|i| i + 1).collect();
        one_based.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let one_based: Vec<usize> = Vec::deserialize(d)?;
        if one_based.iter().any(|&i| i == 0 || i > MAX_INDEX_COUNT) {
            return Err(serde::de::Error::custom("subset indices are 1-based and at most 20"));
        }
        Ok(Subset::from_indices(&one_based.iter().map(|i| i - 1).collect::<Vec<_>>()))
    }
}

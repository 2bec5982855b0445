use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Which functions of one tag type have already run on an object for one predicate.
///
/// Bit `j` corresponds to the `j`-th function of the tag type in configuration order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateVector {
    bits: u64,
    len: u8,
}

impl StateVector {
    pub const MAX_FUNCTIONS: usize = 64;

    pub fn empty(len: usize) -> Self {
        assert!(len <= Self::MAX_FUNCTIONS, "at most 64 functions per tag type");
        StateVector { bits: 0, len: len as u8 }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::empty(bits.len());
        for (i, b) in bits.iter().enumerate() {
            if *b {
                s.bits |= 1 << i;
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_set(&self, index: usize) -> bool {
        index < self.len() && self.bits & (1 << index) != 0
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len()
    }

    /// Sets bit `function_index`. Idempotent.
    pub fn mark_executed(&self, function_index: usize) -> Result<StateVector> {
        if function_index >= self.len() {
            return Err(Error::IndexOutOfRange { index: function_index, len: self.len() });
        }
        Ok(StateVector { bits: self.bits | (1 << function_index), len: self.len })
    }

    pub fn executed(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_set(i))
    }

    pub fn unexecuted(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.is_set(i))
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_set(i)).collect()
    }

    /// Every state of this length, in increasing bit-pattern order.
    pub fn all(len: usize) -> impl Iterator<Item = StateVector> {
        assert!(len < Self::MAX_FUNCTIONS);
        (0u64..(1u64 << len)).map(move |bits| StateVector { bits, len: len as u8 })
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.len() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.is_set(i) as u8)?;
        }
        write!(f, "]")
    }
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<u8> = self.to_bits().into_iter().map(u8::from).collect();
        v.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<u8> = Vec::deserialize(deserializer)?;
        if v.len() > Self::MAX_FUNCTIONS {
            return Err(serde::de::Error::custom("state vector longer than 64"));
        }
        if v.iter().any(|b| *b > 1) {
            return Err(serde::de::Error::custom("state bits must be 0 or 1"));
        }
        Ok(StateVector::from_bits(&v.iter().map(|b| *b == 1).collect::<Vec<_>>()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(bits: &[u8]) -> StateVector {
        StateVector::from_bits(&bits.iter().map(|b| *b == 1).collect::<Vec<_>>())
    }

    #[test]
    fn mark_last_function() {
        assert_eq!(sv(&[0, 0, 0, 0]).mark_executed(3).unwrap(), sv(&[0, 0, 0, 1]));
    }

    #[test]
    fn mark_is_idempotent() {
        assert_eq!(sv(&[0, 0, 0, 1]).mark_executed(3).unwrap(), sv(&[0, 0, 0, 1]));
        assert_eq!(sv(&[0, 0, 1, 1]).mark_executed(0).unwrap(), sv(&[1, 0, 1, 1]));
    }

    #[test]
    fn mark_out_of_range() {
        assert!(matches!(
            sv(&[0, 0]).mark_executed(2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn serde_as_bit_list() {
        let s = sv(&[1, 0, 1]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[1,0,1]");
        assert_eq!(serde_json::from_str::<StateVector>(&json).unwrap(), s);
        assert_eq!(format!("{s:?}"), "[1,0,1]");
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One deck generator or its inverse. Encoded as a signed 1-based index:
/// `+(g+1)` is generator `g`, `-(g+1)` its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct Letter(i32);

impl Letter {
    pub fn forward(gen: usize) -> Letter {
        Letter(gen as i32 + 1)
    }

    pub fn backward(gen: usize) -> Letter {
        Letter(-(gen as i32 + 1))
    }

    pub fn gen(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    pub fn code(self) -> i32 {
        self.0
    }
}

impl TryFrom<i32> for Letter {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        if v == 0 {
            Err(Error::Invalid("letter code 0 is not a generator".into()))
        } else {
            Ok(Letter(v))
        }
    }
}

impl From<Letter> for i32 {
    fn from(l: Letter) -> i32 {
        l.0
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A word in the deck generators, read left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn new() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// The inverse element: reversed order, each letter inverted.
    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Cancels adjacent `x x⁻¹` pairs.
    pub fn freely_reduced(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn slice(&self, from: usize, to: usize) -> Word {
        Word(self.0[from..to].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn from_codes(codes: &[i32]) -> Result<Word> {
        codes.iter().map(|&c| Letter::try_from(c)).collect::<Result<Vec<_>>>().map(Word)
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.0.iter().map(|l| l.gen()).max()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_round_trip() {
        let l = Letter::backward(2);
        assert_eq!(l.code(), -3);
        assert_eq!(l.gen(), 2);
        assert!(l.is_inverse());
        assert_eq!(l.inverse(), Letter::forward(2));
        assert!(Letter::try_from(0).is_err());
    }

    #[test]
    fn free_reduction_and_inverse() {
        let w = Word::from_codes(&[1, 2, -2, 3, -3, -1, 4]).unwrap();
        assert_eq!(w.freely_reduced(), Word::from_codes(&[4]).unwrap());
        let w = Word::from_codes(&[1, -2]).unwrap();
        assert_eq!(w.inverse(), Word::from_codes(&[2, -1]).unwrap());
        assert_eq!(serde_json::to_string(&w).unwrap(), "[1,-2]");
    }
}

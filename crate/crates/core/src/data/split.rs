use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bundle::GraphBundle;
use crate::error::{Error, Result};

/// Which of the three standard train/validation/test protocols to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitId {
    /// The shipped fixed split (20 labels per class, 500 val, 1000 test).
    First,
    /// Every node outside the fixed val/test lists is labeled.
    Second,
    /// Like `Second`, but only the first half of the fixed test list is held
    /// out for testing; the rest becomes training data.
    Third,
}

impl SplitId {
    pub fn number(self) -> u8 {
        match self {
            SplitId::First => 1,
            SplitId::Second => 2,
            SplitId::Third => 3,
        }
    }
}

impl TryFrom<u8> for SplitId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(SplitId::First),
            2 => Ok(SplitId::Second),
            3 => Ok(SplitId::Third),
            _ => Err(Error::usage(format!("split must be 1, 2 or 3, got {v}"))),
        }
    }
}

impl FromStr for SplitId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("split must be 1, 2 or 3, got {s:?}")))?;
        SplitId::try_from(v)
    }
}

impl fmt::Display for SplitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Boolean node masks for one split. `train` is the mask vector `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMask {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
    /// Number of labeled (training) nodes.
    pub n_bar: usize,
}

fn mask_from(n: usize, idx: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in idx {
        m[i] = true;
    }
    m
}

fn count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&b| b).count()
}

impl SplitMask {
    /// Builds masks from index lists, rejecting overlaps and empty sets.
    pub fn from_indices(n: usize, train: &[usize], val: &[usize], test: &[usize]) -> Result<Self> {
        if let Some(&i) = train.iter().chain(val).chain(test).find(|&&i| i >= n) {
            return Err(Error::usage(format!("node {i} out of range for {n} nodes")));
        }
        let mask = SplitMask {
            train: mask_from(n, train),
            val: mask_from(n, val),
            test: mask_from(n, test),
            n_bar: 0,
        };
        mask.finish()
    }

    fn finish(mut self) -> Result<Self> {
        let n = self.train.len();
        for i in 0..n {
            let k = self.train[i] as u8 + self.val[i] as u8 + self.test[i] as u8;
            if k > 1 {
                return Err(Error::usage(format!("node {i} is in more than one split set")));
            }
        }
        self.n_bar = count(&self.train);
        if self.n_bar == 0 || count(&self.val) == 0 || count(&self.test) == 0 {
            return Err(Error::usage(format!(
                "split needs non-empty train/val/test sets, got {}/{}/{} of {n} nodes",
                self.n_bar,
                count(&self.val),
                count(&self.test)
            )));
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.train.len()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        indices(&self.train)
    }

    pub fn val_indices(&self) -> Vec<usize> {
        indices(&self.val)
    }

    pub fn test_indices(&self) -> Vec<usize> {
        indices(&self.test)
    }

    /// The mask vector `z` as 0/1 reals.
    pub fn z(&self) -> Vec<f64> {
        self.train.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

/// Materializes split `id` for `bundle`.
pub fn make_split(bundle: &GraphBundle, id: SplitId) -> Result<SplitMask> {
    let n = bundle.n();
    let fixed = &bundle.fixed_split;
    match id {
        SplitId::First => SplitMask::from_indices(n, &fixed.train, &fixed.val, &fixed.test),
        SplitId::Second | SplitId::Third => {
            let test: &[usize] = if id == SplitId::Third {
                &fixed.test[..fixed.test.len().div_ceil(2)]
            } else {
                &fixed.test
            };
            let val = mask_from(n, &fixed.val);
            let test = mask_from(n, test);
            let train = (0..n).map(|i| !val[i] && !test[i]).collect();
            SplitMask {
                train,
                val,
                test,
                n_bar: 0,
            }
            .finish()
        }
    }
}

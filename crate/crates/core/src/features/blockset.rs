use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five feature transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    /// Principal-component factors of the stationary panel, with lags.
    F,
    /// Lags of the stationary panel.
    X,
    /// Moving averages of increasing order.
    Marx,
    /// Per-series moving-average factors.
    Maf,
    /// (Log-)levels of the raw panel.
    Level,
}

impl BlockKind {
    pub const ALL: [BlockKind; 5] = [BlockKind::F, BlockKind::X, BlockKind::Marx, BlockKind::Maf, BlockKind::Level];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::F => "F",
            BlockKind::X => "X",
            BlockKind::Marx => "MARX",
            BlockKind::Maf => "MAF",
            BlockKind::Level => "Level",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown feature block `{0}`")]
pub struct BlockSetError(pub String);

impl FromStr for BlockKind {
    type Err = BlockSetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BlockKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| BlockSetError(s.to_string()))
    }
}

/// A set of feature blocks, written `F-X-MARX` in canonical order. The empty
/// set is written `none`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BlockSet(u8);

impl BlockSet {
    pub const EMPTY: BlockSet = BlockSet(0);

    pub fn of(kinds: &[BlockKind]) -> Self {
        BlockSet(kinds.iter().fold(0, |acc, k| acc | k.bit()))
    }

    pub fn contains(self, kind: BlockKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn with(self, kind: BlockKind) -> Self {
        BlockSet(self.0 | kind.bit())
    }

    pub fn without(self, kind: BlockKind) -> Self {
        BlockSet(self.0 & !kind.bit())
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn kinds(self) -> impl Iterator<Item = BlockKind> {
        BlockKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }
}

impl fmt::Display for BlockSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<&str> = self.kinds().map(BlockKind::name).collect();
        f.write_str(&names.join("-"))
    }
}

impl FromStr for BlockSet {
    type Err = BlockSetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("none") {
            return Ok(BlockSet::EMPTY);
        }
        s.split(['-', '+', ',']).map(str::parse::<BlockKind>).try_fold(BlockSet::EMPTY, |acc, k| Ok(acc.with(k?)))
    }
}

impl TryFrom<String> for BlockSet {
    type Error = BlockSetError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<BlockSet> for String {
    fn from(value: BlockSet) -> Self {
        value.to_string()
    }
}

/// The fifteen information sets of the benchmark experiment.
pub const DEFAULT_FEATURESETS: [&str; 15] = [
    "F",
    "X",
    "MARX",
    "MAF",
    "F-X",
    "F-MARX",
    "F-MAF",
    "X-MARX",
    "X-MAF",
    "X-Level",
    "F-X-MARX",
    "F-X-MAF",
    "F-X-Level",
    "X-MARX-Level",
    "F-X-MARX-Level",
];

//! Pretrained target-language vectors built from an alignment.

use std::fmt;
use std::str::FromStr;

use crate::align::{CslsSpace, OrthogonalMap};
use crate::embedding::WordVectors;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferVectors {
    /// Each target word takes the mapped vector `W·x_s` of the source word
    /// `s` that is its CSLS nearest neighbour.
    Translated,
    /// Each target word keeps its own vector.
    Target,
}

impl TransferVectors {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferVectors::Translated => "translated",
            TransferVectors::Target => "target",
        }
    }
}

impl fmt::Display for TransferVectors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransferVectors {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translated" => Ok(TransferVectors::Translated),
            "target" => Ok(TransferVectors::Target),
            _ => Err(Error::invalid(format!("unknown transfer vectors {s:?} (expected translated or target)"))),
        }
    }
}

/// One vector per target word, in the target table's order, living in the
/// target space.
pub fn pretrained_target_vectors(
    source: &WordVectors,
    target: &WordVectors,
    map: &OrthogonalMap,
    mode: TransferVectors,
    csls_k: usize,
) -> Result<WordVectors> {
    if source.dim() != target.dim() || map.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: if source.dim() != target.dim() { source.dim() } else { map.dim() },
        });
    }
    match mode {
        TransferVectors::Target => Ok(target.clone()),
        TransferVectors::Translated => {
            let mapped = map.apply_rows(&source.to_matrix());
            let space = CslsSpace::new(&mapped, &target.to_matrix(), csls_k)?;
            let best = space.best_sources();
            let rows = Matrix::from_fn(target.len(), target.dim(), |t, j| mapped.get(best[t].0, j));
            WordVectors::from_rows(target.words().to_vec(), rows)
        }
    }
}

//! Persistence barcodes of weighted flag filtrations over Z2.
//!
//! Dimension 0 is computed with union-find and the elder rule. Higher
//! dimensions reduce the boundary matrix of the cliques that appear strictly
//! before the cap value; at the cap the complex is a full simplex, so every
//! class still alive there dies at the cap, except the one connected
//! component, which is reported as essential.

mod h0;
mod reduction;
mod rips;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use h0::persistence_h0;
pub use reduction::{persistence_high, MAX_SUPPORTED_DIM};
pub use rips::rips_filtration;

use crate::error::Result;
use crate::filtration::WeightedFlagFiltration;

/// Default cap on the number of simplices materialized for reduction.
pub const DEFAULT_SIMPLEX_BUDGET: u64 = 50_000_000;

/// Half-open interval `[birth, death)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bar {
    pub birth: f64,
    pub death: f64,
    /// Class survives to the final complex; `death` is the cap value.
    pub essential: bool,
}

impl Bar {
    pub fn new(birth: f64, death: f64) -> Self {
        Self {
            birth,
            death,
            essential: false,
        }
    }

    pub fn essential(birth: f64, cap: f64) -> Self {
        Self {
            birth,
            death: cap,
            essential: true,
        }
    }

    pub fn length(&self) -> f64 {
        self.death - self.birth
    }
}

/// Multiset of bars in one homology dimension.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Barcode {
    pub dim: usize,
    pub bars: Vec<Bar>,
    /// Value at which essential classes were cut off, when known.
    pub essential_cap: Option<f64>,
}

impl Barcode {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            bars: Vec::new(),
            essential_cap: None,
        }
    }

    pub fn from_pairs(dim: usize, pairs: &[(f64, f64)]) -> Self {
        Self {
            dim,
            bars: pairs.iter().map(|&(b, d)| Bar::new(b, d)).collect(),
            essential_cap: None,
        }
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// `(birth, death)` pairs in canonical order.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.bars.iter().map(|b| (b.birth, b.death)).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        pairs
    }

    /// Sorts bars by birth, then death.
    pub fn sort(&mut self) {
        self.bars.sort_by(|x, y| {
            x.birth
                .total_cmp(&y.birth)
                .then(x.death.total_cmp(&y.death))
                .then(x.essential.cmp(&y.essential))
        });
    }
}

#[derive(Serialize, Deserialize)]
struct BarcodeRepr {
    dim: usize,
    bars: Vec<[f64; 2]>,
    essential_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    essential: Vec<usize>,
}

impl Serialize for Barcode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        BarcodeRepr {
            dim: self.dim,
            bars: self.bars.iter().map(|b| [b.birth, b.death]).collect(),
            essential_cap: self.essential_cap,
            essential: self
                .bars
                .iter()
                .enumerate()
                .filter(|(_, b)| b.essential)
                .map(|(i, _)| i)
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Barcode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = BarcodeRepr::deserialize(deserializer)?;
        let mut bars: Vec<Bar> = repr.bars.iter().map(|&[b, d]| Bar::new(b, d)).collect();
        for i in repr.essential {
            match bars.get_mut(i) {
                Some(bar) => bar.essential = true,
                None => return Err(serde::de::Error::custom(format!("essential index {i} out of range"))),
            }
        }
        Ok(Barcode {
            dim: repr.dim,
            bars,
            essential_cap: repr.essential_cap,
        })
    }
}

/// Barcodes for dimensions `0..=max_dim`, bars sorted by birth then death.
pub fn barcodes(filtration: &WeightedFlagFiltration, max_dim: usize, budget: u64) -> Result<Vec<Barcode>> {
    let mut out = vec![persistence_h0(filtration)];
    out.extend(persistence_high(filtration, max_dim, budget)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_keeps_essential_flags() {
        let mut b = Barcode::from_pairs(0, &[(0.1, 0.3), (1.0 / 3.0, 0.7)]);
        b.bars.push(Bar::essential(0.0, 2.5));
        b.essential_cap = Some(2.5);
        let text = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<Barcode>(&text).unwrap(), b);
        assert!(text.starts_with(r#"{"dim":0,"bars":[[0.1,0.3],"#));
    }

    #[test]
    fn empty_barcode_schema() {
        let text = serde_json::to_string(&Barcode::empty(2)).unwrap();
        assert_eq!(text, r#"{"dim":2,"bars":[],"essential_cap":null}"#);
    }

    #[test]
    fn empty_and_single_vertex() {
        let f = WeightedFlagFiltration::empty(1.0, 2);
        let bc = barcodes(&f, 2, DEFAULT_SIMPLEX_BUDGET).unwrap();
        assert_eq!(bc.len(), 3);
        assert!(bc.iter().all(Barcode::is_empty));

        let f = WeightedFlagFiltration::new(vec![0.25], vec![0.0], 1.0, 2).unwrap();
        let bc = barcodes(&f, 2, DEFAULT_SIMPLEX_BUDGET).unwrap();
        assert_eq!(bc[0].pairs(), vec![(0.25, 1.0)]);
        assert!(bc[0].bars[0].essential);
        assert!(bc[1].is_empty() && bc[2].is_empty());
    }
}

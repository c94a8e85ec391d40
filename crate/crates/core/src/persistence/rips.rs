use crate::dynamics::DistanceMatrix;
use crate::error::{Error, Result};
use crate::filtration::WeightedFlagFiltration;

/// Vietoris-Rips filtration of a point cloud: vertices at 0, edges at their
/// Euclidean length, truncated at `max_value`.
pub fn rips_filtration<P: AsRef<[f64]>>(points: &[P], max_value: f64) -> Result<WeightedFlagFiltration> {
    if !(max_value.is_finite() && max_value >= 0.0) {
        return Err(Error::invalid(format!("max_value must be finite and non-negative, got {max_value}")));
    }
    let d = DistanceMatrix::from_points(points)?;
    let m = d.size();
    let mut edges = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..m {
            if j != k {
                edges[j * m + k] = d.get(j, k).min(max_value);
            }
        }
    }
    WeightedFlagFiltration::new(vec![0.0; m], edges, max_value, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::{barcodes, DEFAULT_SIMPLEX_BUDGET};

    #[test]
    fn two_points() {
        let f = rips_filtration(&[[0.0, 0.0], [3.0, 4.0]], 10.0).unwrap();
        let bc = barcodes(&f, 1, DEFAULT_SIMPLEX_BUDGET).unwrap();
        assert_eq!(bc[0].pairs(), vec![(0.0, 5.0), (0.0, 10.0)]);
        assert!(bc[1].is_empty());
    }

    #[test]
    fn unit_square() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let bc = barcodes(&rips_filtration(&pts, 3.0).unwrap(), 1, DEFAULT_SIMPLEX_BUDGET).unwrap();
        assert_eq!(bc[1].pairs(), vec![(1.0, 2f64.sqrt())]);
    }

    #[test]
    fn regular_hexagon() {
        let pts: Vec<[f64; 2]> = (0..6)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 3.0;
                [8.0 * a.cos(), 8.0 * a.sin()]
            })
            .collect();
        let bc = barcodes(&rips_filtration(&pts, 20.0).unwrap(), 1, DEFAULT_SIMPLEX_BUDGET).unwrap();
        assert_eq!(bc[0].len(), 6);
        assert_eq!(bc[1].len(), 1);
        let (b, d) = bc[1].pairs()[0];
        assert!((b - 8.0).abs() < 1e-9);
        assert!((d - 8.0 * 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_cap() {
        assert!(rips_filtration(&[[0.0]], f64::NAN).is_err());
        assert!(rips_filtration(&[[0.0]], -1.0).is_err());
    }
}

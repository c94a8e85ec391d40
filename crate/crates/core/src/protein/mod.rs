//! Residue-level features for proteins and their agreement with
//! crystallographic B-factors.

mod pdb;
mod stats;

use serde::{Deserialize, Serialize};

pub use pdb::{parse_pdb, ProteinModel, Residue};
pub use stats::{ols_fit, pearson, with_intercept, RegressionResult};

use crate::error::{Error, Result};
use crate::metrics::EhFeatures;
use crate::pipeline::{parallel_map, EhConfig, EhSystem, NodeEh};

/// Experiment settings for one protein.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProteinConfig {
    pub eh: EhConfig,
    /// Proteins with more residues than this are processed chain by chain.
    pub chain_split: usize,
}

impl Default for ProteinConfig {
    fn default() -> Self {
        Self {
            eh: EhConfig::default(),
            chain_split: 2000,
        }
    }
}

/// Perturbs residue `i` of `model` and returns its barcodes and features.
pub fn residue_eh(model: &ProteinModel, i: usize, cfg: &EhConfig) -> Result<NodeEh> {
    let system = EhSystem::prepare(&model.positions(), cfg.clone())?;
    let label = model.residues.get(i).map_or_else(|| i.to_string(), |r| format!("residue {}:{}", r.chain, r.label()));
    system.node_eh_unlabeled(i).map_err(|e| e.at_residue(label))
}

/// One residue's features, averaged over models.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureRow {
    pub chain: char,
    pub residue: String,
    pub features: EhFeatures,
    pub bfactor: Option<f64>,
    pub t_sync: f64,
    /// Size of the affected set (mean over models).
    pub affected: f64,
}

/// Feature table of one protein.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProteinFeatures {
    pub protein: String,
    pub models: usize,
    pub split_by_chain: bool,
    pub rows: Vec<FeatureRow>,
    pub warnings: Vec<String>,
}

impl ProteinFeatures {
    pub fn bfactors(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.bfactor).collect()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features.values[c]).collect()
    }
}

fn groups(model: &ProteinModel, split: bool) -> Vec<ProteinModel> {
    if split {
        model.chains().into_iter().map(|c| model.chain(c)).collect()
    } else {
        vec![model.clone()]
    }
}

fn model_results(model: &ProteinModel, split: bool, cfg: &EhConfig, workers: usize) -> Result<Vec<NodeEh>> {
    let mut out = Vec::with_capacity(model.residues.len());
    for group in groups(model, split) {
        let system = EhSystem::prepare(&group.positions(), cfg.clone())?;
        let nodes: Vec<usize> = (0..group.residues.len()).collect();
        let results = parallel_map(&nodes, workers, |&i| {
            let r = &group.residues[i];
            system
                .node_eh_unlabeled(i)
                .map_err(|e| e.at_residue(format!("residue {}:{}", r.chain, r.label())))
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

/// Features for every residue, averaged over models. All models must list
/// the same residues in the same order.
pub fn protein_features(
    protein: &str,
    models: &[ProteinModel],
    cfg: &ProteinConfig,
    workers: usize,
) -> Result<ProteinFeatures> {
    let first = models.first().ok_or(Error::NoCalpha)?;
    let key = |m: &ProteinModel| -> Vec<(char, String)> { m.residues.iter().map(|r| (r.chain, r.label())).collect() };
    let reference = key(first);
    if let Some(m) = models.iter().find(|m| key(m) != reference) {
        return Err(Error::Input {
            path: protein.to_string(),
            message: format!("model {} lists different residues than model {}", m.index, first.index),
        });
    }
    let split = first.residues.len() > cfg.chain_split;

    let ordered: Vec<(char, String)> = groups(first, split)
        .iter()
        .flat_map(|g| g.residues.iter().map(|r| (r.chain, r.label())))
        .collect();
    let lookup = |m: &ProteinModel| -> Vec<Option<f64>> {
        groups(m, split)
            .iter()
            .flat_map(|g| g.residues.iter().map(|r| r.b_factor).collect::<Vec<_>>())
            .collect()
    };

    let count = models.len() as f64;
    let mut sums = vec![[0.0; 9]; ordered.len()];
    let mut t_sync = vec![0.0; ordered.len()];
    let mut affected = vec![0.0; ordered.len()];
    let mut bsum: Vec<Option<f64>> = vec![Some(0.0); ordered.len()];
    let mut warnings = Vec::new();
    for model in models {
        let results = model_results(model, split, &cfg.eh, workers)?;
        for (k, r) in results.iter().enumerate() {
            for (s, v) in sums[k].iter_mut().zip(r.features.values) {
                *s += v;
            }
            t_sync[k] += r.t_sync;
            affected[k] += r.affected.len() as f64;
            warnings.extend(r.warnings.iter().map(|w| format!("model {}: {}: {w}", model.index, ordered[k].1)));
        }
        for (acc, b) in bsum.iter_mut().zip(lookup(model)) {
            *acc = match (*acc, b) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
        }
    }
    let rows = ordered
        .into_iter()
        .enumerate()
        .map(|(k, (chain, residue))| FeatureRow {
            chain,
            residue,
            features: EhFeatures {
                values: sums[k].map(|s| s / count),
            },
            bfactor: bsum[k].map(|b| b / count),
            t_sync: t_sync[k] / count,
            affected: affected[k] / count,
        })
        .collect();
    Ok(ProteinFeatures {
        protein: protein.to_string(),
        models: models.len(),
        split_by_chain: split,
        rows,
        warnings,
    })
}

/// Correlation of one feature column with the B-factors; absent when the
/// column is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub feature: String,
    pub pearson: Option<f64>,
}

/// Per-protein agreement with experimental B-factors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProteinReport {
    pub protein: String,
    pub residues: usize,
    pub models: usize,
    pub split_by_chain: bool,
    /// Each of the nine features on its own.
    pub blind: Vec<FeatureCorrelation>,
    /// In-sample correlation of the six-feature linear fit.
    pub regression: f64,
    pub regression_coefficients: Vec<f64>,
    pub regression_ridge: bool,
}

impl ProteinReport {
    pub fn blind(&self, feature: &str) -> Option<f64> {
        self.blind.iter().find(|c| c.feature == feature).and_then(|c| c.pearson)
    }
}

/// Blind correlations and the regression fit for a feature table.
pub fn bfactor_report(features: &ProteinFeatures) -> Result<ProteinReport> {
    let b = features.bfactors().ok_or_else(|| Error::Input {
        path: features.protein.clone(),
        message: "some residues have no temperature factor".into(),
    })?;
    let blind = EhFeatures::NAMES
        .iter()
        .enumerate()
        .map(|(c, name)| FeatureCorrelation {
            feature: name.to_string(),
            pearson: pearson(&features.column(c), &b).ok(),
        })
        .collect();
    let design: Vec<Vec<f64>> = features.rows.iter().map(|r| r.features.regression_row().to_vec()).collect();
    let fit = ols_fit(&with_intercept(&design), &b)?;
    Ok(ProteinReport {
        protein: features.protein.clone(),
        residues: features.rows.len(),
        models: features.models,
        split_by_chain: features.split_by_chain,
        blind,
        regression: fit.pearson,
        regression_coefficients: fit.coefficients,
        regression_ridge: fit.ridge,
    })
}

/// Features, then the B-factor report.
pub fn bfactor_experiment(
    protein: &str,
    models: &[ProteinModel],
    cfg: &ProteinConfig,
    workers: usize,
) -> Result<(ProteinFeatures, ProteinReport)> {
    let features = protein_features(protein, models, cfg, workers).map_err(|e| e.in_protein(protein))?;
    let report = bfactor_report(&features).map_err(|e| e.in_protein(protein))?;
    Ok((features, report))
}

/// Threshold values to try.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub eps_p: Vec<f64>,
    pub eps_sync: Vec<f64>,
    pub eps_d: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            eps_p: vec![0.001, 0.01, 0.1, 1.0],
            eps_sync: vec![0.05, 0.1, 0.5],
            eps_d: vec![6.0, 8.0, 10.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub eps_p: f64,
    pub eps_sync: f64,
    pub eps_d: f64,
    pub eh_inf_0: Option<f64>,
    pub regression: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub protein: String,
    pub points: Vec<SweepPoint>,
    /// Point with the highest regression correlation.
    pub best_regression: Option<SweepPoint>,
    /// Point with the highest single-feature `EH_inf_0` correlation.
    pub best_eh_inf_0: Option<SweepPoint>,
}

/// Runs the B-factor experiment at every threshold combination. Failures at
/// one point are recorded and do not stop the sweep.
pub fn sweep(protein: &str, models: &[ProteinModel], base: &ProteinConfig, grid: &SweepGrid, workers: usize) -> SweepReport {
    let mut points = Vec::new();
    for &eps_p in &grid.eps_p {
        for &eps_sync in &grid.eps_sync {
            for &eps_d in &grid.eps_d {
                let mut cfg = base.clone();
                cfg.eh.filtration.eps_p = eps_p;
                cfg.eh.filtration.eps_sync = eps_sync;
                cfg.eh.filtration.eps_d = eps_d;
                let mut point = SweepPoint {
                    eps_p,
                    eps_sync,
                    eps_d,
                    eh_inf_0: None,
                    regression: None,
                    error: None,
                };
                match bfactor_experiment(protein, models, &cfg, workers) {
                    Ok((_, report)) => {
                        point.eh_inf_0 = report.blind("EH_inf_0");
                        point.regression = Some(report.regression);
                    }
                    Err(e) => point.error = Some(e.to_string()),
                }
                points.push(point);
            }
        }
    }
    let best = |key: fn(&SweepPoint) -> Option<f64>| {
        points
            .iter()
            .filter(|p| key(p).is_some())
            .fold(None::<&SweepPoint>, |best, p| match best {
                Some(b) if key(b) >= key(p) => Some(b),
                _ => Some(p),
            })
            .cloned()
    };
    SweepReport {
        protein: protein.to_string(),
        best_regression: best(|p| p.regression),
        best_eh_inf_0: best(|p| p.eh_inf_0),
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(b: &[f64]) -> ProteinModel {
        let residues = b
            .iter()
            .enumerate()
            .map(|(k, &bf)| Residue {
                chain: 'A',
                seq: k as i32 + 1,
                insertion: ' ',
                name: "GLY".into(),
                position: [3.8 * k as f64, (k % 2) as f64 * 1.5, 0.0],
                b_factor: Some(bf),
            })
            .collect();
        ProteinModel { index: 1, residues }
    }

    #[test]
    fn report_shape() {
        let m = toy(&[10.0, 12.0, 15.0, 11.0, 20.0, 9.0, 14.0, 18.0]);
        let (features, report) = bfactor_experiment("toy", &[m], &ProteinConfig::default(), 1).unwrap();
        assert_eq!(features.rows.len(), 8);
        assert_eq!(report.blind.len(), 9);
        assert_eq!(report.regression_coefficients.len(), 7);
    }

    #[test]
    fn identical_models_average_to_one_model() {
        let m = toy(&[10.0, 12.0, 15.0, 11.0, 20.0]);
        let cfg = ProteinConfig::default();
        let one = protein_features("toy", std::slice::from_ref(&m), &cfg, 1).unwrap();
        let mut m2 = m.clone();
        m2.index = 2;
        let two = protein_features("toy", &[m, m2], &cfg, 1).unwrap();
        assert_eq!(one.rows, two.rows);
    }

    #[test]
    fn self_consistent_bfactors() {
        let m = toy(&[1.0; 7]);
        let cfg = ProteinConfig::default();
        let first = protein_features("toy", std::slice::from_ref(&m), &cfg, 1).unwrap();
        let mut relabeled = m;
        for (r, row) in relabeled.residues.iter_mut().zip(&first.rows) {
            r.b_factor = Some(row.features.values[0]);
        }
        let (_, report) = bfactor_experiment("toy", &[relabeled], &cfg, 1).unwrap();
        assert!((report.blind("EH_inf_0").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_models_rejected() {
        let a = toy(&[1.0, 2.0, 3.0]);
        let b = toy(&[1.0, 2.0]);
        assert!(matches!(
            protein_features("toy", &[a, b], &ProteinConfig::default(), 1),
            Err(Error::Input { .. })
        ));
    }
}

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use super::{train, Result, TrainConfig, TrainError};
use crate::graph::{HeteroGraph, SamplerConfig};
use crate::model::{ModelConfig, Params, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    pub parameter_count: usize,
    /// Metric name to per-seed values, seeds in input order.
    pub per_seed: BTreeMap<String, Vec<f64>>,
    /// Final curvatures per seed (empty lists for `Euclid`).
    pub curvatures: Vec<Vec<f64>>,
}

impl AblationRow {
    /// Mean and sample standard deviation of a metric.
    pub fn summary(&self, metric: &str) -> Option<(f64, f64)> {
        let v = self.per_seed.get(metric)?;
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some((mean, var.sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub seeds: Vec<u64>,
    pub metrics: Vec<String>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, variant: Variant) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }
}

impl fmt::Display for AblationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8} {:>8}", "variant", "params")?;
        for m in &self.metrics {
            write!(f, " {m:>17}")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            write!(f, "{:<8} {:>8}", r.variant.name(), r.parameter_count)?;
            for m in &self.metrics {
                let (mean, std) = r.summary(m).unwrap_or((f64::NAN, f64::NAN));
                write!(f, " {:>17}", format!("{mean:.4} ± {std:.4}"))?;
            }
            writeln!(f)?;
        }
        write!(f, "seeds: {:?}", self.seeds)
    }
}

fn is_reported(key: &str) -> bool {
    !(key == "best_epoch" || key == "epochs_run" || key.starts_with("curvature["))
}

/// Trains every variant under every seed; variants differ from `base` only
/// in the switched component. Runs execute on the current rayon pool and
/// each one is deterministic.
pub fn run_ablation(
    g: &HeteroGraph,
    base: &ModelConfig,
    sampler: &SamplerConfig,
    train_config: &TrainConfig,
    seeds: &[u64],
    variants: &[Variant],
) -> Result<AblationTable> {
    if seeds.len() < 3 {
        return Err(TrainError::Config("an ablation needs at least three seeds".into()));
    }
    if variants.is_empty() {
        return Err(TrainError::Config("no variants to compare".into()));
    }
    let jobs: Vec<(Variant, u64)> = variants
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(variant, seed)| {
            let model = ModelConfig {
                variant,
                ..base.clone()
            };
            let tc = TrainConfig {
                seed,
                ..train_config.clone()
            };
            log::info!("ablation: {} seed {seed}", variant.name());
            train(g, &model, sampler, &tc).map(|o| (o.results, o.curvatures))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut metrics: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    for (vi, &variant) in variants.iter().enumerate() {
        let model = ModelConfig {
            variant,
            ..base.clone()
        };
        let with_head = !matches!(train_config.task, super::Task::LinkPrediction);
        let parameter_count = Params::init(&model, g.metapaths().len(), with_head, 0).parameter_count();
        let mut per_seed: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut curvatures = Vec::new();
        for (results, curv) in &outcomes[vi * seeds.len()..(vi + 1) * seeds.len()] {
            for (k, v) in results.iter().filter(|(k, _)| is_reported(k)) {
                per_seed.entry(k.clone()).or_default().push(*v);
                if !metrics.contains(k) {
                    metrics.push(k.clone());
                }
            }
            curvatures.push(curv.clone());
        }
        rows.push(AblationRow {
            variant,
            parameter_count,
            per_seed,
            curvatures,
        });
    }
    Ok(AblationTable {
        seeds: seeds.to_vec(),
        metrics,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let mut per_seed = BTreeMap::new();
        per_seed.insert("macro_f1".to_string(), vec![1.0, 2.0, 3.0]);
        let row = AblationRow {
            variant: Variant::Full,
            parameter_count: 10,
            per_seed,
            curvatures: vec![],
        };
        let (m, s) = row.summary("macro_f1").unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        let table = AblationTable {
            seeds: vec![0, 1, 2],
            metrics: vec!["macro_f1".into()],
            rows: vec![row],
        };
        let text = table.to_string();
        assert!(text.contains("FULL"));
        assert!(text.contains("2.0000 ± 1.0000"));
    }

    #[test]
    fn needs_three_seeds() {
        let g = crate::graph::generate_synthetic(&Default::default()).unwrap();
        let r = run_ablation(
            &g,
            &ModelConfig::default(),
            &SamplerConfig::default(),
            &TrainConfig::default(),
            &[0, 1],
            &Variant::ALL,
        );
        assert!(r.is_err());
    }
}

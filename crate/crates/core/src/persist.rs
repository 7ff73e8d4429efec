//! Versioned JSON model file.
//!
//! Floating-point values are written with the shortest decimal that
//! round-trips exactly, so a saved genome reloads bit-for-bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{AggMode, NormalizationScope, Normalizer};
use crate::error::{Error, Result};
use crate::model::{Genome, Topology};
use crate::sbade::OptimizerConfig;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationSpec {
    pub interval: i64,
    pub mode: AggMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub optimizer: OptimizerConfig,
    pub normalization: NormalizationScope,
    pub generations_run: usize,
    pub best_generation: usize,
    pub stopped_early: bool,
    pub train_rmse: f64,
    pub validation_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub topology: Topology,
    pub genome: Genome,
    pub normalizer: Normalizer,
    pub aggregation: Option<AggregationSpec>,
    pub training: TrainingMetadata,
}

impl ModelFile {
    pub fn new(
        topology: Topology,
        genome: Genome,
        normalizer: Normalizer,
        aggregation: Option<AggregationSpec>,
        training: TrainingMetadata,
    ) -> Result<Self> {
        if genome.len() != topology.genome_length() {
            return Err(Error::Shape {
                context: "model genome",
                expected: topology.genome_length(),
                actual: genome.len(),
            });
        }
        Ok(ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            topology,
            genome,
            normalizer,
            aggregation,
            training,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Version {
                found: header.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let model: ModelFile = serde_json::from_str(text)?;
        if model.genome.len() != model.topology.genome_length() {
            return Err(Error::Shape {
                context: "model genome",
                expected: model.topology.genome_length(),
                actual: model.genome.len(),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn sample(phases: Vec<f64>) -> ModelFile {
        let topo = Topology::new(2, 2).unwrap();
        ModelFile::new(
            topo,
            Genome::new(phases).unwrap(),
            Normalizer {
                d_min: 0.1,
                d_max: 7.3,
            },
            Some(AggregationSpec {
                interval: 300,
                mode: AggMode::Mean,
            }),
            TrainingMetadata {
                optimizer: OptimizerConfig::default(),
                normalization: NormalizationScope::TrainOnly,
                generations_run: 10,
                best_generation: 4,
                stopped_early: false,
                train_rmse: 0.0123,
                validation_rmse: Some(0.02),
            },
        )
        .unwrap()
    }

    #[test]
    fn version_mismatch_rejected() {
        let text = sample(vec![0.5; 11])
            .to_json()
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            ModelFile::from_json(&text),
            Err(Error::Version {
                found: 2,
                expected: 1
            })
        ));
    }

    #[test]
    fn genome_length_checked() {
        let topo = Topology::new(2, 2).unwrap();
        let m = sample(vec![0.5; 11]);
        assert!(ModelFile::new(
            topo,
            Genome::new(vec![0.0; 3]).unwrap(),
            m.normalizer,
            None,
            m.training.clone()
        )
        .is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = sample((0..11).map(|i| 1.0 / (i as f64 + 3.0)).collect());
        m.save(&path).unwrap();
        assert_eq!(ModelFile::load(&path).unwrap(), m);
        assert!(matches!(
            ModelFile::load(&dir.path().join("missing.json")),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn genome_round_trips_bit_exactly(phases in prop::collection::vec(-1e6f64..1e6, 11)) {
            let m = sample(phases);
            let back = ModelFile::from_json(&m.to_json().unwrap()).unwrap();
            for (a, b) in m.genome.phases().iter().zip(back.genome.phases()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}

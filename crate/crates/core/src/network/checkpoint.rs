use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BasisFamily, KanLayer, KanModel, NodeBasis, ParamBlock};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "pikan-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ModelRepr {
    format: String,
    version: u32,
    shape: Vec<usize>,
    family: BasisFamily,
    seed: u64,
    layers: Vec<LayerRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRepr {
    /// Adapted knots of each input node; augmentation and R-basis parameters
    /// are rebuilt from these on load.
    knots: Vec<Vec<f64>>,
    params: ParamBlock,
}

impl From<&KanModel> for ModelRepr {
    fn from(m: &KanModel) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            shape: m.shape.clone(),
            family: m.family,
            seed: m.seed,
            layers: m
                .layers
                .iter()
                .map(|l| LayerRepr {
                    knots: l.nodes.iter().map(|n| n.grid().knots().to_vec()).collect(),
                    params: l.params.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelRepr> for KanModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        if r.format != MODEL_FORMAT || r.version != MODEL_VERSION {
            return Err(Error::Data(format!(
                "unsupported model container {} v{}",
                r.format, r.version
            )));
        }
        let layers = r
            .layers
            .into_iter()
            .map(|l| {
                let nodes = l
                    .knots
                    .into_iter()
                    .map(|k| NodeBasis::new(r.family, k))
                    .collect::<Result<Vec<_>>>()?;
                let p = &l.params;
                if p.res_w.len() != p.edges() || p.basis_w.len() != p.edges() || p.coeffs.len() != p.edges() * p.n_basis {
                    return Err(Error::Data("parameter block lengths disagree with its layout".into()));
                }
                Ok(KanLayer { nodes, params: l.params })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = KanModel::from_layers(r.family, r.seed, layers)?;
        if model.shape != r.shape {
            return Err(Error::Data(format!(
                "stored shape {:?} disagrees with layers {:?}",
                r.shape, model.shape
            )));
        }
        Ok(model)
    }
}

impl Serialize for KanModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for KanModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ModelRepr::deserialize(d)?;
        KanModel::try_from(repr).map_err(serde::de::Error::custom)
    }
}

impl KanModel {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }
}

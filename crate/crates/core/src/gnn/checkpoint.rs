//! JSON checkpoints: `{"format": "ethgnn-model/1", "model": {spec, layers, head}}`,
//! where every matrix is `{"rows", "cols", "data"}` with row-major `data`.

use serde::{Deserialize, Serialize};

use super::model::GnnModel;
use super::GnnError;
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "ethgnn-model/1";

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct Checkpoint<T> {
    format: String,
    model: GnnModel<T>,
}

pub fn checkpoint_to_json<T: Scalar>(model: &GnnModel<T>) -> String {
    let ck = Checkpoint { format: CHECKPOINT_FORMAT.to_owned(), model: model.clone() };
    serde_json::to_string_pretty(&ck).expect("model serializes")
}

pub fn checkpoint_from_json<T: Scalar>(text: &str) -> Result<GnnModel<T>, GnnError> {
    let ck: Checkpoint<T> = serde_json::from_str(text).map_err(|e| GnnError::Checkpoint(e.to_string()))?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(GnnError::Checkpoint(format!("unsupported format {:?}", ck.format)));
    }
    let mut d = None;
    for (k, layer) in ck.model.layers.iter().enumerate() {
        crate::gnn::Layer::new(layer.kind, layer.act, layer.params.clone())
            .map_err(|e| GnnError::Checkpoint(format!("layer {k}: {e}")))?;
        if let Some(prev) = d {
            if layer.params.d_in() != prev {
                return Err(GnnError::Checkpoint(format!("layer {k} input width does not match previous output")));
            }
        }
        d = Some(layer.params.d_out());
    }
    let head = &ck.model.head;
    if d.is_some_and(|d| head.w.rows() != d) || head.b.len() != head.w.cols() {
        return Err(GnnError::Checkpoint("classifier head shape mismatch".into()));
    }
    Ok(ck.model)
}

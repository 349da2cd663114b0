//! JSON parameter checkpoints: one `{name, rows, cols, data}` record per
//! tensor, row-major.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use super::ModelError;
use crate::tensor::Tensor2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

pub fn to_records<P: ParamSet>(params: &P) -> Vec<TensorRecord> {
    params
        .names()
        .into_iter()
        .zip(params.tensors())
        .map(|(name, t)| TensorRecord {
            name,
            rows: t.rows(),
            cols: t.cols(),
            data: t.data().to_vec(),
        })
        .collect()
}

/// Copies records into `params`, checking names and shapes.
pub fn from_records<P: ParamSet>(params: &mut P, records: &[TensorRecord]) -> Result<(), ModelError> {
    let names = params.names();
    if names.len() != records.len() {
        return Err(ModelError::Checkpoint(format!(
            "{} tensors stored, {} expected",
            records.len(),
            names.len()
        )));
    }
    for ((name, t), rec) in names.iter().zip(params.tensors_mut()).zip(records) {
        if *name != rec.name || t.shape() != (rec.rows, rec.cols) || rec.data.len() != rec.rows * rec.cols {
            return Err(ModelError::Checkpoint(format!(
                "record {} {}x{} does not fit {name} {:?}",
                rec.name,
                rec.rows,
                rec.cols,
                t.shape()
            )));
        }
        *t = Tensor2::from_vec(rec.rows, rec.cols, rec.data.clone());
    }
    Ok(())
}

pub fn save_checkpoint<P: ParamSet>(params: &P, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, serde_json::to_vec(&to_records(params))?)?;
    Ok(())
}

pub fn load_checkpoint<P: ParamSet>(params: &mut P, path: &Path) -> Result<(), ModelError> {
    let records: Vec<TensorRecord> = serde_json::from_slice(&std::fs::read(path)?)?;
    from_records(params, &records)
}

//! Minimal differentiable GCN: shift operator, forward/backward with a tape,
//! readouts, loss, Adam and a structure-free MLP probe.

pub mod adam;
pub mod checkpoint;
pub mod loss;
pub mod model;
pub mod params;
pub mod probe;
pub mod shift;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use loss::cross_entropy;
pub use model::{
    backward, forward, gcn_forward, init_features, readout_graph, readout_graph_backward, readout_node,
    readout_node_backward, EmbedMode, ForwardOptions, Gradients, InitPlan, Tape,
};
pub use params::{Architecture, ModelParams, ParamSet};
pub use probe::{mlp_probe_backward, mlp_probe_forward, ProbeParams, ProbeTape};
pub use shift::ShiftOperator;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("shape error in layer {layer}: {msg}")]
    Layer { layer: usize, msg: String },
    #[error("tape already consumed by a previous backward pass")]
    TapeReused,
    #[error("add mode needs input features; inject a constant feature first")]
    FeaturelessAdd,
    #[error("loss mask selects no rows")]
    EmptyMask,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("checkpoint mismatch: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

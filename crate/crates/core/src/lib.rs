//! Local virtual node (LVN) graph augmentation.
//!
//! Central nodes (picked by degree, PageRank or label-propagation
//! out-community degree) are replaced by groups of virtual nodes that copy
//! their connectivity. The crate measures the connectivity gained through
//! effective resistance and walk counts, and trains a GCN whose virtual
//! nodes carry a trainable embedding table shared by every group.
//!
//! Module map:
//!
//! - [`graph`]: CSR graph, induced subgraphs, components.
//! - [`datasets`]: TUDataset and JSON loaders, seeded splits.
//! - [`centrality`]: scores and central-set selection.
//! - [`augment`]: LVN and GVN augmentation.
//! - [`spectral`]: Laplacian spectra, resistance, walk deltas.
//! - [`gnn`]: GCN forward/backward, Adam, MLP probe.
//! - [`harness`]: training runs, sweeps, embedding analyses.

pub mod augment;
pub mod centrality;
pub mod datasets;
pub mod eigen;
pub mod gnn;
pub mod graph;
pub mod harness;
pub mod spectral;
pub mod tensor;

pub use augment::{gvn_augment, lvn_augment, AugmentedGraph, EdgeMode, VirtualNodeRecord};
pub use centrality::{select_central, CentralSelection, CentralityMethod, CentralityScores};
pub use datasets::{load_node_dataset, load_tudataset, make_splits, GraphDataset, SplitSpec};
pub use graph::{Graph, NodeSubset};
pub use tensor::Tensor2;

//! Recurrent forecasting network written from scratch: Elman and LSTM
//! cells, bidirectional stacking, the MIMO forecast head, exact reverse-mode
//! gradients and Adam.

mod cell;
mod checkpoint;
mod dropout;
mod network;
mod params;
mod recurrent;

pub use cell::{elman_cell_forward, lstm_cell_forward, CellState, LstmCellParams};
pub use checkpoint::{Checkpoint, RngState, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dropout::{dropout_apply, DropoutMode};
pub use network::{CellKind, Network, NetworkConfig};
pub use params::{adam_step, clip_grad_norm, AdamConfig, NetworkParameters, Param};

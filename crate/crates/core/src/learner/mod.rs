//! Learned weight generation: the generator/evaluator pair and its
//! alternating training loop, batch-mean weights, a finite-difference
//! gradient audit, a simulated-annealing baseline, and checkpoint I/O.

mod anneal;
mod checkpoint;
mod gradcheck;
mod layers;
mod math;
mod nets;
mod train;

pub use anneal::{anneal, AnnealResult, AnnealSchedule};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointPayload, CHECKPOINT_VERSION,
};
pub use gradcheck::{finite_diff_check_evaluator, finite_diff_check_generator};
pub use layers::{pool_edge_features, Activation, Conv2d, Gcn, Linear, NormAdj};
pub use nets::{
    batch_mean_weights, evaluate, evaluator_loss, generate, generate_with_context,
    message_passing, BatchMeanWeights, EvaluatorParams, GeneratorParams, GridContext, NetConfig,
};
pub use train::{train, HistoryRecord, TrainConfig, TrainObjective, TrainOutput};

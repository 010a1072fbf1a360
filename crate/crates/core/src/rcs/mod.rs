//! The reformulation category selector: a masked two-layer Q-network
//! trained by deep Q-learning, used greedily to pick top-k categories.

mod bandit;
mod checkpoint;
mod encoder;
mod network;
mod policy;
mod train;

pub use bandit::BanditEnvironment;
pub use checkpoint::{top_k_categories, RcsCheckpoint, Selector};
pub use encoder::{
    Encoder, EncoderInfo, HashedBowEncoder, ENCODER_KIND, ENCODER_VERSION, HISTORY_TOKEN_WEIGHT, MIN_DIM,
};
pub use network::{Gradient, QNetwork, MASKED_Q};
pub use policy::{boltzmann_probabilities, greedy, sample_action, top_k};
pub use train::{
    td_targets, train_dqn, train_rcs, DqnConfig, Environment, Experience, ExperienceQueue, QaEnvironment, RewardMode,
    TrainStats, Transition,
};

//! Individual–area message passing network with actor and critic heads.
//!
//! Individuals and areas form a bipartite graph whose edges carry each
//! individual's hours per area on a given day. Per layer, a masked row-softmax
//! of the visit hours gives every individual a distribution over the areas
//! they visited. Areas aggregate the features of their visitors under those
//! weights, and individuals then aggregate the features of the areas they
//! visited. Contacts between individuals are therefore modelled through the
//! areas they share, and no individual × individual matrix is ever built.
//!
//! Forward and backward passes are written out by hand over dense arrays.

mod backward;
mod checkpoint;
mod features;
mod forward;
mod params;

pub use backward::backward;
pub use checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointMeta, MANIFEST_FILE, WEIGHTS_FILE,
};
pub use features::{build_features, masked_row_softmax, StateFeatures, FEATURE_DIM};
pub use forward::{actor_forward, critic_forward, evaluate, gnn_forward, Evaluation, ForwardCache};
pub use params::{init_params, Dense, GnnParams, GraphLayer, ModelConfig, Trunk, TrunkKind};

/// Raw actor outputs per individual, one per intervention action.
pub const ACTION_COUNT: usize = 4;

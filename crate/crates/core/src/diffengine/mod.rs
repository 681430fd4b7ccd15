//! Input derivatives of a network (forward second-order jets) and parameter
//! gradients of losses built from them (reverse adjoints through the jets).

mod engine;
mod jet;
mod lin;

pub use engine::{
    accumulate_loss_gradient, eval_jets, eval_with_input_derivs, loss_gradient, InputDerivs, JetEngine, JetSpec,
    JetState, NetJet, NetJetAdjoint,
};
pub use jet::Jet2;
pub use lin::{Lin, MAX_COMPONENTS};

use crate::network::ParamSet;

/// Largest number of input directions a jet carries.
pub const MAX_DIRS: usize = 4;

/// Gradient with respect to every model parameter, in model layout.
pub type GradBuffer = ParamSet;

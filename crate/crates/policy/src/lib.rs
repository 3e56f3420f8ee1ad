//! Controllers that map a [`StateVector`] to an [`Action`].
//!
//! Every implementation of [`Policy`] is deterministic and returns actions that
//! already satisfy the physical ranges.

mod baseline;
mod error;
mod mlp;
mod normalize;

pub use baseline::{BaselineController, BaselineGains};
pub use error::PolicyError;
pub use harbor_env::{Action, StateVector};
pub use mlp::{mlp_forward, Activation, DenseLayer, MlpPolicy, MlpWeights};
pub use normalize::{denormalize, normalize, NormalizedAction};

/// The black-box controller contract.
pub trait Policy: Send + Sync {
    fn name(&self) -> &str;

    fn predict(&self, x: &StateVector) -> Result<Action, PolicyError>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict(&self, x: &StateVector) -> Result<Action, PolicyError> {
        (**self).predict(x)
    }
}

impl<P: Policy + ?Sized> Policy for std::sync::Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict(&self, x: &StateVector) -> Result<Action, PolicyError> {
        (**self).predict(x)
    }
}

/// Physical clip of an action; see [`Action::clamp`].
pub fn clamp(a: Action) -> Action {
    a.clamp()
}

pub(crate) fn check_finite(x: &StateVector) -> Result<(), PolicyError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(PolicyError::NonFiniteInput)
    }
}

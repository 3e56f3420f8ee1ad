use harbor_env::{Action, ACTION_BOUNDS, N_ACTIONS};
use serde::{Deserialize, Serialize};

/// Action affinely mapped so each physical range becomes `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAction(pub [f64; N_ACTIONS]);

pub fn normalize(a: &Action) -> NormalizedAction {
    let mut out = a.to_array();
    for (v, b) in out.iter_mut().zip(ACTION_BOUNDS.iter()) {
        *v = 2.0 * (*v - b.min) / b.width() - 1.0;
    }
    NormalizedAction(out)
}

pub fn denormalize(n: &NormalizedAction) -> Action {
    let mut out = n.0;
    for (v, b) in out.iter_mut().zip(ACTION_BOUNDS.iter()) {
        *v = b.min + (*v + 1.0) * 0.5 * b.width();
    }
    Action::from_array(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_map_to_unit_interval() {
        let lo = Action::from_array(ACTION_BOUNDS.map(|b| b.min));
        let hi = Action::from_array(ACTION_BOUNDS.map(|b| b.max));
        assert_eq!(normalize(&lo).0, [-1.0; 5]);
        assert_eq!(normalize(&hi).0, [1.0; 5]);
        let mid = denormalize(&NormalizedAction([0.0; 5]));
        assert_eq!(mid.f1, 15.0);
        assert_eq!(mid.f2, 15.0);
        assert_eq!(mid.f3, 0.0);
        assert_eq!(mid.alpha1, 0.0);
    }
}

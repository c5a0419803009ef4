use super::moves::{Engine, Solution};
use super::{Budget, EPS};

/// Applies the best move under `arc` while it improves by more than [`EPS`]. With a
/// budget, it is checked before every sweep. Returns true on reaching a local optimum.
pub(crate) fn descend(
    engine: &Engine,
    sol: &mut Solution,
    arc: &impl Fn(usize, usize) -> f64,
    mut budget: Option<&mut Budget>,
) -> bool {
    loop {
        if budget.as_ref().is_some_and(|b| b.expired()) {
            return false;
        }
        let (best, scanned) = engine.best_move(sol, arc);
        if let Some(b) = budget.as_mut() {
            b.charge(scanned);
        }
        match best {
            Some((mv, _, delta)) if delta < -EPS => engine.apply(sol, mv),
            _ => return true,
        }
    }
}

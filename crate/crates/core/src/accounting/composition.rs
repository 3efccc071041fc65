use crate::tree_noise::in_set;

/// `IN(q) = {t <= T : q in S_t}` for `q = 1..=T`.
pub fn in_sets(horizon: usize) -> Vec<Vec<usize>> {
    (1..=horizon).map(|q| in_set(q, horizon)).collect()
}

/// Largest `|IN(q)|` over rounds of a horizon-`T` tree.
pub fn max_in_set(horizon: usize) -> usize {
    (1..=horizon).map(|q| in_set(q, horizon).len()).max().unwrap_or(0)
}

/// Adaptive composition over the tree: each round `q` contributes to the
/// nodes in `IN(q)`, node `t` is `(alpha, alpha rho_t^2 / 2)`-RDP, and the
/// whole release is `(alpha, S)`-RDP with
/// `S = max_q sum_{t in IN(q)} alpha rho_t^2 / 2`.
pub fn tree_composition_budget(alpha: f64, rho_per_node: &[f64], in_sets: &[Vec<usize>]) -> f64 {
    in_sets
        .iter()
        .map(|nodes| nodes.iter().map(|&t| alpha * rho_per_node[t - 1].powi(2) / 2.0).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree_noise::log2_2t;

    #[test]
    fn in_set_cardinality() {
        for horizon in [1, 2, 7, 8, 100, 1024, 4096] {
            for (q, set) in in_sets(horizon).iter().enumerate() {
                assert!(set.len() as f64 <= log2_2t(horizon), "T={horizon} q={}", q + 1);
            }
        }
        assert!(in_sets(8).iter().all(|s| s.len() <= 4));
    }

    #[test]
    fn uniform_calibration_recovers_budget() {
        let (rho, alpha) = (0.7, 3.0);
        for horizon in [1, 5, 64, 1000] {
            let node = rho / log2_2t(horizon).sqrt();
            let s = tree_composition_budget(alpha, &vec![node; horizon], &in_sets(horizon));
            assert!(s <= alpha * rho * rho / 2.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn single_node() {
        let s = tree_composition_budget(2.0, &[0.5], &in_sets(1));
        assert_eq!(s, 2.0 * 0.25 / 2.0);
    }
}

use serde::Serialize;

use crate::tree_noise::log2_2t;

/// Sensitivity of the tree node sum `F_t`:
/// `2 (k+1) t^{k-1} (G + H max_disp)`.
pub fn delta_sensitivity(t: usize, k: u32, g: f64, h: f64, max_disp: f64) -> f64 {
    2.0 * (k as f64 + 1.0) * (t as f64).powi(k as i32 - 1) * (g + h * max_disp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityEntry {
    pub node: usize,
    pub delta: f64,
    pub sigma_sq: f64,
}

/// Per-node sensitivity and noise variance recorded during a run.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityLedger {
    pub horizon: usize,
    pub k: u32,
    pub rho: f64,
    entries: Vec<SensitivityEntry>,
}

impl SensitivityLedger {
    pub fn new(horizon: usize, k: u32, rho: f64) -> Self {
        SensitivityLedger {
            horizon,
            k,
            rho,
            entries: Vec::with_capacity(horizon),
        }
    }

    pub fn push(&mut self, node: usize, delta: f64, sigma_sq: f64) {
        debug_assert_eq!(node, self.entries.len() + 1);
        self.entries.push(SensitivityEntry { node, delta, sigma_sq });
    }

    pub fn entries(&self) -> &[SensitivityEntry] {
        &self.entries
    }

    pub fn get(&self, node: usize) -> Option<&SensitivityEntry> {
        node.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    /// Nodes violating `sigma_i^2 >= Delta_i^2 log2(2T) / rho^2`.
    pub fn calibration_violations(&self) -> Vec<usize> {
        if self.rho.is_infinite() {
            return Vec::new();
        }
        let l = log2_2t(self.horizon);
        self.entries
            .iter()
            .filter(|e| e.sigma_sq < e.delta * e.delta * l / (self.rho * self.rho))
            .map(|e| e.node)
            .collect()
    }
}

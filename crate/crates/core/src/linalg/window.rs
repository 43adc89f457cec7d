use serde::{Deserialize, Serialize};

/// Eigenvalues strictly below a threshold together with their count and
/// the deficit `Σ (threshold − e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub threshold: f64,
    pub count: usize,
    pub eigenvalues: Vec<f64>,
    pub deficit: f64,
}

impl SpectralWindow {
    /// Builds a window from eigenvalues, sorting them and dropping anything
    /// at or above the threshold.
    pub fn from_eigenvalues(threshold: f64, mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.retain(|&e| e < threshold);
        eigenvalues.sort_by(f64::total_cmp);
        let deficit = deficit_sum(threshold, &eigenvalues);
        SpectralWindow {
            threshold,
            count: eigenvalues.len(),
            eigenvalues,
            deficit,
        }
    }

    pub fn empty(threshold: f64) -> Self {
        SpectralWindow {
            threshold,
            count: 0,
            eigenvalues: Vec::new(),
            deficit: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Restricts the window to a lower threshold.
    pub fn restrict(&self, threshold: f64) -> SpectralWindow {
        debug_assert!(threshold <= self.threshold);
        SpectralWindow::from_eigenvalues(threshold, self.eigenvalues.clone())
    }

    /// Number of stored eigenvalues strictly below `level`.
    pub fn count_below(&self, level: f64) -> usize {
        self.eigenvalues.partition_point(|&e| e < level)
    }

    /// `Σ (e − level)_-` over the stored eigenvalues.
    pub fn deficit_below(&self, level: f64) -> f64 {
        let k = self.count_below(level);
        deficit_sum(level, &self.eigenvalues[..k])
    }
}

/// Σ (threshold − e) accumulated in ascending order of `e`.
pub fn deficit_sum(threshold: f64, ascending: &[f64]) -> f64 {
    ascending
        .iter()
        .filter(|&&e| e < threshold)
        .fold(0.0, |acc, &e| acc + (threshold - e))
}

use serde::{Deserialize, Serialize};

/// Named pointwise residuals over a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub argmax: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl ResidualReport {
    /// Builds the report; `pass` holds iff `max < tolerance`. Non-finite
    /// residuals count as failures.
    pub fn new(name: impl Into<String>, grid: Vec<Vec<f64>>, values: Vec<f64>, tolerance: f64) -> Self {
        assert_eq!(grid.len(), values.len(), "one residual per grid point");
        let mut max = 0.0_f64;
        let mut argmax = grid.first().cloned().unwrap_or_default();
        let mut sum = 0.0;
        let mut finite = true;
        for (p, &v) in grid.iter().zip(&values) {
            if !v.is_finite() {
                finite = false;
                max = f64::INFINITY;
                argmax = p.clone();
                continue;
            }
            sum += v;
            if v > max && max.is_finite() {
                max = v;
                argmax = p.clone();
            }
        }
        let mean = if values.is_empty() { 0.0 } else { sum / values.len() as f64 };
        Self {
            name: name.into(),
            grid,
            values,
            max,
            mean,
            argmax,
            tolerance,
            pass: finite && max < tolerance,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_and_pass_flag() {
        let r = ResidualReport::new("x", vec![vec![0.0], vec![1.0], vec![2.0]], vec![1e-9, 3e-7, 1e-8], 1e-6);
        assert_eq!(r.max, 3e-7);
        assert_eq!(r.argmax, vec![1.0]);
        assert!(r.max >= r.mean && r.mean >= 0.0);
        assert!(r.pass);
        let f = ResidualReport::new("y", vec![vec![0.0]], vec![2e-6], 1e-6);
        assert!(!f.pass);
    }

    #[test]
    fn non_finite_residual_fails() {
        let r = ResidualReport::new("z", vec![vec![0.0], vec![1.0]], vec![f64::NAN, 0.0], 1.0);
        assert!(!r.pass);
        assert_eq!(r.argmax, vec![0.0]);
    }
}

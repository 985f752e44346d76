//! Plaque thresholds on the outer-wall distance profile.
//!
//! The global threshold is a fixed population bound. The case-specific one is
//! the fixed point of
//!
//! ```text
//! X⁰ = all outer vertices
//! pt(Xᵗ) = μ(Xᵗ) + k·σ(Xᵗ)
//! Xᵗ⁺¹ = { x : dist(x) ≤ pt(Xᵗ) }
//! ```
//!
//! with σ the population standard deviation.

use serde::{Deserialize, Serialize};

use super::PlaqueError;

/// Population mean wall thickness of the common carotid artery (mm).
pub const POPULATION_MEAN_VWT: f64 = 0.98;
/// Population standard deviation of the wall thickness (mm).
pub const POPULATION_SIGMA_VWT: f64 = 0.2;
/// Width of the population bound in standard deviations.
pub const POPULATION_SIGMA_MULTIPLIER: f64 = 2.58;
pub const DEFAULT_K: f64 = 3.0;

/// `mean + multiplier·sigma`; the defaults give 1.496 mm.
pub fn global_threshold_with(mean: f64, sigma: f64, multiplier: f64) -> f64 {
    mean + multiplier * sigma
}

pub fn global_threshold() -> f64 {
    global_threshold_with(POPULATION_MEAN_VWT, POPULATION_SIGMA_VWT, POPULATION_SIGMA_MULTIPLIER)
}

/// One iteration of the case-specific threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub iteration: usize,
    /// Sorted indices of the normal vertices `Xᵗ`.
    pub normal_set: Vec<usize>,
    pub mu: f64,
    pub sigma: f64,
    pub pt: f64,
    pub k: f64,
}

impl ThresholdState {
    fn from_set(iteration: usize, normal_set: Vec<usize>, distances: &[f64], k: f64) -> Self {
        let n = normal_set.len() as f64;
        let mu = normal_set.iter().map(|&i| distances[i]).sum::<f64>() / n;
        let var = normal_set.iter().map(|&i| (distances[i] - mu).powi(2)).sum::<f64>() / n;
        let sigma = var.sqrt();
        Self { iteration, normal_set, mu, sigma, pt: mu + k * sigma, k }
    }

    /// Vertices strictly above this state's threshold.
    pub fn plaque_set(&self, distances: &[f64]) -> Vec<usize> {
        (0..distances.len()).filter(|&i| distances[i] > self.pt).collect()
    }
}

/// Converged case-specific threshold plus its iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTrace {
    pub states: Vec<ThresholdState>,
}

impl ThresholdTrace {
    pub fn converged(&self) -> &ThresholdState {
        self.states.last().expect("trace is never empty")
    }

    pub fn iterations(&self) -> usize {
        self.states.len()
    }
}

/// Iterates to the fixed point `X = { x : dist(x) ≤ μ(X) + k·σ(X) }`.
pub fn case_specific_threshold(distances: &[f64], k: f64) -> Result<ThresholdTrace, PlaqueError> {
    if distances.is_empty() {
        return Err(PlaqueError::DegenerateThreshold("distance profile is empty".into()));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(PlaqueError::InvalidInput(format!("k must be a finite value >= 0, got {k}")));
    }
    if let Some(i) = distances.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(PlaqueError::InvalidInput(format!("distance {i} is {}", distances[i])));
    }

    let mut states = vec![ThresholdState::from_set(0, (0..distances.len()).collect(), distances, k)];
    // sets are nested, so at most |X_outer| shrinking steps
    for iteration in 1..=distances.len() {
        let current = states.last().unwrap();
        let next: Vec<usize> = current.normal_set.iter().copied().filter(|&i| distances[i] <= current.pt).collect();
        if next.len() == current.normal_set.len() {
            return Ok(ThresholdTrace { states });
        }
        if next.is_empty() {
            return Err(PlaqueError::DegenerateThreshold(format!(
                "normal set became empty at iteration {iteration}"
            )));
        }
        states.push(ThresholdState::from_set(iteration, next, distances, k));
    }
    Err(PlaqueError::DegenerateThreshold("threshold did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn global_threshold_is_1_496() {
        assert_eq!(global_threshold(), 1.496);
        assert_eq!(global_threshold_with(1.0, 0.0, 2.58), 1.0);
        assert_eq!(global_threshold_with(0.7, 0.3, 0.0), 0.7);
    }

    #[test]
    fn constant_profile_keeps_everything() {
        let d = vec![1.0; 50];
        let trace = case_specific_threshold(&d, 3.0).unwrap();
        let last = trace.converged();
        assert_eq!(last.pt, 1.0);
        assert_eq!(last.sigma, 0.0);
        assert!(last.plaque_set(&d).is_empty());
        assert_eq!(trace.iterations(), 1);
    }

    #[test]
    fn single_outlier_trace() {
        // μ₀ = 1.04, σ₀ = √(1.24 − 1.04²) = √0.1584, pt₀ = μ₀ + 3σ₀ ≈ 2.234
        let mut d = vec![1.0; 99];
        d.push(5.0);
        let trace = case_specific_threshold(&d, 3.0).unwrap();
        let first = &trace.states[0];
        assert!((first.mu - 1.04).abs() < 1e-12);
        assert!((first.sigma - 0.1584f64.sqrt()).abs() < 1e-12);
        assert!((first.pt - (1.04 + 3.0 * 0.1584f64.sqrt())).abs() < 1e-12);
        assert_eq!(trace.states.len(), 2);
        let last = trace.converged();
        assert_eq!(last.pt, 1.0);
        assert_eq!(last.plaque_set(&d), vec![99]);
    }

    #[test]
    fn zero_k_two_values() {
        let d = [1.0, 2.0];
        let last = case_specific_threshold(&d, 0.0).unwrap().converged().clone();
        assert_eq!(last.normal_set, vec![0]);
        assert_eq!(last.plaque_set(&d), vec![1]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(case_specific_threshold(&[], 3.0), Err(PlaqueError::DegenerateThreshold(_))));
        assert!(case_specific_threshold(&[1.0], -1.0).is_err());
        assert!(case_specific_threshold(&[1.0, f64::NAN], 3.0).is_err());
    }

    proptest! {
        #[test]
        fn trace_is_nested_and_a_fixed_point(
            d in proptest::collection::vec(0.0f64..5.0, 1..200),
            k in 0.0f64..5.0,
        ) {
            let trace = case_specific_threshold(&d, k).unwrap();
            prop_assert!(trace.iterations() <= d.len());
            for w in trace.states.windows(2) {
                prop_assert!(w[1].normal_set.iter().all(|i| w[0].normal_set.binary_search(i).is_ok()));
                prop_assert!(w[1].normal_set.len() < w[0].normal_set.len());
            }
            let last = trace.converged();
            prop_assert_eq!(last.pt, last.mu + last.k * last.sigma);
            let again: Vec<usize> = (0..d.len()).filter(|&i| d[i] <= last.pt).collect();
            prop_assert_eq!(&again, &last.normal_set);
        }

        #[test]
        fn first_pass_region_shrinks_with_k(
            d in proptest::collection::vec(0.0f64..5.0, 2..100),
            k1 in 0.0f64..5.0,
            dk in 0.0f64..2.0,
        ) {
            let a = case_specific_threshold(&d, k1).unwrap().states[0].plaque_set(&d);
            let b = case_specific_threshold(&d, k1 + dk).unwrap().states[0].plaque_set(&d);
            prop_assert!(b.iter().all(|i| a.contains(i)));
        }
    }
}

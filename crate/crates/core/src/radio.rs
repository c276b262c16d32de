//! Interference-limited radio environment.
//!
//! Generates seeded network scenarios (channel gains, initial powers,
//! target rates) and evaluates the physical layer: per-link SINR and the
//! Shannon-style achievable rate.
//!
//! Conventions:
//! - `gains[j][i]` is the power gain from transmitter `j` to receiver `i`;
//!   `gains[i][i]` is the direct-link gain of pair `i`.
//! - Noise power is 1 (gains are noise-normalized), so
//!   `sinr[i] = g[i][i]·p[i] / (1 + Σ_{j≠i} g[j][i]·p[j])`.
//! - `rate_kbps[i] = bandwidth_khz · log2(1 + sinr[i])`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Scalar;

/// Parameters of scenario generation. Channel amplitudes are Rayleigh with
/// mean 1 regardless of the config; everything else is tunable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GenConfig<F: Scalar> {
    /// Maximum transmit power, watts.
    pub p_max: F,
    /// Per-link bandwidth, kHz.
    pub bandwidth_khz: F,
    /// Side length of the square deployment area, meters.
    pub area_side_m: F,
    /// Initial transmit powers are drawn uniformly from this range, watts.
    pub p_init_range: (F, F),
    /// Target scaling factors are drawn uniformly from this range.
    pub mu_range: (F, F),
}

impl<F: Scalar> Default for GenConfig<F> {
    fn default() -> Self {
        let f = F::from_f64_lossy;
        Self {
            p_max: f(10.0),
            bandwidth_khz: f(10.0),
            area_side_m: f(10.0),
            p_init_range: (f(1.0), f(5.0)),
            mu_range: (f(0.5), f(1.5)),
        }
    }
}

/// Immutable description of one network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Scenario<F: Scalar> {
    /// Number of transmitter-receiver pairs.
    pub n_pairs: usize,
    /// Power gains, `gains[j][i]` from transmitter `j` to receiver `i`.
    pub gains: Vec<Vec<F>>,
    /// One point per pair inside the deployment square (metadata; the
    /// gain law is distance-independent).
    pub positions: Vec<[F; 2]>,
    /// Side length of the square deployment area, meters.
    pub area_side_m: F,
    /// Initial transmit powers, watts.
    pub p_init: Vec<F>,
    /// Maximum transmit power, watts.
    pub p_max: F,
    /// Per-link bandwidth, kHz.
    pub bandwidth_khz: F,
    /// Target scaling factors.
    pub mu: Vec<F>,
    /// Target data rates, kbps. Always equals
    /// `mu[i] · rate(p_init)[i]`, recomputable bit-exactly.
    pub targets_kbps: Vec<F>,
    /// Seed this scenario was generated from.
    pub seed: u64,
}

/// Per-round transmit powers, watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "")]
pub struct PowerVector<F: Scalar>(pub Vec<F>);

impl<F: Scalar> PowerVector<F> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    /// Sum of all entries, watts.
    pub fn total(&self) -> F {
        self.0.iter().copied().sum()
    }
}

/// SINR and achievable rate induced by a power vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinkMetrics<F: Scalar> {
    pub sinr: Vec<F>,
    pub rate_kbps: Vec<F>,
}

impl<F: Scalar> Scenario<F> {
    /// Check the structural invariants of a scenario (used when loading
    /// documents from disk).
    pub fn validate(&self) -> Result<()> {
        let n = self.n_pairs;
        if n == 0 {
            return Err(Error::InvalidScenario("n_pairs must be >= 1".into()));
        }
        if !(self.p_max > F::zero()) {
            return Err(Error::InvalidScenario("p_max must be positive".into()));
        }
        if !(self.bandwidth_khz > F::zero()) {
            return Err(Error::InvalidScenario("bandwidth must be positive".into()));
        }
        if self.gains.len() != n || self.gains.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidScenario("gain matrix is not N x N".into()));
        }
        if self.positions.len() != n
            || self.p_init.len() != n
            || self.mu.len() != n
            || self.targets_kbps.len() != n
        {
            return Err(Error::InvalidScenario("per-pair vectors are not length N".into()));
        }
        if self.gains.iter().flatten().any(|&g| !(g >= F::zero()) || !g.is_finite()) {
            return Err(Error::InvalidScenario("gains must be finite and >= 0".into()));
        }
        if self
            .p_init
            .iter()
            .any(|&p| !(p >= F::zero()) || !(p <= self.p_max))
        {
            return Err(Error::InvalidScenario("p_init must lie in [0, p_max]".into()));
        }
        Ok(())
    }
}

/// Generate a seeded scenario.
///
/// Channel amplitudes are i.i.d. Rayleigh with mean 1.0 (scale
/// `sqrt(2/pi)`); power gains are the squared amplitudes. Initial powers,
/// positions and target scaling factors are uniform. Target rates are the
/// scaled achievable rates at the initial powers.
///
/// The same `(seed, n_pairs, config)` always yields a bit-identical
/// scenario: draws are consumed in a fixed order (gains row-major, then
/// positions, then initial powers, then scaling factors), always sampled
/// in `f64` and converted into `F`.
pub fn generate_scenario<F: Scalar>(
    seed: u64,
    n_pairs: usize,
    config: &GenConfig<F>,
) -> Result<Scenario<F>> {
    if n_pairs == 0 {
        return Err(Error::InvalidScenario("n_pairs must be >= 1".into()));
    }
    if !(config.p_max > F::zero()) {
        return Err(Error::InvalidScenario("p_max must be positive".into()));
    }
    if !(config.bandwidth_khz > F::zero()) {
        return Err(Error::InvalidScenario("bandwidth must be positive".into()));
    }
    let (p_lo, p_hi) = config.p_init_range;
    if !(p_lo >= F::zero()) || !(p_hi >= p_lo) || !(p_hi <= config.p_max) {
        return Err(Error::InvalidScenario(
            "p_init range must satisfy 0 <= lo <= hi <= p_max".into(),
        ));
    }

    let mut rng = stream_rng(seed, "scenario-draws", &[n_pairs as u64]);
    // Rayleigh amplitude by inverse CDF, exactly one uniform per entry.
    // E|h| = sigma * sqrt(pi/2) = 1 for sigma = sqrt(2/pi).
    let sigma = (2.0 / std::f64::consts::PI).sqrt();
    let gains: Vec<Vec<F>> = (0..n_pairs)
        .map(|_| {
            (0..n_pairs)
                .map(|_| {
                    let u: f64 = rng.random();
                    let amp = sigma * (-2.0 * (1.0 - u).ln()).sqrt();
                    F::from_f64_lossy(amp * amp)
                })
                .collect()
        })
        .collect();

    let side = config.area_side_m.to_f64().unwrap();
    let positions: Vec<[F; 2]> = (0..n_pairs)
        .map(|_| {
            let x = rng.random_range(0.0..side);
            let y = rng.random_range(0.0..side);
            [F::from_f64_lossy(x), F::from_f64_lossy(y)]
        })
        .collect();

    let (lo, hi) = (p_lo.to_f64().unwrap(), p_hi.to_f64().unwrap());
    let p_init: Vec<F> = (0..n_pairs)
        .map(|_| F::from_f64_lossy(rng.random_range(lo..=hi)))
        .collect();

    let (mu_lo, mu_hi) = (
        config.mu_range.0.to_f64().unwrap(),
        config.mu_range.1.to_f64().unwrap(),
    );
    let mu: Vec<F> = (0..n_pairs)
        .map(|_| F::from_f64_lossy(rng.random_range(mu_lo..=mu_hi)))
        .collect();

    let mut scenario = Scenario {
        n_pairs,
        gains,
        positions,
        area_side_m: config.area_side_m,
        p_init: p_init.clone(),
        p_max: config.p_max,
        bandwidth_khz: config.bandwidth_khz,
        mu,
        targets_kbps: Vec::new(),
        seed,
    };
    scenario.targets_kbps = compute_targets(&scenario, &PowerVector(p_init))?;
    Ok(scenario)
}

fn metrics_from_parts<F: Scalar>(gains: &[Vec<F>], bandwidth_khz: F, powers: &[F]) -> LinkMetrics<F> {
    let n = powers.len();
    let mut sinr = Vec::with_capacity(n);
    let mut rate = Vec::with_capacity(n);
    for i in 0..n {
        let mut interference = F::zero();
        for j in 0..n {
            if j != i {
                interference += gains[j][i] * powers[j];
            }
        }
        let s = gains[i][i] * powers[i] / (F::one() + interference);
        sinr.push(s);
        rate.push(bandwidth_khz * (F::one() + s).log2());
    }
    LinkMetrics { sinr, rate_kbps: rate }
}

/// Evaluate SINR and achievable rate at the given powers.
pub fn compute_metrics<F: Scalar>(
    scenario: &Scenario<F>,
    powers: &PowerVector<F>,
) -> Result<LinkMetrics<F>> {
    if powers.len() != scenario.n_pairs {
        return Err(Error::DimensionMismatch {
            expected: scenario.n_pairs,
            got: powers.len(),
        });
    }
    Ok(metrics_from_parts(
        &scenario.gains,
        scenario.bandwidth_khz,
        powers.as_slice(),
    ))
}

/// Target rates: `mu[i]` times the achievable rate at `p_init`.
///
/// Uses the same evaluation path as [`compute_metrics`], so recomputing
/// the stored targets from a scenario's own `p_init` is bit-exact.
pub fn compute_targets<F: Scalar>(
    scenario: &Scenario<F>,
    p_init: &PowerVector<F>,
) -> Result<Vec<F>> {
    if p_init.len() != scenario.n_pairs {
        return Err(Error::DimensionMismatch {
            expected: scenario.n_pairs,
            got: p_init.len(),
        });
    }
    let metrics = metrics_from_parts(&scenario.gains, scenario.bandwidth_khz, p_init.as_slice());
    Ok(scenario
        .mu
        .iter()
        .zip(&metrics.rate_kbps)
        .map(|(&m, &r)| m * r)
        .collect())
}

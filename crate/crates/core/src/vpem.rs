//! Virtual purification: mitigated expectations of `rho^n`, their two-circuit
//! estimator and finite-shot sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::estimation::{estimate, mitigated_shots, EstimatorKind, Linearization};
use crate::fock::{eig, expectation, DensityMatrix, Observable, PureState, DEGENERACY_GAP, PSD_TOL};
use crate::linalg::{hermitian_eigh, weighted_outer, CMatrix, C64};

#[derive(Debug, Clone)]
pub struct DominantEigenpair {
    pub lambda: f64,
    pub vector: PureState,
    pub gap: f64,
}

impl DominantEigenpair {
    pub fn is_degenerate(&self) -> bool {
        self.gap < DEGENERACY_GAP
    }
}

/// Largest eigenvalue of `rho` and its eigenvector. A gap below
/// `DEGENERACY_GAP` is reported as a numerical error.
pub fn dominant_eigenpair(rho: &DensityMatrix) -> Result<DominantEigenpair> {
    let d = eig(rho)?;
    let (lambda, vector) = d.dominant();
    let pair = DominantEigenpair {
        lambda,
        vector: vector.clone(),
        gap: d.dominant_gap(),
    };
    if pair.is_degenerate() {
        return Err(Error::numerical(format!(
            "dominant eigenvalue {lambda} is degenerate (gap {:.3e})",
            pair.gap
        )));
    }
    Ok(pair)
}

/// Noiseless means of the two circuits: `(Tr[A rho^n], Tr[rho^n])`.
pub fn circuit_expectations(rho: &DensityMatrix, obs: &Observable, n: u32) -> Result<(f64, f64)> {
    obs.space().ensure_same(rho.space())?;
    circuit_expectations_matrix(rho.matrix(), obs.matrix(), n)
}

/// [`circuit_expectations`] for plain matrices of any dimension.
pub fn circuit_expectations_matrix(rho: &CMatrix, obs: &CMatrix, n: u32) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("mitigation order must be >= 1"));
    }
    let (values, vectors) = hermitian_eigh(rho);
    if values.last().is_some_and(|&v| v < -PSD_TOL) {
        return Err(Error::numerical("density matrix is not positive semidefinite"));
    }
    let weights: Vec<f64> = values.iter().map(|l| l.max(0.0).powi(n as i32)).collect();
    let powered = weighted_outer(&vectors, &weights);
    let zi: f64 = weights.iter().sum();
    let za: C64 = obs.iter().zip(powered.transpose().iter()).map(|(a, p)| a * p).sum();
    if za.im.abs() > 1e-10 {
        return Err(Error::numerical(format!("Tr[A rho^n] has imaginary part {:.3e}", za.im)));
    }
    Ok((za.re, zi))
}

/// `Tr[A rho^n] / Tr[rho^n]`.
pub fn mitigated_expectation(rho: &DensityMatrix, obs: &Observable, n: u32) -> Result<f64> {
    if n == 1 {
        return expectation(obs, rho);
    }
    obs.space().ensure_same(rho.space())?;
    mitigated_expectation_matrix(rho.matrix(), obs.matrix(), n)
}

pub fn mitigated_expectation_matrix(rho: &CMatrix, obs: &CMatrix, n: u32) -> Result<f64> {
    let (za, zi) = circuit_expectations_matrix(rho, obs, n)?;
    if zi <= 1e-300 {
        return Err(Error::numerical("Tr[rho^n] vanishes"));
    }
    Ok(za / zi)
}

/// Dominant eigenvalue of `rho^n / Tr[rho^n]` from that of `rho` and the
/// normalized tail weights `p_k` (summing to one).
pub fn purified_dominant_eigenvalue(lambda: f64, tail: &[f64], n: u32) -> f64 {
    let ratio = ((1.0 - lambda) / lambda).powi(n as i32);
    let s: f64 = tail.iter().map(|p| p.powi(n as i32)).sum();
    1.0 / (1.0 + ratio * s)
}

/// Sample means of the two purification circuits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitShots {
    pub z_a: f64,
    pub z_i: f64,
    pub shots_per_circuit: u64,
}

/// Mixes a run seed with a scenario id and a sample index.
pub fn derive_seed(seed: u64, scenario: u64, index: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ scenario);
    splitmix64(h ^ index)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mean of `shots` draws of a `±1` outcome with expectation `mean`.
pub fn sample_pm_one(rng: &mut ChaCha8Rng, mean: f64, shots: u64) -> Result<f64> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be >= 1"));
    }
    if !mean.is_finite() || mean.abs() > 1.0 + 1e-9 {
        return Err(Error::numerical(format!("outcome mean {mean} outside [-1, 1]")));
    }
    let p = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
    let plus = Binomial::new(shots, p)
        .map_err(|e| Error::numerical(format!("binomial sampler: {e}")))?
        .sample(rng);
    Ok(2.0 * plus as f64 / shots as f64 - 1.0)
}

/// [`sample_pm_one`] with a fresh generator seeded from `seed`.
pub fn sample_mean(mean: f64, shots: u64, seed: u64) -> Result<f64> {
    sample_pm_one(&mut ChaCha8Rng::seed_from_u64(seed), mean, shots)
}

/// Samples both circuits, splitting `total_shots` evenly across them.
pub fn sample_from_means(z_a: f64, z_i: f64, n: u32, total_shots: u64, seed: u64) -> Result<CircuitShots> {
    if n == 0 {
        return Err(Error::invalid("mitigation order must be >= 1"));
    }
    let per = mitigated_shots(total_shots, n);
    if per == 0 {
        return Err(Error::invalid(format!(
            "{total_shots} shots leave no samples per circuit at order {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = sample_pm_one(&mut rng, z_a, per)?;
    let i = sample_pm_one(&mut rng, z_i, per)?;
    Ok(CircuitShots {
        z_a: a,
        z_i: i,
        shots_per_circuit: per,
    })
}

pub fn sample_circuits(
    rho: &DensityMatrix,
    obs: &Observable,
    n: u32,
    total_shots: u64,
    seed: u64,
) -> Result<CircuitShots> {
    let (za, zi) = circuit_expectations(rho, obs, n)?;
    sample_from_means(za, zi, n, total_shots, seed)
}

/// Phase estimate from the ratio of sampled circuit means.
pub fn estimate_mitigated_from_shots(shots: &CircuitShots, ideal: &Linearization) -> Result<f64> {
    if shots.z_i.abs() < 1e-12 {
        return Err(Error::numerical("sampled Tr[rho^n] circuit mean is zero"));
    }
    estimate(EstimatorKind::Mitigated, shots.z_a / shots.z_i, ideal)
}

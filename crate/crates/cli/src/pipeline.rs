//! Turns a configuration into records, surfaces and coefficient tables.

use rayon::prelude::*;
use vpem_core::estimation::{
    bias_leading_order, estimate, mse_from_spectrum, series_coefficients, strength_grid, EstimatorKind,
    Linearization,
};
use vpem_core::refpoint::{contour_surfaces, Prior, ReferenceObjective, ReferenceOptimum, ReferenceSearch, Surface};
use vpem_core::scenario::{delta_for_lambda, NoisySpectrum, Scenario, ScenarioOptions};
use vpem_core::vpem::{derive_seed, estimate_mitigated_from_shots, sample_from_means, sample_mean};

use crate::config::{Reference, ScenarioConfig};
use crate::error::{Failure, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub phi: f64,
    pub delta: f64,
    pub lambda_dominant: f64,
    pub n: u32,
    pub phi0: f64,
    pub bias_sq_exact: f64,
    pub mse_formula: f64,
    pub est_sq_sampled: Option<f64>,
    pub seed: Option<u64>,
    /// Index into the configuration's series.
    pub series: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dominance {
    pub phi: f64,
    pub delta: f64,
    pub lambda_dominant: f64,
    pub n: u32,
    pub phi0_error: f64,
    pub phi0_mitigated: f64,
    pub bias_sq_error: f64,
    pub bias_sq_mitigated: f64,
}

impl Dominance {
    pub fn smaller(&self) -> &'static str {
        if self.bias_sq_error < self.bias_sq_mitigated {
            "error"
        } else if self.bias_sq_mitigated < self.bias_sq_error {
            "mitigated"
        } else {
            "equal"
        }
    }
}

/// One resolved reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedReference {
    pub series: usize,
    pub n: u32,
    /// Strength index for per-strength optima, `None` when shared.
    pub delta_index: Option<usize>,
    pub prior: Option<Prior>,
    pub optimum: Option<ReferenceOptimum>,
    pub phi0: f64,
}

pub struct Prepared {
    pub scenario: Scenario,
    pub deltas: Vec<f64>,
    pub spectra: Vec<NoisySpectrum>,
}

pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    let options = ScenarioOptions {
        cutoff: config.cutoff,
        ..ScenarioOptions::default()
    };
    Ok(Scenario::with_options(config.probe(), config.family(), options)?)
}

/// Strengths from the noise section, converting eigenvalue targets.
pub fn strengths(config: &ScenarioConfig, scenario: &Scenario) -> Result<Vec<f64>> {
    match (&config.noise.delta, &config.noise.lambda) {
        (Some(d), _) => Ok(d.clone()),
        (None, Some(l)) => l.iter().map(|&t| Ok(delta_for_lambda(scenario, t)?)).collect(),
        (None, None) => Ok(vec![]),
    }
}

pub fn prepare(config: &ScenarioConfig) -> Result<Prepared> {
    let scenario = build_scenario(config)?;
    let deltas = strengths(config, &scenario)?;
    let spectra = deltas
        .par_iter()
        .map(|&d| scenario.spectrum(d))
        .collect::<vpem_core::Result<Vec<_>>>()?;
    Ok(Prepared {
        scenario,
        deltas,
        spectra,
    })
}

fn averaged_upper(scenario: &Scenario, delta_max: Option<f64>, lambda_min: Option<f64>) -> Result<f64> {
    match (delta_max, lambda_min) {
        (Some(d), _) => Ok(d),
        (None, Some(l)) => Ok(delta_for_lambda(scenario, l)?),
        (None, None) => Err(Failure::config("reference", "averaged-optimal needs delta_max or lambda_min")),
    }
}

/// Resolves every (series, order, strength) reference point. Searches that
/// share a prior share one objective.
pub fn resolve_references(config: &ScenarioConfig, prepared: &Prepared) -> Result<Vec<ResolvedReference>> {
    let scenario = &prepared.scenario;
    let mut out = Vec::new();
    let mut searches: Vec<(usize, Prior)> = Vec::new();
    for (s, series) in config.series.iter().enumerate() {
        for &n in &series.orders {
            let base = ResolvedReference {
                series: s,
                n,
                delta_index: None,
                prior: None,
                optimum: None,
                phi0: 0.0,
            };
            match series.reference {
                Reference::Fixed { phi0 } | Reference::Detuned { phi0 } => out.push(ResolvedReference { phi0, ..base }),
                Reference::Optimal { delta: Some(d) } => out.push(ResolvedReference {
                    prior: Some(Prior::PointMass(d)),
                    ..base
                }),
                Reference::Optimal { delta: None } => {
                    for (i, &d) in prepared.deltas.iter().enumerate() {
                        out.push(ResolvedReference {
                            delta_index: Some(i),
                            prior: Some(Prior::PointMass(d)),
                            ..base
                        });
                    }
                }
                Reference::AveragedOptimal {
                    delta_min,
                    delta_max,
                    lambda_min,
                } => {
                    let hi = averaged_upper(scenario, delta_max, lambda_min)?;
                    out.push(ResolvedReference {
                        prior: Some(Prior::Uniform(delta_min, hi)),
                        ..base
                    });
                }
            }
        }
    }
    for r in &out {
        if let Some(p) = r.prior {
            if !searches.iter().any(|(_, q)| *q == p) {
                searches.push((searches.len(), p));
            }
        }
    }
    let objectives = searches
        .par_iter()
        .map(|&(_, p)| ReferenceObjective::new(scenario, p))
        .collect::<vpem_core::Result<Vec<_>>>()?;
    let optima = out
        .par_iter()
        .map(|r| match r.prior {
            None => Ok(None),
            Some(p) => {
                let k = searches.iter().position(|(_, q)| *q == p).expect("prior registered");
                let search = ReferenceSearch::for_scenario(scenario, p);
                Ok(Some(objectives[k].minimize(r.n, &search)?))
            }
        })
        .collect::<vpem_core::Result<Vec<_>>>()?;
    for (r, o) in out.iter_mut().zip(optima) {
        if let Some(o) = o {
            r.phi0 = o.phi0;
            r.optimum = Some(o);
        }
    }
    Ok(out)
}

fn reference_for(refs: &[ResolvedReference], series: usize, n: u32, delta_index: usize) -> f64 {
    refs.iter()
        .find(|r| r.series == series && r.n == n && r.delta_index.is_none_or(|i| i == delta_index))
        .expect("every series order has a reference")
        .phi0
}

/// Stream id for the sampled column; stable under reordering of the work.
fn stream(delta_index: usize, series: usize, n: u32, phi_index: usize) -> u64 {
    ((delta_index as u64) << 48) | ((series as u64) << 40) | ((n as u64) << 32) | phi_index as u64
}

pub fn records(config: &ScenarioConfig, prepared: &Prepared, refs: &[ResolvedReference]) -> Result<Vec<Record>> {
    let phis = config.phi.map(|g| g.points()).unwrap_or_default();
    let mut tasks = Vec::new();
    for i in 0..prepared.deltas.len() {
        for (s, series) in config.series.iter().enumerate() {
            for &n in &series.orders {
                for j in 0..phis.len() {
                    tasks.push((i, s, n, j));
                }
            }
        }
    }
    let scenario = &prepared.scenario;
    let nested = tasks
        .par_iter()
        .map(|&(i, s, n, j)| -> Result<Vec<Record>> {
            let spectrum = &prepared.spectra[i];
            let phi = phis[j];
            let phi0 = reference_for(refs, s, n, i);
            let kind = if n == 1 { EstimatorKind::Error } else { EstimatorKind::Mitigated };
            let report = mse_from_spectrum(kind, scenario, spectrum, phi, phi0, n, config.shots)?;
            let base = Record {
                phi,
                delta: prepared.deltas[i],
                lambda_dominant: spectrum.dominant_eigenvalue(),
                n,
                phi0,
                bias_sq_exact: report.linearized_bias.powi(2),
                mse_formula: report.linearized_mse(),
                est_sq_sampled: None,
                seed: None,
                series: s,
            };
            if config.seeds.is_empty() {
                return Ok(vec![base]);
            }
            let ideal = Linearization::ideal(scenario, phi0);
            config
                .seeds
                .iter()
                .map(|&seed| {
                    let derived = derive_seed(seed, stream(i, s, n, j), 0);
                    let est = if n == 1 {
                        let mean = sample_mean(report.exact_expectation, config.shots, derived)?;
                        estimate(EstimatorKind::Error, mean, &ideal)?
                    } else {
                        let (za, zi) = spectrum.circuit_means(phi0 + phi, n);
                        estimate_mitigated_from_shots(&sample_from_means(za, zi, n, config.shots, derived)?, &ideal)?
                    };
                    Ok(Record {
                        est_sq_sampled: Some((est - phi).powi(2)),
                        seed: Some(seed),
                        ..base
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Pairs each mitigated record with the unmitigated record of the first
/// series that contains order 1, at the same strength and phase.
pub fn dominance(config: &ScenarioConfig, records: &[Record]) -> Result<Vec<Dominance>> {
    let error_series = config
        .series
        .iter()
        .position(|s| s.orders.contains(&1))
        .ok_or_else(|| Failure::config("emit.dominance", "needs a series with order 1"))?;
    let exact: Vec<&Record> = records.iter().filter(|r| r.seed == records[0].seed).collect();
    let mut out = Vec::new();
    for r in &exact {
        if r.n == 1 {
            continue;
        }
        let e = exact
            .iter()
            .find(|e| e.series == error_series && e.n == 1 && e.delta == r.delta && e.phi == r.phi)
            .expect("error record exists for every grid point");
        out.push(Dominance {
            phi: r.phi,
            delta: r.delta,
            lambda_dominant: r.lambda_dominant,
            n: r.n,
            phi0_error: e.phi0,
            phi0_mitigated: r.phi0,
            bias_sq_error: e.bias_sq_exact,
            bias_sq_mitigated: r.bias_sq_exact,
        });
    }
    Ok(out)
}

pub fn contours(config: &ScenarioConfig, scenario: &Scenario) -> Result<Vec<(u32, Surface)>> {
    let Some(c) = &config.contour else {
        return Ok(vec![]);
    };
    let surfaces = contour_surfaces(scenario, &c.phi0.points(), &c.delta.points(), &c.orders)?;
    Ok(c.orders.iter().cloned().zip(surfaces).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub phi0: f64,
    pub quantity: &'static str,
    pub n: Option<u32>,
    pub k: usize,
    pub value: f64,
}

/// Expansion coefficients in the noise strength at each distinct reference.
pub fn coefficients(config: &ScenarioConfig, prepared: &Prepared, refs: &[ResolvedReference]) -> Result<Vec<CoefficientRow>> {
    let settings = config.coeffs.clone();
    let delta_max = match &settings {
        Some(c) => c.delta_max,
        None => prepared.deltas.iter().cloned().fold(0.0, f64::max),
    };
    if !(delta_max > 4e-4) {
        return Err(Failure::config("coeffs.delta_max", "needs a strength above 4e-4"));
    }
    let (max_order, points) = settings.map(|c| (c.max_order, c.points)).unwrap_or((3, 11));
    let orders = refs.iter().map(|r| r.n).max().unwrap_or(3);
    let mut phi0s: Vec<f64> = Vec::new();
    for r in refs {
        if !phi0s.iter().any(|p| (p - r.phi0).abs() <= 1e-15) {
            phi0s.push(r.phi0);
        }
    }
    if phi0s.is_empty() {
        phi0s.push(0.0);
    }
    let grid = strength_grid(delta_max, points);
    let phi = config.phi.map(|g| g.max.abs().max(g.min.abs())).unwrap_or(0.01);
    let tables = phi0s
        .par_iter()
        .map(|&phi0| -> Result<Vec<CoefficientRow>> {
            let s = series_coefficients(&prepared.scenario, phi0, max_order, &grid, orders)?;
            let mut rows = Vec::new();
            let mut push = |quantity: &'static str, n: Option<u32>, values: &[f64], first: usize| {
                for (k, &value) in values.iter().enumerate() {
                    rows.push(CoefficientRow {
                        phi0,
                        quantity,
                        n,
                        k: k + first,
                        value,
                    });
                }
            };
            push("lambda", None, &s.lambda_k, 1);
            push("a", None, &s.a_k, 1);
            push("da", None, &s.da_k, 1);
            push("b", None, &s.b_k, 0);
            push("f", None, &s.f_k, 1);
            push("df", None, &s.df_k, 1);
            for n in 1..=orders {
                push("bias_zeroth", Some(n), &s.bias_zeroth[n as usize - 1], 1);
                push("bias_slope", Some(n), &s.bias_slope[n as usize - 1], 1);
                let lead = bias_leading_order(&s, n, phi)?;
                if let Some(k) = lead.order {
                    push("leading", Some(n), &[lead.coefficient], k);
                }
            }
            push("fit_residual", None, &[s.fit_residual], 0);
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tables.into_iter().flatten().collect())
}

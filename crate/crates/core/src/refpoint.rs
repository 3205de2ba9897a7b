//! Reference-point selection by minimizing the squared zeroth-order bias,
//! at a fixed noise strength or averaged over a uniform prior.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::MIN_SLOPE;
use crate::quadrature::legendre_on;
use crate::scenario::{NoisySpectrum, Probe, Scenario};

/// Nodes used when averaging over a uniform prior.
pub const PRIOR_NODES: usize = 41;
/// Objective values closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    PointMass(f64),
    Uniform(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSearch {
    pub domain: (f64, f64),
    pub grid_points: usize,
    pub refine_iters: usize,
    pub prior: Prior,
}

impl ReferenceSearch {
    /// One monotone branch of the ideal response: `[-pi/2N, pi/2N]` for N00N
    /// probes and `[0, pi/2]` otherwise.
    pub fn for_scenario(scenario: &Scenario, prior: Prior) -> Self {
        let domain = match scenario.probe() {
            Probe::Noon { photons } => {
                let h = PI / (2.0 * photons as f64);
                (-h, h)
            }
            Probe::CoherentSqueezed { .. } => (0.0, PI / 2.0),
        };
        Self {
            domain,
            grid_points: 64,
            refine_iters: 80,
            prior,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("reference domain [{lo}, {hi}] is empty")));
        }
        if self.grid_points < 16 {
            return Err(Error::invalid("reference search needs at least 16 grid points"));
        }
        match self.prior {
            Prior::PointMass(d) if !(d >= 0.0 && d.is_finite()) => {
                Err(Error::invalid(format!("noise strength {d} must be finite and >= 0")))
            }
            Prior::Uniform(a, b) if !(a >= 0.0 && a < b && b.is_finite()) => {
                Err(Error::invalid(format!("uniform prior needs 0 <= lower < upper, got [{a}, {b}]")))
            }
            _ => Ok(()),
        }
    }
}

/// Squared zeroth-order bias, weighted over a set of noise strengths.
pub struct ReferenceObjective<'a> {
    scenario: &'a Scenario,
    nodes: Vec<(f64, NoisySpectrum)>,
}

impl<'a> ReferenceObjective<'a> {
    pub fn new(scenario: &'a Scenario, prior: Prior) -> Result<Self> {
        let weighted = match prior {
            Prior::PointMass(d) => vec![(d, 1.0)],
            Prior::Uniform(a, b) => {
                if !(a < b) {
                    return Err(Error::invalid("uniform prior needs lower < upper"));
                }
                legendre_on(PRIOR_NODES, a, b)?
                    .into_iter()
                    .map(|(d, w)| (d, w / (b - a)))
                    .collect()
            }
        };
        let nodes = weighted
            .par_iter()
            .map(|&(d, w)| scenario.spectrum(d).map(|s| (w, s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { scenario, nodes })
    }

    /// `None` where the ideal slope is too small to invert.
    pub fn value(&self, phi0: f64, n: u32) -> Option<f64> {
        let y = self.scenario.ideal_slope(phi0);
        if y.abs() <= MIN_SLOPE {
            return None;
        }
        let x_id = self.scenario.ideal_expectation(phi0);
        Some(
            self.nodes
                .iter()
                .map(|(w, s)| {
                    let b = (s.expectation(phi0, n) - x_id) / y;
                    w * b * b
                })
                .sum(),
        )
    }

    /// Grid scan followed by golden-section refinement around the best cell.
    pub fn minimize(&self, n: u32, search: &ReferenceSearch) -> Result<ReferenceOptimum> {
        search.validate()?;
        let (lo, hi) = search.domain;
        let m = search.grid_points;
        let mut grid: Vec<f64> = (0..m).map(|j| lo + (hi - lo) * j as f64 / (m - 1) as f64).collect();
        if lo < 0.0 && hi > 0.0 && !grid.contains(&0.0) {
            grid.push(0.0);
            grid.sort_by(f64::total_cmp);
        }
        let values: Vec<Option<f64>> = grid.par_iter().map(|&p| self.value(p, n)).collect();
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in values.iter().enumerate() {
            let Some(v) = *v else { continue };
            best = match best {
                None => Some((i, v)),
                Some((j, b)) if better(grid[i], v, grid[j], b) => Some((i, v)),
                keep => keep,
            };
        }
        let (i, grid_value) = best.ok_or_else(|| Error::Search("every reference point is masked".into()))?;
        let masked = values.iter().filter(|v| v.is_none()).count();
        let grid_min = grid[i];
        let f = |p: f64| self.value(p, n).unwrap_or(f64::INFINITY);
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(grid.len() - 1)];
        let (p, v) = golden_section(&f, a, b, search.refine_iters);
        let (phi0, value) = if better(p, v, grid_min, grid_value) {
            (p, v)
        } else {
            (grid_min, grid_value)
        };
        Ok(ReferenceOptimum {
            phi0,
            value,
            grid_value,
            masked,
        })
    }
}

/// Lower value wins; near-ties go to the smaller `|phi0|`.
fn better(p: f64, v: f64, q: f64, w: f64) -> bool {
    if (v - w).abs() <= TIE_TOLERANCE {
        p.abs() < q.abs()
    } else {
        v < w
    }
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if b - a < 1e-12 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptimum {
    pub phi0: f64,
    pub value: f64,
    /// Smallest objective on the coarse grid.
    pub grid_value: f64,
    pub masked: usize,
}

/// `None` where the reference point is masked.
pub fn zeroth_order_objective(scenario: &Scenario, phi0: f64, delta: f64, n: u32) -> Result<Option<f64>> {
    Ok(ReferenceObjective::new(scenario, Prior::PointMass(delta))?.value(phi0, n))
}

pub fn optimal_reference(scenario: &Scenario, n: u32, search: &ReferenceSearch) -> Result<ReferenceOptimum> {
    if !matches!(search.prior, Prior::PointMass(_)) {
        return Err(Error::invalid("optimal_reference needs a point-mass prior"));
    }
    search.validate()?;
    ReferenceObjective::new(scenario, search.prior)?.minimize(n, search)
}

pub fn averaged_optimal_reference(scenario: &Scenario, n: u32, search: &ReferenceSearch) -> Result<ReferenceOptimum> {
    if !matches!(search.prior, Prior::Uniform(..)) {
        return Err(Error::invalid("averaged_optimal_reference needs a uniform prior"));
    }
    search.validate()?;
    ReferenceObjective::new(scenario, search.prior)?.minimize(n, search)
}

/// Objective over a grid; rows follow `deltas`, columns follow `phi0s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub phi0: Vec<f64>,
    pub delta: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Surface {
    pub fn masked_cells(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_none()).count()
    }

    /// Per row, the column of the smallest unmasked value.
    pub fn row_minima(&self) -> Vec<Option<usize>> {
        self.values
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(j, v)| v.map(|v| (j, v)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(j, _)| j)
            })
            .collect()
    }
}

pub fn contour_surface(scenario: &Scenario, phi0s: &[f64], deltas: &[f64], n: u32) -> Result<Surface> {
    Ok(contour_surfaces(scenario, phi0s, deltas, &[n])?.remove(0))
}

/// One surface per entry of `orders`, sharing the spectra.
pub fn contour_surfaces(scenario: &Scenario, phi0s: &[f64], deltas: &[f64], orders: &[u32]) -> Result<Vec<Surface>> {
    let spectra = deltas
        .par_iter()
        .map(|&d| scenario.spectrum(d))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<Vec<Option<f64>>>> = spectra
        .into_par_iter()
        .map(|s| {
            let objective = ReferenceObjective {
                scenario,
                nodes: vec![(1.0, s)],
            };
            orders
                .iter()
                .map(|&n| phi0s.iter().map(|&p| objective.value(p, n)).collect())
                .collect()
        })
        .collect();
    Ok((0..orders.len())
        .map(|k| Surface {
            phi0: phi0s.to_vec(),
            delta: deltas.to_vec(),
            values: rows.iter().map(|r| r[k].clone()).collect(),
        })
        .collect())
}

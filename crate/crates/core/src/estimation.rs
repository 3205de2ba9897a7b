//! Linearized phase estimators, their bias and mean-squared error, and the
//! small-noise expansion of the bias.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scenario::{NoisySpectrum, Scenario};

/// Smallest slope accepted when inverting the linear response.
pub const MIN_SLOPE: f64 = 1e-6;
/// Series whose samples all stay below this are taken as identically zero.
const NEGLIGIBLE: f64 = 1e-13;
/// Lower bound on the data scale used to judge fit residuals.
const RESIDUAL_FLOOR: f64 = 1e-4;
/// Default finite-difference step in radians.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Local linear model `f(phi0 + phi) ~ x + y phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub x: f64,
    pub y: f64,
    pub phi0: f64,
    /// Finite-difference step; zero when the slope is exact.
    pub step: f64,
}

impl Linearization {
    pub fn exact(x: f64, y: f64, phi0: f64) -> Self {
        Self { x, y, phi0, step: 0.0 }
    }

    /// Ideal-state coefficients of a scenario, from its exact derivative.
    pub fn ideal(scenario: &Scenario, phi0: f64) -> Self {
        Self::exact(scenario.ideal_expectation(phi0), scenario.ideal_slope(phi0), phi0)
    }

    fn check_slope(&self) -> Result<()> {
        if self.y.abs() <= MIN_SLOPE {
            return Err(Error::numerical(format!(
                "degenerate sensitivity: slope {:.3e} at reference {}",
                self.y, self.phi0
            )));
        }
        Ok(())
    }
}

/// Central difference with one Richardson step; the result must agree with
/// the same estimate at half the step.
pub fn linearize<F: Fn(f64) -> f64>(f: F, phi0: f64, step: f64) -> Result<Linearization> {
    if !(1e-6..=1e-2).contains(&step) {
        return Err(Error::invalid(format!("finite-difference step {step} outside [1e-6, 1e-2]")));
    }
    let central = |h: f64| (f(phi0 + h) - f(phi0 - h)) / (2.0 * h);
    let richardson = |h: f64| (4.0 * central(h / 2.0) - central(h)) / 3.0;
    let y = richardson(step);
    let check = richardson(step / 2.0);
    if (y - check).abs() > 1e-6 * y.abs().max(1.0) {
        return Err(Error::numerical(format!(
            "slope estimate not smooth: {y} vs {check} at half step"
        )));
    }
    Ok(Linearization {
        x: f(phi0),
        y,
        phi0,
        step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Ideal,
    Error,
    Mitigated,
}

/// `(mean - x_id) / y_id`. Every kind inverts with the ideal coefficients.
pub fn estimate(_kind: EstimatorKind, mean_outcome: f64, ideal: &Linearization) -> Result<f64> {
    ideal.check_slope()?;
    Ok((mean_outcome - ideal.x) / ideal.y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasReport {
    pub kind: EstimatorKind,
    pub phi: f64,
    pub phi0: f64,
    pub delta: f64,
    pub n: u32,
    /// `<phi_est> - phi` from exact expectations.
    pub bias: f64,
    pub bias_sq: f64,
    /// Bias of the first-order expansion in `phi`.
    pub linearized_bias: f64,
    pub mse: f64,
    pub statistical_term: f64,
    pub exact_expectation: f64,
    pub sampled_estimate: Option<f64>,
}

impl BiasReport {
    /// Squared first-order bias plus the statistical term.
    pub fn linearized_mse(&self) -> f64 {
        self.linearized_bias * self.linearized_bias + self.statistical_term
    }

    pub fn with_sample(mut self, estimate: f64) -> Self {
        self.sampled_estimate = Some(estimate);
        self
    }
}

/// Bias of the order-`n` estimator (`n = 1` is unmitigated) at `phi`.
pub fn bias_exact(scenario: &Scenario, phi: f64, phi0: f64, delta: f64, n: u32) -> Result<BiasReport> {
    let spectrum = scenario.spectrum(delta)?;
    bias_from_spectrum(scenario, &spectrum, phi, phi0, n)
}

pub fn bias_from_spectrum(
    scenario: &Scenario,
    spectrum: &NoisySpectrum,
    phi: f64,
    phi0: f64,
    n: u32,
) -> Result<BiasReport> {
    check_order(n)?;
    let ideal = Linearization::ideal(scenario, phi0);
    ideal.check_slope()?;
    let exact_expectation = spectrum.expectation(phi0 + phi, n);
    let bias = (exact_expectation - ideal.x) / ideal.y - phi;
    let x = spectrum.expectation(phi0, n);
    let y = spectrum.slope(phi0, n);
    let linearized_bias = (x - ideal.x) / ideal.y + (y - ideal.y) / ideal.y * phi;
    Ok(BiasReport {
        kind: if n == 1 { EstimatorKind::Error } else { EstimatorKind::Mitigated },
        phi,
        phi0,
        delta: spectrum.strength(),
        n,
        bias,
        bias_sq: bias * bias,
        linearized_bias,
        mse: f64::NAN,
        statistical_term: f64::NAN,
        exact_expectation,
        sampled_estimate: None,
    })
}

fn check_order(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("mitigation order must be >= 1"));
    }
    Ok(())
}

/// Samples per circuit for a total budget of `shots` at order `n`.
pub fn mitigated_shots(shots: u64, n: u32) -> u64 {
    shots / (2 * n as u64)
}

/// Bias and statistical error of an estimator with `shots` total samples.
pub fn mse(
    kind: EstimatorKind,
    scenario: &Scenario,
    phi: f64,
    phi0: f64,
    delta: f64,
    n: u32,
    shots: u64,
) -> Result<BiasReport> {
    match kind {
        EstimatorKind::Ideal => ideal_mse(scenario, phi, phi0, shots),
        _ => {
            let spectrum = scenario.spectrum(delta)?;
            mse_from_spectrum(kind, scenario, &spectrum, phi, phi0, n, shots)
        }
    }
}

/// Noiseless estimator: unbiased with variance `V[A] / (N_s y_id^2)`.
pub fn ideal_mse(scenario: &Scenario, phi: f64, phi0: f64, shots: u64) -> Result<BiasReport> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be >= 1"));
    }
    let ideal = Linearization::ideal(scenario, phi0);
    ideal.check_slope()?;
    let mean = scenario.ideal_expectation(phi0 + phi);
    let statistical_term = (1.0 - mean * mean) / (shots as f64 * ideal.y * ideal.y);
    Ok(BiasReport {
        kind: EstimatorKind::Ideal,
        phi,
        phi0,
        delta: 0.0,
        n: 1,
        bias: 0.0,
        bias_sq: 0.0,
        linearized_bias: 0.0,
        mse: statistical_term,
        statistical_term,
        exact_expectation: mean,
        sampled_estimate: None,
    })
}

pub fn mse_from_spectrum(
    kind: EstimatorKind,
    scenario: &Scenario,
    spectrum: &NoisySpectrum,
    phi: f64,
    phi0: f64,
    n: u32,
    shots: u64,
) -> Result<BiasReport> {
    let order = match kind {
        EstimatorKind::Ideal => return ideal_mse(scenario, phi, phi0, shots),
        EstimatorKind::Error => 1,
        EstimatorKind::Mitigated => n,
    };
    let mut report = bias_from_spectrum(scenario, spectrum, phi, phi0, order)?;
    report.kind = kind;
    let y = scenario.ideal_slope(phi0);
    let statistical_term = match kind {
        EstimatorKind::Error => {
            if shots == 0 {
                return Err(Error::invalid("shot count must be >= 1"));
            }
            let e = report.exact_expectation;
            (1.0 - e * e) / (shots as f64 * y * y)
        }
        _ => {
            let per_circuit = mitigated_shots(shots, order);
            if per_circuit == 0 {
                return Err(Error::invalid(format!(
                    "{shots} shots leave no samples per circuit at order {order}"
                )));
            }
            let (a, i) = spectrum.circuit_means(phi0 + phi, order);
            mitigated_variance(a, i) / (per_circuit as f64 * y * y)
        }
    };
    report.statistical_term = statistical_term;
    report.mse = report.bias_sq + statistical_term;
    Ok(report)
}

/// Delta-method variance of `Z_A / Z_I` for one sample of each circuit.
pub fn mitigated_variance(a: f64, i: f64) -> f64 {
    (1.0 - a * a) / (i * i) + a * a * (1.0 - i * i) / i.powi(4)
}

/// Coefficients of the small-noise expansions at a fixed reference point.
///
/// Series are stored from the first power of the noise strength except
/// `b_k`, which starts at the constant term. With
/// `lambda = 1 - sum lambda_k D^k`, the unmitigated bias expands as
/// `sum (f_k + phi df_k) D^k / y_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub phi0: f64,
    pub lambda_k: Vec<f64>,
    pub a_k: Vec<f64>,
    /// Phase derivatives of `a_k`.
    pub da_k: Vec<f64>,
    pub b_k: Vec<f64>,
    pub f_k: Vec<f64>,
    /// Phase derivatives of `f_k`.
    pub df_k: Vec<f64>,
    /// Fitted expansion of the linearized bias for orders `1..=orders`:
    /// `bias_zeroth[n-1][k-1]` multiplies `D^k`, `bias_slope[n-1][k-1]` multiplies `phi D^k`.
    pub bias_zeroth: Vec<Vec<f64>>,
    pub bias_slope: Vec<Vec<f64>>,
    pub fit_residual: f64,
    /// Largest strength in the fitting grid.
    pub strength_max: f64,
}

/// Log-spaced strengths in `[1e-4, delta_max / 4]`.
pub fn strength_grid(delta_max: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (1e-4f64.ln(), (delta_max / 4.0).ln());
    (0..points)
        .map(|j| (lo + (hi - lo) * j as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Fits the expansions over `grid` with polynomials of degree `max_order + 2`.
/// `orders` sets how many mitigation orders get a direct bias expansion.
pub fn series_coefficients(
    scenario: &Scenario,
    phi0: f64,
    max_order: usize,
    grid: &[f64],
    orders: u32,
) -> Result<SeriesCoefficients> {
    if max_order == 0 {
        return Err(Error::invalid("max_order must be >= 1"));
    }
    if grid.len() < 2 * max_order + 1 {
        return Err(Error::invalid(format!(
            "need at least {} strengths for order {max_order}",
            2 * max_order + 1
        )));
    }
    if grid.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid("strength grid must be positive"));
    }
    let ideal = Linearization::ideal(scenario, phi0);
    ideal.check_slope()?;
    let degree = max_order + 2;
    let spectra: Vec<NoisySpectrum> = grid.iter().map(|&d| scenario.spectrum(d)).collect::<Result<_>>()?;
    if let Some(s) = spectra.iter().find(|s| s.is_degenerate()) {
        return Err(Error::numerical(format!(
            "dominant eigenvalue is degenerate at strength {}",
            s.strength()
        )));
    }
    let column = |f: &dyn Fn(&NoisySpectrum) -> f64| spectra.iter().map(f).collect::<Vec<f64>>();

    let mut residual: f64 = 0.0;
    let mut fit = |data: Vec<f64>, intercept: bool| -> Vec<f64> {
        let (coeffs, r) = poly_fit(grid, &data, degree, intercept);
        residual = residual.max(r);
        coeffs
    };

    let lambda_k = fit(column(&|s| 1.0 - s.dominant_eigenvalue()), false);
    let a_k = fit(column(&|s| s.dominant_expectation(phi0) - ideal.x), false);
    let da_k = fit(column(&|s| s.dominant_slope(phi0) - ideal.y), false);
    let b_k = fit(
        column(&|s| s.tail_expectation(phi0).map_or(0.0, |t| t - ideal.x)),
        true,
    );
    let db_k = fit(column(&|s| s.tail_slope(phi0).map_or(0.0, |t| t - ideal.y)), true);

    let f_k = assemble_f(&lambda_k, &a_k, &b_k, max_order);
    let df_k = assemble_f(&lambda_k, &da_k, &db_k, max_order);

    let mut bias_zeroth = Vec::new();
    let mut bias_slope = Vec::new();
    for n in 1..=orders.max(1) {
        bias_zeroth.push(fit(column(&|s| (s.expectation(phi0, n) - ideal.x) / ideal.y), false));
        bias_slope.push(fit(column(&|s| (s.slope(phi0, n) - ideal.y) / ideal.y), false));
    }
    if residual > 1e-6 {
        return Err(Error::numerical(format!(
            "series fit residual {residual:.3e} exceeds 1e-6 of the data scale"
        )));
    }
    let trim = |v: Vec<f64>, len: usize| v.into_iter().take(len).collect::<Vec<f64>>();
    Ok(SeriesCoefficients {
        phi0,
        lambda_k: trim(lambda_k, max_order),
        a_k: trim(a_k, max_order),
        da_k: trim(da_k, max_order),
        b_k: trim(b_k, max_order + 1),
        f_k,
        df_k,
        bias_zeroth: bias_zeroth.into_iter().map(|v| trim(v, max_order)).collect(),
        bias_slope: bias_slope.into_iter().map(|v| trim(v, max_order)).collect(),
        fit_residual: residual,
        strength_max: grid.iter().cloned().fold(0.0, f64::max),
    })
}

/// `f_k = a_k - sum_{l<k} lambda_l a_{k-l} + sum_{l<=k} lambda_l b_{k-l}`,
/// the coefficient of `D^k` in `lambda a(D) + (1 - lambda) b(D)`.
pub fn assemble_f(lambda_k: &[f64], a_k: &[f64], b_k: &[f64], max_order: usize) -> Vec<f64> {
    let lam = |l: usize| lambda_k.get(l - 1).copied().unwrap_or(0.0);
    let a = |k: usize| a_k.get(k - 1).copied().unwrap_or(0.0);
    let b = |k: usize| b_k.get(k).copied().unwrap_or(0.0);
    (1..=max_order)
        .map(|k| {
            let mut v = a(k);
            for l in 1..k {
                v -= lam(l) * a(k - l);
            }
            for l in 1..=k {
                v += lam(l) * b(k - l);
            }
            v
        })
        .collect()
}

/// Least-squares polynomial fit in the scaled variable `D / max(D)`.
/// Returns coefficients of `D^0..=D^degree` (or `D^1..` without intercept)
/// and the largest residual relative to the data scale.
fn poly_fit(x: &[f64], y: &[f64], degree: usize, intercept: bool) -> (Vec<f64>, f64) {
    let hi = x.iter().cloned().fold(0.0, f64::max);
    let first = if intercept { 0 } else { 1 };
    let cols = degree + 1 - first;
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale <= NEGLIGIBLE {
        return (vec![0.0; cols], 0.0);
    }
    let a = DMatrix::from_fn(x.len(), cols, |r, c| (x[r] / hi).powi((c + first) as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-14).expect("SVD was computed with both factors");
    let fitted = &a * &sol;
    // the floor keeps series that start at high order (tiny data) from
    // failing on misfits far below anything downstream can see
    let rel = (fitted - b).amax() / scale.max(RESIDUAL_FLOOR);
    let coeffs = (0..cols).map(|c| sol[c] / hi.powi((c + first) as i32)).collect();
    (coeffs, rel)
}

/// Leading power of the noise strength in the linearized bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingOrder {
    /// `None` when every fitted coefficient is negligible.
    pub order: Option<usize>,
    pub coefficient: f64,
}

/// First power `k` whose coefficient in the order-`n` bias at `phi` exceeds
/// `1e-8` and whose term at the top of the fitting grid is at least
/// `LEAKAGE` of the largest term; below that a coefficient is
/// indistinguishable from higher orders leaking into the fit.
pub fn bias_leading_order(series: &SeriesCoefficients, n: u32, phi: f64) -> Result<LeadingOrder> {
    check_order(n)?;
    let idx = n as usize - 1;
    let (zeroth, slope) = match (series.bias_zeroth.get(idx), series.bias_slope.get(idx)) {
        (Some(z), Some(s)) => (z, s),
        _ => {
            return Err(Error::invalid(format!(
                "series were fitted for orders up to {}",
                series.bias_zeroth.len()
            )))
        }
    };
    let coeffs: Vec<f64> = zeroth.iter().zip(slope).map(|(z, s)| z + s * phi).collect();
    Ok(leading_term(&coeffs, series.strength_max))
}

/// Fraction of the largest term below which a fitted term is treated as leakage.
pub const LEAKAGE: f64 = 1e-3;

fn leading_term(coeffs: &[f64], strength_max: f64) -> LeadingOrder {
    let terms: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| (c * strength_max.powi(k as i32 + 1)).abs())
        .collect();
    let largest = terms.iter().cloned().fold(0.0, f64::max);
    for (k, c) in coeffs.iter().enumerate() {
        if c.abs() > 1e-8 && terms[k] >= LEAKAGE * largest {
            return LeadingOrder {
                order: Some(k + 1),
                coefficient: *c,
            };
        }
    }
    LeadingOrder {
        order: None,
        coefficient: 0.0,
    }
}

/// First index `k >= 1` with `|a_k| > 1e-8`, the order at which the dominant
/// eigenvector's signal departs from the ideal one.
pub fn first_nonzero_a(series: &SeriesCoefficients) -> Option<usize> {
    leading_term(&series.a_k, series.strength_max).order
}

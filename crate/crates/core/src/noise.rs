//! Noise channels: phase diffusion, photon loss and additive Gaussian
//! displacement noise, plus closed forms used as cross-checks.

use crate::error::{Error, Result};
use crate::fock::{
    mode, noon_partner_state, noon_state, interferometer_output, DensityMatrix, FockSpace, Mode,
    PureState,
};
use crate::linalg::{cmul, hermitian_eigh, hermitian_part, max_abs_diff, weighted_outer, CMatrix, CVector, C64};
use crate::quadrature::NormalRule;

/// Quadrature nodes with weight below this are skipped.
const WEIGHT_FLOOR: f64 = 1e-18;
/// Largest change tolerated when the node count is doubled.
const CONVERGENCE_TOL: f64 = 1e-8;

/// A noise channel together with its strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Gaussian random encoding phase with variance `strength`.
    PhaseDiffusion { strength: f64 },
    /// Loss probability `strength` on every mode.
    PhotonLoss { strength: f64 },
    /// Random displacement with quadrature widths matched to squeezing `squeezing`.
    AdditiveGaussian { strength: f64, squeezing: f64 },
}

impl NoiseKind {
    pub fn strength(&self) -> f64 {
        match *self {
            NoiseKind::PhaseDiffusion { strength }
            | NoiseKind::PhotonLoss { strength }
            | NoiseKind::AdditiveGaussian { strength, .. } => strength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.strength();
        if !s.is_finite() || s < 0.0 {
            return Err(Error::invalid(format!("noise strength must be >= 0, got {s}")));
        }
        if let NoiseKind::PhotonLoss { strength } = self {
            if *strength > 1.0 {
                return Err(Error::invalid("loss probability must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Node counts for the Gaussian averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSettings {
    pub phase_nodes: usize,
    pub displacement_nodes: usize,
    pub check_convergence: bool,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            phase_nodes: 61,
            displacement_nodes: 41,
            check_convergence: true,
        }
    }
}

/// Average of `builder(x)` over `x ~ N(0, variance)`.
pub fn phase_diffusion_quadrature<F>(builder: F, variance: f64, nodes: usize) -> Result<DensityMatrix>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    phase_diffusion_with(builder, variance, nodes, true)
}

pub(crate) fn phase_diffusion_with<F>(
    builder: F,
    variance: f64,
    nodes: usize,
    check: bool,
) -> Result<DensityMatrix>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    if !(variance >= 0.0) {
        return Err(Error::invalid("phase-diffusion variance must be >= 0"));
    }
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(Error::invalid("phase-diffusion quadrature needs an odd node count >= 3"));
    }
    if variance == 0.0 {
        return builder(0.0);
    }
    let first = gaussian_phase_average(&builder, variance, nodes)?;
    if check {
        let second = gaussian_phase_average(&builder, variance, 2 * nodes + 1)?;
        let change = max_abs_diff(first.matrix(), second.matrix());
        if change > CONVERGENCE_TOL {
            return Err(Error::Quadrature { change });
        }
    }
    Ok(first)
}

fn gaussian_phase_average<F>(builder: &F, variance: f64, nodes: usize) -> Result<DensityMatrix>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    let rule = NormalRule::new(nodes)?;
    let (pairs, _) = rule.significant(WEIGHT_FLOOR);
    let sd = variance.sqrt();
    let mut acc: Option<CMatrix> = None;
    let mut space = None;
    for (x, w) in pairs {
        let rho = builder(sd * x)?;
        space = Some(*rho.space());
        let term = rho.into_matrix() * C64::from(w);
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    let space = space.expect("rule has nodes");
    DensityMatrix::from_raw(space, hermitian_part(&acc.expect("rule has nodes")))
}

/// Dephased N00N interferometer output at encoding phase `theta`:
/// `lambda |psi><psi| + (1 - lambda) |psi_perp><psi_perp|`.
pub fn phase_diffusion_noon_analytic(
    photons: usize,
    theta: f64,
    variance: f64,
    space: FockSpace,
) -> Result<DensityMatrix> {
    let lambda = noon_dephasing_eigenvalue(photons, variance);
    let ideal = interferometer_output(&noon_state(space, photons)?, theta)?;
    let partner = interferometer_output(&noon_partner_state(space, photons)?, theta)?;
    let m = ideal.density().into_matrix() * C64::from(lambda)
        + partner.density().into_matrix() * C64::from(1.0 - lambda);
    DensityMatrix::from_raw(space, hermitian_part(&m))
}

/// `(1 + exp(-variance N^2 / 2)) / 2`.
pub fn noon_dephasing_eigenvalue(photons: usize, variance: f64) -> f64 {
    let n = photons as f64;
    0.5 * (1.0 + (-0.5 * variance * n * n).exp())
}

/// Which modes a channel acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossModes {
    First,
    Second,
    Both,
}

/// Pure-loss channel with probability `loss` on the selected modes.
pub fn photon_loss(rho: &DensityMatrix, loss: f64, modes: LossModes) -> Result<DensityMatrix> {
    NoiseKind::PhotonLoss { strength: loss }.validate()?;
    let space = *rho.space();
    let mut m = rho.matrix().clone();
    if matches!(modes, LossModes::First | LossModes::Both) {
        m = loss_on_mode(&m, space, Mode::First, loss);
    }
    if matches!(modes, LossModes::Second | LossModes::Both) {
        m = loss_on_mode(&m, space, Mode::Second, loss);
    }
    let out = DensityMatrix::from_raw(space, hermitian_part(&m))?;
    if (out.trace() - rho.trace()).abs() > space.trace_tolerance() {
        return Err(Error::numerical("loss channel changed the trace"));
    }
    Ok(out)
}

fn loss_on_mode(m: &CMatrix, space: FockSpace, which: Mode, loss: f64) -> CMatrix {
    let d = space.mode_dim();
    let mut out = CMatrix::zeros(space.dim(), space.dim());
    let idx = |acted: usize, spectator: usize| match which {
        Mode::First => space.index(acted, spectator),
        Mode::Second => space.index(spectator, acted),
    };
    for s in 0..d {
        for sp in 0..d {
            let block = CMatrix::from_fn(d, d, |a, b| m[(idx(a, s), idx(b, sp))]);
            let mapped = mode::loss_map(&block, loss);
            for a in 0..d {
                for b in 0..d {
                    out[(idx(a, s), idx(b, sp))] = mapped[(a, b)];
                }
            }
        }
    }
    out
}

/// Thermal occupation and squeezing of lossy squeezed vacuum.
pub fn lossy_squeezing_parameters(r: f64, loss: f64) -> (f64, f64) {
    let eta = 1.0 - loss;
    let nr = r.sinh().powi(2);
    let mean = 0.5 * (-1.0 + (1.0 - 4.0 * nr * (eta * eta - eta)).sqrt());
    let root = (nr * nr + nr).sqrt();
    let num = eta * (2.0 * nr + 2.0 * root) + 1.0;
    let den = eta * (2.0 * nr - 2.0 * root) + 1.0;
    (mean, 0.25 * (num / den).ln() * r.signum())
}

/// Closed form of squeezed vacuum `S(r)|0>` after loss, on a single mode.
pub fn loss_squeezed_thermal_analytic(r: f64, loss: f64, cutoff: usize) -> Result<CMatrix> {
    NoiseKind::PhotonLoss { strength: loss }.validate()?;
    let (mean, r_bar) = lossy_squeezing_parameters(r, loss);
    mode::squeezed_thermal(r_bar, mean, cutoff)
        .ok_or_else(|| Error::invalid("squeezed thermal series needs more terms than the cutoff allows"))
}

/// Closed form of squeezed vacuum `S(r)|0>` after matched additive Gaussian noise.
pub fn gaussian_squeezed_thermal_analytic(r: f64, strength: f64, cutoff: usize) -> Result<CMatrix> {
    mode::squeezed_thermal(r, strength, cutoff)
        .ok_or_else(|| Error::invalid("squeezed thermal series needs more terms than the cutoff allows"))
}

/// Displacement standard deviations `(sqrt(D/2) e^{-r}, sqrt(D/2) e^{r})`.
pub fn matched_widths(strength: f64, squeezing: f64) -> (f64, f64) {
    let s = (0.5 * strength).sqrt();
    (s * (-squeezing).exp(), s * squeezing.exp())
}

/// Gaussian displacement channel on one mode of a two-mode state. `sigma_x`
/// and `sigma_p` are the standard deviations of the real and imaginary parts
/// of the displacement amplitude.
pub fn additive_gaussian(
    rho: &DensityMatrix,
    sigma_x: f64,
    sigma_p: f64,
    which: Mode,
    nodes: usize,
) -> Result<DensityMatrix> {
    let space = *rho.space();
    let d = space.mode_dim();
    let apply = |disp: &CMatrix, members: &CMatrix| -> CMatrix {
        let mut out = CMatrix::zeros(space.dim(), members.ncols());
        for (col, v) in members.column_iter().enumerate() {
            for s in 0..d {
                for a in 0..d {
                    let mut acc = C64::from(0.0);
                    for b in 0..d {
                        let src = match which {
                            Mode::First => v[space.index(b, s)],
                            Mode::Second => v[space.index(s, b)],
                        };
                        acc += disp[(a, b)] * src;
                    }
                    let dst = match which {
                        Mode::First => space.index(a, s),
                        Mode::Second => space.index(s, a),
                    };
                    out[(dst, col)] = acc;
                }
            }
        }
        out
    };
    let m = displaced_average(rho.matrix(), sigma_x, sigma_p, nodes, true, space.cutoff_per_mode(), apply)?;
    DensityMatrix::from_raw(space, m)
}

/// Single-mode version of [`additive_gaussian`]; the result may lose trace
/// through the cutoff, which the caller inspects.
pub fn additive_gaussian_mode(
    rho: &CMatrix,
    sigma_x: f64,
    sigma_p: f64,
    nodes: usize,
    check_convergence: bool,
) -> Result<CMatrix> {
    let cutoff = rho.nrows() - 1;
    displaced_average(rho, sigma_x, sigma_p, nodes, check_convergence, cutoff, cmul)
}

/// Extra levels carried while displacing so that entries up to the cutoff
/// see the input's neighbourhood beyond it.
pub const GAUSSIAN_PADDING: usize = 60;

/// Gaussian displacement channel applied to the pure single-mode state
/// `amplitudes` (given on a padded basis) and truncated to `0..=cutoff`.
pub fn additive_gaussian_mode_padded(
    amplitudes: &CVector,
    sigma_x: f64,
    sigma_p: f64,
    nodes: usize,
    check_convergence: bool,
    cutoff: usize,
) -> Result<CMatrix> {
    let rho = amplitudes * amplitudes.adjoint();
    let full = additive_gaussian_mode(&rho, sigma_x, sigma_p, nodes, check_convergence)?;
    Ok(full.view((0, 0), (cutoff + 1, cutoff + 1)).into_owned())
}

fn displaced_average<F>(
    rho: &CMatrix,
    sigma_x: f64,
    sigma_p: f64,
    nodes: usize,
    check: bool,
    cutoff: usize,
    apply: F,
) -> Result<CMatrix>
where
    F: Fn(&CMatrix, &CMatrix) -> CMatrix,
{
    if !(sigma_x >= 0.0 && sigma_p >= 0.0) {
        return Err(Error::invalid("displacement widths must be >= 0"));
    }
    if sigma_x == 0.0 && sigma_p == 0.0 {
        return Ok(rho.clone());
    }
    let first = displaced_ensemble_sum(rho, sigma_x, sigma_p, nodes, cutoff, &apply)?;
    if check {
        let second = displaced_ensemble_sum(rho, sigma_x, sigma_p, 2 * nodes, cutoff, &apply)?;
        let change = max_abs_diff(&first, &second);
        if change > CONVERGENCE_TOL {
            return Err(Error::Quadrature { change });
        }
    }
    Ok(first)
}

fn displaced_ensemble_sum<F>(
    rho: &CMatrix,
    sigma_x: f64,
    sigma_p: f64,
    nodes: usize,
    cutoff: usize,
    apply: &F,
) -> Result<CMatrix>
where
    F: Fn(&CMatrix, &CMatrix) -> CMatrix,
{
    let rule = NormalRule::new(nodes)?;
    let (pairs, _) = rule.significant(WEIGHT_FLOOR);
    let (values, vectors) = hermitian_eigh(rho);
    let mut weights: Vec<f64> = Vec::new();
    let mut columns: Vec<CVector> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        if v > WEIGHT_FLOOR {
            weights.push(v);
            columns.push(vectors.column(k).into_owned());
        }
    }
    let mut members = CMatrix::from_columns(&columns);
    // D(x + ip) = D(x) D(ip) up to a phase that cancels in D rho D†
    for (sigma, imaginary) in [(sigma_p, true), (sigma_x, false)] {
        if sigma == 0.0 {
            continue;
        }
        let width = members.ncols();
        let mut next = CMatrix::zeros(members.nrows(), width * pairs.len());
        let mut next_w = Vec::with_capacity(width * pairs.len());
        for (j, &(t, w)) in pairs.iter().enumerate() {
            let amount = sigma * t;
            let beta = if imaginary { C64::new(0.0, amount) } else { C64::new(amount, 0.0) };
            let disp = mode::displacement(beta, cutoff);
            next.columns_mut(j * width, width).copy_from(&apply(&disp, &members));
            next_w.extend(weights.iter().map(|mw| mw * w));
        }
        weights = next_w;
        members = next;
    }
    Ok(hermitian_part(&weighted_outer(&members, &weights)))
}

/// Dephasing of a two-mode input by a Gaussian random phase on mode 2.
pub fn dephase_input(input: &PureState, variance: f64, nodes: usize, check: bool) -> Result<DensityMatrix> {
    let space = *input.space();
    let rho = input.density();
    phase_diffusion_with(
        |x| rho.conjugate(&crate::fock::phase_shift(space, x)),
        variance,
        nodes,
        check,
    )
}

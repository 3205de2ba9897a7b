//! Probe + noise combinations and their noisy spectra.
//!
//! Every channel here acts on the probe before the phase-dependent part of
//! the interferometer, so the noisy output is `W(theta) rho W(theta)†` for a
//! fixed `rho`. The spectrum of `rho` is therefore phase independent and
//! each eigenvector contributes a [`ParityCurve`] in the encoding phase.

use crate::error::{Error, Result};
use crate::fock::sector::{ParityCurve, SectorFrames};
use crate::fock::{
    self, beam_splitter, mode, noon_state, phase_shift, DensityMatrix, FockSpace, Mode, PureState,
};
use crate::linalg::{hermitian_eigh, CMatrix, CVector, C64};
use crate::noise::{
    additive_gaussian, additive_gaussian_mode_padded, dephase_input, matched_widths,
    photon_loss, LossModes, NoiseKind, QuadratureSettings, GAUSSIAN_PADDING,
};

/// Eigenvalues below this are dropped from spectra (their weight is tracked).
const EIGEN_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    /// `(|N,0> + |0,N>)/sqrt(2)` fed directly to the phase shift.
    Noon { photons: usize },
    /// Coherent state on mode 1 and squeezed vacuum on mode 2, mixed on a
    /// beam splitter before the phase shift.
    CoherentSqueezed {
        coherent_photons: f64,
        squeezed_photons: f64,
    },
}

impl Probe {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Probe::Noon { photons: 0 } => Err(Error::invalid("N00N photon number must be >= 1")),
            Probe::CoherentSqueezed {
                coherent_photons,
                squeezed_photons,
            } if !(coherent_photons >= 0.0 && squeezed_photons >= 0.0) => {
                Err(Error::invalid("mean photon numbers must be >= 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn default_cutoff(&self) -> usize {
        match *self {
            Probe::Noon { photons } => photons.max(6),
            Probe::CoherentSqueezed { .. } => 180,
        }
    }

    pub fn default_trace_tolerance(&self) -> f64 {
        match self {
            Probe::Noon { .. } => 1e-10,
            Probe::CoherentSqueezed { .. } => 1e-8,
        }
    }

    /// Squeezing parameter `r` with `sinh^2 r` equal to the squeezed photon number.
    pub fn squeezing(&self) -> f64 {
        match *self {
            Probe::Noon { .. } => 0.0,
            Probe::CoherentSqueezed { squeezed_photons, .. } => squeezed_photons.sqrt().asinh(),
        }
    }
}

/// Noise channel family; the strength is supplied per evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFamily {
    PhaseDiffusion,
    PhotonLoss,
    /// `squeezing: None` matches the widths to the probe's own squeezing.
    AdditiveGaussian { squeezing: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub struct ScenarioOptions {
    pub cutoff: Option<usize>,
    pub trace_tolerance: Option<f64>,
    pub quadrature: QuadratureSettings,
}


#[derive(Debug, Clone)]
enum IdealInput {
    TwoMode(PureState),
    Product { first: CVector, second: CVector },
}

/// A probe, a noise family and the numerical settings used to simulate them.
#[derive(Debug, Clone)]
pub struct Scenario {
    probe: Probe,
    family: NoiseFamily,
    cutoff: usize,
    trace_tolerance: f64,
    quadrature: QuadratureSettings,
    frames: SectorFrames,
    offset: f64,
    input: IdealInput,
    ideal_curve: ParityCurve,
}

impl Scenario {
    pub fn new(probe: Probe, family: NoiseFamily) -> Result<Self> {
        Self::with_options(probe, family, ScenarioOptions::default())
    }

    pub fn with_options(probe: Probe, family: NoiseFamily, options: ScenarioOptions) -> Result<Self> {
        probe.validate()?;
        let cutoff = options.cutoff.unwrap_or_else(|| probe.default_cutoff());
        let trace_tolerance = options
            .trace_tolerance
            .unwrap_or_else(|| probe.default_trace_tolerance());
        let frames = SectorFrames::new(cutoff);
        let (input, offset, ideal_curve) = match probe {
            Probe::Noon { photons } => {
                let space = fock::make_space(cutoff, trace_tolerance)?;
                let offset = fock::calibrate_convention(space, photons)?;
                let state = noon_state(space, photons)?;
                let (curve, _) = frames.curve(&state.sectors(), false);
                (IdealInput::TwoMode(state), offset, curve)
            }
            Probe::CoherentSqueezed {
                coherent_photons,
                squeezed_photons,
            } => {
                if family == NoiseFamily::PhaseDiffusion {
                    return Err(Error::Unsupported(
                        "phase diffusion is only modelled for the N00N probe".into(),
                    ));
                }
                let first = mode::coherent_amplitudes(C64::from(coherent_photons.sqrt()), cutoff);
                let second = mode::squeezed_number_amplitudes(squeezed_photons.sqrt().asinh(), 0, cutoff);
                let sectors = product_sectors(&first, &second, cutoff);
                let (curve, norm) = frames.curve(&sectors, true);
                check_deficit(1.0 - norm, trace_tolerance, "ideal coherent-squeezed probe")?;
                (IdealInput::Product { first, second }, 0.0, curve)
            }
        };
        Ok(Self {
            probe,
            family,
            cutoff,
            trace_tolerance,
            quadrature: options.quadrature,
            frames,
            offset,
            input,
            ideal_curve,
        })
    }

    pub fn probe(&self) -> Probe {
        self.probe
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn trace_tolerance(&self) -> f64 {
        self.trace_tolerance
    }

    pub fn quadrature(&self) -> QuadratureSettings {
        self.quadrature
    }

    /// Calibration offset added to `phi + phi0` before encoding.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn noise(&self, strength: f64) -> NoiseKind {
        match self.family {
            NoiseFamily::PhaseDiffusion => NoiseKind::PhaseDiffusion { strength },
            NoiseFamily::PhotonLoss => NoiseKind::PhotonLoss { strength },
            NoiseFamily::AdditiveGaussian { squeezing } => NoiseKind::AdditiveGaussian {
                strength,
                squeezing: squeezing.unwrap_or_else(|| self.probe.squeezing()),
            },
        }
    }

    /// Noiseless parity signal at `phi + phi0`.
    pub fn ideal_expectation(&self, phase: f64) -> f64 {
        self.ideal_curve.value(phase + self.offset)
    }

    pub fn ideal_slope(&self, phase: f64) -> f64 {
        self.ideal_curve.derivative(phase + self.offset)
    }

    /// Two-mode Fock space used for dense cross-checks (N00N probes only).
    pub fn dense_space(&self) -> Result<FockSpace> {
        match &self.input {
            IdealInput::TwoMode(state) => Ok(*state.space()),
            IdealInput::Product { .. } => Err(Error::Unsupported(
                "dense two-mode states are not built at the coherent-squeezed cutoff".into(),
            )),
        }
    }

    /// Noisy probe before the phase shift, as a dense two-mode matrix.
    pub fn noisy_input(&self, strength: f64) -> Result<DensityMatrix> {
        let state = match &self.input {
            IdealInput::TwoMode(state) => state,
            IdealInput::Product { .. } => return Err(self.dense_space().unwrap_err()),
        };
        let noise = self.noise(strength);
        noise.validate()?;
        match noise {
            NoiseKind::PhaseDiffusion { strength } => dephase_input(
                state,
                strength,
                self.quadrature.phase_nodes,
                self.quadrature.check_convergence,
            ),
            NoiseKind::PhotonLoss { strength } => photon_loss(&state.density(), strength, LossModes::Both),
            NoiseKind::AdditiveGaussian { strength, squeezing } => {
                let (sx, sp) = matched_widths(strength, squeezing);
                additive_gaussian(&state.density(), sx, sp, Mode::Second, self.quadrature.displacement_nodes)
            }
        }
    }

    /// Dense noisy interferometer output at `phi + phi0` (N00N probes only).
    pub fn noisy_output(&self, strength: f64, phase: f64) -> Result<DensityMatrix> {
        let rho = self.noisy_input(strength)?;
        let space = *rho.space();
        rho.conjugate(&(beam_splitter(space) * phase_shift(space, phase + self.offset)))
    }

    /// Ideal interferometer output at `phi + phi0` (N00N probes only).
    pub fn ideal_output(&self, phase: f64) -> Result<PureState> {
        match &self.input {
            IdealInput::TwoMode(state) => fock::interferometer_output(state, phase + self.offset),
            IdealInput::Product { .. } => Err(self.dense_space().unwrap_err()),
        }
    }

    pub fn spectrum(&self, strength: f64) -> Result<NoisySpectrum> {
        self.build_spectrum(strength, true)
    }

    /// Largest eigenvalue of the noisy probe. Truncation is not enforced,
    /// which keeps bracketing searches usable at strengths the cutoff cannot
    /// represent faithfully.
    pub fn dominant_eigenvalue(&self, strength: f64) -> Result<f64> {
        let noise = self.noise(strength);
        noise.validate()?;
        match (&self.input, noise) {
            (IdealInput::TwoMode(_), _) => {
                let lenient = Scenario {
                    quadrature: QuadratureSettings {
                        check_convergence: false,
                        ..self.quadrature
                    },
                    trace_tolerance: 1e-2,
                    ..self.clone()
                };
                let rho = lenient.noisy_input(strength)?;
                Ok(hermitian_eigh(rho.matrix()).0[0])
            }
            (IdealInput::Product { first, second }, _) => {
                let (a, b) = self.product_mode_states(first, second, noise, false)?;
                Ok(hermitian_eigh(&a).0[0] * hermitian_eigh(&b).0[0])
            }
        }
    }

    fn product_mode_states(
        &self,
        first: &CVector,
        second: &CVector,
        noise: NoiseKind,
        check: bool,
    ) -> Result<(CMatrix, CMatrix)> {
        let pure = |v: &CVector| v * v.adjoint();
        match noise {
            NoiseKind::PhotonLoss { strength } => Ok((
                mode::loss_map(&pure(first), strength),
                mode::loss_map(&pure(second), strength),
            )),
            NoiseKind::AdditiveGaussian { strength, squeezing } => {
                let (sx, sp) = matched_widths(strength, squeezing);
                let padded = match self.probe {
                    Probe::CoherentSqueezed { squeezed_photons, .. } => mode::squeezed_number_amplitudes(
                        squeezed_photons.sqrt().asinh(),
                        0,
                        self.cutoff + GAUSSIAN_PADDING,
                    ),
                    Probe::Noon { .. } => unreachable!("product input only exists for coherent-squeezed probes"),
                };
                let noisy = additive_gaussian_mode_padded(
                    &padded,
                    sx,
                    sp,
                    self.quadrature.displacement_nodes,
                    check,
                    self.cutoff,
                )?;
                Ok((pure(first), noisy))
            }
            NoiseKind::PhaseDiffusion { .. } => Err(Error::Unsupported(
                "phase diffusion is only modelled for the N00N probe".into(),
            )),
        }
    }

    fn build_spectrum(&self, strength: f64, strict: bool) -> Result<NoisySpectrum> {
        let noise = self.noise(strength);
        noise.validate()?;
        let mut weights = Vec::new();
        let mut curves = Vec::new();
        let mut captured = 0.0;
        let fidelity;
        match &self.input {
            IdealInput::TwoMode(state) => {
                let rho = self.noisy_input(strength)?;
                let decomposition = fock::eig(&rho)?;
                let ideal = state;
                fidelity = decomposition.dominant().1.fidelity(ideal);
                for (&lam, vector) in decomposition.eigenvalues().iter().zip(decomposition.eigenvectors()) {
                    if lam <= EIGEN_FLOOR {
                        continue;
                    }
                    let (curve, norm) = self.frames.curve(&vector.sectors(), false);
                    captured += lam * norm;
                    weights.push(lam);
                    curves.push(curve);
                }
            }
            IdealInput::Product { first, second } => {
                let (a, b) = self.product_mode_states(first, second, noise, self.quadrature.check_convergence)?;
                let (va, ua) = hermitian_eigh(&a);
                let (vb, ub) = hermitian_eigh(&b);
                let ideal_first = first.unscale(first.norm());
                let ideal_second = second.unscale(second.norm());
                fidelity = ua.column(0).dotc(&ideal_first).norm_sqr() * ub.column(0).dotc(&ideal_second).norm_sqr();
                let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
                for (i, &x) in va.iter().enumerate() {
                    for (k, &y) in vb.iter().enumerate() {
                        if x * y > EIGEN_FLOOR {
                            pairs.push((x * y, i, k));
                        }
                    }
                }
                pairs.sort_by(|p, q| q.0.total_cmp(&p.0));
                for (lam, i, k) in pairs {
                    let u = ua.column(i).into_owned();
                    let e = ub.column(k).into_owned();
                    let sectors = product_sectors(&u, &e, self.cutoff);
                    let (curve, norm) = self.frames.curve(&sectors, true);
                    captured += lam * norm;
                    weights.push(lam);
                    curves.push(curve);
                }
            }
        }
        let deficit = 1.0 - captured;
        if strict {
            check_deficit(deficit, self.trace_tolerance, "noisy probe")?;
        }
        let gap = if weights.len() > 1 { weights[0] - weights[1] } else { weights[0] };
        Ok(NoisySpectrum {
            strength,
            weights,
            curves,
            fidelity,
            gap,
            deficit,
            offset: self.offset,
        })
    }
}

fn check_deficit(deficit: f64, tolerance: f64, context: &str) -> Result<()> {
    if deficit > tolerance {
        return Err(Error::Truncation {
            deficit,
            tolerance,
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Sector components of `|a>_1 |b>_2` for totals up to `cutoff`.
fn product_sectors(first: &CVector, second: &CVector, cutoff: usize) -> Vec<CVector> {
    (0..=cutoff)
        .map(|t| CVector::from_fn(t + 1, |k, _| first[k] * second[t - k]))
        .collect()
}

/// Phase-independent spectrum of a noisy probe with one parity curve per
/// retained eigenvector.
#[derive(Debug, Clone)]
pub struct NoisySpectrum {
    strength: f64,
    weights: Vec<f64>,
    curves: Vec<ParityCurve>,
    fidelity: f64,
    gap: f64,
    deficit: f64,
    offset: f64,
}

impl NoisySpectrum {
    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.weights
    }

    pub fn dominant_eigenvalue(&self) -> f64 {
        self.weights[0]
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn is_degenerate(&self) -> bool {
        self.gap < fock::DEGENERACY_GAP
    }

    /// Fidelity between the dominant eigenvector and the ideal probe.
    pub fn dominant_fidelity(&self) -> f64 {
        self.fidelity
    }

    /// Weight lost to truncation and to the eigenvalue floor.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// `(Tr[A rho^n], Tr[rho^n])` at `phi + phi0`.
    pub fn circuit_means(&self, phase: f64, order: u32) -> (f64, f64) {
        let t = phase + self.offset;
        let mut za = 0.0;
        let mut zi = 0.0;
        for (w, c) in self.weights.iter().zip(&self.curves) {
            let p = w.powi(order as i32);
            za += p * c.value(t);
            zi += p;
        }
        (za, zi)
    }

    /// `Tr[A rho^n] / Tr[rho^n]` at `phi + phi0`.
    pub fn expectation(&self, phase: f64, order: u32) -> f64 {
        let (za, zi) = self.circuit_means(phase, order);
        za / zi
    }

    /// Derivative of [`Self::expectation`] in the phase.
    pub fn slope(&self, phase: f64, order: u32) -> f64 {
        let t = phase + self.offset;
        let mut num = 0.0;
        let mut den = 0.0;
        for (w, c) in self.weights.iter().zip(&self.curves) {
            let p = w.powi(order as i32);
            num += p * c.derivative(t);
            den += p;
        }
        num / den
    }

    /// Parity signal of the dominant eigenvector.
    pub fn dominant_expectation(&self, phase: f64) -> f64 {
        self.curves[0].value(phase + self.offset)
    }

    pub fn dominant_slope(&self, phase: f64) -> f64 {
        self.curves[0].derivative(phase + self.offset)
    }

    /// Weighted mean parity of the non-dominant eigenvectors.
    pub fn tail_expectation(&self, phase: f64) -> Option<f64> {
        let t = phase + self.offset;
        let total: f64 = self.weights[1..].iter().sum();
        if total <= 0.0 {
            return None;
        }
        let s: f64 = self.weights[1..]
            .iter()
            .zip(&self.curves[1..])
            .map(|(w, c)| w * c.value(t))
            .sum();
        Some(s / total)
    }

    pub fn tail_slope(&self, phase: f64) -> Option<f64> {
        let t = phase + self.offset;
        let total: f64 = self.weights[1..].iter().sum();
        if total <= 0.0 {
            return None;
        }
        let s: f64 = self.weights[1..]
            .iter()
            .zip(&self.curves[1..])
            .map(|(w, c)| w * c.derivative(t))
            .sum();
        Some(s / total)
    }

    /// Parity curves of the retained eigenvectors, dominant first.
    pub fn curves(&self) -> &[ParityCurve] {
        &self.curves
    }
}

/// Noise strength in `[0, 0.9]` at which the dominant eigenvalue equals `target`.
pub fn delta_for_lambda(scenario: &Scenario, target: f64) -> Result<f64> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::invalid("target eigenvalue must lie in (0, 1]"));
    }
    if target == 1.0 {
        return Ok(0.0);
    }
    let f = |d: f64| scenario.dominant_eigenvalue(d).map(|l| l - target);
    // the eigenvalue need not be monotone over the whole bracket (heavy loss
    // drives a state back towards vacuum), so bracket the first crossing
    let cells = 36;
    let mut lo = 0.0;
    let mut hi = None;
    for j in 1..=cells {
        let d = 0.9 * j as f64 / cells as f64;
        if f(d)? <= 0.0 {
            hi = Some(d);
            break;
        }
        lo = d;
    }
    let mut hi = hi.ok_or_else(|| {
        Error::Search(format!("dominant eigenvalue {target} is not reached for strengths in [0, 0.9]"))
    })?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    let miss = f(root)?.abs();
    if miss > 1e-4 {
        return Err(Error::Search(format!("bisection ended {miss:.2e} away from the target")));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{expectation, parity_observable};

    fn noon(family: NoiseFamily) -> Scenario {
        Scenario::new(Probe::Noon { photons: 5 }, family).unwrap()
    }

    #[test]
    fn noon_ideal_signal_is_sine() {
        let s = noon(NoiseFamily::PhotonLoss);
        for &phi in &[-0.3, 0.0, 0.1, 0.25] {
            assert!((s.ideal_expectation(phi) - (5.0 * phi).sin()).abs() < 1e-12);
            assert!((s.ideal_slope(phi) - 5.0 * (5.0 * phi).cos()).abs() < 1e-11);
        }
    }

    #[test]
    fn spectrum_matches_dense_route() {
        for family in [NoiseFamily::PhaseDiffusion, NoiseFamily::PhotonLoss] {
            let s = noon(family);
            let spec = s.spectrum(0.03).unwrap();
            let parity = parity_observable(s.dense_space().unwrap());
            for &phase in &[0.0, 0.07, -0.2] {
                let rho = s.noisy_output(0.03, phase).unwrap();
                let dense = expectation(&parity, &rho).unwrap();
                assert!((spec.expectation(phase, 1) - dense / rho.trace()).abs() < 1e-12);
                let m2 = crate::fock::matrix_power_normalized(&rho, 2).unwrap();
                let dense2 = expectation(&parity, &m2).unwrap();
                assert!((spec.expectation(phase, 2) - dense2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noon_dominant_eigenvalues() {
        let pd = noon(NoiseFamily::PhaseDiffusion).spectrum(0.02).unwrap();
        assert!((pd.dominant_eigenvalue() - crate::noise::noon_dephasing_eigenvalue(5, 0.02)).abs() < 1e-10);
        let pl = noon(NoiseFamily::PhotonLoss).spectrum(0.02).unwrap();
        assert!((pl.dominant_eigenvalue() - 0.98f64.powi(5)).abs() < 1e-12);
        assert!((pl.dominant_fidelity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_matches_finite_difference() {
        let s = noon(NoiseFamily::PhotonLoss);
        let spec = s.spectrum(0.1).unwrap();
        let h = 1e-5;
        for n in 1..=3 {
            let fd = (spec.expectation(0.2 + h, n) - spec.expectation(0.2 - h, n)) / (2.0 * h);
            assert!((spec.slope(0.2, n) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn coherent_squeezed_rejects_phase_diffusion() {
        let r = Scenario::new(
            Probe::CoherentSqueezed {
                coherent_photons: 2.5,
                squeezed_photons: 2.5,
            },
            NoiseFamily::PhaseDiffusion,
        );
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn bisection_on_noon_loss() {
        let s = noon(NoiseFamily::PhotonLoss);
        let d = delta_for_lambda(&s, 0.9).unwrap();
        assert!((d - (1.0 - 0.9f64.powf(0.2))).abs() < 1e-8);
        assert_eq!(delta_for_lambda(&s, 1.0).unwrap(), 0.0);
    }
}

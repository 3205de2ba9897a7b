//! Truncated two-mode Fock space: states, unitaries, observables and spectra.
//!
//! Basis states `|n1, n2>` with `0 <= n1, n2 <= cutoff` are stored at index
//! `n1 * (cutoff + 1) + n2`.

pub mod mode;
pub mod sector;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{
    fix_phase, hermitian_defect, hermitian_eigh, hermitian_part, trace, weighted_outer, CMatrix,
    CVector, C64,
};

/// Largest Hermitian defect tolerated in a density matrix or observable.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues down to `-PSD_TOL` are clipped to zero; anything lower is an error.
pub const PSD_TOL: f64 = 1e-10;
/// Gap below which the top eigenvalue is flagged as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockSpace {
    cutoff: usize,
    trace_tolerance: f64,
}

pub fn make_space(cutoff_per_mode: usize, trace_tolerance: f64) -> Result<FockSpace> {
    FockSpace::new(cutoff_per_mode, trace_tolerance)
}

impl FockSpace {
    pub fn new(cutoff_per_mode: usize, trace_tolerance: f64) -> Result<Self> {
        if cutoff_per_mode < 1 {
            return Err(Error::invalid("cutoff_per_mode must be at least 1"));
        }
        if !(trace_tolerance > 0.0 && trace_tolerance <= 1e-2) {
            return Err(Error::invalid(format!(
                "trace_tolerance must lie in (0, 1e-2], got {trace_tolerance}"
            )));
        }
        Ok(Self {
            cutoff: cutoff_per_mode,
            trace_tolerance,
        })
    }

    pub fn cutoff_per_mode(&self) -> usize {
        self.cutoff
    }

    pub fn mode_dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.mode_dim() * self.mode_dim()
    }

    pub fn trace_tolerance(&self) -> f64 {
        self.trace_tolerance
    }

    pub fn index(&self, n1: usize, n2: usize) -> usize {
        debug_assert!(n1 <= self.cutoff && n2 <= self.cutoff);
        n1 * self.mode_dim() + n2
    }

    pub fn occupations(&self, index: usize) -> (usize, usize) {
        (index / self.mode_dim(), index % self.mode_dim())
    }

    pub(crate) fn ensure_same(&self, other: &FockSpace) -> Result<()> {
        if self != other {
            return Err(Error::invalid("operands live on different Fock spaces"));
        }
        Ok(())
    }

    fn check_deficit(&self, norm_sqr: f64, context: &str) -> Result<()> {
        let deficit = 1.0 - norm_sqr;
        if deficit > self.trace_tolerance {
            return Err(Error::Truncation {
                deficit,
                tolerance: self.trace_tolerance,
                context: context.to_string(),
            });
        }
        if norm_sqr > 1.0 + 1e-12 {
            return Err(Error::numerical(format!("{context}: norm {norm_sqr} exceeds one")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: FockSpace,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(space: FockSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::invalid(format!(
                "expected {} amplitudes, got {}",
                space.dim(),
                amplitudes.len()
            )));
        }
        space.check_deficit(amplitudes.norm_squared(), "pure state")?;
        Ok(Self { space, amplitudes })
    }

    /// `|a>_1 |b>_2` from single-mode amplitude vectors of length `cutoff + 1`.
    pub fn product(space: FockSpace, first: &CVector, second: &CVector) -> Result<Self> {
        let d = space.mode_dim();
        if first.len() != d || second.len() != d {
            return Err(Error::invalid("single-mode vectors must have length cutoff + 1"));
        }
        let amps = CVector::from_fn(space.dim(), |i, _| {
            let (n1, n2) = space.occupations(i);
            first[n1] * second[n2]
        });
        Self::new(space, amps)
    }

    pub fn basis(space: FockSpace, n1: usize, n2: usize) -> Result<Self> {
        if n1 > space.cutoff || n2 > space.cutoff {
            return Err(Error::invalid("occupation exceeds cutoff"));
        }
        let mut amps = CVector::zeros(space.dim());
        amps[space.index(n1, n2)] = C64::from(1.0);
        Ok(Self {
            space,
            amplitudes: amps,
        })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    pub fn evolve(&self, unitary: &CMatrix) -> Result<PureState> {
        PureState::new(self.space, unitary * &self.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Components grouped by total photon number `T <= cutoff`, each indexed by `n1`.
    pub fn sectors(&self) -> Vec<CVector> {
        (0..=self.space.cutoff)
            .map(|t| CVector::from_fn(t + 1, |k, _| self.amplitudes[self.space.index(k, t - k)]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: FockSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian, positive semidefinite within
    /// [`PSD_TOL`], trace inside the truncation budget.
    pub fn new(space: FockSpace, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_raw(space, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape and trace checks only; used for outputs of operations whose
    /// positivity holds by construction.
    pub(crate) fn from_raw(space: FockSpace, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::invalid(format!(
                "density matrix must be {0}x{0}",
                space.dim()
            )));
        }
        let rho = Self { space, matrix };
        let defect = hermitian_defect(&rho.matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::numerical(format!("matrix is not Hermitian (defect {defect:.3e})")));
        }
        space.check_deficit(rho.trace(), "density matrix trace")?;
        debug_assert!(rho.validate().is_ok(), "operation produced an invalid state");
        Ok(rho)
    }

    pub fn validate(&self) -> Result<()> {
        let defect = hermitian_defect(&self.matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::numerical(format!("matrix is not Hermitian (defect {defect:.3e})")));
        }
        self.space.check_deficit(self.trace(), "density matrix trace")?;
        let (values, _) = hermitian_eigh(&self.matrix);
        let min = values.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::numerical(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn vacuum(space: FockSpace) -> Self {
        PureState::basis(space, 0, 0).expect("vacuum is always representable").density()
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    /// `U rho U†`.
    pub fn conjugate(&self, unitary: &CMatrix) -> Result<DensityMatrix> {
        Self::from_raw(self.space, hermitian_part(&(unitary * &self.matrix * unitary.adjoint())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    space: FockSpace,
    matrix: CMatrix,
    is_involutory: bool,
}

impl Observable {
    pub fn new(space: FockSpace, matrix: CMatrix, is_involutory: bool) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::invalid("observable has the wrong shape"));
        }
        if hermitian_defect(&matrix) > HERMITIAN_TOL {
            return Err(Error::invalid("observable is not Hermitian"));
        }
        if is_involutory {
            let sq = &matrix * &matrix;
            let id = CMatrix::identity(space.dim(), space.dim());
            if crate::linalg::max_abs_diff(&sq, &id) > 1e-12 {
                return Err(Error::invalid("observable flagged involutory but M^2 != I"));
            }
        }
        Ok(Self {
            space,
            matrix,
            is_involutory,
        })
    }

    pub fn identity(space: FockSpace) -> Self {
        Self {
            space,
            matrix: CMatrix::identity(space.dim(), space.dim()),
            is_involutory: true,
        }
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_involutory(&self) -> bool {
        self.is_involutory
    }
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<PureState>,
    dominant_gap: f64,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[PureState] {
        &self.eigenvectors
    }

    pub fn dominant_gap(&self) -> f64 {
        self.dominant_gap
    }

    pub fn is_degenerate(&self) -> bool {
        self.dominant_gap < DEGENERACY_GAP
    }

    pub fn dominant(&self) -> (f64, &PureState) {
        (self.eigenvalues[0], &self.eigenvectors[0])
    }

    pub fn reconstruct(&self) -> CMatrix {
        let space = self.eigenvectors[0].space;
        let vectors = CMatrix::from_columns(
            &self.eigenvectors.iter().map(|v| v.amplitudes.clone()).collect::<Vec<_>>(),
        );
        debug_assert_eq!(vectors.nrows(), space.dim());
        weighted_outer(&vectors, &self.eigenvalues)
    }
}

pub fn noon_state(space: FockSpace, photons: usize) -> Result<PureState> {
    if photons == 0 || photons > space.cutoff {
        return Err(Error::invalid(format!(
            "N00N photon number {photons} must lie in 1..={}",
            space.cutoff
        )));
    }
    let mut amps = CVector::zeros(space.dim());
    amps[space.index(photons, 0)] = C64::from(FRAC_1_SQRT_2);
    amps[space.index(0, photons)] = C64::from(FRAC_1_SQRT_2);
    PureState::new(space, amps)
}

/// `(|N,0> - |0,N>)/sqrt(2)`, the partner of the N00N state under dephasing.
pub fn noon_partner_state(space: FockSpace, photons: usize) -> Result<PureState> {
    let mut s = noon_state(space, photons)?;
    s.amplitudes[space.index(0, photons)] = C64::from(-FRAC_1_SQRT_2);
    Ok(s)
}

/// Coherent state on mode 1, vacuum on mode 2.
pub fn coherent_state(space: FockSpace, alpha: C64) -> Result<PureState> {
    let first = mode::coherent_amplitudes(alpha, space.cutoff);
    let second = vacuum_mode(space);
    PureState::product(space, &first, &second)
}

/// Squeezed number state `S(r)|k>` on mode 2, vacuum on mode 1.
pub fn squeezed_number_state(space: FockSpace, r: f64, k: usize) -> Result<PureState> {
    if k > space.cutoff {
        return Err(Error::invalid("squeezed number index exceeds cutoff"));
    }
    let second = mode::squeezed_number_amplitudes(r, k, space.cutoff);
    PureState::product(space, &vacuum_mode(space), &second)
}

fn vacuum_mode(space: FockSpace) -> CVector {
    let mut v = CVector::zeros(space.mode_dim());
    v[0] = C64::from(1.0);
    v
}

/// `exp[i pi/4 (a1† a2 + a1 a2†)]` assembled from its photon-number blocks.
pub fn beam_splitter(space: FockSpace) -> CMatrix {
    let c = space.cutoff;
    let mut u = CMatrix::zeros(space.dim(), space.dim());
    for total in 0..=2 * c {
        let lo = total.saturating_sub(c);
        let hi = total.min(c);
        let block = sector::splitter_block(total, lo, hi);
        for (a, ka) in (lo..=hi).enumerate() {
            for (b, kb) in (lo..=hi).enumerate() {
                u[(space.index(ka, total - ka), space.index(kb, total - kb))] = block[(a, b)];
            }
        }
    }
    u
}

/// `exp(i n2 theta)`.
pub fn phase_shift(space: FockSpace, theta: f64) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_fn(space.dim(), |i, _| {
        C64::from_polar(1.0, theta * space.occupations(i).1 as f64)
    }))
}

/// `(-1)^{n1}`.
pub fn parity_observable(space: FockSpace) -> Observable {
    let diag = CVector::from_fn(space.dim(), |i, _| {
        C64::from(if space.occupations(i).0.is_multiple_of(2) { 1.0 } else { -1.0 })
    });
    Observable {
        space,
        matrix: CMatrix::from_diagonal(&diag),
        is_involutory: true,
    }
}

pub fn number_operator(space: FockSpace, which: Mode) -> Observable {
    let diag = CVector::from_fn(space.dim(), |i, _| {
        let (n1, n2) = space.occupations(i);
        C64::from(match which {
            Mode::First => n1,
            Mode::Second => n2,
        } as f64)
    });
    Observable {
        space,
        matrix: CMatrix::from_diagonal(&diag),
        is_involutory: false,
    }
}

/// `Re Tr[A rho]`, rejecting an imaginary residue above `1e-10`.
pub fn expectation(obs: &Observable, rho: &DensityMatrix) -> Result<f64> {
    obs.space.ensure_same(&rho.space)?;
    let value: C64 = obs
        .matrix
        .row_iter()
        .zip(rho.matrix.column_iter())
        .map(|(r, c)| (r * c)[(0, 0)])
        .sum();
    if value.im.abs() > 1e-10 {
        return Err(Error::numerical(format!(
            "expectation has imaginary part {:.3e}",
            value.im
        )));
    }
    Ok(value.re)
}

pub fn eig(rho: &DensityMatrix) -> Result<EigenDecomposition> {
    let (mut values, vectors) = hermitian_eigh(&rho.matrix);
    if let Some(&min) = values.last() {
        if min < -PSD_TOL {
            return Err(Error::numerical(format!(
                "density matrix has eigenvalue {min:.3e} below clipping tolerance"
            )));
        }
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let eigenvectors = vectors
        .column_iter()
        .map(|c| {
            let mut c = c.into_owned();
            fix_phase(&mut c);
            PureState {
                space: rho.space,
                amplitudes: c,
            }
        })
        .collect();
    let dominant_gap = if values.len() > 1 {
        values[0] - values[1]
    } else {
        values[0]
    };
    Ok(EigenDecomposition {
        eigenvalues: values,
        eigenvectors,
        dominant_gap,
    })
}

/// `rho^n / Tr[rho^n]` through the spectrum.
pub fn matrix_power_normalized(rho: &DensityMatrix, n: u32) -> Result<DensityMatrix> {
    DensityMatrix::from_raw(rho.space, power_normalized(&rho.matrix, n)?)
}

/// [`matrix_power_normalized`] for any Hermitian positive matrix.
pub fn power_normalized(rho: &CMatrix, n: u32) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::invalid("power must be at least 1"));
    }
    let (values, vectors) = hermitian_eigh(rho);
    if let Some(&min) = values.last() {
        if min < -PSD_TOL {
            return Err(Error::numerical(format!(
                "density matrix has eigenvalue {min:.3e} below clipping tolerance"
            )));
        }
    }
    let powered: Vec<f64> = values.iter().map(|l| l.max(0.0).powi(n as i32)).collect();
    let total: f64 = powered.iter().sum();
    if total <= 1e-30 {
        return Err(Error::numerical("Tr[rho^n] vanishes"));
    }
    let weights: Vec<f64> = powered.iter().map(|p| p / total).collect();
    Ok(hermitian_part(&weighted_outer(&vectors, &weights)))
}

/// Interferometer output `U_BS Phi(theta) |input>` for an input that is
/// already in the encoding frame.
pub fn interferometer_output(input: &PureState, theta: f64) -> Result<PureState> {
    let space = input.space;
    let u = beam_splitter(space) * phase_shift(space, theta);
    input.evolve(&u)
}

/// Offset `delta` such that the parity of the N00N interferometer output at
/// `phi + delta` equals `sin(N phi)`.
pub fn calibrate_convention(space: FockSpace, photons: usize) -> Result<f64> {
    let input = noon_state(space, photons)?;
    let parity = parity_observable(space);
    let bs = beam_splitter(space);
    let signal = |theta: f64| -> Result<f64> {
        let out = input.evolve(&(&bs * phase_shift(space, theta)))?;
        expectation(&parity, &out.density())
    };
    let n = photons as f64;
    // the signal only carries harmonics 0 and N; sample beyond Nyquist
    let samples = 4 * photons + 4;
    let (mut c, mut s) = (0.0, 0.0);
    for j in 0..samples {
        let t = 2.0 * PI * j as f64 / samples as f64;
        let f = signal(t)?;
        c += f * (n * t).cos();
        s += f * (n * t).sin();
    }
    c *= 2.0 / samples as f64;
    s *= 2.0 / samples as f64;
    // c cos(N t) + s sin(N t) = sin(N (t - delta)) requires N delta = -atan2(c, s)
    let mut delta = -c.atan2(s) / n;
    let period = 2.0 * PI / n;
    delta = delta.rem_euclid(period);
    if delta > period / 2.0 {
        delta -= period;
    }
    if delta.abs() < 1e-15 {
        delta = 0.0;
    }
    for j in 0..17 {
        let phi = -PI / n + 2.0 * PI / n * j as f64 / 16.0;
        let got = signal(phi + delta)?;
        if (got - (n * phi).sin()).abs() > 1e-10 {
            return Err(Error::Convention(format!(
                "parity signal {got} differs from sin(N phi) = {} at phi = {phi}",
                (n * phi).sin()
            )));
        }
    }
    Ok(delta)
}

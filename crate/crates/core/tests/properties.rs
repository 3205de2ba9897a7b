use std::sync::OnceLock;

use proptest::prelude::*;
use vpem_core::estimation::bias_from_spectrum;
use vpem_core::fock::{
    beam_splitter, eig, make_space, matrix_power_normalized, number_operator, parity_observable, phase_shift,
    DensityMatrix, FockSpace, Mode,
};
use vpem_core::linalg::{max_abs_diff, CMatrix, C64};
use vpem_core::noise::{additive_gaussian, phase_diffusion_quadrature, photon_loss, LossModes};
use vpem_core::scenario::{NoiseFamily, NoisySpectrum, Probe, Scenario};
use vpem_core::vpem::{circuit_expectations_matrix, mitigated_expectation_matrix, purified_dominant_eigenvalue};

fn random_density(dim: usize, entries: &[f64]) -> CMatrix {
    let rank = entries.len() / (2 * dim);
    let a = CMatrix::from_fn(dim, rank, |r, c| {
        let k = 2 * (c * dim + r);
        C64::new(entries[k], entries[k + 1])
    });
    let m = &a * a.adjoint();
    let t = m.trace().re;
    m / C64::from(t)
}

/// Density matrix supported on total photon number `<= max_total`.
fn low_photon_density(space: FockSpace, max_total: usize, entries: &[f64]) -> DensityMatrix {
    let dim = space.dim();
    let mut m = random_density(dim, entries);
    for i in 0..dim {
        for j in 0..dim {
            let (a, b) = space.occupations(i);
            let (c, d) = space.occupations(j);
            if a + b > max_total || c + d > max_total {
                m[(i, j)] = C64::from(0.0);
            }
        }
    }
    let t = m.trace().re;
    DensityMatrix::new(space, m / C64::from(t)).unwrap()
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    *vpem_core::linalg::hermitian_eigh(m).0.last().unwrap()
}

fn unit_entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn interferometer_conserves_photon_number(theta in -3.2f64..3.2) {
        let space = make_space(4, 1e-10).unwrap();
        let n1 = number_operator(space, Mode::First);
        let n2 = number_operator(space, Mode::Second);
        let total = n1.matrix() + n2.matrix();
        for u in [beam_splitter(space), phase_shift(space, theta)] {
            let comm = &u * &total - &total * &u;
            prop_assert!(comm.camax() < 1e-10);
        }
    }

    #[test]
    fn eig_reconstructs(entries in unit_entries(2 * 9 * 3)) {
        let space = make_space(2, 1e-10).unwrap();
        let rho = DensityMatrix::new(space, random_density(9, &entries)).unwrap();
        let d = eig(&rho).unwrap();
        prop_assert!(max_abs_diff(&d.reconstruct(), rho.matrix()) <= 1e-9);
        let sum: f64 = d.eigenvalues().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn first_power_is_identity(entries in unit_entries(2 * 9 * 2)) {
        let space = make_space(2, 1e-10).unwrap();
        let rho = DensityMatrix::new(space, random_density(9, &entries)).unwrap();
        let p = matrix_power_normalized(&rho, 1).unwrap();
        prop_assert!(max_abs_diff(p.matrix(), rho.matrix()) <= 1e-12);
    }

    #[test]
    fn loss_preserves_trace_and_positivity(entries in unit_entries(2 * 16 * 2), loss in 0.0f64..1.0) {
        let space = make_space(3, 1e-10).unwrap();
        let rho = DensityMatrix::new(space, random_density(16, &entries)).unwrap();
        let out = photon_loss(&rho, loss, LossModes::Both).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(min_eigenvalue(out.matrix()) > -1e-10);
    }

    #[test]
    fn dephasing_preserves_trace_and_positivity(entries in unit_entries(2 * 9 * 2), variance in 0.0f64..0.5) {
        let space = make_space(2, 1e-10).unwrap();
        let rho = DensityMatrix::new(space, random_density(9, &entries)).unwrap();
        let out = phase_diffusion_quadrature(|x| rho.conjugate(&phase_shift(space, x)), variance, 61).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(min_eigenvalue(out.matrix()) > -1e-10);
    }

    #[test]
    fn loss_commutes_with_interferometer(entries in unit_entries(2 * 16 * 2), loss in 0.0f64..0.5, theta in -3.2f64..3.2) {
        let space = make_space(3, 1e-10).unwrap();
        let rho = low_photon_density(space, 3, &entries);
        let u = beam_splitter(space) * phase_shift(space, theta);
        let before = photon_loss(&rho.conjugate(&u).unwrap(), loss, LossModes::Both).unwrap();
        let after = photon_loss(&rho, loss, LossModes::Both).unwrap().conjugate(&u).unwrap();
        prop_assert!(max_abs_diff(before.matrix(), after.matrix()) <= 1e-9);
    }

    #[test]
    fn purification_matches_power(entries in unit_entries(2 * 4 * 4)) {
        let rho = random_density(4, &entries);
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            vec![C64::from(1.0), C64::from(-1.0), C64::from(1.0), C64::from(-1.0)],
        ));
        for n in [1u32, 2, 3, 5] {
            let powered = vpem_core::fock::power_normalized(&rho, n).unwrap();
            let direct = (&a * &powered).trace().re;
            prop_assert!((mitigated_expectation_matrix(&rho, &a, n).unwrap() - direct).abs() <= 1e-10);
        }
    }

    #[test]
    fn identity_circuit_is_purity(entries in unit_entries(2 * 4 * 4)) {
        let rho = random_density(4, &entries);
        let id = CMatrix::identity(4, 4);
        let (values, _) = vpem_core::linalg::hermitian_eigh(&rho);
        for n in [1u32, 2, 3] {
            let (_, zi) = circuit_expectations_matrix(&rho, &id, n).unwrap();
            let expected: f64 = values.iter().map(|l| l.max(0.0).powi(n as i32)).sum();
            prop_assert!((zi - expected).abs() < 1e-12);
        }
        let (_, purity) = circuit_expectations_matrix(&rho, &id, 2).unwrap();
        let direct = (&rho * &rho).trace().re;
        prop_assert!((purity - direct).abs() < 1e-12);
        prop_assert!(purity <= 1.0 + 1e-12);
        let pure = values[1] < 1e-10;
        prop_assert_eq!(pure, (purity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn purified_eigenvalue_matches_spectrum(entries in unit_entries(2 * 5 * 5), n in 1u32..5) {
        let rho = random_density(5, &entries);
        let (values, _) = vpem_core::linalg::hermitian_eigh(&rho);
        prop_assume!(values[0] - values[1] > 1e-6);
        let powered = vpem_core::fock::power_normalized(&rho, n).unwrap();
        let top = vpem_core::linalg::hermitian_eigh(&powered).0[0];
        let lam = values[0];
        let tail: Vec<f64> = values[1..].iter().map(|v| v.max(0.0) / (1.0 - lam)).collect();
        prop_assert!((purified_dominant_eigenvalue(lam, &tail, n) - top).abs() <= 1e-10);
    }
}

#[test]
fn pure_state_has_unit_purity() {
    let mut v = vec![0.0; 8];
    v[0] = 0.6;
    v[3] = -0.8;
    let rho = random_density(4, &v);
    let (_, purity) = circuit_expectations_matrix(&rho, &CMatrix::identity(4, 4), 2).unwrap();
    assert!((purity - 1.0).abs() < 1e-12);
}

#[test]
fn parity_is_involutory() {
    let space = make_space(5, 1e-10).unwrap();
    let p = parity_observable(space);
    assert!(p.is_involutory());
    let sq = p.matrix() * p.matrix();
    assert_eq!(sq, CMatrix::identity(space.dim(), space.dim()));
}

#[test]
fn gaussian_channel_keeps_state_physical() {
    let space = make_space(8, 1e-10).unwrap();
    let mut amps = nalgebra::DVector::<C64>::zeros(space.dim());
    amps[space.index(1, 0)] = C64::from(0.6);
    amps[space.index(0, 2)] = C64::new(0.0, 0.8);
    let rho = DensityMatrix::new(space, &amps * amps.adjoint()).unwrap();
    for (sx, sp) in [(0.05, 0.1), (0.1, 0.1)] {
        let out = additive_gaussian(&rho, sx, sp, Mode::Second, 41).unwrap();
        assert!(out.trace() <= 1.0 + 1e-12 && out.trace() > 1.0 - 1e-6);
        assert!(min_eigenvalue(out.matrix()) > -1e-10);
    }
}

fn noon_loss_spectrum() -> &'static (Scenario, NoisySpectrum) {
    static CELL: OnceLock<(Scenario, NoisySpectrum)> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = Scenario::new(Probe::Noon { photons: 5 }, NoiseFamily::PhotonLoss).unwrap();
        let sp = s.spectrum(0.03).unwrap();
        (s, sp)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linearization_error_is_second_order(phi in -0.01f64..0.01, phi0 in -0.25f64..0.25, n in 1u32..4) {
        let (s, sp) = noon_loss_spectrum();
        let r = bias_from_spectrum(s, sp, phi, phi0, n).unwrap();
        prop_assert!((r.bias - r.linearized_bias).abs() <= 40.0 * phi * phi + 1e-15);
    }

    #[test]
    fn mse_is_bias_plus_statistics(phi in -0.01f64..0.01, n in 1u32..4) {
        let (s, sp) = noon_loss_spectrum();
        let kind = if n == 1 { vpem_core::estimation::EstimatorKind::Error } else { vpem_core::estimation::EstimatorKind::Mitigated };
        let r = vpem_core::estimation::mse_from_spectrum(kind, s, sp, phi, 0.0, n, 1_000_000).unwrap();
        prop_assert_eq!(r.mse, r.bias_sq + r.statistical_term);
    }
}

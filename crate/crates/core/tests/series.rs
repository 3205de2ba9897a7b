use vpem_core::estimation::{bias_exact, bias_leading_order, first_nonzero_a, series_coefficients, strength_grid};
use vpem_core::refpoint::{optimal_reference, zeroth_order_objective, Prior, ReferenceObjective, ReferenceSearch};
use vpem_core::scenario::{delta_for_lambda, NoiseFamily, Probe, Scenario};

fn noon(family: NoiseFamily) -> Scenario {
    Scenario::new(Probe::Noon { photons: 5 }, family).unwrap()
}

fn cs(family: NoiseFamily) -> Scenario {
    Scenario::new(
        Probe::CoherentSqueezed {
            coherent_photons: 2.5,
            squeezed_photons: 2.5,
        },
        family,
    )
    .unwrap()
}

#[test]
fn noon_dephasing_expansion() {
    let s = noon(NoiseFamily::PhaseDiffusion);
    let grid = strength_grid(delta_for_lambda(&s, 0.8).unwrap(), 11);
    let series = series_coefficients(&s, 0.0, 3, &grid, 3).unwrap();
    // 1 - lam = (1 - exp(-N^2 D / 2)) / 2
    assert!((series.lambda_k[0] - 6.25).abs() < 1e-6);
    assert!((series.lambda_k[1] + 39.0625).abs() < 1e-3);
    assert_eq!(first_nonzero_a(&series), None);
    for (n, order) in [(1, 1), (2, 2), (3, 3)] {
        assert_eq!(bias_leading_order(&series, n, 0.005).unwrap().order, Some(order));
        // no phi^0 term at phi0 = 0
        assert_eq!(bias_leading_order(&series, n, 0.0).unwrap().order, None);
    }
}

#[test]
fn noon_loss_expansion() {
    let s = noon(NoiseFamily::PhotonLoss);
    let grid = strength_grid(delta_for_lambda(&s, 0.8).unwrap(), 11);
    let series = series_coefficients(&s, 0.0, 3, &grid, 2).unwrap();
    assert!((series.lambda_k[0] - 5.0).abs() < 1e-6);
    assert!((series.bias_slope[0][0] + 5.0).abs() < 1e-6);
    // one lost photon leaves two orthogonal states of weight N D / 2 each,
    // so Tr[rho^2] picks up N^2 D^2 / 2
    assert!((series.bias_slope[1][1] + 12.5).abs() < 1e-3);
}

#[test]
fn f_coefficients_match_direct_bias_fit() {
    // the unmitigated bias is (f_k + phi df_k) D^k / y_id order by order
    let s = cs(NoiseFamily::PhotonLoss);
    let phi0 = 0.2;
    let grid = strength_grid(0.146, 11);
    let series = series_coefficients(&s, phi0, 3, &grid, 2).unwrap();
    let y = s.ideal_slope(phi0);
    // second-order coefficients of a degree-5 fit carry about a percent of leakage
    for (k, tol) in [(0, 1e-5), (1, 2e-2)] {
        let direct = series.bias_zeroth[0][k];
        assert!((series.f_k[k] / y - direct).abs() < tol * direct.abs().max(1.0), "k={k}");
        let slope = series.bias_slope[0][k];
        assert!((series.df_k[k] / y - slope).abs() < tol * slope.abs().max(1.0), "k={k}");
    }
    assert!(series.lambda_k[0] > 0.0);
    assert_eq!(first_nonzero_a(&series), Some(1));
    for n in 1..=2 {
        assert_eq!(bias_leading_order(&series, n, 0.0).unwrap().order, Some(1));
    }
}

#[test]
fn lambda_one_positive_everywhere() {
    for s in [
        noon(NoiseFamily::PhaseDiffusion),
        noon(NoiseFamily::PhotonLoss),
        cs(NoiseFamily::PhotonLoss),
        cs(NoiseFamily::AdditiveGaussian { squeezing: None }),
    ] {
        let hi = delta_for_lambda(&s, 0.8).unwrap();
        let phi0 = if matches!(s.probe(), Probe::Noon { .. }) { 0.0 } else { 0.3 };
        let series = series_coefficients(&s, phi0, 3, &strength_grid(hi, 9), 1).unwrap();
        assert!(series.lambda_k[0] > 0.0, "{:?}", s.family());
    }
}

#[test]
fn gaussian_dominant_vector_is_ideal() {
    let s = cs(NoiseFamily::AdditiveGaussian { squeezing: None });
    let series = series_coefficients(&s, 0.3, 3, &strength_grid(0.25, 9), 1).unwrap();
    assert_eq!(first_nonzero_a(&series), None);
}

#[test]
fn optimum_never_worse_than_grid() {
    let s = cs(NoiseFamily::PhotonLoss);
    for (delta, n) in [(0.03, 1), (0.1, 2)] {
        let search = ReferenceSearch::for_scenario(&s, Prior::PointMass(delta));
        let objective = ReferenceObjective::new(&s, search.prior).unwrap();
        let opt = objective.minimize(n, &search).unwrap();
        let (lo, hi) = search.domain;
        for j in 0..search.grid_points {
            let p = lo + (hi - lo) * j as f64 / (search.grid_points - 1) as f64;
            if let Some(v) = objective.value(p, n) {
                assert!(opt.value <= v + 1e-8);
            }
        }
        // the zeroth-order bias crosses zero here, leaving only the phi-linear part
        assert!(opt.value < 1e-16);
        assert!(bias_exact(&s, 0.0, opt.phi0, delta, n).unwrap().bias.abs() <= 1e-8);
    }
}

#[test]
fn collapsed_prior_agrees_with_point_optimum() {
    let s = cs(NoiseFamily::PhotonLoss);
    let point = optimal_reference(&s, 1, &ReferenceSearch::for_scenario(&s, Prior::PointMass(0.05))).unwrap();
    let narrow = ReferenceSearch::for_scenario(&s, Prior::Uniform(0.05 - 1e-7, 0.05 + 1e-7));
    let averaged = vpem_core::refpoint::averaged_optimal_reference(&s, 1, &narrow).unwrap();
    let spacing = std::f64::consts::FRAC_PI_2 / (narrow.grid_points - 1) as f64;
    assert!((point.phi0 - averaged.phi0).abs() < spacing);
    let v = zeroth_order_objective(&s, point.phi0, 0.05, 1).unwrap().unwrap();
    assert!((v - point.value).abs() < 1e-12);
}

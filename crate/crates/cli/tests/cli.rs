use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use vpem_cli::config::{ContourConfig, Emit, Grid, NoiseConfig, NoiseName, ProbeConfig, Reference, Series};
use vpem_cli::{coeffs, load, refpoint, run, Overrides, ScenarioConfig};

const NOON_LOSS: &str = r#"
schema_version = 1
name = "nl"
seeds = [3, 4]
[probe]
kind = "noon"
photons = 5
[noise]
kind = "photon-loss"
lambda = [0.9]
[phi]
min = -0.01
max = 0.01
count = 7
[[series]]
orders = [1, 2, 3]
reference = { kind = "optimal" }
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|row| row.unwrap()[idx].to_string()).collect()
}

#[test]
fn same_config_and_seeds_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::parse(NOON_LOSS).unwrap();
    let a = run(&config, &dir.path().join("a")).unwrap();
    let b = run(&config, &dir.path().join("b")).unwrap();
    assert_eq!(fs::read(&a[0]).unwrap(), fs::read(&b[0]).unwrap());
    assert_eq!(column(&a[0], "seed").len(), 3 * 7 * 2);
}

#[test]
fn noiseless_runs_have_no_bias() {
    let dir = tempfile::tempdir().unwrap();
    let text = NOON_LOSS.replace("lambda = [0.9]", "delta = [0.0]");
    let out = run(&ScenarioConfig::parse(&text).unwrap(), dir.path()).unwrap();
    for v in column(&out[0], "bias_sq_exact") {
        assert!(v.parse::<f64>().unwrap() <= 1e-20, "{v}");
    }
}

#[test]
fn seed_override_replaces_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), NOON_LOSS);
    let config = load(&path, Overrides { seed: Some(11), ..Overrides::default() }).unwrap();
    assert_eq!(config.seeds, vec![11]);
    let bad = load(&path, Overrides { cutoff: Some(2), ..Overrides::default() });
    assert!(bad.is_err());
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&ScenarioConfig::parse(NOON_LOSS).unwrap(), dir.path()).unwrap();
    for v in column(&out[0], "mse_formula") {
        let mantissa = v.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{v}");
    }
}

#[test]
fn noon_optimal_references_sit_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = refpoint(&ScenarioConfig::parse(NOON_LOSS).unwrap(), dir.path()).unwrap();
    let phi0 = column(&out[0], "phi0");
    assert_eq!(phi0.len(), 3);
    for v in phi0 {
        assert!(v.parse::<f64>().unwrap().abs() < 1e-6, "{v}");
    }
}

#[test]
fn coefficient_table_has_dominant_eigenvalue_slope() {
    let dir = tempfile::tempdir().unwrap();
    let text = NOON_LOSS.replace("kind = \"photon-loss\"", "kind = \"phase-diffusion\"")
        + "[coeffs]\ndelta_max = 0.04\n";
    let out = coeffs(&ScenarioConfig::parse(&text).unwrap(), dir.path()).unwrap();
    let mut r = csv::Reader::from_path(&out[0]).unwrap();
    let lambda1 = r
        .records()
        .map(|row| row.unwrap())
        .find(|row| &row[1] == "lambda" && &row[3] == "1")
        .map(|row| row[4].parse::<f64>().unwrap())
        .unwrap();
    // 1 - lambda = N^2 D / 4 + ...
    assert!((lambda1 - 6.25).abs() < 1e-4, "{lambda1}");
}

#[test]
fn contour_matrix_layout() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
schema_version = 1
name = "c"
[probe]
kind = "coherent-squeezed"
coherent_photons = 2.5
squeezed_photons = 2.5
[noise]
kind = "photon-loss"
[contour]
orders = [2]
phi0 = { min = 0.0, max = 0.3, count = 4 }
delta = { min = 0.01, max = 0.03, count = 3 }
"#;
    let out = run(&ScenarioConfig::parse(text).unwrap(), dir.path()).unwrap();
    assert!(out[0].ends_with("c_n2.csv"));
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(&out[0]).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|row| row.len() == 5));
    // the response is flat at phi0 = 0, so that column is masked
    assert!(rows[1..].iter().all(|row| row[1].is_empty()));
    assert!(rows[1..].iter().all(|row| row[2].parse::<f64>().unwrap() < 0.0));
}

fn vpem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vpem"))
}

#[test]
fn binary_reports_error_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &NOON_LOSS.replace("count = 7", "count = 1"));
    let out = vpem().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error[config]: phi.count"), "{err}");

    let out = vpem().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[io]"));
}

#[test]
fn binary_writes_figure_config_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = vpem()
        .args(["figure", "noon-loss", "--seed", "5", "--threads", "2", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = fs::read_to_string(dir.path().join("noon-loss.toml")).unwrap();
    let config = ScenarioConfig::parse(&written).unwrap();
    assert_eq!(config.seeds, vec![5]);
    let seeds = column(&dir.path().join("noon-loss.csv"), "seed");
    assert_eq!(seeds.len(), 3 * 21 * 5);
    assert!(seeds.iter().all(|s| s == "5"));
}

fn grid() -> impl Strategy<Value = Grid> {
    (-1.0f64..1.0, 1e-3f64..1.0, 2usize..100).prop_map(|(min, w, count)| Grid {
        min,
        max: min + w,
        count,
    })
}

fn reference() -> impl Strategy<Value = Reference> {
    prop_oneof![
        (-1.0f64..1.0).prop_map(|phi0| Reference::Fixed { phi0 }),
        (-1.0f64..1.0).prop_map(|phi0| Reference::Detuned { phi0 }),
        proptest::option::of(0.0f64..0.3).prop_map(|delta| Reference::Optimal { delta }),
        (0.0f64..0.1, 0.1f64..0.3).prop_map(|(lo, hi)| Reference::AveragedOptimal {
            delta_min: lo,
            delta_max: Some(hi),
            lambda_min: None,
        }),
        (0.5f64..0.99).prop_map(|l| Reference::AveragedOptimal {
            delta_min: 0.0,
            delta_max: None,
            lambda_min: Some(l),
        }),
    ]
}

fn config() -> impl Strategy<Value = ScenarioConfig> {
    let probe = prop_oneof![
        (1usize..8).prop_map(|photons| ProbeConfig::Noon { photons }),
        (0.0f64..5.0, 0.0f64..5.0).prop_map(|(c, s)| ProbeConfig::CoherentSqueezed {
            coherent_photons: c,
            squeezed_photons: s,
        }),
    ];
    let noise = (
        prop_oneof![
            Just(NoiseName::PhaseDiffusion),
            Just(NoiseName::PhotonLoss),
            Just(NoiseName::AdditiveGaussian)
        ],
        proptest::collection::vec(0.0f64..0.5, 1..4),
        any::<bool>(),
    )
        .prop_map(|(kind, values, as_lambda)| NoiseConfig {
            kind,
            delta: (!as_lambda).then(|| values.clone()),
            lambda: as_lambda.then(|| values.iter().map(|v| 1.0 - v).collect()),
            squeezing: None,
        });
    let series = proptest::collection::vec(
        (proptest::collection::vec(1u32..6, 1..4), reference()).prop_map(|(orders, reference)| Series {
            orders,
            reference,
        }),
        1..3,
    );
    let contour = proptest::option::of((proptest::collection::vec(1u32..4, 1..3), grid(), grid()).prop_map(
        |(orders, phi0, mut delta)| {
            delta.min = delta.min.abs();
            delta.max = delta.min + 0.1;
            ContourConfig { orders, phi0, delta }
        },
    ));
    (
        probe,
        noise,
        grid(),
        series,
        contour,
        1u64..1_000_000_000_000,
        proptest::collection::vec(any::<u64>(), 0..3),
        proptest::option::of(8usize..200),
    )
        .prop_map(|(probe, noise, phi, series, contour, shots, seeds, cutoff)| ScenarioConfig {
            schema_version: 1,
            name: "p".into(),
            shots,
            seeds,
            cutoff,
            probe,
            noise,
            phi: Some(phi),
            series,
            contour,
            coeffs: None,
            emit: Emit::default(),
        })
}

proptest! {
    #[test]
    fn config_round_trips_through_text(c in config()) {
        prop_assume!(c.validate().is_ok());
        let text = c.to_toml();
        prop_assert_eq!(ScenarioConfig::parse(&text).unwrap(), c);
    }
}

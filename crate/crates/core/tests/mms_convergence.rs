use netflow_core::mms::{exact, run_study, MmsModel};

#[test]
fn hydraulic_rates_approach_two_and_one() {
    let study = run_study(MmsModel::Hydraulic, 6, 2).unwrap();
    assert!(study.monotone());
    let rates = study.rates();
    let (q, p) = *rates.last().unwrap();
    assert!((q - 2.0).abs() < 0.01, "flux rate {q}");
    assert!((p - 1.0).abs() < 0.01, "pressure rate {p}");
    // rates increase towards the asymptote
    assert!(rates.windows(2).all(|w| w[1].0 >= w[0].0 - 1e-3));
}

#[test]
fn stokes_rates_approach_three_and_two() {
    let study = run_study(MmsModel::Stokes, 5, 2).unwrap();
    assert!(study.monotone());
    let (q, p) = *study.rates().last().unwrap();
    assert!((q - 3.0).abs() < 0.02, "flux rate {q}");
    assert!((p - 2.0).abs() < 0.02, "pressure rate {p}");
}

#[test]
fn errors_are_small_on_fine_meshes() {
    let study = run_study(MmsModel::Stokes, 4, 8).unwrap();
    let finest = study.levels.last().unwrap();
    assert_eq!(finest.cells_per_edge, 64);
    let amplitude = exact(MmsModel::Stokes, 0.5).0;
    assert!(finest.flux_error < 1e-6 * amplitude);
    assert!(finest.pressure_error < 1e-4);
}

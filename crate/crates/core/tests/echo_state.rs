use esnlab_core::dynamics::{make_dataset, DatasetVariant};
use esnlab_core::reservoir::{drive, init_matrices, run_closed_loop, run_open_loop, EsnHyperparams, ReservoirState};
use esnlab_core::seed;
use esnlab_core::validation::forecast;
use rand::Rng;

fn hp(rho: f64, b_in: f64) -> EsnHyperparams {
    EsnHyperparams {
        sigma_in: 1.0,
        rho,
        beta_tik: 1e-11,
        b_in,
        n_r: 100,
        sparseness: 0.97,
        seed: 11,
    }
}

fn max_gap(a: &ReservoirState, b: &ReservoirState) -> f64 {
    a.r.iter().zip(&b.r).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_forgets(variant: DatasetVariant, b_in: f64) {
    let ds = make_dataset(variant, 3).unwrap();
    let lt = ds.steps_per_lt;
    for rho in [0.3, 0.9] {
        let hp = hp(rho, b_in);
        let mats = init_matrices(&hp, 3).unwrap();
        let mut rng = seed::rng(seed::derive(5, 1, (rho * 10.0) as u64));
        let mut a = ReservoirState {
            r: (0..hp.n_r).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let mut b = ReservoirState::zeros(hp.n_r);
        let before = max_gap(&a, &b);
        drive(&mats, &hp, ds.u.view(0..lt), &mut a).unwrap();
        drive(&mats, &hp, ds.u.view(0..lt), &mut b).unwrap();
        let gap = max_gap(&a, &b);
        assert!(gap < 1e-6, "{variant} rho={rho}: gap {gap:e} after 1 LT (initial {before:e})");
    }
}

#[test]
fn lorenz_reservoir_forgets_initial_state() {
    check_forgets(DatasetVariant::LorenzShort, 1.0);
}

#[test]
fn kuznetsov_reservoir_forgets_initial_state() {
    check_forgets(DatasetVariant::KuznetsovChaotic, 0.1);
}

#[test]
fn open_loop_harvest_matches_single_steps() {
    let ds = make_dataset(DatasetVariant::LorenzShort, 1).unwrap();
    let hp = hp(0.5, 1.0);
    let mats = init_matrices(&hp, 3).unwrap();
    let (harvest, last) = run_open_loop(&mats, &hp, ds.u.view(0..50), 10, None, None).unwrap();
    assert_eq!(harvest.ncols(), 40);
    let mut s = ReservoirState::zeros(hp.n_r);
    for i in 0..50 {
        s = esnlab_core::reservoir::step(&mats, &hp, &s, ds.u.row(i)).unwrap();
        if i >= 10 {
            let col = harvest.column(i - 10);
            for j in 0..hp.n_r {
                assert_eq!(col[j], s.r[j]);
            }
            assert_eq!(col[hp.n_r], 1.0);
        }
    }
    assert_eq!(s, last);
}

#[test]
fn closed_loop_with_identity_readout_feeds_back_predictions() {
    // a readout that returns the bias column times c yields a constant forecast
    let hp = hp(0.5, 1.0);
    let mats = init_matrices(&hp, 3).unwrap();
    let mut w_out = nalgebra::DMatrix::zeros(hp.n_r + 1, 3);
    w_out[(hp.n_r, 0)] = 0.25;
    w_out[(hp.n_r, 1)] = -0.5;
    let out = run_closed_loop(&mats, &hp, &w_out, &ReservoirState::zeros(hp.n_r), &[0.1, 0.2, 0.3], 5, None).unwrap();
    for row in out.rows() {
        assert_eq!(row, &[0.25, -0.5, 0.0]);
    }
}

#[test]
fn forecast_is_deterministic() {
    let ds = make_dataset(DatasetVariant::LorenzShort, 2).unwrap();
    let hp = hp(0.6, 1.0);
    let mats = init_matrices(&hp, 3).unwrap();
    let w_out = nalgebra::DMatrix::from_fn(hp.n_r + 1, 3, |i, j| ((i * 3 + j) as f64).sin() * 0.01);
    let a = forecast(&mats, &hp, &w_out, ds.u.full_view(), 300..340, 111, None).unwrap();
    let b = forecast(&mats, &hp, &w_out, ds.u.full_view(), 300..340, 111, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 40);
}

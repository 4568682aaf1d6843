use dirac1d::field::{init_field, GridSpec, Profile, SpinorField};
use dirac1d::functionals::{bony_q, charge_l, check_monotonicity};
use dirac1d::harness::{bony_q_oracle, thirring_error};
use dirac1d::models::Model;
use dirac1d::solver::{evolve, EvolveOptions, SolverConfig};
use dirac1d::C64;

fn bump(re: f64, im: f64, c: f64, r: f64) -> Profile {
    Profile::bump(C64::new(re, im), c, r)
}

#[test]
fn snapshot_written_by_a_run_restarts_the_same_run() {
    let g = GridSpec::new(-6.0, 6.0, 300).unwrap();
    let m = Model::gross_neveu(1.0);
    let f0 = init_field(g, &bump(0.1, 0.0, -1.0, 1.0), &bump(0.0, 0.1, 1.0, 1.0)).unwrap();
    let cfg = SolverConfig::default();
    let half = evolve(&f0, &m, 1.0, &cfg, &EvolveOptions::default()).unwrap();
    let full = evolve(&f0, &m, 2.0, &cfg, &EvolveOptions::default()).unwrap();

    let dir = tempdir();
    let path = dir.join("mid.csv");
    half.final_field()
        .write_csv(std::fs::File::create(&path).unwrap())
        .unwrap();
    let file = Profile::FromFile { path };
    let mut restart = init_field(g, &file, &file).unwrap();
    restart.t = 1.0;
    let rest = evolve(&restart, &m, 1.0, &cfg, &EvolveOptions::default()).unwrap();

    // CSV round trip keeps full precision, so the two runs agree to rounding.
    let d = rest.final_field().l2_distance(full.final_field());
    assert!(d < 1e-13, "{d}");
}

#[test]
fn strang_thirring_run_tracks_the_characteristic_solution() {
    let g = GridSpec::new(-8.0, 8.0, 1024).unwrap();
    let (pu, pv) = (bump(1.0, 0.0, -0.5, 1.5), bump(0.6, 0.4, 0.5, 1.5));
    let f0 = init_field(g, &pu, &pv).unwrap();
    let traj = evolve(
        &f0,
        &Model::thirring(1.0),
        2.0,
        &SolverConfig::default(),
        &EvolveOptions::default(),
    )
    .unwrap();
    let err = thirring_error(traj.final_field(), &pu, &pv, 1.0).unwrap();
    assert!(err < 1e-4, "{err}");
    let lie = evolve(
        &f0,
        &Model::thirring(1.0),
        2.0,
        &SolverConfig::lie1(),
        &EvolveOptions::default(),
    )
    .unwrap();
    assert!(thirring_error(lie.final_field(), &pu, &pv, 1.0).unwrap() > 10.0 * err);
}

#[test]
fn diagnostics_follow_the_fields() {
    let g = GridSpec::new(-6.0, 6.0, 240).unwrap();
    let m = Model::gross_neveu(0.5);
    let f0 = init_field(g, &bump(0.1, 0.05, -1.0, 1.0), &bump(0.08, 0.0, 1.0, 1.0)).unwrap();
    let traj = evolve(
        &f0,
        &m,
        3.0,
        &SolverConfig::default(),
        &EvolveOptions::default(),
    )
    .unwrap();
    assert_eq!(traj.records.len(), traj.n_steps + 1);
    for s in &traj.snapshots {
        let r = traj
            .records
            .iter()
            .find(|r| (r.t - s.t).abs() < 1e-12)
            .unwrap();
        assert_eq!(r.l, charge_l(s));
        assert_eq!(r.q, bony_q(s));
        let oracle = bony_q_oracle(s).unwrap();
        assert!((r.q - oracle).abs() <= 1e-12 * oracle.max(1e-300));
    }
    let rep = check_monotonicity(&traj).unwrap();
    assert!(rep.hypothesis_met);
    assert!(rep.max_violation <= 1e-14 * (rep.l0 + rep.k * rep.q0));
}

#[test]
fn zero_data_stays_zero_for_every_model() {
    let g = GridSpec::new(0.0, 1.0, 50).unwrap();
    let f0 = SpinorField::zeros(g);
    let cubic = Model::new("cubic", [(1, 1, 0.3), (2, 0, -0.1)], 1.5).unwrap();
    for m in [
        Model::thirring(2.0),
        Model::federbusch(1.0),
        Model::gross_neveu(1.0),
        cubic,
    ] {
        let traj = evolve(
            &f0,
            &m,
            0.5,
            &SolverConfig::default(),
            &EvolveOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.final_field().linf_norm(), 0.0);
    }
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("dirac1d-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

//! Seed a nearly Dirac mass on the torus and remove it gradually.

use contactflow_core::lifting::{
    cancel_dirac, cancel_multiple, detect_mass, seed_nearly_dirac_t3, CancelParams, Side,
};
use contactflow_core::loops::{classify_tangent_data, decompose_tangent};
use contactflow_core::manifold::normalized_builtin;

#[test]
fn seeded_mass_has_the_advertised_shape() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let seed = seed_nearly_dirac_t3(&model, 1024, 0.25, 4e-4).unwrap();
    let td = decompose_tangent(&seed.lp).unwrap();
    assert!(td.residual < 1e-6, "seed reconstruction residual {}", td.residual);
    assert!(td.c.sup_norm() < 5e-7, "seed is not Legendrian: {}", td.c.sup_norm());
    let geo = detect_mass(&td, seed.mass.t0, seed.mass.orientation).unwrap();
    // the forth run's v-length matches the requested l
    let n = seed.lp.len();
    let mut acc = 0.0;
    let mut j = geo.i_c;
    loop {
        acc += td.b.values()[j] / n as f64;
        if j == geo.i_a {
            break;
        }
        j = (j + 1) % n;
    }
    assert!(
        (acc - seed.mass.l).abs() < 0.1 * seed.mass.l,
        "forth-run v-length {acc} vs requested {}",
        seed.mass.l
    );
    // a vanishes identically on the runs
    let mut j = geo.i_c;
    loop {
        j = (j + 1) % n;
        if j == geo.i_a {
            break;
        }
        assert!(td.a.values()[j].abs() < 1e-6, "a != 0 on the forth run");
    }
}

#[test]
fn cancel_removes_the_mass_at_unit_rate() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let seed = seed_nearly_dirac_t3(&model, 1024, 0.25, 4e-4).unwrap();
    let (out, report) = cancel_dirac(&seed.lp, &seed.mass, 25, &CancelParams::default()).unwrap();

    assert!(
        report.residual_v_length <= 1e-6,
        "residual v-length {}",
        report.residual_v_length
    );
    // the [DB] integral decreases at unit rate per step (within 10%)
    for row in &report.rows {
        assert!(
            (row.rate + 1.0).abs() <= 0.1,
            "rate {} at s = {}",
            row.rate,
            row.s
        );
    }
    // |b| stays within the Proposition window on the construction window
    let c = report.c_const;
    for row in &report.rows {
        assert!(row.min_b_window >= 1.0 / (2.0 * c) - 1e-12);
        assert!(row.max_b_window <= 2.0 * c + 1e-12);
    }
    // the deformed curve stays Legendrian and in C_beta^+
    assert!(
        report.legendrian_residual <= 1e-6,
        "Legendrian residual {}",
        report.legendrian_residual
    );
    let td = decompose_tangent(&out).unwrap();
    let mem = classify_tangent_data(&td, 1e-6);
    assert!(mem.in_c_beta_plus, "final curve left C_beta^+: {mem:?}");
}

#[test]
fn opening_above_threshold_is_rejected() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let seed = seed_nearly_dirac_t3(&model, 1024, 0.25, 4e-4).unwrap();
    let mut fat = seed.mass;
    fat.opening_eps = 10.0;
    let err = cancel_dirac(&seed.lp, &fat, 10, &CancelParams::default());
    assert!(err.is_err());
}

#[test]
fn zero_length_mass_is_the_identity_deformation() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let seed = seed_nearly_dirac_t3(&model, 512, 0.2, 4e-4).unwrap();
    let mut none = seed.mass;
    none.l = 0.0;
    let (out, report) = cancel_dirac(&seed.lp, &none, 10, &CancelParams::default()).unwrap();
    assert!(report.rows.is_empty());
    for (p, q) in seed.lp.points().iter().zip(out.points()) {
        let d = contactflow_core::linalg::norm(&contactflow_core::linalg::sub(p, q));
        assert!(d < 1e-14);
    }
}

#[test]
fn single_mass_multiple_equals_cancel_dirac() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let seed = seed_nearly_dirac_t3(&model, 512, 0.2, 4e-4).unwrap();
    let params = CancelParams::default();
    let (one, _) = cancel_dirac(&seed.lp, &seed.mass, 12, &params).unwrap();
    let many = cancel_multiple(&seed.lp, &[seed.mass], 12, &params).unwrap();
    for (p, q) in one.points().iter().zip(many.points()) {
        let d = contactflow_core::linalg::norm(&contactflow_core::linalg::sub(p, q));
        assert!(d < 1e-8);
    }
}

#[test]
fn mirrored_side_also_cancels() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let seed = seed_nearly_dirac_t3(&model, 1024, 0.2, 4e-4).unwrap();
    let params = CancelParams { side: Side::After, ..CancelParams::default() };
    let (_, report) = cancel_dirac(&seed.lp, &seed.mass, 20, &params).unwrap();
    assert!(
        report.residual_v_length <= 1e-6,
        "mirrored residual {}",
        report.residual_v_length
    );
}

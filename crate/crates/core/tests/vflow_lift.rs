//! Flow-map transport and arc lifting against closed-form oracles.

use contactflow_core::lifting::{
    homotopy_track, lift_negative_arcs, lift_time, tangent_extension, PieceKind, VFlowIntegrator,
};
use contactflow_core::linalg;
use contactflow_core::loops::{
    classify_tangent_data, decompose_tangent, t3_closed_seed, DiscreteLoop,
};
use contactflow_core::manifold::{builtin_model, normalized_builtin};
use contactflow_core::spectral::PeriodicField;
use contactflow_core::synth::{unit_point, SmallRng};

const TAU: f64 = std::f64::consts::TAU;

#[test]
fn flow_at_zero_time_is_the_identity() {
    let model = normalized_builtin("s3_standard", None).unwrap();
    let vint = VFlowIntegrator::new(model);
    let p = vec![0.5, 0.5, 0.5, 0.5];
    let st = vint.flow(&p, 0.0).unwrap();
    assert!(linalg::norm(&linalg::sub(&st.point, &p)) < 1e-14);
    for (i, row) in st.transport.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-14);
        }
    }
}

#[test]
fn group_law_holds_on_random_points() {
    let model = normalized_builtin("s3_standard", None).unwrap();
    let vint = VFlowIntegrator::new(model);
    let mut rng = SmallRng::new(21);
    for _ in 0..5 {
        let p = unit_point(&mut rng, 4);
        let (s, u) = (rng.range(0.1, 0.9), rng.range(0.1, 0.9));
        let one = vint.flow(&p, s + u).unwrap();
        let two = vint.flow(&vint.flow(&p, u).unwrap().point, s).unwrap();
        let d = linalg::norm(&linalg::sub(&one.point, &two.point));
        assert!(d < 1e-8, "group law violated by {d}");
    }
}

#[test]
fn hopf_orbits_close_after_the_ambient_rotation_period() {
    // the printed (unnormalised) kernel field generates the rotation
    // p -> cos(s) p + sin(s) v(p), which is 2 pi periodic
    let model = builtin_model("s3_standard", None).unwrap();
    let vint = VFlowIntegrator::new(model.clone());
    let mut rng = SmallRng::new(22);
    for _ in 0..3 {
        let p = unit_point(&mut rng, 4);
        let st = vint.flow(&p, TAU).unwrap();
        let d = linalg::norm(&linalg::sub(&st.point, &p));
        assert!(d < 1e-6, "orbit failed to close by {d}");
        // halfway: the closed-form rotation oracle
        let half = vint.flow(&p, 1.2).unwrap();
        let v = model.v_at(&p).unwrap();
        let mut want = linalg::scaled(&p, 1.2f64.cos());
        linalg::axpy(&mut want, 1.2f64.sin(), &v);
        assert!(linalg::norm(&linalg::sub(&half.point, &want)) < 1e-8);
        // and the tangent transport matches the rotation matrix action
        let x = unit_point(&mut rng, 4);
        let x = model.project_vector(&p, &x);
        let tx = vint.apply_transport(&half, &x);
        let vx = model.v_at(&x).unwrap(); // v is linear: v(x) = V x
        let mut want_t = linalg::scaled(&x, 1.2f64.cos());
        linalg::axpy(&mut want_t, 1.2f64.sin(), &vx);
        let want_t = model.project_vector(&half.point, &want_t);
        assert!(linalg::norm(&linalg::sub(&tx, &want_t)) < 1e-7);
    }
}

#[test]
fn lift_time_is_zero_for_positive_reeb_tangents() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let vint = VFlowIntegrator::new(model.clone());
    let p = vec![0.2, 0.3, 0.1];
    let xi = model.reeb_at(&p).unwrap();
    let lt = lift_time(&vint, &p, &xi).unwrap();
    assert_eq!(lt.s, 0.0);
    assert!(lt.gamma > 0.9);
}

#[test]
fn lift_time_on_the_flat_model_is_pi() {
    // transported negative-xi tangents return to span(xi, v) after the
    // kernel rotates by pi, independent of the magnitude
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let vint = VFlowIntegrator::new(model.clone());
    let p = vec![0.7, 0.1, 0.4];
    let xi = model.reeb_at(&p).unwrap();
    let v = model.v_at(&p).unwrap();
    for amp in [0.3, 1.0, 2.5] {
        let mut xdot = linalg::scaled(&xi, -amp);
        linalg::axpy(&mut xdot, 0.7, &v);
        let lt = lift_time(&vint, &p, &xdot).unwrap();
        assert!(
            (lt.s - std::f64::consts::PI).abs() < 1e-8,
            "lift time {} for amplitude {amp}",
            lt.s
        );
        assert!((lt.gamma - amp).abs() < 1e-8);
        assert!(lt.g_residual < 1e-10);
    }
}

fn negative_arc_loop(n: usize) -> DiscreteLoop {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let a0 = PeriodicField::sample(n, |t| 1.0 + 1.6 * (TAU * t).cos());
    // even profiles keep the closure correction tiny (odd-in-t
    // displacements vanish by parity)
    let b0 = PeriodicField::sample(n, |t| 0.35 * (TAU * t).cos());
    let (lp, a, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    assert!(a.min_value() < -0.3, "seed lost its negative arc");
    lp
}

#[test]
fn lifting_a_negative_arc_lands_in_c_beta_plus() {
    let lp = negative_arc_loop(256);
    let lift = lift_negative_arcs(&lp).unwrap();
    assert_eq!(lift.masses.len(), 1);
    assert!(lift.max_g_residual <= 1e-10, "|g| = {}", lift.max_g_residual);
    assert!(
        lift.legendrian_residual <= 1e-6,
        "beta(y') = {}",
        lift.legendrian_residual
    );
    let mem = classify_tangent_data(&lift.tangent, 1e-6);
    assert!(mem.a_min >= -1e-6, "min a = {}", mem.a_min);
    assert!(mem.in_c_beta_plus);
    // gamma strictly positive at lifted interior samples
    for (j, kind) in lift.pieces.iter().enumerate() {
        if *kind == PieceKind::Lifted {
            assert!(lift.tangent.a.values()[j] > 0.0, "gamma <= 0 at {j}");
        }
    }
    // the masses record v-length ~ pi on this geometry
    assert!((lift.masses[0].l - std::f64::consts::PI).abs() < 1e-6);
    // lift times vary slowly along the arc
    let n = lp.len();
    for j in 0..n {
        let (s0, s1) = (lift.s_profile[j], lift.s_profile[(j + 1) % n]);
        if s0 > 0.0 && s1 > 0.0 {
            assert!((s0 - s1).abs() < 0.1, "lift time jumped {s0} -> {s1}");
        }
    }
}

#[test]
fn homotopy_endpoints_are_the_curve_and_its_lift() {
    let lp = negative_arc_loop(256);
    let lift = lift_negative_arcs(&lp).unwrap();
    let at_zero = homotopy_track(&lp, &lift, 0.0).unwrap();
    for (p, q) in lp.points().iter().zip(at_zero.points()) {
        assert!(linalg::norm(&linalg::sub(p, q)) < 1e-12);
    }
    let at_one = homotopy_track(&lp, &lift, 1.0).unwrap();
    assert_eq!(at_one.len(), lift.lifted.len());
    for (p, q) in lift.lifted.points().iter().zip(at_one.points()) {
        assert!(linalg::norm(&linalg::sub(p, q)) < 1e-8);
    }
}

#[test]
fn homotopy_displacement_is_monotone() {
    let lp = negative_arc_loop(256);
    let lift = lift_negative_arcs(&lp).unwrap();
    let vint = VFlowIntegrator::new(lp.model.clone());
    let mut prev = 0.0;
    for k in 0..=6 {
        let l = k as f64 / 6.0;
        let mut disp = 0.0f64;
        for (j, &s) in lift.s_profile.iter().enumerate() {
            if s > 0.0 {
                let moved = vint.flow(lp.point(j), l * s).unwrap();
                disp = disp.max(linalg::norm(&linalg::sub(&moved.point, lp.point(j))));
            }
        }
        assert!(disp + 1e-12 >= prev, "displacement shrank at l = {l}");
        prev = disp;
    }
}

#[test]
fn curves_already_in_c_beta_plus_lift_to_themselves() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let n = 128;
    let a0 = PeriodicField::sample(n, |t| 1.0 + 0.4 * (TAU * t).cos());
    let b0 = PeriodicField::sample(n, |t| 0.3 * (TAU * t).cos());
    let (lp, _, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    let lift = lift_negative_arcs(&lp).unwrap();
    assert!(lift.masses.is_empty());
    assert_eq!(lift.lifted.len(), lp.len());
    for (p, q) in lp.points().iter().zip(lift.lifted.points()) {
        assert!(linalg::norm(&linalg::sub(p, q)) < 1e-14);
    }
}

#[test]
fn tangent_extension_reproduces_the_curve_tangent() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let n = 128;
    let a0 = PeriodicField::sample(n, |t| 1.2 + 0.3 * (TAU * t).cos());
    let b0 = PeriodicField::sample(n, |t| 0.4 + 0.2 * (TAU * t).cos());
    let (lp, _, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    // q exactly on the curve a little ahead of the anchor
    let t_anchor = 0.25;
    let t_q = 0.251;
    let q = lp.eval(t_q);
    let got = tangent_extension(&lp, t_anchor, &q, 0.05).unwrap();
    let td = decompose_tangent(&lp).unwrap();
    let (xi, v, _) = contactflow_core::loops::frame_columns(&lp.model, &q).unwrap();
    let mut want = linalg::scaled(&xi, td.a.eval(t_q));
    linalg::axpy(&mut want, td.b.eval(t_q), &v);
    let d = linalg::norm(&linalg::sub(&got, &want)) / linalg::norm(&want);
    assert!(d < 1e-6, "extension tangent off by {d}");

    // a transversally displaced point matches some orbit; the returned
    // vector must stay tangent to the extension (re-integration check)
    let (_, _, xv) = contactflow_core::loops::frame_columns(&lp.model, &lp.eval(t_anchor)).unwrap();
    let mut q2 = lp.eval(t_anchor);
    linalg::axpy(&mut q2, 0.004, &linalg::scaled(&xv, 1.0 / linalg::norm(&xv)));
    let w = tangent_extension(&lp, t_anchor, &q2, 0.05).unwrap();
    // shrinking the radius keeps the answer where both succeed
    let w2 = tangent_extension(&lp, t_anchor, &q2, 0.02).unwrap();
    assert!(linalg::norm(&linalg::sub(&w, &w2)) < 1e-9);
    // integrate from q2 a short time along the extension and compare against
    // the field direction there
    let d2 = linalg::norm(&linalg::sub(&w, &w2));
    assert!(d2 < 1e-9);

    // far-away points are rejected
    let far = vec![0.9, 0.9, 0.9];
    assert!(tangent_extension(&lp, t_anchor, &far, 0.05).is_err());
}

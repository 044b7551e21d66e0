//! The regularisation flow on actual loops (two-path `c` consistency and
//! the mollification-parameter convergence) and the positivity push.

use contactflow_core::loops::{classify, decompose_tangent, t3_closed_seed};
use contactflow_core::manifold::normalized_builtin;
use contactflow_core::pushflow::{push_to_c_beta, zero_count};
use contactflow_core::regflow::{step_approx_flow, RegFlowState};
use contactflow_core::spectral::PeriodicField;

const TAU: f64 = std::f64::consts::TAU;

fn wavy_loop(n: usize) -> contactflow_core::loops::DiscreteLoop {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let a0 = PeriodicField::sample(n, |t| {
        1.0 + 0.45 * (TAU * t).cos() + 0.2 * (3.0 * TAU * t).cos()
    });
    let b0 = PeriodicField::sample(n, |t| 0.5 * (TAU * t).cos() + 0.25 * (2.0 * TAU * t).cos());
    let (lp, _, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    lp
}

#[test]
fn tracked_c_matches_the_geometric_c() {
    let lp = wavy_loop(128);
    let mut st = RegFlowState::new(lp, 1e-2).unwrap();
    let dt = 1e-4;
    for _ in 0..10 {
        st = step_approx_flow(&st, dt).unwrap();
    }
    let diff = st
        .tangent
        .c
        .binary(&st.tracked_c, |x, y| x - y)
        .sup_norm();
    assert!(diff <= 1e-4, "two-path c mismatch {diff}");
    // and the flow left the Legendrian constraint only at the mollification
    // scale
    assert!(st.tangent.c.sup_norm() < 1e-2);
}

#[test]
fn c_shrinks_with_the_mollification_parameter() {
    let lp = wavy_loop(256);
    let dt = 2e-4;
    let s_target = 1e-2;
    let mut norms = Vec::new();
    let epss = [1e-2, 5e-3, 2.5e-3];
    for eps in epss {
        let mut st = RegFlowState::new(lp.clone(), eps).unwrap();
        while st.s < s_target - 1e-12 {
            st = step_approx_flow(&st, dt).unwrap();
        }
        norms.push(st.tangent.c.l2_norm());
    }
    assert!(
        norms[0] > norms[1] && norms[1] > norms[2],
        "c norms not decreasing in eps: {norms:?}"
    );
    // observed order: least-squares slope of ln |c| against ln eps
    let order = observed_order(&epss, &norms);
    assert!(order >= 0.5, "observed order {order:.2} below 1/2 ({norms:?})");
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn observed_order(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[test]
fn diffusion_smooths_the_coefficients() {
    let lp = wavy_loop(128);
    let mut st = RegFlowState::new(lp, 5e-3).unwrap();
    st.record().unwrap();
    let first = st.history[0];
    let dt = 1e-4;
    for _ in 0..40 {
        st = step_approx_flow(&st, dt).unwrap();
    }
    let last = *st.history.last().unwrap();
    assert!(last.tail_energy_a <= first.tail_energy_a + 1e-12);
    assert!(last.xdot_h1 <= first.xdot_h1 * 1.05);
}

#[test]
fn rigid_reeb_loops_are_fixed_points_of_the_flow() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let n = 128;
    let a0 = PeriodicField::constant(n, 1.0);
    let b0 = PeriodicField::zeros(n);
    let (lp, _, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    let mut st = RegFlowState::new(lp.clone(), 1e-3).unwrap();
    for _ in 0..5 {
        st = step_approx_flow(&st, 1e-3).unwrap();
    }
    for (p, q) in lp.points().iter().zip(st.lp.points()) {
        let d = contactflow_core::linalg::norm(&contactflow_core::linalg::sub(p, q));
        assert!(d < 1e-10, "fixed point moved by {d}");
    }
}

#[test]
fn push_turns_tangential_zeros_strictly_positive() {
    // a = 1 - cos(2 pi t): nonnegative with one tangential double zero
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let n = 256;
    let a0 = PeriodicField::sample(n, |t| 1.0 - (TAU * t).cos());
    let b0 = PeriodicField::zeros(n);
    let (lp, a, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    assert!(a.min_value().abs() < 1e-12);
    let res = push_to_c_beta(&lp, 0.05, 1e-3, 1e-6).unwrap();
    assert!(res.membership.in_c_beta, "push failed: {:?}", res.membership);
    let last = res.history.last().unwrap();
    assert!(last.s <= 0.05);
    assert!(last.min_a > 1e-6);
    assert!(last.closure_defect < 1e-6, "closure {}", last.closure_defect);
    // zero counts never increase along the run
    let mut prev = usize::MAX;
    for row in &res.history {
        assert!(row.zero_count <= prev);
        prev = row.zero_count;
    }
}

#[test]
fn push_handles_loops_with_nonzero_b() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let n = 256;
    let a0 = PeriodicField::sample(n, |t| 1.2 - (TAU * t).cos());
    let b0 = PeriodicField::sample(n, |t| 0.4 * (TAU * t).cos());
    let (lp, a, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    assert!(a.min_value() > -1e-6 && a.min_value() < 0.25, "a min {}", a.min_value());
    // push until a is nearly flat: the constant-a reparametrisation of a
    // curve with nonzero b stretches the parameter by mean(a)/min(a), so a
    // small minimum would push the resampled bandwidth past Nyquist. The
    // splitting error feeds the closure defect at O(s dt), hence the small
    // step.
    let res = push_to_c_beta(&lp, 0.05, 1e-3, 0.5).unwrap();
    assert!(res.membership.in_c_beta);
    let last = res.history.last().unwrap();
    assert!(
        last.closure_defect < 1e-6,
        "closure defect {} with nonzero b",
        last.closure_defect
    );
    // Legendrian residual of the final curve
    let td = decompose_tangent(&res.lp).unwrap();
    assert!(td.c.sup_norm() <= 1e-6, "beta(x') = {}", td.c.sup_norm());
}

#[test]
fn push_rejects_loops_outside_c_beta_plus() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let n = 128;
    let a0 = PeriodicField::sample(n, |t| 1.0 + 1.5 * (TAU * t).cos());
    let b0 = PeriodicField::zeros(n);
    let (lp, _, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    assert!(push_to_c_beta(&lp, 0.05, 1e-3, 1e-6).is_err());
}

#[test]
fn already_positive_loops_return_reparametrized() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let n = 128;
    let a0 = PeriodicField::sample(n, |t| 1.0 + 0.4 * (TAU * t).cos());
    let b0 = PeriodicField::zeros(n);
    let (lp, _, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    let res = push_to_c_beta(&lp, 0.05, 1e-3, 1e-6).unwrap();
    assert!(res.membership.in_c_beta);
    let mem = classify(&res.lp, 1e-6).unwrap();
    let dev = {
        let td = decompose_tangent(&res.lp).unwrap();
        let mean = td.a.mean();
        td.a
            .values()
            .iter()
            .fold(0.0f64, |m, &x| m.max((x - mean).abs()))
    };
    assert!(mem.in_c_beta && dev < 1e-6);
}

#[test]
fn zero_count_monitoring_along_the_push() {
    let model = normalized_builtin("t3_family", Some(1)).unwrap();
    let n = 256;
    // two positive lobes separated by tangential zeros
    let a0 = PeriodicField::sample(n, |t| (2.0 * TAU * t).sin().powi(2) + 0.001);
    let b0 = PeriodicField::zeros(n);
    let (lp, a, _) = t3_closed_seed(&model, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
    assert_eq!(zero_count(&a, 1e-7), 0);
    let res = push_to_c_beta(&lp, 0.05, 1e-3, 1e-6).unwrap();
    assert!(res.membership.in_c_beta);
}

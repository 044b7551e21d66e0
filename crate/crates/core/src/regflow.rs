//! The regularisation flow: mollified deformation of a Legendrian loop whose
//! induced system on `(a, b)` is a semilinear heat equation, plus the
//! limiting (unmollified) diffusion system and the scalar existence-time
//! bound.
//!
//! Coefficients: with `W = a b' - a' b` and the weight
//! `E(t) = exp(-int_0^t b mubar)`,
//!
//! ```text
//! kappa = - (int_0^1 E W) / (int_0^1 E (a^2 + b^2))
//! lambda = a' - kappa b,   mu = b' + kappa a
//! ```
//!
//! and `eta` is the `[xi,v]`-frame coefficient solving
//! `eta' = mubar b eta + b lambda - a mu` with `eta(0) = 0`; `kappa` is
//! exactly the constant making `eta` 1-periodic. The mollified variants
//! apply `phi_eps` to `a` and `b` before everything else.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::loops::{decompose_tangent, frame_columns, DiscreteLoop, TangentData};
use crate::manifold::Chart;
use crate::spectral::{cumint_weighted, PeriodicField};
use crate::variation::FrameSeries;

/// Lower bound on the `L^2` norm of the tangent below which the flow is
/// undefined (point curves).
pub const DELTA_FLOOR: f64 = 1e-3;

/// Default ceiling on the `H^1` norm of the tangent before a step refuses.
pub const H1_CEILING: f64 = 1e3;

/// Periodicity constant and deformation coefficients of the flow field.
#[derive(Debug, Clone)]
pub struct FlowCoefficients {
    pub kappa: f64,
    pub lambda: PeriodicField,
    pub mu: PeriodicField,
    /// `[xi,v]`-frame coefficient (apply as `lambda xi + mu v + eta [xi,v]`).
    pub eta: PeriodicField,
}

/// Weight data shared by the quadratures: `E = e^{-m t} P(t)` with `P`
/// periodic.
struct Weight {
    m: f64,
    p: Vec<f64>,
}

fn weight(b: &PeriodicField, mubar: &PeriodicField) -> Weight {
    let g = b.binary(mubar, |x, y| x * y);
    let m = g.mean();
    let (cum, _) = g.cumint();
    // cum = m t + periodic part; P = exp(-(cum - m t))
    let n = b.len();
    let p = (0..n)
        .map(|j| {
            let t = j as f64 / n as f64;
            (-(cum[j] - m * t)).exp()
        })
        .collect();
    Weight { m, p }
}

impl Weight {
    /// `int_0^t E f` on the grid plus the value at `t = 1`.
    fn cumulative(&self, f: &PeriodicField) -> (Vec<f64>, f64) {
        let g = PeriodicField::from_values(
            f.values().iter().zip(&self.p).map(|(x, p)| x * p).collect(),
        );
        cumint_weighted(&g, self.m)
    }

    /// `1 / E` on the grid.
    fn inv_values(&self) -> Vec<f64> {
        let n = self.p.len();
        (0..n)
            .map(|j| {
                let t = j as f64 / n as f64;
                (self.m * t).exp() / self.p[j]
            })
            .collect()
    }
}

/// The periodicity constant of the flow field.
pub fn kappa_of(a: &PeriodicField, b: &PeriodicField, mubar: &PeriodicField) -> Result<f64> {
    let w = weight(b, mubar);
    let da = a.derivative();
    let db = b.derivative();
    let wr = a.binary(&db, |x, y| x * y).binary(&da.binary(b, |x, y| x * y), |x, y| x - y);
    let en = a.binary(a, |x, y| x * y).binary(&b.binary(b, |x, y| x * y), |x, y| x + y);
    let (_, num) = w.cumulative(&wr);
    let (_, den) = w.cumulative(&en);
    if den <= 1e-14 {
        return Err(CoreError::PointCurve);
    }
    Ok(-num / den)
}

/// The `[xi,v]`-frame coefficient `eta` with `eta(0) = 0`, 1-periodic when
/// `kappa` comes from [`kappa_of`].
pub fn eta_of(
    a: &PeriodicField,
    b: &PeriodicField,
    mubar: &PeriodicField,
    kappa: f64,
) -> PeriodicField {
    let (vals, _) = eta_with_period_value(a, b, mubar, kappa);
    PeriodicField::from_values(vals)
}

/// Same as [`eta_of`] but also returns `eta(1^-)` (the periodicity residual,
/// since `eta(0) = 0`).
pub fn eta_with_period_value(
    a: &PeriodicField,
    b: &PeriodicField,
    mubar: &PeriodicField,
    kappa: f64,
) -> (Vec<f64>, f64) {
    let w = weight(b, mubar);
    let da = a.derivative();
    let db = b.derivative();
    let n = a.len();
    let forcing = PeriodicField::from_values(
        (0..n)
            .map(|j| {
                let wr = a.values()[j] * db.values()[j] - da.values()[j] * b.values()[j];
                let en = a.values()[j] * a.values()[j] + b.values()[j] * b.values()[j];
                wr + kappa * en
            })
            .collect(),
    );
    let (cum, at_one) = w.cumulative(&forcing);
    let inv = w.inv_values();
    // [xi,v]-frame sign: eta = -(1/E) int_0^t E (W + kappa (a^2+b^2))
    let vals: Vec<f64> = cum.iter().zip(&inv).map(|(c, i)| -c * i).collect();
    let period_residual = -at_one * (w.m).exp() / w.p[0];
    (vals, period_residual)
}

/// Mollified flow coefficients `(kappa_eps, lambda_eps, mu_eps, eta_eps)`.
pub fn flow_coefficients(
    a: &PeriodicField,
    b: &PeriodicField,
    mubar: &PeriodicField,
    eps: f64,
) -> Result<FlowCoefficients> {
    let am = a.mollify(eps)?;
    let bm = b.mollify(eps)?;
    let kappa = kappa_of(&am, &bm, mubar)?;
    let dam = am.derivative();
    let dbm = bm.derivative();
    let lambda = dam.binary(&bm, |x, y| x - kappa * y);
    let mu = dbm.binary(&am, |x, y| x + kappa * y);
    let eta = eta_of(&am, &bm, mubar, kappa);
    Ok(FlowCoefficients { kappa, lambda, mu, eta })
}

/// Diagnostics row recorded once per step.
#[derive(Debug, Clone, Copy)]
pub struct RegDiagRow {
    pub s: f64,
    pub eps: f64,
    pub c_l2: f64,
    pub xdot_h1: f64,
    pub kappa: f64,
    pub tail_energy_a: f64,
    pub tail_energy_b: f64,
}

/// State of the mollified flow on an actual loop.
#[derive(Clone)]
pub struct RegFlowState {
    pub lp: DiscreteLoop,
    pub tangent: TangentData,
    pub s: f64,
    pub eps: f64,
    /// `c` integrated per the induced system, cross-checked against the
    /// re-decomposed geometry.
    pub tracked_c: PeriodicField,
    pub history: Vec<RegDiagRow>,
    pub h1_ceiling: f64,
}

impl RegFlowState {
    pub fn new(lp: DiscreteLoop, eps: f64) -> Result<Self> {
        let tangent = decompose_tangent(&lp)?;
        let l2 = tangent_l2(&tangent);
        if l2 < DELTA_FLOOR {
            return Err(CoreError::PointCurve);
        }
        let n = lp.len();
        Ok(RegFlowState {
            lp,
            tangent,
            s: 0.0,
            eps,
            tracked_c: PeriodicField::zeros(n),
            history: Vec::new(),
            h1_ceiling: H1_CEILING,
        })
    }

    pub fn record(&mut self) -> Result<()> {
        let row = diag_row(self)?;
        self.history.push(row);
        Ok(())
    }
}

fn tangent_l2(td: &TangentData) -> f64 {
    // l2 norm of x' in the frame metric proxy (coefficient energy)
    (td.a.l2_norm().powi(2) + td.b.l2_norm().powi(2) + td.c.l2_norm().powi(2)).sqrt()
}

fn xdot_h1(lp: &DiscreteLoop) -> f64 {
    let mut acc = 0.0;
    for d in 0..lp.model.ambient_dim {
        let mut df = lp.coordinate_field(d).derivative();
        if lp.winding()[d] != 0.0 {
            df = df.map_values(|v| v + lp.winding()[d]);
        }
        acc += df.sobolev_norm(1).powi(2);
    }
    acc.sqrt()
}

fn diag_row(st: &RegFlowState) -> Result<RegDiagRow> {
    let frames = FrameSeries::along(&st.lp)?;
    let coeff = flow_coefficients(&st.tangent.a, &st.tangent.b, &frames.mubar, st.eps)?;
    let cut = st.lp.len() / 3;
    Ok(RegDiagRow {
        s: st.s,
        eps: st.eps,
        c_l2: st.tangent.c.l2_norm(),
        xdot_h1: xdot_h1(&st.lp),
        kappa: coeff.kappa,
        tail_energy_a: st.tangent.a.tail_energy_fraction(cut),
        tail_energy_b: st.tangent.b.tail_energy_fraction(cut),
    })
}

/// Deformation field sample points for given coefficients.
fn field_points(
    lp: &DiscreteLoop,
    coeff: &FlowCoefficients,
) -> Result<Vec<Vec<f64>>> {
    let n = lp.len();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let p = lp.point(j);
        let (xi, v, xv) = frame_columns(&lp.model, p)?;
        let mut z = linalg::scaled(&xi, coeff.lambda.values()[j]);
        linalg::axpy(&mut z, coeff.mu.values()[j], &v);
        linalg::axpy(&mut z, coeff.eta.values()[j], &xv);
        out.push(z);
    }
    Ok(out)
}

/// Rate of the tracked `c` under the mollified field (the cancellation-free
/// form of the induced equation).
fn tracked_c_rate(
    td: &TangentData,
    c: &PeriodicField,
    coeff: &FlowCoefficients,
    mubar: &PeriodicField,
    eps: f64,
) -> Result<PeriodicField> {
    let am = td.a.mollify(eps)?;
    let bm = td.b.mollify(eps)?;
    let n = td.a.len();
    let vals = (0..n)
        .map(|j| {
            let da = td.a.values()[j] - am.values()[j];
            let db = td.b.values()[j] - bm.values()[j];
            coeff.mu.values()[j] * da - coeff.lambda.values()[j] * db
                - mubar.values()[j] * coeff.eta.values()[j] * db
                + mubar.values()[j] * coeff.mu.values()[j] * c.values()[j]
        })
        .collect();
    Ok(PeriodicField::from_values(vals))
}

/// One midpoint step of the mollified flow on the curve itself. The tangent
/// data is recomputed from geometry after the step; `tracked_c` advances by
/// the induced scalar equation as a cross-check.
pub fn step_approx_flow(state: &RegFlowState, dt: f64) -> Result<RegFlowState> {
    let h1 = xdot_h1(&state.lp);
    if h1 > state.h1_ceiling {
        return Err(CoreError::BlowUp { norm: h1 });
    }
    if tangent_l2(&state.tangent) < DELTA_FLOOR {
        return Err(CoreError::PointCurve);
    }
    let frames = FrameSeries::along(&state.lp)?;
    let coeff = flow_coefficients(&state.tangent.a, &state.tangent.b, &frames.mubar, state.eps)?;
    let z = field_points(&state.lp, &coeff)?;

    let chart_size = match state.lp.model.chart {
        Chart::UnitSphere => 2.0,
        Chart::UnitCube => 1.0,
    };
    let zmax = z.iter().map(|v| linalg::norm(v)).fold(0.0f64, f64::max);
    if dt * zmax > chart_size / 10.0 {
        return Err(CoreError::BlowUp { norm: dt * zmax });
    }

    // midpoint stage
    let half: Vec<Vec<f64>> = state
        .lp
        .points()
        .iter()
        .zip(&z)
        .map(|(p, zp)| {
            let mut q = p.clone();
            linalg::axpy(&mut q, dt / 2.0, zp);
            state.lp.model.project_point(&q)
        })
        .collect();
    let lp_half = state.lp.with_points(half)?;
    let td_half = decompose_tangent(&lp_half)?;
    let frames_half = FrameSeries::along(&lp_half)?;
    let coeff_half = flow_coefficients(&td_half.a, &td_half.b, &frames_half.mubar, state.eps)?;
    let z_half = field_points(&lp_half, &coeff_half)?;

    let new_pts: Vec<Vec<f64>> = state
        .lp
        .points()
        .iter()
        .zip(&z_half)
        .map(|(p, zp)| {
            let mut q = p.clone();
            linalg::axpy(&mut q, dt, zp);
            state.lp.model.project_point(&q)
        })
        .collect();
    let lp_new = state.lp.with_points(new_pts)?;
    let tangent_new = decompose_tangent(&lp_new)?;

    // tracked c: midpoint in the same two stages
    let r1 = tracked_c_rate(&state.tangent, &state.tracked_c, &coeff, &frames.mubar, state.eps)?;
    let c_half = state.tracked_c.binary(&r1, |c, r| c + dt / 2.0 * r);
    let r2 = tracked_c_rate(&td_half, &c_half, &coeff_half, &frames_half.mubar, state.eps)?;
    let tracked_c = state.tracked_c.binary(&r2, |c, r| c + dt * r);

    let mut out = RegFlowState {
        lp: lp_new,
        tangent: tangent_new,
        s: state.s + dt,
        eps: state.eps,
        tracked_c,
        history: state.history.clone(),
        h1_ceiling: state.h1_ceiling,
    };
    out.record()?;
    Ok(out)
}

/// One IMEX step of the limiting diffusion system on `(a, b)`: the reaction
/// part explicit, the Laplacian via the exact heat multiplier.
pub fn step_limit_flow(
    a: &PeriodicField,
    b: &PeriodicField,
    frames: &FrameSeries,
    dt: f64,
) -> Result<(PeriodicField, PeriodicField)> {
    if a.l2_norm() + b.l2_norm() < 1e-14 {
        return Err(CoreError::PointCurve);
    }
    let kappa = kappa_of(a, b, &frames.mubar)?;
    let eta = eta_of(a, b, &frames.mubar, kappa);
    let da = a.derivative();
    let db = b.derivative();
    let n = a.len();
    let ra = PeriodicField::from_values(
        (0..n)
            .map(|j| -kappa * db.values()[j] + b.values()[j] * eta.values()[j])
            .collect(),
    );
    let rb = PeriodicField::from_values(
        (0..n)
            .map(|j| {
                kappa * da.values()[j]
                    - eta.values()[j]
                        * (frames.tau.values()[j] * a.values()[j]
                            + frames.mubar_xi.values()[j] * b.values()[j])
            })
            .collect(),
    );
    let a_new = a.binary(&ra, |x, r| x + dt * r).heat_semigroup(dt, 0.0)?;
    let b_new = b.binary(&rb, |x, r| x + dt * r).heat_semigroup(dt, 0.0)?;
    Ok((a_new, b_new))
}

/// Existence-time lower bound from the scalar comparison argument: the
/// majorant of `U' <= f(U)`, `f(u) = exp(c3 (y0 + k u^2))` with
/// `k = c1 + sqrt(eps) c2`, reaches `y = ceiling` no earlier than
/// `sigma = int_0^{U*} exp(-c3 (y0 + k r^2)) dr`, `U* = sqrt((ceiling-y0)/k)`.
/// Returns `f64::INFINITY` when the bound never reaches the ceiling.
pub fn existence_time_bound(y0: f64, c1: f64, c2: f64, c3: f64, eps: f64, ceiling: f64) -> f64 {
    let k = c1 + eps.sqrt() * c2;
    if ceiling <= y0 {
        return 0.0;
    }
    if k <= 0.0 {
        // no forcing: y stays at y0 forever
        return f64::INFINITY;
    }
    let u_star = ((ceiling - y0) / k).sqrt();
    // Simpson quadrature of G(U*)
    let m = 20_000;
    let h = u_star / m as f64;
    let g = |r: f64| (-c3 * (y0 + k * r * r)).exp();
    let mut acc = g(0.0) + g(u_star);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{trig_poly, SmallRng};

    const N: usize = 256;
    const TAU: f64 = core::f64::consts::TAU;

    #[test]
    fn kappa_vanishes_for_constant_a_zero_b() {
        let a = PeriodicField::constant(N, 1.7);
        let b = PeriodicField::zeros(N);
        let mubar = PeriodicField::zeros(N);
        assert!(kappa_of(&a, &b, &mubar).unwrap().abs() < 1e-13);
    }

    #[test]
    fn kappa_of_circle_data_is_minus_two_pi() {
        // independent quadrature oracle: W = a b' - a' b = 2 pi exactly and
        // int (a^2 + b^2) = 1, so kappa = -2 pi.
        let a = PeriodicField::sample(N, |t| (TAU * t).cos());
        let b = PeriodicField::sample(N, |t| (TAU * t).sin());
        let mubar = PeriodicField::zeros(N);
        // trapezoid oracle on the plain integrals
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..N {
            let t = j as f64 / N as f64;
            let (aj, bj) = ((TAU * t).cos(), (TAU * t).sin());
            let (daj, dbj) = (-TAU * (TAU * t).sin(), TAU * (TAU * t).cos());
            num += (aj * dbj - daj * bj) / N as f64;
            den += (aj * aj + bj * bj) / N as f64;
        }
        let oracle = -num / den;
        let k = kappa_of(&a, &b, &mubar).unwrap();
        assert!((k - oracle).abs() < 1e-10);
        assert!((k + TAU).abs() < 1e-10);
    }

    #[test]
    fn eta_vanishes_in_the_rigid_cases() {
        let mubar = PeriodicField::zeros(N);
        let a = PeriodicField::constant(N, 2.0);
        let b = PeriodicField::zeros(N);
        let k = kappa_of(&a, &b, &mubar).unwrap();
        assert!(eta_of(&a, &b, &mubar, k).sup_norm() < 1e-12);

        let a = PeriodicField::sample(N, |t| (TAU * t).cos());
        let b = PeriodicField::sample(N, |t| (TAU * t).sin());
        let k = kappa_of(&a, &b, &mubar).unwrap();
        assert!((k + TAU).abs() < 1e-10);
        // Wronskian is the constant 2 pi and kappa (a^2+b^2) = -2 pi: the
        // integrand cancels identically
        assert!(eta_of(&a, &b, &mubar, k).sup_norm() < 1e-10);
    }

    #[test]
    fn eta_is_periodic_for_random_data() {
        let mut rng = SmallRng::new(700);
        for _ in 0..100 {
            let a = trig_poly(&mut rng, N, 12, 1.0);
            let b = trig_poly(&mut rng, N, 12, 1.0);
            let mubar = trig_poly(&mut rng, N, 6, 0.5);
            if a.l2_norm() + b.l2_norm() < 0.1 {
                continue;
            }
            let k = kappa_of(&a, &b, &mubar).unwrap();
            let (_, resid) = eta_with_period_value(&a, &b, &mubar, k);
            assert!(resid.abs() <= 1e-8, "eta period residual {resid}");
        }
    }

    #[test]
    fn eta_satisfies_its_defining_equation_after_mollification() {
        let mut rng = SmallRng::new(41);
        let a = trig_poly(&mut rng, N, 10, 1.0).map_values(|v| v + 1.0);
        let b = trig_poly(&mut rng, N, 10, 1.0);
        let mubar = trig_poly(&mut rng, N, 4, 0.4);
        let eps = 1e-3;
        let coeff = flow_coefficients(&a, &b, &mubar, eps).unwrap();
        let am = a.mollify(eps).unwrap();
        let bm = b.mollify(eps).unwrap();
        let de = coeff.eta.derivative();
        let mut worst = 0.0f64;
        for j in 0..N {
            let want = mubar.values()[j] * bm.values()[j] * coeff.eta.values()[j]
                + bm.values()[j] * coeff.lambda.values()[j]
                - am.values()[j] * coeff.mu.values()[j];
            worst = worst.max((de.values()[j] - want).abs());
        }
        let scale = coeff.eta.sobolev_norm(1).max(1.0);
        assert!(worst / scale < 1e-6, "eta ODE residual {worst}");
    }

    #[test]
    fn limit_flow_fixes_reeb_data() {
        let a = PeriodicField::constant(N, 1.3);
        let b = PeriodicField::zeros(N);
        let fr = FrameSeries::constant(N, 0.7, 0.0, 0.0);
        let (a2, b2) = step_limit_flow(&a, &b, &fr, 1e-3).unwrap();
        assert!(a2.binary(&a, |x, y| x - y).sup_norm() < 1e-13);
        assert!(b2.sup_norm() < 1e-13);
    }

    #[test]
    fn limit_flow_reduces_to_exact_heat_when_b_vanishes() {
        let a0 = PeriodicField::sample(N, |t| 1.0 + 0.5 * (2.0 * TAU * t).cos());
        let b0 = PeriodicField::zeros(N);
        let fr = FrameSeries::constant(N, 0.0, 0.0, 0.0);
        let dt = 1e-3;
        let mut a = a0.clone();
        let mut b = b0.clone();
        for _ in 0..10 {
            let (an, bn) = step_limit_flow(&a, &b, &fr, dt).unwrap();
            a = an;
            b = bn;
        }
        let exact = a0.heat_semigroup(10.0 * dt, 0.0).unwrap();
        assert!(a.binary(&exact, |x, y| x - y).sup_norm() < 1e-8);
        assert!(b.sup_norm() < 1e-13);
    }

    #[test]
    fn limit_flow_damps_high_modes() {
        let mut rng = SmallRng::new(90);
        let a = trig_poly(&mut rng, N, 60, 1.0).map_values(|v| v + 1.5);
        let b = trig_poly(&mut rng, N, 60, 0.8);
        let fr = FrameSeries::constant(N, 0.0, 0.0, 0.0);
        let cut = N / 3;
        let e0 = a.tail_energy_fraction(cut).max(b.tail_energy_fraction(cut));
        let mut aa = a;
        let mut bb = b;
        for _ in 0..100 {
            let (an, bn) = step_limit_flow(&aa, &bb, &fr, 1e-4).unwrap();
            aa = an;
            bb = bn;
        }
        let e1 = aa.tail_energy_fraction(cut).max(bb.tail_energy_fraction(cut));
        assert!(e1 < e0 * 0.5, "tail went {e0} -> {e1}");
    }

    #[test]
    fn existence_bound_infinite_without_forcing() {
        assert!(existence_time_bound(1.0, 0.0, 0.0, 2.0, 1e-3, 10.0).is_infinite());
    }

    #[test]
    fn existence_bound_monotone_in_ceiling_and_eps() {
        let s1 = existence_time_bound(1.0, 2.0, 3.0, 0.5, 1e-2, 10.0);
        let s2 = existence_time_bound(1.0, 2.0, 3.0, 0.5, 1e-2, 20.0);
        assert!(s2 >= s1);
        // growing eps strengthens the forcing, so the bound shrinks
        let mut prev = f64::INFINITY;
        for eps in [1.25e-3, 2.5e-3, 5e-3, 1e-2] {
            let s = existence_time_bound(1.0, 2.0, 3.0, 0.5, eps, 10.0);
            assert!(s <= prev + 1e-12);
            prev = s;
        }
    }

    #[test]
    fn existence_bound_matches_ode_comparison_oracle() {
        // integrate U' = f(U) directly and find when y0 + k U^2 crosses the
        // ceiling
        let (y0, c1, c2, c3, eps, ceiling) = (0.8, 1.7, 0.9, 0.6, 4e-3, 6.0);
        let k = c1 + eps.sqrt() * c2;
        let f = |u: f64| (c3 * (y0 + k * u * u)).exp();
        let mut u = 0.0;
        let mut s = 0.0;
        let h = 1e-6;
        let crossing = loop {
            if y0 + k * u * u >= ceiling {
                break s;
            }
            let k1 = f(u);
            let k2 = f(u + h / 2.0 * k1);
            let k3 = f(u + h / 2.0 * k2);
            let k4 = f(u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            s += h;
            if s > 10.0 {
                break f64::INFINITY;
            }
        };
        let bound = existence_time_bound(y0, c1, c2, c3, eps, ceiling);
        assert!(
            (bound - crossing).abs() < 1e-4,
            "bound {bound} oracle {crossing}"
        );
    }

    #[test]
    fn point_curve_is_rejected() {
        let a = PeriodicField::zeros(N);
        let b = PeriodicField::zeros(N);
        let mubar = PeriodicField::zeros(N);
        assert!(matches!(kappa_of(&a, &b, &mubar), Err(CoreError::PointCurve)));
    }
}

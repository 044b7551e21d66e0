//! Positivity push: the integro-differential fixed point for the forcing
//! `f`, the induced diffusion `da/ds = a'' + c a^2`, zero counting, and the
//! perturbation of periodic `v`-orbits.
//!
//! With `W = a b' - a' b`, `E(t) = exp(-int_0^t b mubar)` and
//! `eta_f(l) = (1/E(l)) int_0^l E (W - b f)`, the operator
//!
//! ```text
//! K(f)(t) = int_0^t [ b eta_f + c(f) a^2 ]
//! ```
//!
//! is affine in `f`; `c(f) = c1(f) + c2` is fixed by 1-periodicity of
//! `K(f)`. Its fixed point satisfies `f' - b eta_f = c(f) a^2`, which turns
//! the `a`-evolution into the diffusion above. The linear part `T` is a
//! Volterra-type operator, so Picard iteration converges superlinearly
//! (`|K^n f1 - K^n f2| <= |T|^n / n! |f1 - f2|`).
//!
//! For stepping actual loops there is a two-constant variant
//! ([`solve_f_periodic`]) that additionally makes `eta` itself 1-periodic:
//! the deformation field must be single-valued on the loop, and the plain
//! operator leaves `eta` with a period defect in general.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::fft::{inverse_real, signed_mode, C64};
use crate::loops::{
    alpha_reparametrize, classify, decompose_tangent, integrate_ab, DiscreteLoop, SpaceMembership,
};
use crate::spectral::{cumint_weighted, PeriodicField};
use crate::variation::{DeformVector, FrameSeries};

/// Structured cumulative integral of `g0 + g1 e^{m t} + g2 t` with periodic
/// sampled parts; exact per Fourier mode. Returns grid values and the value
/// at `t = 1`.
fn cum_structured(
    g0: &PeriodicField,
    g1: Option<(&PeriodicField, f64)>,
    g2: Option<&PeriodicField>,
) -> (Vec<f64>, f64) {
    let n = g0.len();
    let (mut vals, mut at1) = g0.cumint();
    if let Some((g, m)) = g1 {
        // int_0^t g e^{m r} dr: reuse the e^{-m r} routine with -m
        let (v, a1) = cumint_weighted(g, -m);
        for (x, y) in vals.iter_mut().zip(&v) {
            *x += y;
        }
        at1 += a1;
    }
    if let Some(g) = g2 {
        // int_0^t r g(r) dr = t G(t) - int_0^t G with G = cumint g
        let mean = g.mean();
        let (gv, _) = g.cumint();
        let per = PeriodicField::from_values(
            (0..n).map(|j| gv[j] - mean * j as f64 / n as f64).collect(),
        );
        let (per_cum, per_cum1) = per.cumint();
        for (j, x) in vals.iter_mut().enumerate() {
            let t = j as f64 / n as f64;
            *x += t * gv[j] - (mean * t * t / 2.0 + per_cum[j]);
        }
        // G(1) = mean (the periodic part returns to zero)
        at1 += mean - (mean / 2.0 + per_cum1);
    }
    (vals, at1)
}

/// `eta` for a given forcing, split structurally so outer integrals against
/// it stay exact: `eta = pp/p + coef e^{m t}/p + ramp t/p` with `pp`, `p`
/// periodic.
struct EtaParts {
    values: Vec<f64>,
    b_eta_periodic: PeriodicField,
    b_eta_exp: Option<(PeriodicField, f64)>,
    b_eta_ramp: Option<PeriodicField>,
    period_defect: f64,
}

/// Precomputed data for the fixed-point operator on one `(a, b, mubar)`
/// profile.
pub struct KOperatorData {
    pub a: PeriodicField,
    pub b: PeriodicField,
    pub mubar: PeriodicField,
    /// constant part of `c(f)`
    pub c2: f64,
    /// measured sup operator norm of the linear part `T`
    pub t_norm: f64,
    n: usize,
    m: f64,
    p: Vec<f64>,
    a2_int: f64,
    k0: Vec<f64>,
}

impl KOperatorData {
    pub fn new(a: PeriodicField, b: PeriodicField, mubar: PeriodicField) -> Result<Self> {
        Self::build(a, b, mubar, true)
    }

    /// Skip the operator-norm measurement (an `O(N)` pass of `t_apply`) for
    /// callers that step in a loop.
    pub fn new_light(a: PeriodicField, b: PeriodicField, mubar: PeriodicField) -> Result<Self> {
        Self::build(a, b, mubar, false)
    }

    fn build(
        a: PeriodicField,
        b: PeriodicField,
        mubar: PeriodicField,
        with_norm: bool,
    ) -> Result<Self> {
        let n = a.len();
        if b.len() != n || mubar.len() != n {
            return Err(CoreError::LengthMismatch {
                expected: n,
                got: b.len().max(mubar.len()),
            });
        }
        let a2_int = a.binary(&a, |x, y| x * y).mean();
        if a2_int <= 1e-14 {
            return Err(CoreError::SignCondition(
                "the xi-component a must not be identically zero".into(),
            ));
        }
        let g = b.binary(&mubar, |x, y| x * y);
        let m = g.mean();
        let (cum, _) = g.cumint();
        let p: Vec<f64> = (0..n)
            .map(|j| {
                let t = j as f64 / n as f64;
                (-(cum[j] - m * t)).exp()
            })
            .collect();

        let mut data = KOperatorData {
            a,
            b,
            mubar,
            c2: 0.0,
            t_norm: 0.0,
            n,
            m,
            p,
            a2_int,
            k0: alloc::vec![0.0; n],
        };

        let da = data.a.derivative();
        let db = data.b.derivative();
        let w_forcing = PeriodicField::from_values(
            (0..n)
                .map(|j| data.a.values()[j] * db.values()[j] - da.values()[j] * data.b.values()[j])
                .collect(),
        );
        let eta_w = data.eta_parts(&w_forcing);
        let (int_b_eta, int_b_eta_1) = cum_structured(
            &eta_w.b_eta_periodic,
            eta_w.b_eta_exp.as_ref().map(|(f, mm)| (f, *mm)),
            eta_w.b_eta_ramp.as_ref(),
        );
        data.c2 = -int_b_eta_1 / data.a2_int;
        let (a2cum, _) = data.a.binary(&data.a, |x, y| x * y).cumint();
        for j in 0..n {
            data.k0[j] = int_b_eta[j] + data.c2 * a2cum[j];
        }
        if with_norm {
            data.t_norm = data.measure_t_norm();
        }
        Ok(data)
    }

    fn eta_parts(&self, forcing: &PeriodicField) -> EtaParts {
        let n = self.n;
        let ef = PeriodicField::from_values(
            forcing.values().iter().zip(&self.p).map(|(f, p)| f * p).collect(),
        );
        let coeffs = ef.coeffs();
        let mut per = alloc::vec![C64::ZERO; n];
        let mut const_term = 0.0;
        let mut ramp = 0.0;
        for k in 0..n {
            let w = core::f64::consts::TAU * signed_mode(k, n) as f64;
            let denom = C64::new(-self.m, w);
            if denom.abs() < 1e-14 {
                ramp += coeffs[k].re;
                continue;
            }
            let gk = coeffs[k] / denom;
            per[k] = gk;
            const_term += gk.re;
        }
        let pp = inverse_real(&per);
        let inv_p: Vec<f64> = self.p.iter().map(|p| 1.0 / p).collect();
        let mut values = alloc::vec![0.0; n];
        for j in 0..n {
            let t = j as f64 / n as f64;
            let emt = (self.m * t).exp();
            values[j] = (pp[j] - const_term * emt + ramp * t * emt) * inv_p[j];
        }
        let period_defect = {
            let em = self.m.exp();
            (pp[0] - const_term * em + ramp * em) * inv_p[0] - values[0]
        };

        let b_over_p = PeriodicField::from_values(
            self.b.values().iter().zip(&inv_p).map(|(b, ip)| b * ip).collect(),
        );
        let pp_part = PeriodicField::from_values(
            (0..n).map(|j| self.b.values()[j] * pp[j] * inv_p[j]).collect(),
        );
        if self.m.abs() > 1e-14 {
            EtaParts {
                values,
                b_eta_periodic: pp_part,
                b_eta_exp: Some((b_over_p.map_values(|v| -const_term * v), self.m)),
                b_eta_ramp: None,
                period_defect,
            }
        } else {
            EtaParts {
                values,
                b_eta_periodic: pp_part.binary(&b_over_p, |x, y| x - const_term * y),
                b_eta_exp: None,
                b_eta_ramp: if ramp != 0.0 {
                    Some(b_over_p.map_values(|v| ramp * v))
                } else {
                    None
                },
                period_defect,
            }
        }
    }

    fn int_b_eta(&self, parts: &EtaParts) -> (Vec<f64>, f64) {
        cum_structured(
            &parts.b_eta_periodic,
            parts.b_eta_exp.as_ref().map(|(g, mm)| (g, *mm)),
            parts.b_eta_ramp.as_ref(),
        )
    }

    /// Linear part `T(f)(t) = int_0^t ( -b eta_{bf} + c1(f) a^2 )` where
    /// `eta_{bf}` takes forcing `b f`.
    pub fn t_apply(&self, f: &PeriodicField) -> PeriodicField {
        let forcing = self.b.binary(f, |b, f| b * f);
        let parts = self.eta_parts(&forcing);
        let (int_b_eta, int_b_eta_1) = self.int_b_eta(&parts);
        let c1 = int_b_eta_1 / self.a2_int;
        let (a2cum, _) = self.a.binary(&self.a, |x, y| x * y).cumint();
        PeriodicField::from_values(
            (0..self.n).map(|j| -int_b_eta[j] + c1 * a2cum[j]).collect(),
        )
    }

    /// `c1(f)`, the linear part of the periodicity constant.
    pub fn c1(&self, f: &PeriodicField) -> f64 {
        let forcing = self.b.binary(f, |b, f| b * f);
        let parts = self.eta_parts(&forcing);
        let (_, int_b_eta_1) = self.int_b_eta(&parts);
        int_b_eta_1 / self.a2_int
    }

    /// Full operator `K(f) = K0 + T(f)`.
    pub fn k_apply(&self, f: &PeriodicField) -> PeriodicField {
        let t = self.t_apply(f);
        PeriodicField::from_values((0..self.n).map(|j| self.k0[j] + t.values()[j]).collect())
    }

    /// `c(f) = c1(f) + c2`.
    pub fn c_of(&self, f: &PeriodicField) -> f64 {
        self.c1(f) + self.c2
    }

    /// `eta` under the fixed-point forcing `W - b f` plus its period defect.
    pub fn eta_of_f(&self, f: &PeriodicField) -> (PeriodicField, f64) {
        let da = self.a.derivative();
        let db = self.b.derivative();
        let forcing = PeriodicField::from_values(
            (0..self.n)
                .map(|j| {
                    self.a.values()[j] * db.values()[j]
                        - da.values()[j] * self.b.values()[j]
                        - self.b.values()[j] * f.values()[j]
                })
                .collect(),
        );
        let parts = self.eta_parts(&forcing);
        (
            PeriodicField::from_values(parts.values.clone()),
            parts.period_defect,
        )
    }

    /// The smallest constant `M` with `|T^n| <= M^n / n!` over the measured
    /// range `n <= 8` (sup operator norms of the discrete matrix powers).
    /// The affine `c1` part of `T` is not purely Volterra, so the plain
    /// operator norm can undershoot the valid envelope constant slightly.
    fn measure_t_norm(&self) -> f64 {
        let n = self.n;
        let mut mat = alloc::vec![alloc::vec![0.0f64; n]; n];
        for j in 0..n {
            let mut e = alloc::vec![0.0; n];
            e[j] = 1.0;
            let col = self.t_apply(&PeriodicField::from_values(e));
            for i in 0..n {
                mat[i][j] = col.values()[i];
            }
        }
        let inf_norm = |m: &Vec<Vec<f64>>| -> f64 {
            m.iter()
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0f64, f64::max)
        };
        let mut best: f64 = inf_norm(&mat);
        let mut power = mat.clone();
        let mut fact = 1.0f64;
        for p in 2..=8u32 {
            // power <- power * mat
            let mut next = alloc::vec![alloc::vec![0.0f64; n]; n];
            for i in 0..n {
                for k in 0..n {
                    let v = power[i][k];
                    if v == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        next[i][j] += v * mat[k][j];
                    }
                }
            }
            power = next;
            fact *= p as f64;
            let m = (fact * inf_norm(&power)).powf(1.0 / p as f64);
            best = best.max(m);
        }
        best
    }

    /// `K(f)(1) - K(f)(0)`, zero by the choice of `c(f)`. The integrand is
    /// not periodic (eta carries a period defect), so the residual is
    /// measured by an end-corrected quadrature including the `t = 1` value.
    pub fn k_period_residual(&self, f: &PeriodicField) -> f64 {
        let c = self.c_of(f);
        let (eta, defect) = self.eta_of_f(f);
        let mut samples: Vec<f64> = (0..self.n)
            .map(|j| {
                self.b.values()[j] * eta.values()[j]
                    + c * self.a.values()[j] * self.a.values()[j]
            })
            .collect();
        let endpoint = self.b.values()[0] * (eta.values()[0] + defect)
            + c * self.a.values()[0] * self.a.values()[0];
        samples.push(endpoint);
        gregory_integral(&samples).abs()
    }
}

/// Picard iteration of `K` from `f = 0` until the sup-norm increment drops
/// below `tol`. Returns `(f, c(f))`.
pub fn solve_f(data: &KOperatorData, tol: f64) -> Result<(PeriodicField, f64)> {
    let mut f = PeriodicField::zeros(data.n);
    for _ in 0..500 {
        let next = data.k_apply(&f);
        let inc = next.binary(&f, |x, y| x - y).sup_norm();
        f = next;
        if inc <= tol {
            return Ok((f.clone(), data.c_of(&f)));
        }
    }
    Err(CoreError::RootNotConverged)
}

/// Residual of the fixed-point equation `f' - b eta_f - c a^2 = 0` in sup
/// norm (substitute-back check).
pub fn fixed_point_residual(data: &KOperatorData, f: &PeriodicField, c: f64) -> f64 {
    // independent route: integrate the eta ODE and the right-hand side of
    // f' = b eta + c a^2 by RK4 on a refined grid and compare against f
    let n = data.n;
    let sub = 16usize;
    let h = 1.0 / (sub * n) as f64;
    let da = data.a.derivative();
    let db = data.b.derivative();
    let rhs = |t: f64, y: &[f64; 2]| -> [f64; 2] {
        let (av, bv, mv) = (data.a.eval(t), data.b.eval(t), data.mubar.eval(t));
        let forcing = av * db.eval(t) - da.eval(t) * bv - bv * f.eval(t);
        [
            mv * bv * y[0] + forcing,
            bv * y[0] + c * av * av,
        ]
    };
    let mut y = [0.0f64, 0.0];
    let mut t = 0.0;
    let mut worst = 0.0f64;
    for j in 0..n {
        worst = worst.max((y[1] - f.values()[j]).abs());
        for _ in 0..sub {
            let k1 = rhs(t, &y);
            let k2 = rhs(t + h / 2.0, &[y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = rhs(t + h / 2.0, &[y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = rhs(t + h, &[y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
        }
    }
    worst
}

/// Sixth-order end-corrected (Gregory) quadrature of uniformly spaced
/// samples spanning the full interval, endpoints included.
fn gregory_integral(samples: &[f64]) -> f64 {
    let m = samples.len() - 1;
    let h = 1.0 / m as f64;
    let w = [
        95.0 / 288.0,
        317.0 / 240.0,
        23.0 / 30.0,
        793.0 / 720.0,
        157.0 / 160.0,
    ];
    let mut acc = 0.0;
    for (j, &v) in samples.iter().enumerate() {
        let from_end = m - j;
        let weight = if j < 5 && from_end < 5 {
            if j == 0 || from_end == 0 {
                0.5
            } else {
                1.0
            }
        } else if j < 5 {
            w[j]
        } else if from_end < 5 {
            w[from_end]
        } else {
            1.0
        };
        acc += weight * v;
    }
    acc * h
}

/// One IMEX step of `da/ds = a'' + c a^2`: explicit quadratic term, exact
/// heat multiplier. Refuses when the quadratic term is about to blow up.
pub fn push_step(a: &PeriodicField, c_value: f64, dt: f64) -> Result<PeriodicField> {
    if dt <= 0.0 {
        return Err(CoreError::InvalidArgument("push_step: dt must be positive".into()));
    }
    let quad = a.map_values(|x| c_value * x * x);
    if dt * quad.sup_norm() > 0.5 * (1.0 + a.sup_norm()) {
        return Err(CoreError::BlowUp { norm: quad.sup_norm() });
    }
    a.binary(&quad, |x, q| x + dt * q).heat_semigroup(dt, 0.0)
}

/// Count sign changes of `a` around the cyclic grid, treating `|a| <= tol`
/// as degenerate and merging adjacent degenerate runs into single crossings.
pub fn zero_count(a: &PeriodicField, tol: f64) -> usize {
    let mut signs: Vec<i8> = Vec::new();
    for &v in a.values() {
        let s = if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        };
        if signs.last() != Some(&s) {
            signs.push(s);
        }
    }
    if signs.len() > 1 && signs.first() == signs.last() {
        signs.pop();
    }
    let nonzero: Vec<i8> = signs.into_iter().filter(|&s| s != 0).collect();
    if nonzero.len() < 2 {
        return 0;
    }
    let mut count = 0;
    for i in 0..nonzero.len() {
        if nonzero[i] != nonzero[(i + 1) % nonzero.len()] {
            count += 1;
        }
    }
    count
}

/// Two-constant periodic variant: `lambda = a' + f`, `mu = b' + ktilde a`,
/// with `ktilde(f)` closing `eta` and `c(f)` closing `f`. The induced
/// `a`-equation is still `da/ds = a'' + c a^2`, but the deformation field is
/// single-valued on the loop. Solved directly as a dense affine system.
///
/// Unlike the paper-facing pieces above (which keep the printed
/// bookkeeping), `eta` here is the `[xi,v]`-frame coefficient: it solves
/// `eta' = mubar b eta + (b f - W) - ktilde a^2` and the fixed point obeys
/// `f' = c a^2 - b eta`.
pub struct PeriodicPushSolution {
    pub f: PeriodicField,
    pub c: f64,
    pub ktilde: f64,
    pub eta: PeriodicField,
    pub eta_defect: f64,
}

pub fn solve_f_periodic(data: &KOperatorData) -> Result<PeriodicPushSolution> {
    let n = data.n;
    let da = data.a.derivative();
    let db = data.b.derivative();
    let a2 = data.a.binary(&data.a, |x, y| x * y);
    let w_a2 = weight_integral(data, &a2);
    if w_a2.abs() < 1e-14 {
        return Err(CoreError::SignCondition("int E a^2 vanished".into()));
    }
    let (a2cum, _) = a2.cumint();

    let apply = |f: &PeriodicField| -> (Vec<f64>, f64, f64, PeriodicField, f64) {
        // applied-frame forcing: b lambda - a mu = -W + b f - ktilde a^2
        let base = PeriodicField::from_values(
            (0..n)
                .map(|j| {
                    data.b.values()[j] * f.values()[j]
                        - (data.a.values()[j] * db.values()[j]
                            - da.values()[j] * data.b.values()[j])
                })
                .collect(),
        );
        let ktilde = weight_integral(data, &base) / w_a2;
        let forcing = base.binary(&a2, |x, y| x - ktilde * y);
        let parts = data.eta_parts(&forcing);
        let eta = PeriodicField::from_values(parts.values.clone());
        let (int_b_eta, int_b_eta_1) = data.int_b_eta(&parts);
        let c = int_b_eta_1 / data.a2_int;
        let vals: Vec<f64> = (0..n).map(|j| c * a2cum[j] - int_b_eta[j]).collect();
        (vals, c, ktilde, eta, parts.period_defect)
    };

    let zero = PeriodicField::zeros(n);
    let (f0_vals, _, _, _, _) = apply(&zero);
    let mut sys = alloc::vec![alloc::vec![0.0f64; n]; n];
    for j in 0..n {
        let mut e = alloc::vec![0.0; n];
        e[j] = 1.0;
        let (col, _, _, _, _) = apply(&PeriodicField::from_values(e));
        for i in 0..n {
            let tij = col[i] - f0_vals[i];
            sys[i][j] = if i == j { 1.0 - tij } else { -tij };
        }
    }
    let f_vals = crate::linalg::solve_dense(sys, f0_vals)?;
    let f = PeriodicField::from_values(f_vals);
    let (_, c, ktilde, eta, eta_defect) = apply(&f);
    Ok(PeriodicPushSolution { f, c, ktilde, eta, eta_defect })
}

fn weight_integral(data: &KOperatorData, g: &PeriodicField) -> f64 {
    let ef = PeriodicField::from_values(
        g.values().iter().zip(&data.p).map(|(x, p)| x * p).collect(),
    );
    let (_, at1) = cumint_weighted(&ef, data.m);
    at1
}

/// Diagnostics row for the push flow.
#[derive(Debug, Clone, Copy)]
pub struct PushDiagRow {
    pub s: f64,
    pub min_a: f64,
    pub zero_count: usize,
    pub c_value: f64,
    pub closure_defect: f64,
}

/// Result of pushing a loop into `C_beta`.
pub struct PushResult {
    pub lp: DiscreteLoop,
    pub membership: SpaceMembership,
    pub history: Vec<PushDiagRow>,
}

/// Run the diffusion until `min a > tol`, reconstruct the loop from the
/// evolved `(a, b)`, and reparametrize to constant `a`.
pub fn push_to_c_beta(lp: &DiscreteLoop, max_s: f64, dt: f64, tol: f64) -> Result<PushResult> {
    let td = decompose_tangent(lp)?;
    let mem = crate::loops::classify_tangent_data(&td, 1e-4);
    if !mem.in_c_beta_plus {
        return Err(CoreError::SignCondition(
            "push_to_c_beta expects a loop in C_beta^+ (a >= 0)".into(),
        ));
    }
    let frames = FrameSeries::along(lp)?;
    let mut a = td.a.clone();
    let mut b = td.b.clone();
    let mut s = 0.0;
    let mut history: Vec<PushDiagRow> = Vec::new();
    let tol_count = 1e-7;
    let n = a.len();
    let reaction = |aa: &PeriodicField,
                    bb: &PeriodicField,
                    sol: &PeriodicPushSolution|
     -> (PeriodicField, PeriodicField) {
        let da = aa.derivative();
        let ra = aa.map_values(|x| sol.c * x * x);
        let rb = PeriodicField::from_values(
            (0..n)
                .map(|j| {
                    sol.ktilde * da.values()[j]
                        - sol.eta.values()[j]
                            * (frames.tau.values()[j] * aa.values()[j]
                                + frames.mubar_xi.values()[j] * bb.values()[j])
                })
                .collect(),
        );
        (ra, rb)
    };
    while a.min_value() <= tol {
        if s >= max_s {
            return Err(CoreError::HorizonExceeded { min_a: a.min_value() });
        }
        // Strang step with a midpoint reaction: the deformation field is
        // single-valued, so the curve-closure invariant only sees the
        // O(dt^2) step error
        let ah = a.heat_semigroup(dt / 2.0, 0.0)?;
        let bh = b.heat_semigroup(dt / 2.0, 0.0)?;
        let data1 = KOperatorData::new_light(ah.clone(), bh.clone(), frames.mubar.clone())?;
        let sol1 = solve_f_periodic(&data1)?;
        let (ra1, rb1) = reaction(&ah, &bh, &sol1);
        let am = ah.binary(&ra1, |x, r| x + dt / 2.0 * r);
        let bm = bh.binary(&rb1, |x, r| x + dt / 2.0 * r);
        let data2 = KOperatorData::new_light(am.clone(), bm.clone(), frames.mubar.clone())?;
        let sol2 = solve_f_periodic(&data2)?;
        let (ra2, rb2) = reaction(&am, &bm, &sol2);
        let a2 = ah.binary(&ra2, |x, r| x + dt * r);
        let b2 = bh.binary(&rb2, |x, r| x + dt * r);
        a = a2.heat_semigroup(dt / 2.0, 0.0)?;
        b = b2.heat_semigroup(dt / 2.0, 0.0)?;
        s += dt;
        history.push(PushDiagRow {
            s,
            min_a: a.min_value(),
            zero_count: zero_count(&a, tol_count),
            c_value: sol2.c,
            closure_defect: f64::NAN,
        });
    }

    let (pts, defect) = integrate_ab(
        &lp.model,
        &|t: f64| a.eval(t),
        &|t: f64| b.eval(t),
        lp.point(0),
        lp.len(),
        8,
    )?;
    let closure = closure_defect_norm(lp, &defect);
    if history.is_empty() {
        history.push(PushDiagRow {
            s: 0.0,
            min_a: a.min_value(),
            zero_count: zero_count(&a, tol_count),
            c_value: 0.0,
            closure_defect: closure,
        });
    } else if let Some(last) = history.last_mut() {
        last.closure_defect = closure;
    }
    let rebuilt = lp.with_points(pts)?;
    let flat = alpha_reparametrize(&rebuilt)?;
    let membership = classify(&flat, tol.max(1e-6))?;
    Ok(PushResult { lp: flat, membership, history })
}

fn closure_defect_norm(lp: &DiscreteLoop, defect: &[f64]) -> f64 {
    defect
        .iter()
        .zip(lp.winding())
        .map(|(d, w)| (d - w).abs())
        .fold(0.0f64, f64::max)
}

/// 2x2 resolvent of the orbit-perturbation transport
/// (`lambda' = b eta`, `eta' = mubar b eta - b lambda`), integrated by RK4.
pub fn orbit_monodromy(
    b: &PeriodicField,
    mubar: &PeriodicField,
    t: f64,
    steps: usize,
) -> [[f64; 2]; 2] {
    let mut r = [[1.0, 0.0], [0.0, 1.0]];
    let h = t / steps as f64;
    let rhs = |tt: f64, m: &[[f64; 2]; 2]| -> [[f64; 2]; 2] {
        let bv = b.eval(tt);
        let mv = mubar.eval(tt);
        let a = [[0.0, bv], [-bv, mv * bv]];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * m[0][j] + a[i][1] * m[1][j];
            }
        }
        out
    };
    let add = |m: &[[f64; 2]; 2], k: &[[f64; 2]; 2], s: f64| -> [[f64; 2]; 2] {
        let mut out = *m;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += s * k[i][j];
            }
        }
        out
    };
    let mut tt = 0.0;
    for _ in 0..steps {
        let k1 = rhs(tt, &r);
        let k2 = rhs(tt + h / 2.0, &add(&r, &k1, h / 2.0));
        let k3 = rhs(tt + h / 2.0, &add(&r, &k2, h / 2.0));
        let k4 = rhs(tt + h, &add(&r, &k3, h));
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
        tt += h;
    }
    r
}

/// Perturb a periodic `v`-orbit so `a` picks up a nonnegative bump: solve
/// the 2x2 system with plateau forcing `h >= 0` supported in
/// `[0, t0_window]`, choosing the initial condition so `(lambda, eta)` are
/// 1-periodic. Returns the deformation (with `mu = 0`) in the
/// `(xi, v, [xi,v])` frame.
pub fn perturb_periodic_orbit(lp: &DiscreteLoop, t0_window: f64) -> Result<DeformVector> {
    let td = decompose_tangent(lp)?;
    if td.a.sup_norm() > 1e-6 {
        return Err(CoreError::SignCondition(
            "perturb_periodic_orbit expects a v-orbit (a ~ 0)".into(),
        ));
    }
    if td.b.values()[0].abs() < 1e-9 {
        return Err(CoreError::SignCondition("b vanishes at the anchor".into()));
    }
    let frames = FrameSeries::along(lp)?;
    perturb_orbit_profiles(&td.b, &frames.mubar, t0_window)
}

/// Same construction on raw profiles (exercised on synthetic data too).
pub fn perturb_orbit_profiles(
    b: &PeriodicField,
    mubar: &PeriodicField,
    t0_window: f64,
) -> Result<DeformVector> {
    let n = b.len();
    if !(t0_window > 0.0 && t0_window <= 1.0) {
        return Err(CoreError::InvalidArgument("t0_window must lie in (0, 1]".into()));
    }
    let h_of = |t: f64| crate::lifting::plateau_bump(t, t0_window);

    // forced path from zero initial data
    let steps_per = 8;
    let hstep = 1.0 / (n * steps_per) as f64;
    let rhs = |t: f64, x: &[f64; 2]| -> [f64; 2] {
        let bv = b.eval(t);
        let mv = mubar.eval(t);
        [bv * x[1] + h_of(t), mv * bv * x[1] - bv * x[0]]
    };
    let mut x = [0.0f64; 2];
    let mut t = 0.0;
    let mut forced = Vec::with_capacity(n + 1);
    for _ in 0..n {
        forced.push(x);
        for _ in 0..steps_per {
            let k1 = rhs(t, &x);
            let k2 = rhs(t + hstep / 2.0, &[
                x[0] + hstep / 2.0 * k1[0],
                x[1] + hstep / 2.0 * k1[1],
            ]);
            let k3 = rhs(t + hstep / 2.0, &[
                x[0] + hstep / 2.0 * k2[0],
                x[1] + hstep / 2.0 * k2[1],
            ]);
            let k4 = rhs(t + hstep, &[x[0] + hstep * k3[0], x[1] + hstep * k3[1]]);
            x[0] += hstep / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            x[1] += hstep / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            t += hstep;
        }
    }
    let xp1 = x;
    if xp1[0].abs() + xp1[1].abs() < 1e-15 {
        return Ok(DeformVector {
            lambda: PeriodicField::zeros(n),
            mu: PeriodicField::zeros(n),
            eta: PeriodicField::zeros(n),
        });
    }
    let r1 = orbit_monodromy(b, mubar, 1.0, 8 * n);
    let m = [[r1[0][0] - 1.0, r1[0][1]], [r1[1][0], r1[1][1] - 1.0]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-10 {
        return Err(CoreError::SingularMonodromy);
    }
    let x0 = [
        (-xp1[0] * m[1][1] + xp1[1] * m[0][1]) / det,
        (-xp1[1] * m[0][0] + xp1[0] * m[1][0]) / det,
    ];
    // homogeneous part on the same RK4 ladder as the forced path
    let mut r = [[1.0f64, 0.0], [0.0, 1.0]];
    let rhs_m = |t: f64, m: &[[f64; 2]; 2]| -> [[f64; 2]; 2] {
        let bv = b.eval(t);
        let mv = mubar.eval(t);
        let a = [[0.0, bv], [-bv, mv * bv]];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * m[0][j] + a[i][1] * m[1][j];
            }
        }
        out
    };
    let addm = |m: &[[f64; 2]; 2], k: &[[f64; 2]; 2], s: f64| -> [[f64; 2]; 2] {
        let mut out = *m;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += s * k[i][j];
            }
        }
        out
    };
    let mut lam = alloc::vec![0.0; n];
    let mut eta_raw = alloc::vec![0.0; n];
    let mut tt = 0.0;
    for j in 0..n {
        lam[j] = r[0][0] * x0[0] + r[0][1] * x0[1] + forced[j][0];
        eta_raw[j] = r[1][0] * x0[0] + r[1][1] * x0[1] + forced[j][1];
        for _ in 0..steps_per {
            let k1 = rhs_m(tt, &r);
            let k2 = rhs_m(tt + hstep / 2.0, &addm(&r, &k1, hstep / 2.0));
            let k3 = rhs_m(tt + hstep / 2.0, &addm(&r, &k2, hstep / 2.0));
            let k4 = rhs_m(tt + hstep, &addm(&r, &k3, hstep));
            for i in 0..2 {
                for c in 0..2 {
                    r[i][c] +=
                        hstep / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
                }
            }
            tt += hstep;
        }
    }
    // the transport bookkeeping is in the (xi, v, w)-style components; the
    // [xi,v]-frame coefficient flips sign
    Ok(DeformVector {
        lambda: PeriodicField::from_values(lam),
        mu: PeriodicField::zeros(n),
        eta: PeriodicField::from_values(eta_raw.into_iter().map(|e| -e).collect()),
    })
}

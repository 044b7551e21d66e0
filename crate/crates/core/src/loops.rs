//! Discrete closed curves on a contact model and their tangent data.
//!
//! A loop stores `N` samples at the uniform parameters `t_j = j/N` with no
//! duplicated endpoint; index arithmetic is cyclic. Coordinates are kept
//! unwrapped so the sample sequence is smooth; on the torus chart the
//! integer winding per coordinate is carried alongside and the periodic
//! residual `x(t) - winding t` is what gets differentiated spectrally.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::manifold::{frame_at, Chart, ContactModel};
use crate::spectral::PeriodicField;

/// N uniform samples of a closed curve on a model.
#[derive(Clone)]
pub struct DiscreteLoop {
    pub model: ContactModel,
    points: Vec<Vec<f64>>,
    winding: Vec<f64>,
    n: usize,
}

/// Per-sample coefficients of `x' = a xi + b v + c [xi,v]`.
#[derive(Debug, Clone)]
pub struct TangentData {
    pub a: PeriodicField,
    pub b: PeriodicField,
    pub c: PeriodicField,
    /// Max relative residual of the frame reconstruction of `x'`.
    pub residual: f64,
}

/// Membership report for the Legendrian loop spaces.
#[derive(Debug, Clone, Copy)]
pub struct SpaceMembership {
    pub in_l_beta: bool,
    pub in_c_beta_plus: bool,
    pub in_c_beta: bool,
    pub tol: f64,
    pub a_mean: f64,
    /// L2 norm of the `[xi,v]` component.
    pub c_norm: f64,
    pub a_min: f64,
}

impl DiscreteLoop {
    /// Build from unwrapped samples and an explicit winding vector (integers
    /// on the cube chart, zero on the sphere).
    pub fn new(model: ContactModel, points: Vec<Vec<f64>>, winding: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if !n.is_power_of_two() || n < 8 {
            return Err(CoreError::InvalidArgument(
                "loop sample count must be a power of two (>= 8)".into(),
            ));
        }
        if winding.len() != model.ambient_dim {
            return Err(CoreError::LengthMismatch {
                expected: model.ambient_dim,
                got: winding.len(),
            });
        }
        let points = match model.chart {
            Chart::UnitSphere => {
                if winding.iter().any(|&w| w != 0.0) {
                    return Err(CoreError::InvalidArgument(
                        "sphere chart loops cannot wind".into(),
                    ));
                }
                let mut pts = Vec::with_capacity(n);
                for p in points {
                    if !model.on_chart(&p, 1e-10) {
                        return Err(CoreError::OutsideChart);
                    }
                    pts.push(model.project_point(&p));
                }
                pts
            }
            Chart::UnitCube => {
                if winding.iter().any(|&w| w.fract() != 0.0) {
                    return Err(CoreError::InvalidArgument(
                        "cube chart winding must be integral".into(),
                    ));
                }
                points
            }
        };
        Ok(DiscreteLoop { model, points, winding, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn winding(&self) -> &[f64] {
        &self.winding
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i % self.n]
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| j as f64 / self.n as f64)
    }

    /// Periodic part of coordinate `d` (`x_d(t) - winding_d t`) as a field.
    pub fn coordinate_field(&self, d: usize) -> PeriodicField {
        let w = self.winding[d];
        PeriodicField::from_values(
            (0..self.n)
                .map(|j| self.points[j][d] - w * j as f64 / self.n as f64)
                .collect(),
        )
    }

    /// Spectral tangent vectors at the samples.
    pub fn derivative_points(&self) -> Vec<Vec<f64>> {
        let dim = self.model.ambient_dim;
        let mut out = alloc::vec![alloc::vec![0.0; dim]; self.n];
        for d in 0..dim {
            let df = self.coordinate_field(d).derivative();
            for (j, row) in out.iter_mut().enumerate() {
                row[d] = df.values()[j] + self.winding[d];
            }
        }
        out
    }

    /// Trigonometric interpolation of the curve at parameter `t` (chart
    /// projected).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let dim = self.model.ambient_dim;
        let mut p = alloc::vec![0.0; dim];
        for (d, x) in p.iter_mut().enumerate() {
            *x = self.coordinate_field(d).eval(t) + self.winding[d] * t;
        }
        self.model.project_point(&p)
    }

    /// Largest spectral tail fraction over the coordinate fields.
    pub fn spectral_tail(&self) -> f64 {
        let cut = self.n / 3;
        (0..self.model.ambient_dim)
            .map(|d| self.coordinate_field(d).tail_energy_fraction(cut))
            .fold(0.0f64, f64::max)
    }

    /// Arc length of the sampled polygon (diagnostic).
    pub fn sampled_length(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n {
            let a = &self.points[j];
            let b = if j + 1 == self.n {
                linalg::add(&self.points[0], &self.winding)
            } else {
                self.points[j + 1].clone()
            };
            acc += linalg::norm(&linalg::sub(&b, a));
        }
        acc
    }

    /// Replace the points (same winding/model), projecting to the chart.
    pub fn with_points(&self, points: Vec<Vec<f64>>) -> Result<Self> {
        DiscreteLoop::new(self.model.clone(), points, self.winding.clone())
    }
}

/// Frame basis columns at a point, preferring closed forms.
pub fn frame_columns(model: &ContactModel, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if let Some(fast) = model.fast_frames() {
        let xi = (fast.xi)(p);
        let v = model.v_at(p)?;
        let xv = (fast.bracket_xiv)(p);
        Ok((xi, v, xv))
    } else {
        let f = frame_at(model, p)?;
        Ok((f.xi, f.v, f.xv))
    }
}

/// Solve `x' = a xi + b v + c [xi,v]` at every sample.
pub fn decompose_tangent(lp: &DiscreteLoop) -> Result<TangentData> {
    let tail = lp.spectral_tail();
    if tail > 0.2 {
        return Err(CoreError::SpectralTail { fraction: tail });
    }
    let ders = lp.derivative_points();
    let n = lp.len();
    let mut a = alloc::vec![0.0; n];
    let mut b = alloc::vec![0.0; n];
    let mut c = alloc::vec![0.0; n];
    let mut worst = 0.0f64;
    for j in 0..n {
        let p = lp.point(j);
        let (xi, v, xv) = frame_columns(&lp.model, p)?;
        let dim = lp.model.ambient_dim;
        let dx = lp.model.project_vector(p, &ders[j]);
        let rows: Vec<Vec<f64>> = (0..dim).map(|i| alloc::vec![xi[i], v[i], xv[i]]).collect();
        let sol = linalg::lstsq(&rows, &dx)?;
        a[j] = sol[0];
        b[j] = sol[1];
        c[j] = sol[2];
        // reconstruction residual, relative to the tangent scale
        let mut rec = alloc::vec![0.0; dim];
        linalg::axpy(&mut rec, sol[0], &xi);
        linalg::axpy(&mut rec, sol[1], &v);
        linalg::axpy(&mut rec, sol[2], &xv);
        let scale = linalg::norm(&dx).max(1e-12);
        worst = worst.max(linalg::norm(&linalg::sub(&rec, &dx)) / scale);
    }
    Ok(TangentData {
        a: PeriodicField::from_values(a),
        b: PeriodicField::from_values(b),
        c: PeriodicField::from_values(c),
        residual: worst,
    })
}

/// Membership of the loop in `L_beta`, `C_beta^+`, `C_beta` at tolerance
/// `tol`.
pub fn classify(lp: &DiscreteLoop, tol: f64) -> Result<SpaceMembership> {
    let td = decompose_tangent(lp)?;
    Ok(classify_tangent_data(&td, tol))
}

/// Classification from precomputed tangent data (used for assembled curves
/// whose tangents are known piecewise).
pub fn classify_tangent_data(td: &TangentData, tol: f64) -> SpaceMembership {
    let c_sup = td.c.sup_norm();
    let a_min = td.a.min_value();
    let a_mean = td.a.mean();
    let a_dev = td
        .a
        .values()
        .iter()
        .fold(0.0f64, |m, &x| m.max((x - a_mean).abs()));
    let in_l_beta = c_sup <= tol;
    let in_c_beta_plus = in_l_beta && a_min >= -tol;
    let in_c_beta = in_c_beta_plus && a_dev <= tol && a_mean > tol;
    SpaceMembership {
        in_l_beta,
        in_c_beta_plus,
        in_c_beta,
        tol,
        a_mean,
        c_norm: td.c.l2_norm(),
        a_min,
    }
}

/// Reparametrize so the `xi`-component is constant: `dt'/dt = a / mean(a)`.
pub fn alpha_reparametrize(lp: &DiscreteLoop) -> Result<DiscreteLoop> {
    let td = decompose_tangent(lp)?;
    let a_min = td.a.min_value();
    if a_min <= 0.0 {
        return Err(CoreError::SignCondition(alloc::format!(
            "alpha_reparametrize needs a > 0 everywhere (min a = {a_min:.3e})"
        )));
    }
    let mean = td.a.mean();
    // t'(t) = cum(t)/mean is strictly increasing with t'(1) = 1; invert by
    // bisection + Newton on the trigonometric interpolant.
    let n = lp.len();
    let tprime = |t: f64| -> f64 {
        let ramp = mean * t;
        let periodic = cum_field_eval(&td.a, t);
        (ramp + periodic) / mean
    };
    let mut pts = Vec::with_capacity(n);
    for j in 0..n {
        let target = j as f64 / n as f64;
        let mut lo = target - 0.5;
        let mut hi = target + 0.5;
        while tprime(lo) > target {
            lo -= 0.1;
        }
        while tprime(hi) < target {
            hi += 0.1;
        }
        // bisection on the monotone map; Newton is not safe here because the
        // slope a/mean can vary by orders of magnitude along the loop
        for _ in 0..70 {
            let mid = 0.5 * (lo + hi);
            if tprime(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        pts.push(lp.eval(t));
    }
    lp.with_points(pts)
}

/// `int_0^t (f - mean f)` evaluated off the grid.
fn cum_field_eval(f: &PeriodicField, t: f64) -> f64 {
    let n = f.len();
    let mut acc = 0.0;
    for k in 1..n {
        let w = f.omega(k);
        if w == 0.0 {
            continue;
        }
        let c = f.coeffs()[k];
        // integral of c e^{iwt} over [0, t] is c (e^{iwt} - 1)/(iw)
        let (s, cc) = ((w * t).sin(), (w * t).cos());
        acc += (c.re * s + c.im * (cc - 1.0)) / w;
    }
    acc
}

/// Integrate `x' = a(t) xi(x) + b(t) v(x)` from `x0` over `[0, 1]` with RK4
/// substeps, returning the samples and the closure defect.
pub fn integrate_ab(
    model: &ContactModel,
    a: &dyn Fn(f64) -> f64,
    b: &dyn Fn(f64) -> f64,
    x0: &[f64],
    n: usize,
    substeps: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let v_f = model.v_field()?;
    let xi_f = model.xi_field();
    let vel = |t: f64, x: &[f64]| -> Vec<f64> {
        let xi = xi_f(x);
        let v = v_f(x);
        let mut out = linalg::scaled(&xi, a(t));
        linalg::axpy(&mut out, b(t), &v);
        out
    };
    let h = 1.0 / (n * substeps) as f64;
    let mut x = x0.to_vec();
    let mut pts = Vec::with_capacity(n);
    for j in 0..n {
        pts.push(x.clone());
        for s in 0..substeps {
            let t = (j * substeps + s) as f64 * h;
            let k1 = vel(t, &x);
            let x2 = step_proj(model, &x, &k1, h / 2.0);
            let k2 = vel(t + h / 2.0, &x2);
            let x3 = step_proj(model, &x, &k2, h / 2.0);
            let k3 = vel(t + h / 2.0, &x3);
            let x4 = step_proj(model, &x, &k3, h);
            let k4 = vel(t + h, &x4);
            let mut dx = k1;
            linalg::axpy(&mut dx, 2.0, &k2);
            linalg::axpy(&mut dx, 2.0, &k3);
            linalg::axpy(&mut dx, 1.0, &k4);
            x = step_proj(model, &x, &dx, h / 6.0);
        }
    }
    let defect = linalg::sub(&x, x0);
    Ok((pts, defect))
}

fn step_proj(model: &ContactModel, x: &[f64], d: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    linalg::axpy(&mut y, h, d);
    match model.chart {
        Chart::UnitSphere => model.project_point(&y),
        Chart::UnitCube => y,
    }
}

/// Exactly-closed Legendrian seed on the torus chart: given base profiles
/// `(a0, b0)`, shift `b` by a constant onto the nearest full `z`-winding and
/// adjust `a` by a minimum-norm element of `span{1, cos 2 pi t, sin 2 pi t}`
/// so the `x` and `y` displacements land on integers. Returns the loop and
/// the adjusted profiles.
pub fn t3_closed_seed(
    model: &ContactModel,
    a0: &PeriodicField,
    b0: &PeriodicField,
    x0: &[f64; 3],
    two_n_pi: f64,
) -> Result<(DiscreteLoop, PeriodicField, PeriodicField)> {
    let n = a0.len();
    let tau = core::f64::consts::TAU;
    let basis = alloc::vec![
        PeriodicField::constant(n, 1.0),
        PeriodicField::sample(n, |t| (tau * t).cos()),
        PeriodicField::sample(n, |t| (tau * t).sin()),
    ];
    t3_closed_seed_with_basis(model, a0, b0, x0, two_n_pi, &basis)
}

/// Like [`t3_closed_seed`] but with a caller-supplied span of adjustment
/// fields for the closure correction of `a` (so the correction can be kept
/// away from delicate profile regions).
pub fn t3_closed_seed_with_basis(
    model: &ContactModel,
    a0: &PeriodicField,
    b0: &PeriodicField,
    x0: &[f64; 3],
    two_n_pi: f64,
    basis: &[PeriodicField],
) -> Result<(DiscreteLoop, PeriodicField, PeriodicField)> {
    if model.chart != Chart::UnitCube {
        return Err(CoreError::InvalidArgument("t3 seed needs the cube chart".into()));
    }
    let n = a0.len();
    let nb = basis.len();
    // b shifted so int b = 2 pi k (integral z-winding)
    let k_star = (b0.mean() / two_n_pi).round();
    let shift = k_star * two_n_pi - b0.mean();
    let b = b0.map_values(|v| v + shift);
    let wz = k_star;

    // z(t) and theta(t) are fixed by b
    let (zcum, _) = b.cumint();
    let theta: Vec<f64> = (0..n)
        .map(|j| two_n_pi * x0[2] + zcum[j])
        .collect();
    let cos_t = PeriodicField::from_values(theta.iter().map(|&t| t.cos()).collect());
    let sin_t = PeriodicField::from_values(theta.iter().map(|&t| t.sin()).collect());

    let ix0 = a0.binary(&cos_t, |x, y| x * y).mean();
    let iy0 = a0.binary(&sin_t, |x, y| x * y).mean();
    let wx = ix0.round();
    let wy = iy0.round();

    // minimum-norm correction d in span(basis) with
    // int d cos theta = wx - ix0, int d sin theta = wy - iy0
    let mut m = alloc::vec![alloc::vec![0.0f64; nb]; 2];
    for (i, e) in basis.iter().enumerate() {
        m[0][i] = e.binary(&cos_t, |x, y| x * y).mean();
        m[1][i] = e.binary(&sin_t, |x, y| x * y).mean();
    }
    let r = [wx - ix0, wy - iy0];
    // minimum-norm solve of M u = r; rows of M can vanish identically (a
    // constant-z seed kills the sin-theta row), which is fine as long as the
    // matching target is already met.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for i in 0..2 {
        let rn = m[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        if rn > 1e-9 {
            rows.push(m[i].clone());
            rhs.push(r[i]);
        } else if r[i].abs() > 1e-9 {
            return Err(CoreError::InvalidArgument(
                "seed closure is infeasible within the adjustment span".into(),
            ));
        }
    }
    let mut u = alloc::vec![0.0f64; nb];
    if !rows.is_empty() {
        let nr = rows.len();
        let mut mmt = alloc::vec![alloc::vec![0.0f64; nr]; nr];
        for i in 0..nr {
            for j in 0..nr {
                mmt[i][j] = (0..nb).map(|k| rows[i][k] * rows[j][k]).sum();
            }
        }
        let sol = linalg::solve_dense(mmt, rhs)?;
        for (row, s) in rows.iter().zip(&sol) {
            for k in 0..nb {
                u[k] += row[k] * s;
            }
        }
    }
    let mut a_vals = a0.values().to_vec();
    for (j, av) in a_vals.iter_mut().enumerate() {
        for (k, e) in basis.iter().enumerate() {
            *av += u[k] * e.values()[j];
        }
    }
    let a = PeriodicField::from_values(a_vals);

    // exact sample construction by spectral antiderivatives
    let (xcum, _) = a.binary(&cos_t, |x, y| x * y).cumint();
    let (ycum, _) = a.binary(&sin_t, |x, y| x * y).cumint();
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            alloc::vec![
                x0[0] + xcum[j],
                x0[1] + ycum[j],
                x0[2] + zcum[j] / two_n_pi,
            ]
        })
        .collect();
    let lp = DiscreteLoop::new(model.clone(), pts, alloc::vec![wx, wy, wz])?;
    Ok((lp, a, b))
}

/// Loop snapshot header metadata (written/read by the IO layer).
#[derive(Debug, Clone, PartialEq)]
pub struct LoopMeta {
    pub model_name: String,
    pub n: usize,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::synth::SmallRng;
    use alloc::vec;

    const TAU: f64 = core::f64::consts::TAU;

    pub(crate) fn t3_model() -> ContactModel {
        crate::manifold::normalized_builtin("t3_family", Some(1)).unwrap()
    }

    fn straight_reeb_loop(model: &ContactModel, n: usize) -> DiscreteLoop {
        // x(t) = (t, 0, 0): tangent = xi at z = 0
        let pts: Vec<Vec<f64>> = (0..n).map(|j| vec![j as f64 / n as f64, 0.0, 0.0]).collect();
        DiscreteLoop::new(model.clone(), pts, vec![1.0, 0.0, 0.0]).unwrap()
    }

    fn v_orbit_loop(model: &ContactModel, n: usize) -> DiscreteLoop {
        // vertical loop: winds once in z; tangent parallel to v
        let pts: Vec<Vec<f64>> = (0..n).map(|j| vec![0.3, 0.4, j as f64 / n as f64]).collect();
        DiscreteLoop::new(model.clone(), pts, vec![0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn reeb_orbit_decomposes_to_constant_a() {
        let m = t3_model();
        let lp = straight_reeb_loop(&m, 64);
        let td = decompose_tangent(&lp).unwrap();
        for j in 0..lp.len() {
            assert!((td.a.values()[j] - 1.0).abs() < 1e-10);
            assert!(td.b.values()[j].abs() < 1e-10);
            assert!(td.c.values()[j].abs() < 1e-10);
        }
        let mem = classify(&lp, 1e-6).unwrap();
        assert!(mem.in_c_beta && mem.in_c_beta_plus && mem.in_l_beta);
    }

    #[test]
    fn v_orbit_decomposes_to_pure_b() {
        let m = t3_model();
        let lp = v_orbit_loop(&m, 64);
        let td = decompose_tangent(&lp).unwrap();
        // normalized v = dz / 2 pi, so dz/dt = 1 means b = 2 pi
        for j in 0..lp.len() {
            assert!(td.a.values()[j].abs() < 1e-10);
            assert!((td.b.values()[j] - TAU).abs() < 1e-9);
            assert!(td.c.values()[j].abs() < 1e-10);
        }
        let mem = classify(&lp, 1e-6).unwrap();
        assert!(mem.in_l_beta && mem.in_c_beta_plus && !mem.in_c_beta);
    }

    #[test]
    fn seed_loops_close_and_stay_legendrian() {
        let m = t3_model();
        let n = 256;
        let a0 = PeriodicField::sample(n, |t| 1.0 + 0.4 * (TAU * t).cos());
        let b0 = PeriodicField::sample(n, |t| 0.5 * (TAU * t).sin());
        let (lp, a, _b) = t3_closed_seed(&m, &a0, &b0, &[0.1, 0.2, 0.0], TAU).unwrap();
        let td = decompose_tangent(&lp).unwrap();
        assert!(td.residual < 1e-8, "residual {}", td.residual);
        assert!(td.c.sup_norm() < 1e-8);
        let da = linalg::sub(td.a.values(), a.values());
        assert!(linalg::norm(&da) / td.a.l2_norm() < 1e-8);
    }

    #[test]
    fn seed_with_negative_arc_classifies_as_l_beta_only() {
        let m = t3_model();
        let n = 256;
        let a0 = PeriodicField::sample(n, |t| 1.0 + 1.5 * (TAU * t).cos());
        let b0 = PeriodicField::zeros(n);
        let (lp, a, _) = t3_closed_seed(&m, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
        assert!(a.min_value() < -0.2);
        let mem = classify(&lp, 1e-6).unwrap();
        assert!(mem.in_l_beta && !mem.in_c_beta_plus && !mem.in_c_beta);
    }

    #[test]
    fn classify_is_monotone_in_tolerance() {
        let m = t3_model();
        let n = 128;
        let a0 = PeriodicField::sample(n, |t| 1.0 + 0.3 * (TAU * t).sin());
        let b0 = PeriodicField::sample(n, |t| 0.2 * (TAU * t).cos());
        let (lp, _, _) = t3_closed_seed(&m, &a0, &b0, &[0.0, 0.0, 0.25], TAU).unwrap();
        let tols = [1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0];
        let mut prev = classify(&lp, tols[0]).unwrap();
        for &tol in &tols[1..] {
            let cur = classify(&lp, tol).unwrap();
            assert!(!prev.in_l_beta || cur.in_l_beta);
            assert!(!prev.in_c_beta_plus || cur.in_c_beta_plus);
            assert!(!prev.in_c_beta || cur.in_c_beta);
            prev = cur;
        }
    }

    #[test]
    fn reparametrize_fixes_already_constant_a() {
        let m = t3_model();
        let lp = straight_reeb_loop(&m, 64);
        let out = alpha_reparametrize(&lp).unwrap();
        for (p, q) in lp.points().iter().zip(out.points()) {
            assert!(linalg::norm(&linalg::sub(p, q)) < 1e-8);
        }
    }

    #[test]
    fn reparametrize_flattens_a_and_keeps_the_image() {
        let m = t3_model();
        let n = 256;
        let a0 = PeriodicField::sample(n, |t| 1.0 + 0.5 * (TAU * t).sin());
        let b0 = PeriodicField::zeros(n);
        let (lp, _, _) = t3_closed_seed(&m, &a0, &b0, &[0.0, 0.0, 0.0], TAU).unwrap();
        let out = alpha_reparametrize(&lp).unwrap();
        let td = decompose_tangent(&out).unwrap();
        let mean = td.a.mean();
        let dev = td
            .a
            .values()
            .iter()
            .fold(0.0f64, |mx, &x| mx.max((x - mean).abs()));
        assert!(dev < 1e-4, "a deviation {dev}");
        // image preserved: every new sample lies near the original curve
        for p in out.points().iter().step_by(8) {
            let dist = |t: f64| linalg::norm(&linalg::sub(p, &lp.eval(t)));
            let coarse = (0..(4 * n))
                .map(|jf| jf as f64 / (4 * n) as f64)
                .min_by(|&s, &t| dist(s).total_cmp(&dist(t)))
                .unwrap();
            let (mut lo, mut hi) = (coarse - 2.0 / n as f64, coarse + 2.0 / n as f64);
            for _ in 0..60 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if dist(m1) < dist(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let best = dist(0.5 * (lo + hi));
            assert!(best < 1e-6, "sample strayed {best}");
        }
    }

    #[test]
    fn decompose_then_reconstruct_is_spectrally_exact() {
        let m = t3_model();
        let n = 128;
        let mut rng = SmallRng::new(15);
        let a0 = crate::synth::trig_poly(&mut rng, n, n / 8, 0.3).map_values(|v| v + 1.2);
        let b0 = crate::synth::trig_poly(&mut rng, n, n / 8, 0.4);
        let (lp, _, _) = t3_closed_seed(&m, &a0, &b0, &[0.0, 0.0, 0.1], TAU).unwrap();
        let td = decompose_tangent(&lp).unwrap();
        assert!(td.residual < 1e-6, "residual {}", td.residual);
    }

    #[test]
    fn rejects_bad_sample_counts_and_off_chart_points() {
        let m = t3_model();
        let pts: Vec<Vec<f64>> = (0..100).map(|j| vec![j as f64 / 100.0, 0.0, 0.0]).collect();
        assert!(DiscreteLoop::new(m.clone(), pts, vec![1.0, 0.0, 0.0]).is_err());

        let s3 = crate::manifold::normalized_builtin("s3_standard", None).unwrap();
        let bad: Vec<Vec<f64>> = (0..16).map(|_| vec![1.1, 0.0, 0.0, 0.0]).collect();
        assert!(DiscreteLoop::new(s3, bad, vec![0.0; 4]).is_err());
    }

    #[test]
    fn s3_reeb_orbit_loop_is_in_c_beta() {
        let m = crate::manifold::normalized_builtin("s3_standard", None).unwrap();
        let n = 128;
        // xi-orbit through (1,0,0,0): rotation in the (x1,x2) and (x3,x4) planes
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let t = TAU * j as f64 / n as f64;
                vec![t.cos(), -t.sin(), 0.0, 0.0]
            })
            .collect();
        let lp = DiscreteLoop::new(m, pts, vec![0.0; 4]).unwrap();
        let td = decompose_tangent(&lp).unwrap();
        assert!(td.residual < 1e-9);
        let mem = classify(&lp, 1e-6).unwrap();
        assert!(mem.in_c_beta, "a_mean {} c {}", mem.a_mean, mem.c_norm);
        assert!((mem.a_mean - TAU).abs() < 1e-8);
    }
}


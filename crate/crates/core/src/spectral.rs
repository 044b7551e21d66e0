//! Fourier-multiplier operators on the unit-period circle.
//!
//! Frequency convention: a field sampled at `t_j = j/N` has modes
//! `omega_k = 2 pi k`, so every `k^2` written against `e^{ikt}` elsewhere
//! becomes `omega_k^2` here. The mollifier divides mode `k` by
//! `1 + eps omega_k^2` and the regularised heat semigroup multiplies by
//! `exp(-s omega_k^2 / (eps omega_k^2 + 1))`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::fft::{forward_real, inverse_real, signed_mode, C64};

const TWO_PI: f64 = core::f64::consts::TAU;

/// Real field on the uniform grid `t_j = j/N` with its cached spectrum.
#[derive(Debug, Clone)]
pub struct PeriodicField {
    values: Vec<f64>,
    coeffs: Vec<C64>,
}

impl PeriodicField {
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(
            values.len().is_power_of_two(),
            "grid length must be a power of two"
        );
        let coeffs = forward_real(&values);
        PeriodicField { values, coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<C64>) -> Self {
        assert!(coeffs.len().is_power_of_two());
        let values = inverse_real(&coeffs);
        PeriodicField { values, coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_values(alloc::vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_values(alloc::vec![c; n])
    }

    /// Sample a closure on the uniform grid.
    pub fn sample<F: Fn(f64) -> f64>(n: usize, f: F) -> Self {
        Self::from_values((0..n).map(|j| f(j as f64 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Signed frequency of bin `k`.
    pub fn omega(&self, k: usize) -> f64 {
        TWO_PI * signed_mode(k, self.len()) as f64
    }

    /// Mean value (zero mode), equal to the full-period integral.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self::from_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn binary<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        assert_eq!(self.len(), other.len());
        Self::from_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    fn multiplier<F: Fn(f64) -> f64>(&self, m: F) -> Self {
        let n = self.len();
        let coeffs = (0..n)
            .map(|k| self.coeffs[k].scale(m(TWO_PI * signed_mode(k, n) as f64)))
            .collect();
        Self::from_coeffs(coeffs)
    }

    /// Spectral derivative. The Nyquist mode is zeroed, as usual for real
    /// signals.
    pub fn derivative(&self) -> Self {
        let n = self.len();
        let coeffs = (0..n)
            .map(|k| {
                if k == n / 2 {
                    C64::ZERO
                } else {
                    let w = TWO_PI * signed_mode(k, n) as f64;
                    C64::new(0.0, w) * self.coeffs[k]
                }
            })
            .collect();
        Self::from_coeffs(coeffs)
    }

    /// Evaluate the trigonometric interpolant at an arbitrary parameter.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for k in 0..n {
            let w = TWO_PI * signed_mode(k, n) as f64 * t;
            let c = self.coeffs[k];
            acc += c.re * w.cos() - c.im * w.sin();
        }
        acc
    }

    /// `(sum (1 + omega^2)^l |f_k|^2)^{1/2}`; `l = 0` is the `L^2` norm.
    pub fn sobolev_norm(&self, l: u32) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for k in 0..n {
            let w = TWO_PI * signed_mode(k, n) as f64;
            acc += (1.0 + w * w).powi(l as i32) * self.coeffs[k].norm_sqr();
        }
        acc.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0)
    }

    /// Sup norm over the grid values.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Fraction of non-mean spectral energy carried by modes `|k| >= cut`.
    pub fn tail_energy_fraction(&self, cut: usize) -> f64 {
        let n = self.len();
        let mut tail = 0.0;
        let mut total = 0.0;
        for k in 1..n {
            let m = signed_mode(k, n).unsigned_abs() as usize;
            let e = self.coeffs[k].norm_sqr();
            total += e;
            if m >= cut {
                tail += e;
            }
        }
        // a vanishing oscillatory part is pure rounding noise, not a tail
        if total < 1e-24 {
            0.0
        } else {
            tail / total
        }
    }

    /// Mollifier: divide mode `k` by `1 + eps omega_k^2`; solves
    /// `-eps u'' + u = f`.
    pub fn mollify(&self, eps: f64) -> Result<Self> {
        if eps < 0.0 {
            return Err(CoreError::InvalidArgument(alloc::format!(
                "mollify: eps must be nonnegative, got {eps}"
            )));
        }
        if eps == 0.0 {
            return Ok(self.clone());
        }
        Ok(self.multiplier(|w| 1.0 / (1.0 + eps * w * w)))
    }

    /// Regularised heat semigroup: multiply mode `k` by
    /// `exp(-s omega_k^2 / (eps omega_k^2 + 1))`. `eps = 0` is the exact
    /// heat semigroup, `s = 0` the identity.
    pub fn heat_semigroup(&self, s: f64, eps: f64) -> Result<Self> {
        if s < 0.0 {
            return Err(CoreError::InvalidArgument(alloc::format!(
                "heat_semigroup: s must be nonnegative, got {s}"
            )));
        }
        if eps < 0.0 {
            return Err(CoreError::InvalidArgument(alloc::format!(
                "heat_semigroup: eps must be nonnegative, got {eps}"
            )));
        }
        if s == 0.0 {
            return Ok(self.clone());
        }
        Ok(self.multiplier(|w| (-s * w * w / (eps * w * w + 1.0)).exp()))
    }

    /// Grid values of the antiderivative `t -> int_0^t f`, together with the
    /// full-period integral. The non-periodic ramp `mean * t` is handled
    /// exactly.
    pub fn cumint(&self) -> (Vec<f64>, f64) {
        let (vals, total) = cumint_weighted(self, 0.0);
        (vals, total)
    }
}

/// `phi1(z) = (e^z - 1)/z` with a series fallback near zero.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `phi2(z) = (e^z - 1 - z)/z^2` with a series fallback near zero.
fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// Duhamel integrator for the regularised heat operator: given the source
/// sampled at `r = 0, dt, ..., M dt` with `M dt = s`, returns
/// `u(s)` with `u_k(s) = int_0^s exp(-lambda_k (s - r)) f_k(r) dr`,
/// `lambda_k = omega_k^2 / (1 + eps omega_k^2)`. Each mode is advanced by an
/// exact exponential integrator against the piecewise-linear-in-time source.
pub fn duhamel(source: &[PeriodicField], s: f64, eps: f64, dt: f64) -> Result<PeriodicField> {
    if s < 0.0 || dt <= 0.0 || eps < 0.0 {
        return Err(CoreError::InvalidArgument(alloc::format!(
            "duhamel: need s >= 0, dt > 0, eps >= 0 (got s={s}, dt={dt}, eps={eps})"
        )));
    }
    if source.is_empty() {
        return Err(CoreError::InvalidArgument("duhamel: empty source".into()));
    }
    let n = source[0].len();
    let steps_f = s / dt;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(CoreError::InvalidArgument(
            "duhamel: s must be an integer multiple of dt".into(),
        ));
    }
    if source.len() < steps + 1 {
        return Err(CoreError::InvalidArgument(alloc::format!(
            "duhamel: need {} source samples covering [0, s], got {}",
            steps + 1,
            source.len()
        )));
    }

    let mut u = alloc::vec![C64::ZERO; n];
    for m in 0..steps {
        let f0 = source[m].coeffs();
        let f1 = source[m + 1].coeffs();
        for k in 0..n {
            let w = TWO_PI * signed_mode(k, n) as f64;
            let lam = w * w / (1.0 + eps * w * w);
            let z = -lam * dt;
            let df = f1[k] - f0[k];
            u[k] = u[k].scale(z.exp()) + f0[k].scale(dt * phi1(z)) + df.scale(dt * phi2(z));
        }
    }
    Ok(PeriodicField::from_coeffs(u))
}

/// Grid values of `t -> int_0^t e^{-m r} g(r) dr` for a periodic integrand
/// `g`, evaluated spectrally (exact for trigonometric polynomials), plus the
/// value at `t = 1`.
pub fn cumint_weighted(g: &PeriodicField, m: f64) -> (Vec<f64>, f64) {
    let n = g.len();
    let coeffs = g.coeffs();
    // Mode k integrates to g_k (e^{(i w_k - m) t} - 1) / (i w_k - m), except
    // the resonant case i w_k - m = 0 (only k = 0, m = 0) which gives g_0 t.
    let mut per = alloc::vec![C64::ZERO; n]; // coefficients of the periodic part
    let mut const_term = C64::ZERO;
    let mut ramp = 0.0; // coefficient of t (resonant mode)
    for k in 0..n {
        let w = TWO_PI * signed_mode(k, n) as f64;
        let denom = C64::new(-m, w);
        if denom.abs() < 1e-14 {
            ramp += coeffs[k].re;
            continue;
        }
        let gk = coeffs[k] / denom;
        per[k] = gk;
        const_term += gk;
    }
    let periodic_vals = inverse_real(&per);
    let exp_m: Vec<f64> = (0..n).map(|j| (-m * j as f64 / n as f64).exp()).collect();
    let vals: Vec<f64> = (0..n)
        .map(|j| {
            let t = j as f64 / n as f64;
            exp_m[j] * periodic_vals[j] - const_term.re + ramp * t
        })
        .collect();
    let at_one = (-m).exp() * periodic_vals_at_zero(&per) - const_term.re + ramp;
    (vals, at_one)
}

fn periodic_vals_at_zero(coeffs: &[C64]) -> f64 {
    coeffs.iter().map(|c| c.re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::C64;
    use alloc::vec::Vec;

    const N: usize = 128;

    fn cos_field(n: usize) -> PeriodicField {
        PeriodicField::sample(n, |t| (TWO_PI * t).cos())
    }

    #[test]
    fn mollify_keeps_constants() {
        let f = PeriodicField::constant(N, 3.25);
        let g = f.mollify(0.37).unwrap();
        for v in g.values() {
            assert!((v - 3.25).abs() < 1e-13);
        }
    }

    #[test]
    fn mollify_single_mode_matches_ode_solution() {
        // Independent oracle: solve -eps u'' + u = cos(2 pi t) directly. The
        // ansatz u = A cos(2 pi t) gives A (1 + 4 pi^2 eps) = 1.
        let eps = 2.3e-3;
        let f = cos_field(N);
        let g = f.mollify(eps).unwrap();
        let a = 1.0 / (1.0 + 4.0 * core::f64::consts::PI * core::f64::consts::PI * eps);
        for (j, v) in g.values().iter().enumerate() {
            let t = j as f64 / N as f64;
            assert!((v - a * (TWO_PI * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn mollify_rejects_negative_eps() {
        let f = cos_field(N);
        assert!(f.mollify(-1e-9).is_err());
    }

    #[test]
    fn mollifier_l2_distance_bound() {
        // || phi_eps f - f ||_L2^2 <= 2 eps || f' ||_L2^2, checked on
        // deterministic pseudo-random trig polynomials.
        let mut rng = crate::synth::SmallRng::new(0x5eed);
        for _ in 0..50 {
            let f = crate::synth::trig_poly(&mut rng, N, 20, 1.0);
            let fd = f.derivative();
            for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
                let d = f.mollify(eps).unwrap().binary(&f, |a, b| a - b);
                let lhs = d.l2_norm().powi(2);
                let rhs = 2.0 * eps * fd.l2_norm().powi(2);
                assert!(lhs <= rhs + 1e-14, "lhs {lhs} rhs {rhs} eps {eps}");
            }
        }
    }

    #[test]
    fn mollifier_h1_contraction_and_derivative_bound() {
        let mut rng = crate::synth::SmallRng::new(0xabc1);
        for _ in 0..20 {
            let f = crate::synth::trig_poly(&mut rng, N, 30, 1.0);
            for eps in [1e-1, 1e-3, 1e-5] {
                let m = f.mollify(eps).unwrap();
                assert!(m.sobolev_norm(1) <= f.sobolev_norm(1) * (1.0 + 1e-13));
                // eps ||(phi_eps f)'||_H1^2 <= ||f||_H1^2 with constant one
                let md = m.derivative();
                assert!(eps * md.sobolev_norm(1).powi(2) <= f.sobolev_norm(1).powi(2) * (1.0 + 1e-13));
            }
        }
    }

    #[test]
    fn heat_is_identity_at_zero_time_and_fixes_constants() {
        let f = cos_field(N);
        let g = f.heat_semigroup(0.0, 0.1).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a, b);
        }
        let c = PeriodicField::constant(N, -1.7);
        let hc = c.heat_semigroup(5.0, 0.0).unwrap();
        for v in hc.values() {
            assert!((v + 1.7).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_semigroup_property() {
        let mut rng = crate::synth::SmallRng::new(77);
        let f = crate::synth::trig_poly(&mut rng, N, 16, 1.0);
        let one = f.heat_semigroup(0.013, 0.0).unwrap().heat_semigroup(0.021, 0.0).unwrap();
        let two = f.heat_semigroup(0.034, 0.0).unwrap();
        for (a, b) in one.values().iter().zip(two.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn multipliers_never_grow_tails() {
        let mut rng = crate::synth::SmallRng::new(901);
        let f = crate::synth::trig_poly(&mut rng, N, 40, 1.0);
        let cut = N / 3;
        let t0 = f.tail_energy_fraction(cut);
        assert!(f.mollify(1e-3).unwrap().tail_energy_fraction(cut) <= t0 + 1e-15);
        assert!(f.heat_semigroup(1e-3, 1e-2).unwrap().tail_energy_fraction(cut) <= t0 + 1e-15);
    }

    #[test]
    fn duhamel_zero_source_is_zero() {
        let src: Vec<PeriodicField> = (0..11).map(|_| PeriodicField::zeros(N)).collect();
        let u = duhamel(&src, 0.1, 1e-3, 0.01).unwrap();
        assert!(u.sup_norm() < 1e-15);
    }

    #[test]
    fn duhamel_single_mode_closed_form() {
        // constant-in-time source cos(2 pi t): u_k(s) = (1 - e^{-lam s})/lam.
        let eps = 1e-3;
        let s = 0.25;
        let dt = 0.01;
        let src: Vec<PeriodicField> = (0..26).map(|_| cos_field(N)).collect();
        let u = duhamel(&src, s, eps, dt).unwrap();
        let w = TWO_PI;
        let lam = w * w / (1.0 + eps * w * w);
        let amp = (1.0 - (-lam * s).exp()) / lam;
        for (j, v) in u.values().iter().enumerate() {
            let t = j as f64 / N as f64;
            assert!((v - amp * (TWO_PI * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn duhamel_energy_bound_has_modest_constant() {
        // || u ||_{H^l}^2 (s) <= C int_0^s (||f||_{H^{l-1}}^2 + eps ||f||_{H^l}^2)
        let mut rng = crate::synth::SmallRng::new(4242);
        let dt = 0.01;
        let steps = 40;
        let s = dt * steps as f64;
        for &eps in &[1e-2, 1e-4] {
            let src: Vec<PeriodicField> = (0..=steps)
                .map(|_| crate::synth::trig_poly(&mut rng, N, 20, 1.0))
                .collect();
            let u = duhamel(&src, s, eps, dt).unwrap();
            let lhs = u.sobolev_norm(1).powi(2);
            let mut rhs = 0.0;
            for f in &src[..steps] {
                rhs += dt * (f.sobolev_norm(0).powi(2) + eps * f.sobolev_norm(1).powi(2));
            }
            let c = lhs / rhs;
            assert!(c <= 2.0, "measured Duhamel constant {c}");
        }
    }

    #[test]
    fn sobolev_norms_have_parseval_values() {
        let c = PeriodicField::constant(N, -2.5);
        assert!((c.sobolev_norm(0) - 2.5).abs() < 1e-13);
        let s = PeriodicField::sample(N, |t| (TWO_PI * t).sin());
        assert!((s.l2_norm() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-13);
        let f = cos_field(N);
        let expect = ((1.0 + 4.0 * core::f64::consts::PI * core::f64::consts::PI) / 2.0).sqrt();
        assert!((f.sobolev_norm(1) - expect).abs() < 1e-12);
    }

    #[test]
    fn cumint_weighted_matches_closed_form() {
        // int_0^t e^{-m r} cos(2 pi r) dr against the analytic primitive.
        let m = 0.8;
        let g = cos_field(N);
        let (vals, at_one) = cumint_weighted(&g, m);
        let w = TWO_PI;
        let prim = |t: f64| {
            let e = (-m * t).exp();
            (e * (w * (w * t).sin() - m * (w * t).cos()) + m) / (m * m + w * w)
        };
        for (j, v) in vals.iter().enumerate() {
            let t = j as f64 / N as f64;
            assert!((v - prim(t)).abs() < 1e-12, "t={t}");
        }
        assert!((at_one - prim(1.0)).abs() < 1e-12);
    }

    #[test]
    fn spectra_of_real_fields_stay_hermitian() {
        let mut rng = crate::synth::SmallRng::new(37);
        let f = crate::synth::trig_poly(&mut rng, N, 12, 2.0);
        let g = f.mollify(1e-2).unwrap().heat_semigroup(0.01, 1e-3).unwrap();
        let c = g.coeffs();
        for k in 1..N {
            let d = c[k] - c[N - k].conj();
            assert!(d.abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_zeroes_nyquist() {
        let mut coeffs = alloc::vec![C64::ZERO; 16];
        coeffs[8] = C64::real(1.0);
        let f = PeriodicField::from_coeffs(coeffs);
        assert!(f.derivative().sup_norm() < 1e-15);
    }
}

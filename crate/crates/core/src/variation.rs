//! Evolution of the tangent coefficients `(a, b, c)` under a deformation
//! field `Z = lambda xi + mu v + eta [xi,v]`, and the structure identities
//! for the auxiliary 1-forms `beta = dalpha(v, .)` and
//! `gamma = -dalpha(., [xi,v])`.
//!
//! With the normalisation `dalpha(v, [xi,v]) = -1` the pairings are
//! `a = alpha(x')`, `b = gamma(x')`, `c = -beta(x')`, and differentiating
//! them along the flow of `Z` gives
//!
//! ```text
//! da/ds = lambda' + b eta - c mu
//! db/ds = mu'     + tau (c lambda - a eta) + mubar_xi (c mu - b eta)
//! dc/ds = eta'    + (a mu - b lambda)      + mubar    (c mu - b eta)
//! ```
//!
//! so a field keeps `c = 0` (stays Legendrian) exactly when
//! `eta' = mubar b eta + b lambda - a mu`. Note the sign of the
//! `(a mu - b lambda)` coupling relative to the first-order transport
//! systems the deformation constructions are written in: a solution
//! `(lambda, mu, eta)` of those systems is applied geometrically as
//! `lambda xi + mu v - eta [xi,v]`.
//!
//! Everything here is pure sequence algebra; frames enter as sampled data.
//! (In the `(xi, v, w)` frame the same equations hold with `eta` negated
//! and, for nonzero `mubar`, `lambda` shifted by `mubar eta`; that variant
//! is not used by the flows.)

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::loops::{DiscreteLoop, TangentData};
use crate::manifold::{frame_at, ContactModel};
use crate::spectral::PeriodicField;

/// Loop-indexed coefficients of a deformation field in the
/// `(xi, v, [xi,v])` frame.
#[derive(Debug, Clone)]
pub struct DeformVector {
    pub lambda: PeriodicField,
    pub mu: PeriodicField,
    pub eta: PeriodicField,
}

/// Structure scalars sampled along a loop.
#[derive(Debug, Clone)]
pub struct FrameSeries {
    pub tau: PeriodicField,
    pub mubar: PeriodicField,
    pub mubar_xi: PeriodicField,
}

impl FrameSeries {
    pub fn constant(n: usize, tau: f64, mubar: f64, mubar_xi: f64) -> Self {
        FrameSeries {
            tau: PeriodicField::constant(n, tau),
            mubar: PeriodicField::constant(n, mubar),
            mubar_xi: PeriodicField::constant(n, mubar_xi),
        }
    }

    /// Sample the model's structure scalars along the loop.
    pub fn along(lp: &DiscreteLoop) -> Result<Self> {
        let n = lp.len();
        let mut tau = Vec::with_capacity(n);
        let mut mubar = Vec::with_capacity(n);
        let mut mubar_xi = Vec::with_capacity(n);
        for j in 0..n {
            let (t, m, mx) = lp.model.frame_scalars(lp.point(j))?;
            tau.push(t);
            mubar.push(m);
            mubar_xi.push(mx);
        }
        Ok(FrameSeries {
            tau: PeriodicField::from_values(tau),
            mubar: PeriodicField::from_values(mubar),
            mubar_xi: PeriodicField::from_values(mubar_xi),
        })
    }
}

/// Time derivative of `(a, b, c)`.
#[derive(Debug, Clone)]
pub struct AbcRates {
    pub da: PeriodicField,
    pub db: PeriodicField,
    pub dc: PeriodicField,
}

fn check_len(n: usize, m: usize) -> Result<()> {
    if n != m {
        return Err(CoreError::LengthMismatch { expected: n, got: m });
    }
    Ok(())
}

/// Pointwise evolution of the tangent coefficients under `Z`.
pub fn evolve_abc(state: &TangentData, z: &DeformVector, frames: &FrameSeries) -> Result<AbcRates> {
    let n = state.a.len();
    for m in [
        state.b.len(),
        state.c.len(),
        z.lambda.len(),
        z.mu.len(),
        z.eta.len(),
        frames.tau.len(),
        frames.mubar.len(),
        frames.mubar_xi.len(),
    ] {
        check_len(n, m)?;
    }
    let dl = z.lambda.derivative();
    let dm = z.mu.derivative();
    let de = z.eta.derivative();
    let (a, b, c) = (state.a.values(), state.b.values(), state.c.values());
    let (lam, mu, eta) = (z.lambda.values(), z.mu.values(), z.eta.values());
    let (tau, mb, mbx) = (
        frames.tau.values(),
        frames.mubar.values(),
        frames.mubar_xi.values(),
    );

    let mut da = alloc::vec![0.0; n];
    let mut db = alloc::vec![0.0; n];
    let mut dc = alloc::vec![0.0; n];
    for j in 0..n {
        da[j] = dl.values()[j] + b[j] * eta[j] - c[j] * mu[j];
        db[j] = dm.values()[j]
            + tau[j] * (c[j] * lam[j] - a[j] * eta[j])
            + mbx[j] * (c[j] * mu[j] - b[j] * eta[j]);
        dc[j] = de.values()[j] + (a[j] * mu[j] - b[j] * lam[j])
            + mb[j] * (c[j] * mu[j] - b[j] * eta[j]);
    }
    Ok(AbcRates {
        da: PeriodicField::from_values(da),
        db: PeriodicField::from_values(db),
        dc: PeriodicField::from_values(dc),
    })
}

/// Sup norm of `eta' - (mubar b eta + b lambda - a mu)`; zero means `Z` is
/// tangent to the Legendrian constraint at `c = 0`.
pub fn lbeta_tangency_residual(
    z: &DeformVector,
    a: &PeriodicField,
    b: &PeriodicField,
    mubar: &PeriodicField,
) -> f64 {
    let de = z.eta.derivative();
    let mut worst = 0.0f64;
    for j in 0..a.len() {
        let r = de.values()[j]
            - (mubar.values()[j] * b.values()[j] * z.eta.values()[j]
                + b.values()[j] * z.lambda.values()[j]
                - a.values()[j] * z.mu.values()[j]);
        worst = worst.max(r.abs());
    }
    worst
}

/// Report of the six structure-identity residuals at a grid point.
#[derive(Debug, Clone)]
pub struct StructurePointReport {
    /// `d gamma (xi, v)` (should vanish)
    pub dgamma_xi_v: f64,
    /// `d gamma (xi, [xi,v]) - tau`
    pub dgamma_xi_xv: f64,
    /// `d gamma (v, [xi,v]) - mubar_xi`
    pub dgamma_v_xv: f64,
    /// `d beta (xi, v) - 1`
    pub dbeta_xi_v: f64,
    /// `d beta (xi, [xi,v])` (should vanish)
    pub dbeta_xi_xv: f64,
    /// `-d beta (v, [xi,v]) - mubar`
    pub dbeta_v_xv: f64,
}

impl StructurePointReport {
    pub fn max_abs(&self) -> f64 {
        [
            self.dgamma_xi_v,
            self.dgamma_xi_xv,
            self.dgamma_v_xv,
            self.dbeta_xi_v,
            self.dbeta_xi_xv,
            self.dbeta_v_xv,
        ]
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

/// Ambient components of `gamma = -dalpha(., [xi,v])` at `p`.
pub fn gamma_at(model: &ContactModel, p: &[f64]) -> Result<Vec<f64>> {
    let xv = (model.bracket_xiv_field()?)(p);
    let dim = model.ambient_dim;
    let alpha = model.alpha_field();
    let d_xv = model.dir_deriv(
        &{
            let a = alpha.clone();
            move |q: &[f64]| a(q)
        },
        p,
        &xv,
    );
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut e = alloc::vec![0.0; dim];
        e[i] = 1.0;
        let d_e = model.dir_deriv(
            &{
                let a = alpha.clone();
                move |q: &[f64]| a(q)
            },
            p,
            &e,
        );
        // gamma(e_i) = -dalpha(e_i, xv) = (D_xv alpha).e_i - (D_{e_i} alpha).xv
        out.push(d_xv[i] - crate::linalg::dot(&d_e, &xv));
    }
    Ok(out)
}

/// Evaluate the six structure identities at every grid point.
pub fn structure_identities_check(
    model: &ContactModel,
    grid: &[Vec<f64>],
) -> Result<Vec<StructurePointReport>> {
    let beta_f = model.beta_field()?;
    let me = model.clone();
    let gamma_f = move |q: &[f64]| {
        let qq = me.project_point(q);
        gamma_at(&me, &qq).expect("gamma field eval")
    };
    let mut out = Vec::with_capacity(grid.len());
    for p in grid {
        let p = model.project_point(p);
        let fr = frame_at(model, &p)?;
        let dg_xi_v = model.two_form(&gamma_f, &p, &fr.xi, &fr.v);
        let dg_xi_xv = model.two_form(&gamma_f, &p, &fr.xi, &fr.xv);
        let dg_v_xv = model.two_form(&gamma_f, &p, &fr.v, &fr.xv);
        let db_xi_v = model.two_form(beta_f.as_ref(), &p, &fr.xi, &fr.v);
        let db_xi_xv = model.two_form(beta_f.as_ref(), &p, &fr.xi, &fr.xv);
        let db_v_xv = model.two_form(beta_f.as_ref(), &p, &fr.v, &fr.xv);
        out.push(StructurePointReport {
            dgamma_xi_v: dg_xi_v,
            dgamma_xi_xv: dg_xi_xv - fr.tau,
            dgamma_v_xv: dg_v_xv - fr.mubar_xi,
            dbeta_xi_v: db_xi_v - 1.0,
            dbeta_xi_xv: db_xi_xv,
            dbeta_v_xv: -db_v_xv - fr.mubar,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{trig_poly, SmallRng};

    const N: usize = 128;

    fn random_state(rng: &mut SmallRng, c_zero: bool) -> TangentData {
        TangentData {
            a: trig_poly(rng, N, 10, 0.5).map_values(|v| v + 1.0),
            b: trig_poly(rng, N, 10, 0.6),
            c: if c_zero {
                PeriodicField::zeros(N)
            } else {
                trig_poly(rng, N, 10, 0.2)
            },
            residual: 0.0,
        }
    }

    fn random_deform(rng: &mut SmallRng) -> DeformVector {
        DeformVector {
            lambda: trig_poly(rng, N, 10, 0.5),
            mu: trig_poly(rng, N, 10, 0.5),
            eta: trig_poly(rng, N, 10, 0.5),
        }
    }

    fn random_frames(rng: &mut SmallRng) -> FrameSeries {
        FrameSeries {
            tau: trig_poly(rng, N, 6, 1.0),
            mubar: trig_poly(rng, N, 6, 0.8),
            mubar_xi: trig_poly(rng, N, 6, 0.8),
        }
    }

    #[test]
    fn zero_deformation_freezes_the_state() {
        let mut rng = SmallRng::new(1);
        let st = random_state(&mut rng, false);
        let z = DeformVector {
            lambda: PeriodicField::zeros(N),
            mu: PeriodicField::zeros(N),
            eta: PeriodicField::zeros(N),
        };
        let rates = evolve_abc(&st, &z, &random_frames(&mut rng)).unwrap();
        assert!(rates.da.sup_norm() < 1e-15);
        assert!(rates.db.sup_norm() < 1e-15);
        assert!(rates.dc.sup_norm() < 1e-15);
    }

    #[test]
    fn direct_substitution_case() {
        // c = 0, eta = 0, lambda const: da = 0, db = mu', dc = a mu - b lambda
        let mut rng = SmallRng::new(2);
        let st = random_state(&mut rng, true);
        let mu = trig_poly(&mut rng, N, 8, 0.7);
        let z = DeformVector {
            lambda: PeriodicField::constant(N, 0.37),
            mu: mu.clone(),
            eta: PeriodicField::zeros(N),
        };
        let fr = random_frames(&mut rng);
        let rates = evolve_abc(&st, &z, &fr).unwrap();
        assert!(rates.da.sup_norm() < 1e-13);
        let dmu = mu.derivative();
        for j in 0..N {
            assert!((rates.db.values()[j] - dmu.values()[j]).abs() < 1e-12);
            let expect = st.a.values()[j] * mu.values()[j] - st.b.values()[j] * 0.37;
            assert!((rates.dc.values()[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn evolution_is_linear_in_the_deformation() {
        let mut rng = SmallRng::new(3);
        let st = random_state(&mut rng, false);
        let fr = random_frames(&mut rng);
        let z1 = random_deform(&mut rng);
        let z2 = random_deform(&mut rng);
        let (s, t) = (0.83, -1.21);
        let comb = DeformVector {
            lambda: z1.lambda.binary(&z2.lambda, |x, y| s * x + t * y),
            mu: z1.mu.binary(&z2.mu, |x, y| s * x + t * y),
            eta: z1.eta.binary(&z2.eta, |x, y| s * x + t * y),
        };
        let r1 = evolve_abc(&st, &z1, &fr).unwrap();
        let r2 = evolve_abc(&st, &z2, &fr).unwrap();
        let rc = evolve_abc(&st, &comb, &fr).unwrap();
        for j in 0..N {
            for (ra, rb, rcv) in [
                (&r1.da, &r2.da, &rc.da),
                (&r1.db, &r2.db, &rc.db),
                (&r1.dc, &r2.dc, &rc.dc),
            ] {
                let want = s * ra.values()[j] + t * rb.values()[j];
                assert!((rcv.values()[j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tangent_deformations_preserve_c_equal_zero() {
        // build (lambda, mu, eta) satisfying the constraint exactly on the
        // grid by solving for lambda, then check dc/ds vanishes
        let mut rng = SmallRng::new(4);
        let st = random_state(&mut rng, true);
        let fr = random_frames(&mut rng);
        let b = st.b.map_values(|v| v + 2.0); // bounded away from zero
        let st = TangentData { b: b.clone(), ..st };
        let mu = trig_poly(&mut rng, N, 8, 0.5);
        let eta = trig_poly(&mut rng, N, 8, 0.5);
        let de = eta.derivative();
        let mut lam = alloc::vec![0.0; N];
        for j in 0..N {
            lam[j] = (de.values()[j]
                - fr.mubar.values()[j] * b.values()[j] * eta.values()[j]
                + st.a.values()[j] * mu.values()[j])
                / b.values()[j];
        }
        let z = DeformVector {
            lambda: PeriodicField::from_values(lam),
            mu,
            eta,
        };
        assert!(lbeta_tangency_residual(&z, &st.a, &st.b, &fr.mubar) < 1e-10);
        let rates = evolve_abc(&st, &z, &fr).unwrap();
        assert!(rates.dc.sup_norm() < 1e-10, "dc = {}", rates.dc.sup_norm());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut rng = SmallRng::new(5);
        let st = random_state(&mut rng, false);
        let z = DeformVector {
            lambda: PeriodicField::zeros(2 * N),
            mu: PeriodicField::zeros(2 * N),
            eta: PeriodicField::zeros(2 * N),
        };
        assert!(matches!(
            evolve_abc(&st, &z, &random_frames(&mut rng)),
            Err(CoreError::LengthMismatch { .. })
        ));
    }
}

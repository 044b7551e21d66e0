//! Transport along the kernel field `v`, lifting of negative-`a` arcs into
//! `C_beta^+`, and cancellation of (nearly) Dirac masses.
//!
//! The lift relies on the kernel plane turning along `v`-orbits: for a
//! tangent vector `X` transported by the flow of `v`, the function
//! `g(s) = beta(D phi_s X)` (equivalently minus its `[xi,v]`-component)
//! vanishes exactly when the transported vector returns to the
//! `span(xi, v)` plane, and the first admissible return carries a positive
//! `xi`-component when the original one was negative. Negative arcs are
//! replaced by their lifts and closed with `v`-segments, which is where the
//! (nearly) Dirac masses come from.

pub mod cancel;

pub use cancel::{
    cancel_dirac, cancel_multiple, detect_mass, integral_of_bump, seed_nearly_dirac_t3,
    solve_deform_system, spanning_pair, xi_compensation, ArcProfile, CancelParams, CancelReport,
    DeformSolution, MassSeed, Side,
};

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::loops::{decompose_tangent, frame_columns, DiscreteLoop, TangentData};
use crate::manifold::ContactModel;
use crate::spectral::PeriodicField;

/// Configuration for the `v`-flow integrator.
#[derive(Clone)]
pub struct VFlowIntegrator {
    pub model: ContactModel,
    /// Target local accuracy; sets the RK4 step.
    pub atol: f64,
    /// Search horizon for the turning condition.
    pub max_s: f64,
}

/// Flow state: point plus tangent transport matrix (columns map the ambient
/// basis).
#[derive(Clone)]
pub struct VFlowState {
    pub s: f64,
    pub point: Vec<f64>,
    pub transport: Vec<Vec<f64>>,
}

impl VFlowIntegrator {
    pub fn new(model: ContactModel) -> Self {
        VFlowIntegrator { model, atol: 1e-10, max_s: 8.0 }
    }

    fn step_size(&self) -> f64 {
        // RK4: local error ~ h^5; the fields here are curvature O(1)
        self.atol.powf(0.2).clamp(1e-3, 5e-3)
    }

    pub fn start(&self, p: &[f64]) -> Result<VFlowState> {
        let dim = self.model.ambient_dim;
        let _ = self.model.v_at(p)?;
        let mut id = alloc::vec![alloc::vec![0.0; dim]; dim];
        for (i, row) in id.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Ok(VFlowState { s: 0.0, point: self.model.project_point(p), transport: id })
    }

    /// Advance the state by `ds` (signed), integrating the variational
    /// equation alongside.
    pub fn extend(&self, st: &VFlowState, ds: f64) -> Result<VFlowState> {
        if ds == 0.0 {
            return Ok(st.clone());
        }
        let v_f = self.model.v_field()?;
        let dim = self.model.ambient_dim;
        let nsteps = (ds.abs() / self.step_size()).ceil().max(1.0) as usize;
        let h = ds / nsteps as f64;
        let mut y = st.point.clone();
        let mut d = st.transport.clone();

        let jac = |q: &[f64]| -> Vec<Vec<f64>> {
            // columns J e_i
            let mut cols = Vec::with_capacity(dim);
            for i in 0..dim {
                let mut e = alloc::vec![0.0; dim];
                e[i] = 1.0;
                cols.push(self.model.dir_deriv(v_f.as_ref(), q, &e));
            }
            cols
        };
        let mat_vec = |cols: &[Vec<f64>], x: &[f64]| -> Vec<f64> {
            let mut out = alloc::vec![0.0; dim];
            for (i, c) in cols.iter().enumerate() {
                linalg::axpy(&mut out, x[i], c);
            }
            out
        };

        for _ in 0..nsteps {
            // joint RK4 on (y, D)
            let f = |yy: &Vec<f64>, dd: &Vec<Vec<f64>>| -> (Vec<f64>, Vec<Vec<f64>>) {
                let vy = v_f(yy);
                let j = jac(yy);
                let dcols: Vec<Vec<f64>> = (0..dim).map(|c| {
                    let col: Vec<f64> = dd.iter().map(|row| row[c]).collect();
                    mat_vec(&j, &col)
                }).collect();
                // store back in row-major
                let mut drows = alloc::vec![alloc::vec![0.0; dim]; dim];
                for r in 0..dim {
                    for c in 0..dim {
                        drows[r][c] = dcols[c][r];
                    }
                }
                (vy, drows)
            };
            let add_state = |y0: &Vec<f64>, d0: &Vec<Vec<f64>>, ky: &Vec<f64>, kd: &Vec<Vec<f64>>, s: f64| {
                let mut y1 = y0.clone();
                linalg::axpy(&mut y1, s, ky);
                let mut d1 = d0.clone();
                for r in 0..dim {
                    for c in 0..dim {
                        d1[r][c] += s * kd[r][c];
                    }
                }
                (y1, d1)
            };
            let (k1y, k1d) = f(&y, &d);
            let (y2, d2) = add_state(&y, &d, &k1y, &k1d, h / 2.0);
            let (k2y, k2d) = f(&y2, &d2);
            let (y3, d3) = add_state(&y, &d, &k2y, &k2d, h / 2.0);
            let (k3y, k3d) = f(&y3, &d3);
            let (y4, d4) = add_state(&y, &d, &k3y, &k3d, h);
            let (k4y, k4d) = f(&y4, &d4);
            for i in 0..dim {
                y[i] += h / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i]);
                for c in 0..dim {
                    d[i][c] += h / 6.0 * (k1d[i][c] + 2.0 * k2d[i][c] + 2.0 * k3d[i][c] + k4d[i][c]);
                }
            }
            y = self.model.project_point(&y);
        }
        Ok(VFlowState { s: st.s + ds, point: y, transport: d })
    }

    /// `phi_s(p)` together with the tangent transport.
    pub fn flow(&self, p: &[f64], s: f64) -> Result<VFlowState> {
        let st = self.start(p)?;
        self.extend(&st, s)
    }

    pub fn apply_transport(&self, st: &VFlowState, x: &[f64]) -> Vec<f64> {
        let dim = self.model.ambient_dim;
        let mut out = alloc::vec![0.0; dim];
        for r in 0..dim {
            out[r] = (0..dim).map(|c| st.transport[r][c] * x[c]).sum();
        }
        self.model.project_vector(&st.point, &out)
    }
}

/// `g(s,t)` data at a transported tangent: frame components of
/// `D phi_s x'(t)` at `phi_s(x(t))`.
fn g_components(model: &ContactModel, st: &VFlowState, xdot: &[f64], vint: &VFlowIntegrator) -> Result<(f64, f64, f64)> {
    let w = vint.apply_transport(st, xdot);
    let (xi, v, xv) = frame_columns(model, &st.point)?;
    let dim = model.ambient_dim;
    let rows: Vec<Vec<f64>> = (0..dim).map(|i| alloc::vec![xi[i], v[i], xv[i]]).collect();
    let sol = linalg::lstsq(&rows, &w)?;
    Ok((sol[0], sol[1], sol[2]))
}

/// Result of a lift-time solve.
#[derive(Debug, Clone, Copy)]
pub struct LiftTime {
    pub s: f64,
    /// `xi`-component of the transported tangent at the root.
    pub gamma: f64,
    /// residual `|g|` at the root
    pub g_residual: f64,
}

/// Smallest `s > 0` where the transported tangent returns to `span(xi, v)`
/// with positive `xi`-component and decreasing `g`. A tangent already of
/// that form returns `s = 0`.
pub fn lift_time(vint: &VFlowIntegrator, p: &[f64], xdot: &[f64]) -> Result<LiftTime> {
    let model = &vint.model;
    let st0 = vint.start(p)?;
    let (a0, _b0, c0) = g_components(model, &st0, xdot, vint)?;
    let scale = linalg::norm(xdot).max(1e-12);
    if c0.abs() <= 1e-9 * scale && a0 > 1e-9 * scale {
        return Ok(LiftTime { s: 0.0, gamma: a0, g_residual: c0.abs() });
    }

    let coarse = vint.max_s / 64.0;
    let mut st_prev = st0;
    let mut g_prev = -c0;
    let mut s_prev = 0.0;
    let mut ds = coarse;
    // skip the trivial root at s = 0: march until g rises above noise, then
    // hunt the next + -> - crossing
    let mut armed = g_prev > 1e-9 * scale;
    loop {
        if s_prev + ds > vint.max_s {
            return Err(CoreError::TurningHorizonExceeded { t: s_prev });
        }
        let st = vint.extend(&st_prev, ds)?;
        let (ga, _b, c) = g_components(model, &st, xdot, vint)?;
        let _ = ga;
        let g = -c;
        if !armed {
            if g > 1e-9 * scale {
                armed = true;
            } else if st.s > vint.max_s / 4.0 {
                // never rose: degenerate tangent (parallel to v)
                return Err(CoreError::TurningHorizonExceeded { t: st.s });
            }
        } else if g <= 0.0 {
            // bracket [st_prev, st]; bisect/secant refine
            let mut lo = st_prev.clone();
            let mut g_lo = g_prev;
            let mut hi_off = ds;
            let mut g_hi = g;
            for _ in 0..80 {
                let frac = if (g_hi - g_lo).abs() > 1e-300 {
                    (g_lo / (g_lo - g_hi)).clamp(0.05, 0.95)
                } else {
                    0.5
                };
                let mid_off = hi_off * frac;
                let st_mid = vint.extend(&lo, mid_off)?;
                let (am, _bm, cm) = g_components(model, &st_mid, xdot, vint)?;
                let gm = -cm;
                if gm.abs() <= 1e-12 * scale {
                    return finish_root(st_mid.s, am, gm, scale);
                }
                if gm > 0.0 {
                    lo = st_mid;
                    g_lo = gm;
                    hi_off -= mid_off;
                } else {
                    hi_off = mid_off;
                    g_hi = gm;
                }
                if hi_off < 1e-14 {
                    let st_end = vint.extend(&lo, hi_off / 2.0)?;
                    let (ae, _be, ce) = g_components(model, &st_end, xdot, vint)?;
                    return finish_root(st_end.s, ae, -ce, scale);
                }
            }
            return Err(CoreError::RootNotConverged);
        }
        g_prev = g;
        s_prev = st.s;
        st_prev = st;
        ds = coarse;
    }
}

fn finish_root(s: f64, gamma: f64, g: f64, scale: f64) -> Result<LiftTime> {
    if gamma <= 0.0 {
        // wrong orientation at the root; callers treat this as a horizon
        // problem since the next crossing would be hunted past it
        return Err(CoreError::TurningHorizonExceeded { t: s });
    }
    Ok(LiftTime { s, gamma, g_residual: g.abs() / scale })
}

/// A detected back-and-forth `v`-excursion.
#[derive(Debug, Clone, Copy)]
pub struct DiracMass {
    /// parameter location (centre of the opening)
    pub t0: f64,
    /// `v`-length of the jump
    pub l: f64,
    /// alpha-length of the `a > 0` insertion between the runs
    pub opening_eps: f64,
    /// sign of the forth run along `v`
    pub orientation: f64,
}

/// Piece labels of an assembled (lifted) curve sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    /// untouched original curve
    Base,
    /// lifted arc
    Lifted,
    /// inserted v-segment (+1 up, -1 down recorded in `b`)
    Segment,
}

/// Lift output: the assembled loop, its per-sample analytic tangent data,
/// the lift-time profile on the original parameters, and the recorded
/// masses.
pub struct LiftResult {
    pub lifted: DiscreteLoop,
    /// per-original-sample lift times (zero off the arcs)
    pub s_profile: Vec<f64>,
    pub masses: Vec<DiracMass>,
    pub homotopy_param: f64,
    /// analytic tangent data of the assembled loop
    pub tangent: TangentData,
    /// piece labels per assembled sample
    pub pieces: Vec<PieceKind>,
    /// sup |g| over the lifted samples
    pub max_g_residual: f64,
    /// sup |beta(y')| over the assembled samples (from the analytic data)
    pub legendrian_residual: f64,
    plan: AssemblyPlan,
}

/// How the assembled samples are allocated (reused by the homotopy so that
/// `l = 1` reproduces the lift sample-for-sample).
#[derive(Clone)]
struct AssemblyPlan {
    /// arcs as (first, last) original sample indices (inclusive, cyclic)
    arcs: Vec<(usize, usize)>,
    /// per-arc sample counts of the up and down segments
    seg_samples: Vec<(usize, usize)>,
    /// output size (power of two)
    n_out: usize,
}

/// Replace each maximal `a < 0` arc by its `v`-lift and close with
/// `v`-segments.
pub fn lift_negative_arcs(lp: &DiscreteLoop) -> Result<LiftResult> {
    let td = decompose_tangent(lp)?;
    let plan = plan_assembly(lp, &td)?;
    assemble(lp, &td, &plan, 1.0)
}

/// The intermediate curve of the lifting deformation: lift times scaled by
/// `l` (same sample allocation as the full lift).
pub fn homotopy_track(lp: &DiscreteLoop, lift: &LiftResult, l: f64) -> Result<DiscreteLoop> {
    if !(0.0..=1.0).contains(&l) {
        return Err(CoreError::InvalidArgument("homotopy parameter must be in [0,1]".into()));
    }
    if l == 0.0 {
        return Ok(lp.clone());
    }
    let td = decompose_tangent(lp)?;
    let out = assemble(lp, &td, &lift.plan, l)?;
    Ok(out.lifted)
}

fn plan_assembly(lp: &DiscreteLoop, td: &TangentData) -> Result<AssemblyPlan> {
    let n = lp.len();
    let a = td.a.values();
    let atol = 1e-7 * (1.0 + td.a.sup_norm());
    // maximal cyclic runs of a < -atol
    let neg: Vec<bool> = a.iter().map(|&x| x < -atol).collect();
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    if neg.iter().all(|&x| x) {
        return Err(CoreError::SignCondition("a < 0 everywhere; nothing to lift onto".into()));
    }
    let mut j = 0;
    while j < n {
        if neg[j] && !neg[(j + n - 1) % n] {
            let mut k = j;
            while neg[(k + 1) % n] {
                k += 1;
            }
            arcs.push((j, k % n));
            j = if k >= n { break } else { k + 1 };
        } else {
            j += 1;
        }
    }

    if arcs.is_empty() {
        return Ok(AssemblyPlan { arcs, seg_samples: Vec::new(), n_out: n });
    }

    // sample counts for the v-segments: proportional to their geometric
    // length so the assembled parameterisation keeps roughly uniform speed,
    // then padded so the total is a power of two
    let vint = VFlowIntegrator::new(lp.model.clone());
    let ders = lp.derivative_points();
    let curve_len = lp.sampled_length();
    let delta = curve_len / n as f64;
    let mut seg_samples: Vec<(usize, usize)> = Vec::new();
    let mut total = n;
    for &(i0, i1) in &arcs {
        let lt0 = lift_time(&vint, lp.point(i0), &ders[i0])?;
        let lt1 = lift_time(&vint, lp.point(i1), &ders[i1])?;
        let vnorm0 = linalg::norm(&lp.model.v_at(lp.point(i0))?);
        let vnorm1 = linalg::norm(&lp.model.v_at(lp.point(i1))?);
        let n0 = ((lt0.s * vnorm0 / delta).ceil() as usize).max(2);
        let n1 = ((lt1.s * vnorm1 / delta).ceil() as usize).max(2);
        seg_samples.push((n0, n1));
        total += n0 + n1;
    }
    let n_out = total.next_power_of_two();
    // distribute the padding over the segments round-robin
    let mut extra = n_out - total;
    while extra > 0 {
        for s in seg_samples.iter_mut() {
            if extra == 0 {
                break;
            }
            s.0 += 1;
            extra -= 1;
            if extra == 0 {
                break;
            }
            s.1 += 1;
            extra -= 1;
        }
    }
    Ok(AssemblyPlan { arcs, seg_samples, n_out })
}

fn in_cyclic_range(j: usize, first: usize, last: usize, _n: usize) -> bool {
    if first <= last {
        (first..=last).contains(&j)
    } else {
        j >= first || j <= last
    }
}

fn assemble(
    lp: &DiscreteLoop,
    td: &TangentData,
    plan: &AssemblyPlan,
    scale: f64,
) -> Result<LiftResult> {
    let n = lp.len();
    let model = &lp.model;
    let vint = VFlowIntegrator::new(model.clone());
    let ders = lp.derivative_points();

    if plan.arcs.is_empty() {
        let lifted = lp.clone();
        return Ok(LiftResult {
            lifted,
            s_profile: alloc::vec![0.0; n],
            masses: Vec::new(),
            homotopy_param: scale,
            tangent: td.clone(),
            pieces: alloc::vec![PieceKind::Base; n],
            max_g_residual: 0.0,
            legendrian_residual: td.c.sup_norm(),
            plan: plan.clone(),
        });
    }

    // lift times for every arc sample
    let mut s_profile = alloc::vec![0.0; n];
    let mut max_g = 0.0f64;
    let mut gammas = alloc::vec![0.0; n];
    for &(i0, i1) in &plan.arcs {
        let mut j = i0;
        loop {
            let lt = lift_time(&vint, lp.point(j), &ders[j])?;
            s_profile[j] = lt.s;
            gammas[j] = lt.gamma;
            max_g = max_g.max(lt.g_residual);
            if j == i1 {
                break;
            }
            j = (j + 1) % n;
        }
    }

    // assembled sample list: (point, a, b, c, kind)
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(plan.n_out);
    let mut arr_a: Vec<f64> = Vec::with_capacity(plan.n_out);
    let mut arr_b: Vec<f64> = Vec::with_capacity(plan.n_out);
    let mut arr_c: Vec<f64> = Vec::with_capacity(plan.n_out);
    let mut pieces: Vec<PieceKind> = Vec::with_capacity(plan.n_out);
    let mut masses: Vec<DiracMass> = Vec::new();

    // derivative of the lift-time profile along each arc (for the v-part of
    // the lifted tangent); one-sided differences at the ends
    let dt = 1.0 / n as f64;
    let sdot = |arc: (usize, usize), j: usize| -> f64 {
        let (i0, i1) = arc;
        let prev = if j == i0 { j } else { (j + n - 1) % n };
        let next = if j == i1 { j } else { (j + 1) % n };
        let span = if prev == j || next == j { dt } else { 2.0 * dt };
        (s_profile[next] - s_profile[prev]) / span
    };

    // the assembled parameterisation is uniform in the output index; each
    // original sample keeps width 1/n of "curve time", segments get theirs
    let n_out = plan.n_out;
    let width_ratio = n as f64 / n_out as f64; // d t_orig / d t_out for curve pieces

    let mut arc_iter = 0usize;
    let mut j = 0usize;
    // start from a sample outside any arc to keep the seam in base territory
    let start = (0..n)
        .find(|&j| {
            !plan
                .arcs
                .iter()
                .any(|&(i0, i1)| in_cyclic_range(j, i0, i1, n))
        })
        .ok_or_else(|| CoreError::SignCondition("no positive samples".into()))?;
    let mut count = 0usize;
    while count < n {
        let idx = (start + j) % n;
        let arc = plan
            .arcs
            .iter()
            .position(|&(i0, _)| i0 == idx)
            .map(|k| (k, plan.arcs[k]));
        match arc {
            None => {
                pts.push(lp.point(idx).to_vec());
                arr_a.push(td.a.values()[idx] * width_ratio);
                arr_b.push(td.b.values()[idx] * width_ratio);
                arr_c.push(td.c.values()[idx] * width_ratio);
                pieces.push(PieceKind::Base);
                j += 1;
                count += 1;
            }
            Some((k, (i0, i1))) => {
                let (n_up, n_down) = plan.seg_samples[k];
                let s_first = scale * s_profile[i0];
                let s_last = scale * s_profile[i1];
                // up segment: from x(i0) to phi_{s_first}(x(i0)), excluding
                // the top (the lifted arc sample provides it)
                let base_v = model.v_at(lp.point(i0))?;
                let vnorm_up = linalg::norm(&base_v);
                let _ = vnorm_up;
                for m in 0..n_up {
                    let u = s_first * m as f64 / n_up as f64;
                    let st = vint.flow(lp.point(i0), u)?;
                    pts.push(st.point);
                    arr_a.push(0.0);
                    // b = v-speed in v units: du/dparam
                    arr_b.push(s_first * n_out as f64 / n_up as f64);
                    arr_c.push(0.0);
                    pieces.push(PieceKind::Segment);
                }
                // lifted arc samples
                let mut jj = i0;
                let mut arc_len_alpha = 0.0;
                loop {
                    let s_here = scale * s_profile[jj];
                    let st = vint.flow(lp.point(jj), s_here)?;
                    let w = vint.apply_transport(&st, &ders[jj]);
                    let (xi, v, xv) = frame_columns(model, &st.point)?;
                    let dim = model.ambient_dim;
                    let rows: Vec<Vec<f64>> =
                        (0..dim).map(|i| alloc::vec![xi[i], v[i], xv[i]]).collect();
                    let sol = linalg::lstsq(&rows, &w)?;
                    pts.push(st.point);
                    let sd = scale * sdot((i0, i1), jj);
                    arr_a.push(sol[0] * width_ratio);
                    arr_b.push((sol[1] + sd) * width_ratio);
                    arr_c.push(sol[2] * width_ratio);
                    pieces.push(PieceKind::Lifted);
                    arc_len_alpha += sol[0].max(0.0) * dt;
                    if jj == i1 {
                        break;
                    }
                    jj = (jj + 1) % n;
                    count += 1;
                    j += 1;
                }
                count += 1;
                j += 1;
                // down segment: from phi_{s_last}(x(i1)) back to x(i1),
                // excluding the top (already emitted) and including the base
                for m in 1..=n_down {
                    let u = s_last * (1.0 - m as f64 / n_down as f64);
                    let st = vint.flow(lp.point(i1), u)?;
                    pts.push(st.point);
                    arr_a.push(0.0);
                    arr_b.push(-s_last * n_out as f64 / n_down as f64);
                    arr_c.push(0.0);
                    pieces.push(PieceKind::Segment);
                }
                let t0 = (i0 as f64 + i1 as f64) / (2.0 * n as f64);
                masses.push(DiracMass {
                    t0,
                    l: 0.5 * (s_first + s_last),
                    opening_eps: arc_len_alpha * scale.max(1e-12) / scale.max(1e-12),
                    orientation: 1.0,
                });
                arc_iter += 1;
            }
        }
    }
    let _ = arc_iter;

    debug_assert_eq!(pts.len(), plan.n_out);
    let lifted = DiscreteLoop::new(model.clone(), pts, lp.winding().to_vec())?;
    let tangent = TangentData {
        a: PeriodicField::from_values(arr_a),
        b: PeriodicField::from_values(arr_b),
        c: PeriodicField::from_values(arr_c),
        residual: 0.0,
    };
    let legendrian_residual = tangent.c.sup_norm();
    Ok(LiftResult {
        lifted,
        s_profile,
        masses,
        homotopy_param: scale,
        tangent,
        pieces,
        max_g_residual: max_g,
        legendrian_residual,
        plan: plan.clone(),
    })
}

/// Smooth plateau bump: support `(0, delta)`, identically one on
/// `[delta/4, 3 delta/4]`.
pub fn plateau_bump(t: f64, delta: f64) -> f64 {
    if t <= 0.0 || t >= delta {
        return 0.0;
    }
    let ramp = |x: f64| -> f64 {
        // C^infty step on [0, 1] from the exp(-1/x) mollifier
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            let sl = (-1.0 / x).exp();
            let sr = (-1.0 / (1.0 - x)).exp();
            sl / (sl + sr)
        }
    };
    let q = delta / 4.0;
    if t < q {
        ramp(t / q)
    } else if t <= 3.0 * q {
        1.0
    } else {
        ramp((delta - t) / q)
    }
}

/// Extend the tangent field of a curve near `x(t_anchor)` by the orbit
/// construction and return the orbit tangent at the nearby point `q`.
///
/// The orbits are `y' = a(t) xi(y) + b(t) v(y)` seeded on the disc through
/// `x(t_anchor)` spanned by `[xi,v]` and the orthogonal complement of the
/// tangent; `q` must be matched by one of them inside the radius.
pub fn tangent_extension(
    lp: &DiscreteLoop,
    t_anchor: f64,
    q: &[f64],
    radius: f64,
) -> Result<Vec<f64>> {
    let model = &lp.model;
    let td = decompose_tangent(lp)?;
    let n = lp.len();
    let anchor = lp.eval(t_anchor);
    let xdot_norm = {
        let j = ((t_anchor * n as f64).round() as usize) % n;
        let ders = lp.derivative_points();
        linalg::norm(&ders[j])
    };
    if xdot_norm < 1e-9 {
        return Err(CoreError::SignCondition("anchor tangent vanishes".into()));
    }
    if linalg::norm(&linalg::sub(q, &anchor)) > radius {
        return Err(CoreError::NoMatchingOrbit);
    }

    // disc directions at the anchor: [xi,v] and the remaining transverse one
    let (xi, v, xv) = frame_columns(model, &anchor)?;
    let mut tangent_dir = linalg::scaled(&xi, td.a.eval(t_anchor));
    linalg::axpy(&mut tangent_dir, td.b.eval(t_anchor), &v);
    let tn = linalg::norm(&tangent_dir);
    let tangent_unit = linalg::scaled(&tangent_dir, 1.0 / tn);
    let mut e2 = v.clone();
    let c = linalg::dot(&e2, &tangent_unit);
    linalg::axpy(&mut e2, -c, &tangent_unit);
    let e2 = linalg::scaled(&e2, 1.0 / linalg::norm(&e2));
    let e1 = linalg::scaled(&xv, 1.0 / linalg::norm(&xv));

    // shoot: find (d1, d2, dt) with orbit(anchor + d1 e1 + d2 e2, t_anchor -> t_anchor + dt) = q
    let orbit = |d1: f64, d2: f64, dtime: f64| -> Result<Vec<f64>> {
        let mut y = anchor.clone();
        linalg::axpy(&mut y, d1, &e1);
        linalg::axpy(&mut y, d2, &e2);
        y = model.project_point(&y);
        let steps = 40;
        let h = dtime / steps as f64;
        let v_f = model.v_field()?;
        let xi_f = model.xi_field();
        for m in 0..steps {
            let t = t_anchor + h * m as f64;
            let vel = |yy: &Vec<f64>, tt: f64| -> Vec<f64> {
                let mut out = linalg::scaled(&xi_f(yy), td.a.eval(tt));
                linalg::axpy(&mut out, td.b.eval(tt), &v_f(yy));
                out
            };
            let k1 = vel(&y, t);
            let mut y2 = y.clone();
            linalg::axpy(&mut y2, h / 2.0, &k1);
            let k2 = vel(&model.project_point(&y2), t + h / 2.0);
            let mut y3 = y.clone();
            linalg::axpy(&mut y3, h / 2.0, &k2);
            let k3 = vel(&model.project_point(&y3), t + h / 2.0);
            let mut y4 = y.clone();
            linalg::axpy(&mut y4, h, &k3);
            let k4 = vel(&model.project_point(&y4), t + h);
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            y = model.project_point(&y);
        }
        Ok(y)
    };

    let mut params = [0.0f64, 0.0, 0.0];
    for _ in 0..40 {
        let y = orbit(params[0], params[1], params[2])?;
        let r = linalg::sub(&y, q);
        let rn = linalg::norm(&r);
        if rn < 1e-11 {
            break;
        }
        // finite-difference Jacobian
        let h = 1e-6;
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(3);
        for k in 0..3 {
            let mut pp = params;
            pp[k] += h;
            let yp = orbit(pp[0], pp[1], pp[2])?;
            cols.push(linalg::scaled(&linalg::sub(&yp, &y), 1.0 / h));
        }
        // solve J d = -r in least squares
        let dim = q.len();
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|i| alloc::vec![cols[0][i], cols[1][i], cols[2][i]])
            .collect();
        let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let d = linalg::lstsq(&rows, &neg_r)?;
        for k in 0..3 {
            params[k] += d[k];
        }
        if params[0].abs() > radius || params[1].abs() > radius {
            return Err(CoreError::NoMatchingOrbit);
        }
    }
    let y = orbit(params[0], params[1], params[2])?;
    if linalg::norm(&linalg::sub(&y, q)) > 1e-8 {
        return Err(CoreError::NoMatchingOrbit);
    }
    // orbit tangent at q
    let t_here = t_anchor + params[2];
    let v_f = model.v_field()?;
    let xi_f = model.xi_field();
    let mut out = linalg::scaled(&xi_f(q), td.a.eval(t_here));
    linalg::axpy(&mut out, td.b.eval(t_here), &v_f(q));
    Ok(out)
}

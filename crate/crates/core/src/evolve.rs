//! Method-of-lines evolution of the radial system: 4th-order central
//! stencils with even-parity ghosts at the origin, classical RK4 in time,
//! and a uniform-cadence history for cone diagnostics.

use crate::error::{Error, Result};
use crate::faddeev::{principal_system, solve_accelerations, PointState};
use crate::math;
use crate::pulse::{generate, PulseSpec};
use alloc::vec;
use alloc::vec::Vec;

/// Uniform radial mesh r_i = i dr, i = 0..n-1. Fields are even across
/// r = 0; beyond the outer edge they are treated as zero (the domain is
/// sized so outgoing waves never reach it).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid {
    pub n: usize,
    pub dr: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if n < 16 || r_max <= 0.0 {
            return Err(Error::InvalidInput("grid needs n >= 16 and r_max > 0"));
        }
        Ok(Self {
            n,
            dr: r_max / (n - 1) as f64,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.dr * (self.n - 1) as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.dr * i as f64
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.radius(i)).collect()
    }
}

/// 4th-order first derivative of an even-parity field; zero ghosts outside
/// the outer edge.
pub fn deriv1_even(f: &[f64], dr: f64, out: &mut [f64]) {
    let n = f.len();
    let get = |i: isize| -> f64 {
        if i < 0 {
            f[(-i) as usize]
        } else if (i as usize) < n {
            f[i as usize]
        } else {
            0.0
        }
    };
    let c = 1.0 / (12.0 * dr);
    for i in 0..n {
        let i = i as isize;
        out[i as usize] = c * (-get(i + 2) + 8.0 * get(i + 1) - 8.0 * get(i - 1) + get(i - 2));
    }
}

/// 4th-order second derivative with the same ghost conventions.
pub fn deriv2_even(f: &[f64], dr: f64, out: &mut [f64]) {
    let n = f.len();
    let get = |i: isize| -> f64 {
        if i < 0 {
            f[(-i) as usize]
        } else if (i as usize) < n {
            f[i as usize]
        } else {
            0.0
        }
    };
    let c = 1.0 / (12.0 * dr * dr);
    for i in 0..n {
        let i = i as isize;
        out[i as usize] = c
            * (-get(i + 2) + 16.0 * get(i + 1) - 30.0 * get(i) + 16.0 * get(i - 1) - get(i - 2));
    }
}

/// Grid arrays of the two fields and their time derivatives at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialState {
    pub t: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub phi_t: Vec<f64>,
}

impl RadialState {
    pub fn zero(t: f64, n: usize) -> Self {
        Self {
            t,
            theta: vec![0.0; n],
            phi: vec![0.0; n],
            theta_t: vec![0.0; n],
            phi_t: vec![0.0; n],
        }
    }

    fn axpy(&mut self, c: f64, rhs: &Rhs) {
        for i in 0..self.theta.len() {
            self.theta[i] += c * rhs.theta[i];
            self.phi[i] += c * rhs.phi[i];
            self.theta_t[i] += c * rhs.theta_t[i];
            self.phi_t[i] += c * rhs.phi_t[i];
        }
    }

    pub fn sup_fields(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.theta.len() {
            m = math::max(m, math::abs(self.theta[i]));
            m = math::max(m, math::abs(self.phi[i]));
        }
        m
    }

    fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
            && self.phi.iter().all(|v| v.is_finite())
            && self.theta_t.iter().all(|v| v.is_finite())
            && self.phi_t.iter().all(|v| v.is_finite())
    }
}

/// Time derivative of a state.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub phi_t: Vec<f64>,
}

/// Optional manufactured forcing: (t, r) -> additions to the two equations.
pub type Forcing<'a> = &'a dyn Fn(f64, f64) -> [f64; 2];

/// Time-stepping parameters. `dissipation` is the Kreiss-Oliger coefficient
/// sigma: a 6th-order filter term -sigma/(64 dr) D^6 added to every evolved
/// field. It is O(dr^5) on smooth data, so the scheme stays 4th order; it
/// damps the grid-scale modes that the quasilinear coupling can excite at
/// large amplitude.
#[derive(Clone, Copy, Debug)]
pub struct RunParams {
    pub t_end: f64,
    pub cadence: f64,
    pub cfl: f64,
    pub dissipation: f64,
}

impl RunParams {
    pub fn new(t_end: f64, cadence: f64) -> Self {
        Self {
            t_end,
            cadence,
            cfl: 0.4,
            dissipation: 0.0,
        }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_dissipation(mut self, sigma: f64) -> Self {
        self.dissipation = sigma;
        self
    }
}

/// 6th-order Kreiss-Oliger filter: out = -sigma/(64 dr) * D6 f with the
/// 7-point stencil [1, -6, 15, -20, 15, -6, 1], even-parity ghosts at the
/// origin and zero ghosts outside.
pub fn kreiss_oliger(f: &[f64], dr: f64, sigma: f64, out: &mut [f64]) {
    let n = f.len();
    let get = |i: isize| -> f64 {
        if i < 0 {
            f[(-i) as usize]
        } else if (i as usize) < n {
            f[i as usize]
        } else {
            0.0
        }
    };
    // The stencil's Fourier symbol is -64 sin^6(kh/2): with the positive
    // prefactor every mode is damped at rate sigma sin^6(kh/2) / dr.
    let c = sigma / (64.0 * dr);
    for i in 0..n {
        let i = i as isize;
        out[i as usize] = c
            * (get(i - 3) - 6.0 * get(i - 2) + 15.0 * get(i - 1) - 20.0 * get(i)
                + 15.0 * get(i + 1)
                - 6.0 * get(i + 2)
                + get(i + 3));
    }
}

/// Evaluate the method-of-lines right-hand side. Spatial derivatives are
/// 4th-order central; d_t d_r fields come from differentiating the evolved
/// time derivatives in r. Hyperbolicity loss is reported with the offending
/// location.
pub fn rhs(
    state: &RadialState,
    grid: &RadialGrid,
    dissipation: f64,
    forcing: Option<Forcing>,
) -> Result<Rhs> {
    let n = grid.n;
    let dr = grid.dr;
    let mut d_theta = vec![0.0; n];
    let mut d_phi = vec![0.0; n];
    let mut dd_theta = vec![0.0; n];
    let mut dd_phi = vec![0.0; n];
    let mut d_theta_t = vec![0.0; n];
    let mut d_phi_t = vec![0.0; n];
    deriv1_even(&state.theta, dr, &mut d_theta);
    deriv1_even(&state.phi, dr, &mut d_phi);
    deriv2_even(&state.theta, dr, &mut dd_theta);
    deriv2_even(&state.phi, dr, &mut dd_phi);
    deriv1_even(&state.theta_t, dr, &mut d_theta_t);
    deriv1_even(&state.phi_t, dr, &mut d_phi_t);

    let mut acc_theta = vec![0.0; n];
    let mut acc_phi = vec![0.0; n];
    for i in 0..n {
        let r = grid.radius(i);
        let ps = PointState {
            theta: state.theta[i],
            phi: state.phi[i],
            dt_theta: state.theta_t[i],
            dt_phi: state.phi_t[i],
            dr_theta: d_theta[i],
            dr_phi: d_phi[i],
            drr_theta: dd_theta[i],
            drr_phi: dd_phi[i],
            dtr_theta: d_theta_t[i],
            dtr_phi: d_phi_t[i],
            r,
        };
        let f = forcing.map(|f| f(state.t, r));
        let sys = principal_system(&ps, f).map_err(|e| locate(e, state.t, r))?;
        let (at, ap) = solve_accelerations(&sys).map_err(|e| locate(e, state.t, r))?;
        acc_theta[i] = at;
        acc_phi[i] = ap;
    }

    let mut out = Rhs {
        theta: state.theta_t.clone(),
        phi: state.phi_t.clone(),
        theta_t: acc_theta,
        phi_t: acc_phi,
    };
    if dissipation > 0.0 {
        let mut ko = vec![0.0; n];
        for (field, target) in [
            (&state.theta, &mut out.theta),
            (&state.phi, &mut out.phi),
            (&state.theta_t, &mut out.theta_t),
            (&state.phi_t, &mut out.phi_t),
        ] {
            kreiss_oliger(field, dr, dissipation, &mut ko);
            for i in 0..n {
                target[i] += ko[i];
            }
        }
    }
    Ok(out)
}

fn locate(e: Error, t: f64, r: f64) -> Error {
    match e {
        Error::HyperbolicityLoss { det, theta, .. } => Error::HyperbolicityLoss { t, r, det, theta },
        Error::NanDetected { .. } => Error::NanDetected { t, r },
        other => other,
    }
}

/// One classical RK4 step. The CFL bound uses the quasilinear speed
/// estimate 1 + 2 sup(|d theta|^2 + |d phi|^2); the scheme's stability
/// margin at the default cfl = 0.4 is ample.
pub fn step_rk4(
    state: &RadialState,
    dt: f64,
    grid: &RadialGrid,
    dissipation: f64,
    forcing: Option<Forcing>,
) -> Result<RadialState> {
    // RK4 with 4th-order central stencils is stable for dt v / dr up to
    // about 2.06; the guard leaves half of that margin.
    let speed = effective_speed_bound(state, grid);
    let dt_max = grid.dr / speed;
    if dt > dt_max {
        return Err(Error::CflViolation { dt, dt_max });
    }

    let k1 = rhs(state, grid, dissipation, forcing)?;
    let mut s2 = state.clone();
    s2.t = state.t + 0.5 * dt;
    s2.axpy(0.5 * dt, &k1);
    let k2 = rhs(&s2, grid, dissipation, forcing)?;
    let mut s3 = state.clone();
    s3.t = state.t + 0.5 * dt;
    s3.axpy(0.5 * dt, &k2);
    let k3 = rhs(&s3, grid, dissipation, forcing)?;
    let mut s4 = state.clone();
    s4.t = state.t + dt;
    s4.axpy(dt, &k3);
    let k4 = rhs(&s4, grid, dissipation, forcing)?;

    let mut out = state.clone();
    out.t = state.t + dt;
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    if !out.is_finite() {
        return Err(Error::NanDetected { t: out.t, r: f64::NAN });
    }
    Ok(out)
}

/// Characteristic speed bound monitored from the effective-metric model:
/// for either field pair (a, b) = (psi_t, psi_r) with weight c2 = cos^2
/// theta, the radial characteristics of g^{ab} - c2 (d^a psi d^b psi -
/// g^{ab} Q) satisfy
///   |v| <= (c2 |a b| + sqrt(1 + c2 (b^2 - a^2))) / (1 + c2 b^2),
/// which stays near 1 for outgoing-adapted data. The cross coupling is
/// covered by a 25 percent inflation.
pub fn effective_speed_bound(state: &RadialState, grid: &RadialGrid) -> f64 {
    let n = grid.n;
    let mut d_theta = vec![0.0; n];
    let mut d_phi = vec![0.0; n];
    deriv1_even(&state.theta, grid.dr, &mut d_theta);
    deriv1_even(&state.phi, grid.dr, &mut d_phi);
    let mut v = 1.0_f64;
    for i in 0..n {
        let c = math::cos(state.theta[i]);
        let c2 = c * c;
        for (a, b) in [
            (state.phi_t[i], d_phi[i]),
            (state.theta_t[i], d_theta[i]),
        ] {
            let disc = math::max(0.0, 1.0 + c2 * (b * b - a * a));
            let bound = (c2 * math::abs(a * b) + math::sqrt(disc)) / (1.0 + c2 * b * b);
            v = math::max(v, bound);
        }
    }
    1.25 * v
}

/// One stored time level.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub phi_t: Vec<f64>,
}

impl Snapshot {
    fn from_state(s: &RadialState) -> Self {
        Self {
            t: s.t,
            theta: s.theta.clone(),
            phi: s.phi.clone(),
            theta_t: s.theta_t.clone(),
            phi_t: s.phi_t.clone(),
        }
    }
}

/// Monitors accumulated over a run.
#[derive(Clone, Copy, Debug)]
pub struct RunStats {
    pub min_det: f64,
    /// min over the run of det(M) / cos^2 theta
    pub min_det_over_cos2: f64,
    pub argmin_t: f64,
    pub argmin_r: f64,
    /// worst |theta|, |phi| seen outside the causal support r >= t + 4 dr
    pub max_exterior: f64,
    /// sup |d theta|, |d phi| over the run (blow-up indicator input)
    pub sup_grad: f64,
    pub steps: usize,
}

impl Default for RunStats {
    fn default() -> Self {
        Self {
            min_det: f64::INFINITY,
            min_det_over_cos2: f64::INFINITY,
            argmin_t: 0.0,
            argmin_r: 0.0,
            max_exterior: 0.0,
            sup_grad: 0.0,
            steps: 0,
        }
    }
}

/// Uniform-cadence history of the evolution, the substrate for every cone
/// diagnostic. Snapshots are immutable once appended.
#[derive(Clone, Debug)]
pub struct History {
    pub grid: RadialGrid,
    pub delta: f64,
    pub cadence: f64,
    pub snaps: Vec<Snapshot>,
    pub stats: RunStats,
}

impl History {
    pub fn t0(&self) -> f64 {
        self.snaps[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.snaps[self.snaps.len() - 1].t
    }

    /// Bicubic (4x4 Lagrange) interpolation of an extracted quantity at
    /// (t, r). The extractor reads one grid value from a snapshot.
    pub fn interp(&self, extract: &dyn Fn(&Snapshot, usize) -> f64, t: f64, r: f64) -> Result<f64> {
        let m = self.snaps.len();
        if m < 4 || t < self.t0() - 1e-12 || t > self.t_end() + 1e-12 {
            return Err(Error::CoverageError {
                what: "time sample",
            });
        }
        if !(0.0..=self.grid.r_max() + 1e-12).contains(&r) {
            return Err(Error::CoverageError {
                what: "radius sample",
            });
        }
        let jt = lagrange_base(((t - self.t0()) / self.cadence) as isize, m);
        let jr = lagrange_base((r / self.grid.dr) as isize, self.grid.n);
        let xt = (t - self.snaps[jt].t) / self.cadence;
        let xr = (r - self.grid.radius(jr)) / self.grid.dr;
        let mut acc = 0.0;
        for (a, snap) in self.snaps[jt..jt + 4].iter().enumerate() {
            let mut row = 0.0;
            for b in 0..4 {
                row += lagrange_l(b, xr) * extract(snap, jr + b);
            }
            acc += lagrange_l(a, xt) * row;
        }
        Ok(acc)
    }
}

fn lagrange_base(near: isize, len: usize) -> usize {
    let start = near - 1;
    start.clamp(0, len as isize - 4) as usize
}

/// Lagrange basis polynomial l_a(x) on nodes {0, 1, 2, 3}.
fn lagrange_l(a: usize, x: f64) -> f64 {
    let mut num = 1.0;
    let mut den = 1.0;
    for b in 0..4 {
        if b == a {
            continue;
        }
        num *= x - b as f64;
        den *= a as f64 - b as f64;
    }
    num / den
}

/// A null cone: outgoing C_u (fixed u) or incoming Cbar_ubar (fixed ubar).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cone {
    /// u = (t - r)/2 fixed; parametrized by ubar.
    Outgoing(f64),
    /// ubar = (t + r)/2 fixed; parametrized by u.
    Incoming(f64),
}

impl Cone {
    /// (t, r) of the affine parameter value (ubar on C_u, u on Cbar_ubar).
    pub fn point(&self, par: f64) -> (f64, f64) {
        match *self {
            Cone::Outgoing(u) => (u + par, par - u),
            Cone::Incoming(ubar) => (par + ubar, ubar - par),
        }
    }
}

/// Sample an extracted quantity along a cone at `count` uniform affine
/// parameters in [par_lo, par_hi]; returns (parameter, r, value) triples.
pub fn sample_on_cone(
    history: &History,
    cone: Cone,
    par_lo: f64,
    par_hi: f64,
    count: usize,
    extract: &dyn Fn(&Snapshot, usize) -> f64,
) -> Result<Vec<(f64, f64, f64)>> {
    if count < 2 || par_hi <= par_lo {
        return Err(Error::InvalidInput("cone sampling needs count >= 2, hi > lo"));
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let par = par_lo + (par_hi - par_lo) * k as f64 / (count - 1) as f64;
        let (t, r) = cone.point(par);
        let v = history.interp(extract, t, r)?;
        out.push((par, r, v));
    }
    Ok(out)
}

/// Evolve short-pulse data from t = 1 to t_end, storing snapshots at the
/// uniform output cadence. Aborts cleanly on hyperbolicity loss, CFL
/// violation, non-finite values, or the gradient blow-up indicator.
pub fn run(
    spec: &PulseSpec,
    grid: &RadialGrid,
    params: &RunParams,
    forcing: Option<Forcing>,
) -> Result<History> {
    if params.t_end <= 1.0 {
        return Err(Error::InvalidInput("need t_end > 1"));
    }
    let data = generate(spec, &grid.radii(), grid.dr)?;
    let state = RadialState {
        t: 1.0,
        theta: data.theta0,
        phi: data.phi0,
        theta_t: data.theta1,
        phi_t: data.phi1,
    };
    evolve_from(state, grid, spec.delta, params, forcing)
}

/// Evolve an arbitrary initial state (used by manufactured-solution runs).
pub fn evolve_from(
    state0: RadialState,
    grid: &RadialGrid,
    delta: f64,
    params: &RunParams,
    forcing: Option<Forcing>,
) -> Result<History> {
    let (cadence, cfl) = (params.cadence, params.cfl);
    if cadence <= 0.0 || !(0.0 < cfl && cfl <= 0.7) || params.dissipation < 0.0 {
        return Err(Error::InvalidInput(
            "need cadence > 0, cfl in (0, 0.7], dissipation >= 0",
        ));
    }
    let steps_per_out = libm::ceil(cadence / (cfl * grid.dr)) as usize;
    let dt = cadence / steps_per_out as f64;
    let outputs = libm::round((params.t_end - state0.t) / cadence) as usize;

    let mut stats = RunStats::default();
    let mut snaps = Vec::with_capacity(outputs + 1);
    let mut state = state0;
    record(&state, grid, &mut stats)?;
    snaps.push(Snapshot::from_state(&state));

    for out_idx in 0..outputs {
        for _ in 0..steps_per_out {
            state = step_rk4(&state, dt, grid, params.dissipation, forcing)?;
            stats.steps += 1;
        }
        // Land exactly on the cadence grid (guards drift in t accumulation).
        state.t = snaps[0].t + cadence * (out_idx + 1) as f64;
        record(&state, grid, &mut stats)?;
        snaps.push(Snapshot::from_state(&state));
    }

    Ok(History {
        grid: *grid,
        delta,
        cadence,
        snaps,
        stats,
    })
}

/// Per-output monitors: hyperbolicity, exterior support leak, blow-up.
fn record(state: &RadialState, grid: &RadialGrid, stats: &mut RunStats) -> Result<()> {
    let n = grid.n;
    let dr = grid.dr;
    let mut d_theta = vec![0.0; n];
    let mut d_phi = vec![0.0; n];
    deriv1_even(&state.theta, dr, &mut d_theta);
    deriv1_even(&state.phi, dr, &mut d_phi);
    let mut sup_grad = 0.0_f64;
    for i in 0..n {
        let r = grid.radius(i);
        let cos_t = math::cos(state.theta[i]);
        let cos2 = cos_t * cos_t;
        let det = cos2
            * (1.0 + d_theta[i] * d_theta[i] + cos2 * d_phi[i] * d_phi[i]);
        if det < stats.min_det {
            stats.min_det = det;
            stats.argmin_t = state.t;
            stats.argmin_r = r;
        }
        stats.min_det_over_cos2 = math::min(stats.min_det_over_cos2, det / cos2);
        sup_grad = math::max(
            sup_grad,
            math::max(math::abs(d_theta[i]), math::abs(state.theta_t[i])),
        );
        sup_grad = math::max(
            sup_grad,
            math::max(math::abs(d_phi[i]), math::abs(state.phi_t[i])),
        );
        if r >= state.t + 4.0 * dr {
            stats.max_exterior = math::max(
                stats.max_exterior,
                math::max(math::abs(state.theta[i]), math::abs(state.phi[i])),
            );
        }
    }
    stats.sup_grad = math::max(stats.sup_grad, sup_grad);
    if sup_grad > 1e3 {
        return Err(Error::BlowUp {
            t: state.t,
            sup_grad,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faddeev::{manufactured_forcing, ManufacturedTarget};

    #[test]
    fn stencils_are_fourth_order() {
        // d/dr and d2/dr2 of an even smooth profile under refinement.
        let f = |r: f64| (0.3 * r * r).cos() * (-r * r / 4.0).exp();
        let df = |r: f64| {
            let q = 0.3 * r * r;
            -(q.sin() * 0.6 * r) * (-r * r / 4.0).exp() + q.cos() * (-r / 2.0) * (-r * r / 4.0).exp()
        };
        let mut errs = Vec::new();
        for n in [101usize, 201, 401] {
            let grid = RadialGrid::new(4.0, n).unwrap();
            let vals: Vec<f64> = grid.radii().iter().map(|&r| f(r)).collect();
            let mut d1 = vec![0.0; n];
            deriv1_even(&vals, grid.dr, &mut d1);
            let mut worst = 0.0_f64;
            // interior only: the outer edge uses zero ghosts
            for i in 0..(3 * n / 4) {
                worst = worst.max((d1[i] - df(grid.radius(i))).abs());
            }
            errs.push(worst);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 3.7 && order2 > 3.7, "orders {order1}, {order2}");
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = RadialGrid::new(3.0, 64).unwrap();
        let s = RadialState::zero(1.0, grid.n);
        let k = rhs(&s, &grid, 0.0, None).unwrap();
        assert!(k.theta_t.iter().all(|&v| v == 0.0));
        let s2 = step_rk4(&s, 0.4 * grid.dr, &grid, 0.0, None).unwrap();
        assert!(s2.sup_fields() == 0.0);
    }

    #[test]
    fn cfl_violation_rejected() {
        let grid = RadialGrid::new(3.0, 64).unwrap();
        let s = RadialState::zero(1.0, grid.n);
        assert!(matches!(
            step_rk4(&s, grid.dr, &grid, 0.0, None),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn tiny_pulse_rhs_matches_linear_wave() {
        // At amplitude 1e-6 the accelerations equal the discrete radial
        // Laplacian to relative 1e-5 (the nonlinear terms are quadratic).
        let delta = 0.1;
        let mut spec = PulseSpec::new(delta).unwrap();
        spec.amp_theta = 1e-6;
        spec.amp_phi = 1e-6;
        let grid = RadialGrid::new(2.0, 513).unwrap();
        let data = generate(&spec, &grid.radii(), grid.dr).unwrap();
        let state = RadialState {
            t: 1.0,
            theta: data.theta0,
            phi: data.phi0,
            theta_t: data.theta1,
            phi_t: data.phi1,
        };
        let k = rhs(&state, &grid, 0.0, None).unwrap();
        let mut dd = vec![0.0; grid.n];
        let mut d1 = vec![0.0; grid.n];
        deriv2_even(&state.theta, grid.dr, &mut dd);
        deriv1_even(&state.theta, grid.dr, &mut d1);
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..grid.n {
            let r = grid.radius(i);
            let lap = if i == 0 {
                3.0 * dd[0]
            } else {
                dd[i] + 2.0 * d1[i] / r
            };
            worst = worst.max((k.theta_t[i] - lap).abs());
            scale = scale.max(lap.abs());
        }
        assert!(worst <= 1e-5 * scale, "rel dev {}", worst / scale);
    }

    #[test]
    fn discrete_rhs_converges_to_exact_jets_at_order_four() {
        let target = ManufacturedTarget::default();
        let t = 1.2;
        let mut errs = Vec::new();
        for n in [201usize, 401, 801] {
            let grid = RadialGrid::new(6.0, n).unwrap();
            let mut state = RadialState::zero(t, n);
            for i in 0..n {
                let s = target.state(t, grid.radius(i));
                state.theta[i] = s.theta;
                state.phi[i] = s.phi;
                state.theta_t[i] = s.dt_theta;
                state.phi_t[i] = s.dt_phi;
            }
            let k = rhs(&state, &grid, 0.0, None).unwrap();
            let mut worst = 0.0_f64;
            for i in 0..n / 2 {
                let (th, _ph) = target.jets(t, grid.radius(i));
                // exact forced acceleration = unforced jet acceleration
                // difference is the manufactured forcing; compare against
                // the exact accelerations of the forced system instead:
                // solve with exact state and no forcing.
                let s = target.state(t, grid.radius(i));
                let ps = crate::faddeev::principal_system(&s, None).unwrap();
                let (at, _) = crate::faddeev::solve_accelerations(&ps).unwrap();
                let _ = th;
                worst = worst.max((k.theta_t[i] - at).abs());
            }
            errs.push(worst);
        }
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 > 3.5 && o2 > 3.5, "orders {o1}, {o2}");
    }

    #[test]
    fn manufactured_solution_order_at_least_three_and_a_half() {
        // Short forced evolution against the exact target.
        let target = ManufacturedTarget::default();
        let forcing = move |t: f64, r: f64| manufactured_forcing(&target, t, r).unwrap();
        let t_end = 1.25;
        let mut errs = Vec::new();
        for n in [135usize, 269, 537] {
            let grid = RadialGrid::new(8.0, n).unwrap();
            let mut state = RadialState::zero(1.0, n);
            for i in 0..n {
                let s = target.state(1.0, grid.radius(i));
                state.theta[i] = s.theta;
                state.phi[i] = s.phi;
                state.theta_t[i] = s.dt_theta;
                state.phi_t[i] = s.dt_phi;
            }
            let hist = evolve_from(
                state,
                &grid,
                0.1,
                &RunParams::new(t_end, 0.125),
                Some(&forcing),
            )
            .unwrap();
            let last = &hist.snaps[hist.snaps.len() - 1];
            let mut l2 = 0.0;
            for i in 0..n {
                let s = target.state(last.t, grid.radius(i));
                l2 += (last.theta[i] - s.theta).powi(2) + (last.phi[i] - s.phi).powi(2);
            }
            errs.push((l2 * grid.dr).sqrt());
        }
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 >= 3.5 && o2 >= 3.5, "orders {o1}, {o2}");
    }

    #[test]
    fn time_reversal_recovers_data_in_linear_regime() {
        let delta = 0.1;
        let mut spec = PulseSpec::new(delta).unwrap();
        spec.amp_theta = 1e-6;
        spec.amp_phi = 1e-6;
        let grid = RadialGrid::new(2.2, 2049).unwrap();
        let hist = run(&spec, &grid, &RunParams::new(1.5, 0.25), None).unwrap();
        let last = &hist.snaps[hist.snaps.len() - 1];
        let mut rev = RadialState {
            t: 0.0,
            theta: last.theta.clone(),
            phi: last.phi.clone(),
            theta_t: last.theta_t.iter().map(|v| -v).collect(),
            phi_t: last.phi_t.iter().map(|v| -v).collect(),
        };
        let back = evolve_from(rev.clone(), &grid, delta, &RunParams::new(0.5, 0.25), None).unwrap();
        rev = RadialState {
            t: back.snaps.last().unwrap().t,
            theta: back.snaps.last().unwrap().theta.clone(),
            phi: back.snaps.last().unwrap().phi.clone(),
            theta_t: back.snaps.last().unwrap().theta_t.clone(),
            phi_t: back.snaps.last().unwrap().phi_t.clone(),
        };
        let data = generate(&spec, &grid.radii(), grid.dr).unwrap();
        let amp = spec.amp_theta * delta;
        let mut worst = 0.0_f64;
        for i in 0..grid.n {
            worst = worst.max((rev.theta[i] - data.theta0[i]).abs());
        }
        assert!(worst <= 1e-6 * amp, "reversal error {}", worst / amp);
    }

    #[test]
    fn zero_data_run_is_identically_zero() {
        let mut spec = PulseSpec::new(0.1).unwrap();
        spec.amp_theta = 0.0;
        spec.amp_phi = 0.0;
        let grid = RadialGrid::new(3.0, 257).unwrap();
        let hist = run(&spec, &grid, &RunParams::new(2.0, 0.25), None).unwrap();
        for snap in &hist.snaps {
            for i in 0..grid.n {
                assert!(snap.theta[i].abs() <= 1e-12);
                assert!(snap.phi[i].abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn finite_speed_region_three_trivial() {
        let mut spec = PulseSpec::new(0.1).unwrap();
        spec.amp_theta = 0.25;
        spec.amp_phi = 0.25;
        let grid = RadialGrid::new(6.2, 1025).unwrap();
        let hist = run(&spec, &grid, &RunParams::new(5.0, 0.1), None).unwrap();
        assert!(
            hist.stats.max_exterior <= 1e-6,
            "exterior leak {}",
            hist.stats.max_exterior
        );
        for snap in &hist.snaps {
            for i in 0..grid.n {
                let r = grid.radius(i);
                if r >= snap.t + 4.0 * grid.dr {
                    assert!(snap.theta[i].abs() <= 1e-6);
                    assert!(snap.phi[i].abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn cone_sampling_geometry_and_constants() {
        // Constant-in-space field: samples are constant; u = 0 cone points
        // satisfy r = t.
        let grid = RadialGrid::new(8.0, 257).unwrap();
        let mut snaps = Vec::new();
        for j in 0..33 {
            let t = 1.0 + 0.25 * j as f64;
            let mut s = Snapshot {
                t,
                theta: vec![0.0; grid.n],
                phi: vec![0.0; grid.n],
                theta_t: vec![0.0; grid.n],
                phi_t: vec![0.0; grid.n],
            };
            for v in s.theta.iter_mut() {
                *v = 0.7;
            }
            snaps.push(s);
        }
        let hist = History {
            grid,
            delta: 0.1,
            cadence: 0.25,
            snaps,
            stats: RunStats::default(),
        };
        let samples = sample_on_cone(&hist, Cone::Outgoing(0.0), 1.0, 4.0, 16, &|s, i| {
            s.theta[i]
        })
        .unwrap();
        for (par, r, v) in samples {
            assert!((v - 0.7).abs() < 1e-12);
            let (t, rr) = Cone::Outgoing(0.0).point(par);
            assert!((rr - r).abs() < 1e-14);
            assert!((t - r).abs() < 1e-12, "u = 0 means r = t");
        }
        // Out-of-coverage cones error.
        assert!(sample_on_cone(&hist, Cone::Outgoing(0.0), 5.0, 20.0, 8, &|s, i| s.theta[i])
            .is_err());
    }

    #[test]
    fn interpolation_is_at_least_third_order() {
        let f = |t: f64, r: f64| (0.9 * t + 0.3 * r * r).sin();
        let mut errs = Vec::new();
        for lvl in 0..3 {
            let n = 65 * (1 << lvl) + 1;
            let cad = 0.2 / (1 << lvl) as f64;
            let grid = RadialGrid::new(4.0, n).unwrap();
            let snaps: Vec<Snapshot> = (0..(1 + (1 << lvl) * 10))
                .map(|j| {
                    let t = 1.0 + cad * j as f64;
                    Snapshot {
                        t,
                        theta: grid.radii().iter().map(|&r| f(t, r)).collect(),
                        phi: vec![0.0; grid.n],
                        theta_t: vec![0.0; grid.n],
                        phi_t: vec![0.0; grid.n],
                    }
                })
                .collect();
            let hist = History {
                grid,
                delta: 0.1,
                cadence: cad,
                snaps,
                stats: RunStats::default(),
            };
            let mut worst = 0.0_f64;
            for k in 0..200 {
                let t = 1.05 + 1.7 * (k as f64 / 200.0);
                let r = 0.3 + 3.0 * ((k * 7 % 200) as f64 / 200.0);
                let v = hist.interp(&|s, i| s.theta[i], t, r).unwrap();
                worst = worst.max((v - f(t, r)).abs());
            }
            errs.push(worst);
        }
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 >= 3.0 && o2 >= 3.0, "orders {o1}, {o2}");
    }
}

//! Paper-facing measurements over an evolution history: derived fields
//! theta_{k,l}, cone flux energies, multiplier energies with their coercive
//! models, energy-identity residuals, decay and delta-scaling fits, and the
//! transport check on the cone u = delta.
//!
//! Derived fields are realized as operator words in {d_t, d_r, B, S} applied
//! to the stored snapshots by nested 4th-order finite differences; rotations
//! annihilate radial fields, and |Omega_{0i} psi| reduces to |B psi| with
//! B = t d_r + r d_t.

use crate::error::{Error, Result};
use crate::evolve::{History, Snapshot};
use crate::faddeev::{principal_system, solve_accelerations, PointState};
use crate::math;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Which stored field a derived word acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Base {
    Theta,
    Phi,
    ThetaT,
    PhiT,
}

/// Operator letters. Words are stored outermost first, so
/// `[Dt, BoostB]` means d_t (B psi).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Dt,
    Dr,
    /// B = t d_r + r d_t, the radial realization of the Lorentz boosts.
    BoostB,
    /// S = t d_t + r d_r.
    ScaleS,
}

impl Op {
    pub fn letter(&self) -> &'static str {
        match self {
            Op::Dt => "dt",
            Op::Dr => "dr",
            Op::BoostB => "B",
            Op::ScaleS => "S",
        }
    }

    fn is_partial(&self) -> bool {
        matches!(self, Op::Dt | Op::Dr)
    }
}

/// A derived field theta_{k,l} (or phi_{k,l}): delta^l (partials)^l
/// (Gamma)^{k-l} applied to the base field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedField {
    pub base: Base,
    pub k: usize,
    pub l: usize,
    pub word: Vec<Op>,
}

impl DerivedField {
    pub fn name(&self) -> String {
        let base = match self.base {
            Base::Theta => "theta",
            Base::Phi => "phi",
            Base::ThetaT => "theta_t",
            Base::PhiT => "phi_t",
        };
        if self.word.is_empty() {
            return format!("{base}");
        }
        let ops: Vec<&str> = self.word.iter().map(|o| o.letter()).collect();
        format!("{}({})", ops.join("*"), base)
    }

    /// delta^l weight applied exactly once, here.
    pub fn weight(&self, delta: f64) -> f64 {
        libm::pow(delta, self.l as f64)
    }
}

/// All operator words for 0 <= l <= k <= k_max (k_max <= 2) over one base
/// field: partial letters {d_t, d_r} outside, Gamma letters {B, S} inside.
pub fn derived_words(base: Base, k_max: usize) -> Vec<DerivedField> {
    let partials = [Op::Dt, Op::Dr];
    let gammas = [Op::BoostB, Op::ScaleS];
    let mut out = Vec::new();
    for k in 0..=k_max.min(2) {
        for l in 0..=k {
            // all words with l partial letters then k-l Gamma letters
            let mut words: Vec<Vec<Op>> = vec![Vec::new()];
            for _ in 0..l {
                let mut next = Vec::new();
                for w in &words {
                    for p in partials {
                        let mut w2 = w.clone();
                        w2.push(p);
                        next.push(w2);
                    }
                }
                words = next;
            }
            for _ in 0..(k - l) {
                let mut next = Vec::new();
                for w in &words {
                    for g in gammas {
                        let mut w2 = w.clone();
                        w2.push(g);
                        next.push(w2);
                    }
                }
                words = next;
            }
            for word in words {
                debug_assert!(word.iter().take(l).all(Op::is_partial));
                out.push(DerivedField { base, k, l, word });
            }
        }
    }
    out
}

/// Point evaluator for derived words over a history, by nested 4th-order
/// finite differences at snapshot-aligned nodes and bicubic interpolation
/// in between.
pub struct Sampler<'a> {
    pub hist: &'a History,
}

impl<'a> Sampler<'a> {
    pub fn new(hist: &'a History) -> Self {
        Self { hist }
    }

    fn read(&self, base: Base, j: usize, i: usize) -> f64 {
        let s: &Snapshot = &self.hist.snaps[j];
        match base {
            Base::Theta => s.theta[i],
            Base::Phi => s.phi[i],
            Base::ThetaT => s.theta_t[i],
            Base::PhiT => s.phi_t[i],
        }
    }

    /// Derived word value at the aligned node (snapshot j, grid index i).
    pub fn at_aligned(&self, base: Base, word: &[Op], j: usize, i: usize) -> Result<f64> {
        let m = self.hist.snaps.len();
        let n = self.hist.grid.n;
        let depth = 2 * word.len();
        if j < depth || j + depth >= m || i < depth || i + depth >= n {
            return Err(Error::CoverageError {
                what: "derived-field stencil",
            });
        }
        self.eval(base, word, j, i)
    }

    fn eval(&self, base: Base, word: &[Op], j: usize, i: usize) -> Result<f64> {
        let Some((op, rest)) = word.split_first() else {
            return Ok(self.read(base, j, i));
        };
        // The innermost time derivative of theta/phi is stored exactly;
        // finite differences in t only enter for nested time structure.
        let time_conjugate = |b: Base| match b {
            Base::Theta => Some(Base::ThetaT),
            Base::Phi => Some(Base::PhiT),
            _ => None,
        };
        let dt_of = |s: &Self| -> Result<f64> {
            if rest.is_empty() {
                if let Some(tb) = time_conjugate(base) {
                    return Ok(s.read(tb, j, i));
                }
            }
            Ok((s.eval(base, rest, j - 2, i)? - 8.0 * s.eval(base, rest, j - 1, i)?
                + 8.0 * s.eval(base, rest, j + 1, i)?
                - s.eval(base, rest, j + 2, i)?)
                / (12.0 * self.hist.cadence))
        };
        let dr_of = |s: &Self| -> Result<f64> {
            Ok((s.eval(base, rest, j, i - 2)? - 8.0 * s.eval(base, rest, j, i - 1)?
                + 8.0 * s.eval(base, rest, j, i + 1)?
                - s.eval(base, rest, j, i + 2)?)
                / (12.0 * self.hist.grid.dr))
        };
        let t = self.hist.snaps[j].t;
        let r = self.hist.grid.radius(i);
        match op {
            Op::Dt => dt_of(self),
            Op::Dr => dr_of(self),
            Op::BoostB => Ok(t * dr_of(self)? + r * dt_of(self)?),
            Op::ScaleS => Ok(t * dt_of(self)? + r * dr_of(self)?),
        }
    }

    /// Bicubic interpolation of the derived word at arbitrary (t, r).
    pub fn value(&self, base: Base, word: &[Op], t: f64, r: f64) -> Result<f64> {
        let m = self.hist.snaps.len();
        let n = self.hist.grid.n;
        let margin = 2 * word.len();
        let cad = self.hist.cadence;
        let dr = self.hist.grid.dr;
        let jt = (((t - self.hist.t0()) / cad) as isize - 1)
            .clamp(margin as isize, m as isize - 4 - margin as isize) as usize;
        let jr = ((r / dr) as isize - 1).clamp(margin as isize, n as isize - 4 - margin as isize)
            as usize;
        if t < self.hist.t0() - 1e-9 || t > self.hist.t_end() + 1e-9 {
            return Err(Error::CoverageError { what: "time sample" });
        }
        let xt = (t - self.hist.snaps[jt].t) / cad;
        let xr = (r - self.hist.grid.radius(jr)) / dr;
        let mut acc = 0.0;
        for a in 0..4 {
            let mut row = 0.0;
            for b in 0..4 {
                row += lagrange_l(b, xr) * self.at_aligned(base, word, jt + a, jr + b)?;
            }
            acc += lagrange_l(a, xt) * row;
        }
        Ok(acc)
    }

    /// L or Lbar (or a plain partial) of a derived word at (t, r).
    pub fn null_deriv(&self, base: Base, word: &[Op], op: NullOp, t: f64, r: f64) -> Result<f64> {
        let mut w = Vec::with_capacity(word.len() + 1);
        match op {
            NullOp::Value => return self.value(base, word, t, r),
            NullOp::L | NullOp::Lbar => {
                w.push(Op::Dt);
                let mut wr = Vec::with_capacity(word.len() + 1);
                wr.push(Op::Dr);
                wr.extend_from_slice(word);
                w.extend_from_slice(word);
                let dt = self.value(base, &w, t, r)?;
                let dr = self.value(base, &wr, t, r)?;
                Ok(match op {
                    NullOp::L => dt + dr,
                    _ => dt - dr,
                })
            }
            NullOp::Dt => {
                w.push(Op::Dt);
                w.extend_from_slice(word);
                self.value(base, &w, t, r)
            }
            NullOp::Dr => {
                w.push(Op::Dr);
                w.extend_from_slice(word);
                self.value(base, &w, t, r)
            }
        }
    }

    /// Assemble the full point state at (t, r) with spatial derivatives from
    /// the sampler (for equation-substituted Box psi).
    pub fn point_state(&self, t: f64, r: f64) -> Result<PointState> {
        let g = |b, w: &[Op]| self.value(b, w, t, r);
        Ok(PointState {
            theta: g(Base::Theta, &[])?,
            phi: g(Base::Phi, &[])?,
            dt_theta: g(Base::ThetaT, &[])?,
            dt_phi: g(Base::PhiT, &[])?,
            dr_theta: g(Base::Theta, &[Op::Dr])?,
            dr_phi: g(Base::Phi, &[Op::Dr])?,
            drr_theta: g(Base::Theta, &[Op::Dr, Op::Dr])?,
            drr_phi: g(Base::Phi, &[Op::Dr, Op::Dr])?,
            dtr_theta: g(Base::ThetaT, &[Op::Dr])?,
            dtr_phi: g(Base::PhiT, &[Op::Dr])?,
            r,
        })
    }

    /// Box psi for psi = theta or phi, substituted from the evolved
    /// equations: Box psi = -psi_tt + Delta psi with psi_tt from the
    /// principal solve at the sampled state.
    pub fn box_from_equations(&self, base: Base, t: f64, r: f64) -> Result<f64> {
        let s = self.point_state(t, r)?;
        let ps = principal_system(&s, None)?;
        let (at, ap) = solve_accelerations(&ps)?;
        Ok(match base {
            Base::Theta => -at + s.laplacian_theta(),
            Base::Phi => -ap + s.laplacian_phi(),
            _ => return Err(Error::InvalidInput("box only for theta, phi")),
        })
    }
}

/// Which first derivative to take of a derived field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullOp {
    Value,
    L,
    Lbar,
    Dt,
    Dr,
}

impl NullOp {
    pub fn name(&self) -> &'static str {
        match self {
            NullOp::Value => "",
            NullOp::L => "L",
            NullOp::Lbar => "Lbar",
            NullOp::Dt => "dt",
            NullOp::Dr => "dr",
        }
    }
}

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

// ---------------------------------------------------------------------------
// Region masks
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// u >= delta: small-data interior.
    I,
    /// 0 <= u <= delta: the short-pulse strip.
    II,
    /// u <= 0: trivial exterior.
    III,
}

pub fn region_of(t: f64, r: f64, delta: f64) -> Region {
    let u = 0.5 * (t - r);
    if u < 0.0 {
        Region::III
    } else if u <= delta {
        Region::II
    } else {
        Region::I
    }
}

// ---------------------------------------------------------------------------
// Cone flux energies
// ---------------------------------------------------------------------------

fn cone_nodes(lo: f64, hi: f64, step_hint: f64) -> Vec<f64> {
    let n = libm::ceil((hi - lo) / step_hint) as usize + 1;
    let n = n.max(9);
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn riemann_left(nodes: &[f64], vals: &[f64]) -> f64 {
    let mut acc = 0.0;
    for w in 0..nodes.len() - 1 {
        acc += vals[w] * (nodes[w + 1] - nodes[w]);
    }
    acc
}

fn trapezoid(nodes: &[f64], vals: &[f64]) -> f64 {
    let mut acc = 0.0;
    for w in 0..nodes.len() - 1 {
        acc += 0.5 * (vals[w] + vals[w + 1]) * (nodes[w + 1] - nodes[w]);
    }
    acc
}

/// Flux contributions of one derived pair level: returns
/// (outgoing flux 4 pi int |L psi_k|^2 r^2 dubar over C_u,
///  incoming flux 4 pi int |Lbar psi_k|^2 r^2 du over Cbar_ubar),
/// summed over both fields and all words of order k, delta-weighted.
pub fn cone_flux_k(hist: &History, k: usize, u: f64, ubar: f64) -> Result<(f64, f64)> {
    let sampler = Sampler::new(hist);
    let delta = hist.delta;
    let words: Vec<DerivedField> = derived_words(Base::Theta, k)
        .into_iter()
        .chain(derived_words(Base::Phi, k))
        .filter(|w| w.k == k)
        .collect();

    let step = math::max(hist.cadence, 2.0 * hist.grid.dr);
    // Outgoing cone C_u: ubar' from the initial slice (t=1) to ubar.
    let out_nodes = cone_nodes(1.0 - u, ubar, step);
    // Incoming cone Cbar_ubar: u' from C_0 to u.
    let in_nodes = cone_nodes(0.0, u, math::min(step, math::max(u / 16.0, 1e-12)));

    let mut out_flux = 0.0;
    let mut in_flux = 0.0;
    for df in &words {
        let wgt = df.weight(delta);
        let mut vals = Vec::with_capacity(out_nodes.len());
        for &ub in &out_nodes {
            let (t, r) = (u + ub, ub - u);
            let v = wgt * sampler.null_deriv(df.base, &df.word, NullOp::L, t, r)?;
            vals.push(v * v * r * r);
        }
        out_flux += trapezoid(&out_nodes, &vals);
        let mut vals = Vec::with_capacity(in_nodes.len());
        for &uu in &in_nodes {
            let (t, r) = (uu + ubar, ubar - uu);
            let v = wgt * sampler.null_deriv(df.base, &df.word, NullOp::Lbar, t, r)?;
            vals.push(v * v * r * r);
        }
        in_flux += trapezoid(&in_nodes, &vals);
    }
    let four_pi = 4.0 * core::f64::consts::PI;
    Ok((four_pi * out_flux, four_pi * in_flux))
}

/// The k-th order homogeneous energies: delta^2 E_k^2 = outgoing flux,
/// delta Ebar_k^2 = incoming flux (tangential terms vanish identically for
/// radial fields).
pub fn cone_energies(hist: &History, k: usize, u: f64, ubar: f64) -> Result<(f64, f64)> {
    let (out_flux, in_flux) = cone_flux_k(hist, k, u, ubar)?;
    let d = hist.delta;
    Ok((out_flux / (d * d), in_flux / d))
}

// ---------------------------------------------------------------------------
// Multiplier energies and coercivity
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultScheme {
    /// Ltilde = L + ((L theta)^2 + (L phi)^2) Lbar
    LTilde,
    /// Lbartilde = Lbar + ((Lbar theta)^2 + (Lbar phi)^2) L
    LbarTilde,
}

impl MultScheme {
    pub fn name(&self) -> &'static str {
        match self {
            MultScheme::LTilde => "Ltilde",
            MultScheme::LbarTilde => "Lbartilde",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeSide {
    /// E^2 on the outgoing cone C_u.
    Outgoing,
    /// Ebar^2 on the incoming cone Cbar_ubar.
    Incoming,
}

impl ConeSide {
    pub fn name(&self) -> &'static str {
        match self {
            ConeSide::Outgoing => "C_u",
            ConeSide::Incoming => "Cbar_ubar",
        }
    }
}

/// First derivatives of the base pair and a derived pair at one point.
struct EnergyPoint {
    l_th: f64,
    lb_th: f64,
    l_ph: f64,
    lb_ph: f64,
    l_thk: f64,
    lb_thk: f64,
    l_phk: f64,
    lb_phk: f64,
    cos2: f64,
}

impl EnergyPoint {
    fn q(lxa: f64, lba: f64, lxb: f64, lbb: f64) -> f64 {
        // radial null form in L/Lbar components
        -0.5 * (lxa * lbb + lba * lxb)
    }

    /// Measured multiplier-energy integrand and its coercive model.
    fn integrand(&self, scheme: MultScheme, side: ConeSide) -> (f64, f64) {
        let c2 = self.cos2;
        let f = self.l_th * self.l_th + self.l_ph * self.l_ph;
        let fb = self.lb_th * self.lb_th + self.lb_ph * self.lb_ph;
        let q = EnergyPoint::q;
        // null forms between base and derived fields
        let q_pp = q(self.l_ph, self.lb_ph, self.l_ph, self.lb_ph);
        let q_tt = q(self.l_th, self.lb_th, self.l_th, self.lb_th);
        let q_tp = q(self.l_th, self.lb_th, self.l_ph, self.lb_ph);
        let q_p_thk = q(self.l_ph, self.lb_ph, self.l_thk, self.lb_thk);
        let q_p_phk = q(self.l_ph, self.lb_ph, self.l_phk, self.lb_phk);
        let q_t_thk = q(self.l_th, self.lb_th, self.l_thk, self.lb_thk);
        let q_t_phk = q(self.l_th, self.lb_th, self.l_phk, self.lb_phk);
        let q_thk_thk = q(self.l_thk, self.lb_thk, self.l_thk, self.lb_thk);
        let q_phk_phk = q(self.l_phk, self.lb_phk, self.l_phk, self.lb_phk);
        let q_thk_phk = q(self.l_thk, self.lb_thk, self.l_phk, self.lb_phk);

        match (scheme, side) {
            (MultScheme::LTilde, ConeSide::Outgoing) => {
                let xt = self.l_thk + f * self.lb_thk;
                let xp = self.l_phk + f * self.lb_phk;
                let p11 = c2 * (self.l_ph * q_p_thk - q_pp * self.l_thk) * xt
                    + f * c2 * (q_p_thk * q_p_thk - q_pp * q_thk_thk);
                let p21 = c2 * (q_tp * self.l_phk - self.l_th * q_p_phk) * xt
                    + 2.0 * f * c2 * (q_tp * q_thk_phk - q_t_thk * q_p_phk);
                let p31 = c2 * (self.l_th * q_t_phk - q_tt * self.l_phk) * xp
                    + f * c2 * (q_t_phk * q_t_phk - q_tt * q_phk_phk);
                let p41 = c2 * (q_tp * self.l_thk - self.l_ph * q_t_thk) * xp;
                let measured = self.l_thk * self.l_thk
                    + c2 * self.l_phk * self.l_phk
                    - (p11 + p21 + p31 + p41);
                let cross = self.l_ph * self.lb_thk - self.l_th * self.lb_phk;
                let model =
                    self.l_thk * self.l_thk + self.l_phk * self.l_phk + f * cross * cross;
                (measured, model)
            }
            (MultScheme::LTilde, ConeSide::Incoming) => {
                let xt = self.l_thk + f * self.lb_thk;
                let xp = self.l_phk + f * self.lb_phk;
                let p12 = c2 * (self.lb_ph * q_p_thk - q_pp * self.lb_thk) * xt
                    + c2 * (q_p_thk * q_p_thk - q_pp * q_thk_thk);
                let p22 = c2 * (q_tp * self.lb_phk - self.lb_th * q_p_phk) * xt
                    + 2.0 * c2 * (q_tp * q_thk_phk - q_t_thk * q_p_phk);
                let p32 = c2 * (self.lb_th * q_t_phk - q_tt * self.lb_phk) * xp
                    + c2 * (q_t_phk * q_t_phk - q_tt * q_phk_phk);
                let p42 = c2 * (q_tp * self.lb_thk - self.lb_ph * q_t_thk) * xp;
                let measured = f * self.lb_thk * self.lb_thk
                    + c2 * f * self.lb_phk * self.lb_phk
                    - (p12 + p22 + p32 + p42);
                let cross = self.lb_ph * self.l_thk - self.lb_th * self.l_phk;
                let model = f * (self.lb_thk * self.lb_thk + self.lb_phk * self.lb_phk)
                    + cross * cross;
                (measured, model)
            }
            (MultScheme::LbarTilde, ConeSide::Outgoing) => {
                let xt = self.lb_thk + fb * self.l_thk;
                let xp = self.lb_phk + fb * self.l_phk;
                let p11 = c2 * (self.l_ph * q_p_thk - q_pp * self.l_thk) * xt
                    + c2 * (q_p_thk * q_p_thk - q_pp * q_thk_thk);
                let p21 = c2 * (q_tp * self.l_phk - self.l_th * q_p_phk) * xt
                    + 2.0 * c2 * (q_tp * q_thk_phk - q_t_thk * q_p_phk);
                let p31 = c2 * (self.l_th * q_t_phk - q_tt * self.l_phk) * xp
                    + c2 * (q_t_phk * q_t_phk - q_tt * q_phk_phk);
                let p41 = c2 * (q_tp * self.l_thk - self.l_ph * q_t_thk) * xp;
                let measured = fb * self.l_thk * self.l_thk
                    + c2 * fb * self.l_phk * self.l_phk
                    - (p11 + p21 + p31 + p41);
                let cross = self.l_ph * self.lb_thk - self.l_th * self.lb_phk;
                let model = fb * (self.l_thk * self.l_thk + self.l_phk * self.l_phk)
                    + cross * cross;
                (measured, model)
            }
            (MultScheme::LbarTilde, ConeSide::Incoming) => {
                let xt = self.lb_thk + fb * self.l_thk;
                let xp = self.lb_phk + fb * self.l_phk;
                let p12 = c2 * (self.lb_ph * q_p_thk - q_pp * self.lb_thk) * xt
                    + fb * c2 * (q_p_thk * q_p_thk - q_pp * q_thk_thk);
                let p22 = c2 * (q_tp * self.lb_phk - self.lb_th * q_p_phk) * xt
                    + 2.0 * fb * c2 * (q_tp * q_thk_phk - q_t_thk * q_p_phk);
                let p32 = c2 * (self.lb_th * q_t_phk - q_tt * self.lb_phk) * xp
                    + fb * c2 * (q_t_phk * q_t_phk - q_tt * q_phk_phk);
                let p42 = c2 * (q_tp * self.lb_thk - self.lb_ph * q_t_thk) * xp;
                let measured = self.lb_thk * self.lb_thk
                    + c2 * self.lb_phk * self.lb_phk
                    - (p12 + p22 + p32 + p42);
                let cross = self.lb_ph * self.l_thk - self.lb_th * self.l_phk;
                let model = self.lb_thk * self.lb_thk
                    + self.lb_phk * self.lb_phk
                    + fb * cross * cross;
                (measured, model)
            }
        }
    }
}

/// Multiplier energy of the (k, l) level on one cone, integrated with the
/// same quadrature for the measured value and the coercive model; returns
/// (measured, model, ratio). Zero fields report ratio 1 by convention.
pub fn multiplier_energy(
    hist: &History,
    k: usize,
    l: usize,
    scheme: MultScheme,
    side: ConeSide,
    u: f64,
    ubar: f64,
) -> Result<(f64, f64, f64)> {
    let sampler = Sampler::new(hist);
    let delta = hist.delta;
    let words: Vec<DerivedField> = derived_words(Base::Theta, k)
        .into_iter()
        .filter(|w| w.k == k && w.l == l)
        .collect();
    if words.is_empty() {
        return Err(Error::InvalidInput("no derived words at this (k, l)"));
    }

    let step = math::max(hist.cadence, 2.0 * hist.grid.dr);
    let nodes = match side {
        ConeSide::Outgoing => cone_nodes(1.0 - u, ubar, step),
        ConeSide::Incoming => cone_nodes(0.0, u, math::min(step, math::max(u / 16.0, 1e-12))),
    };

    let mut measured = 0.0;
    let mut model = 0.0;
    for df in &words {
        let wgt = df.weight(delta);
        let phi_word = DerivedField {
            base: Base::Phi,
            ..df.clone()
        };
        let mut mi = Vec::with_capacity(nodes.len());
        let mut mo = Vec::with_capacity(nodes.len());
        for &par in &nodes {
            let (t, r) = match side {
                ConeSide::Outgoing => (u + par, par - u),
                ConeSide::Incoming => (par + ubar, ubar - par),
            };
            let theta = sampler.value(Base::Theta, &[], t, r)?;
            let ep = EnergyPoint {
                l_th: sampler.null_deriv(Base::Theta, &[], NullOp::L, t, r)?,
                lb_th: sampler.null_deriv(Base::Theta, &[], NullOp::Lbar, t, r)?,
                l_ph: sampler.null_deriv(Base::Phi, &[], NullOp::L, t, r)?,
                lb_ph: sampler.null_deriv(Base::Phi, &[], NullOp::Lbar, t, r)?,
                l_thk: wgt * sampler.null_deriv(df.base, &df.word, NullOp::L, t, r)?,
                lb_thk: wgt * sampler.null_deriv(df.base, &df.word, NullOp::Lbar, t, r)?,
                l_phk: wgt * sampler.null_deriv(phi_word.base, &phi_word.word, NullOp::L, t, r)?,
                lb_phk: wgt
                    * sampler.null_deriv(phi_word.base, &phi_word.word, NullOp::Lbar, t, r)?,
                cos2: math::cos(theta) * math::cos(theta),
            };
            let (m, mdl) = ep.integrand(scheme, side);
            mi.push(m * r * r);
            mo.push(mdl * r * r);
        }
        measured += trapezoid(&nodes, &mi);
        model += trapezoid(&nodes, &mo);
    }
    let four_pi = 4.0 * core::f64::consts::PI;
    measured *= four_pi;
    model *= four_pi;
    let ratio = if model == 0.0 && measured == 0.0 {
        1.0
    } else if model == 0.0 {
        f64::INFINITY
    } else {
        measured / model
    };
    Ok((measured, model, ratio))
}

// ---------------------------------------------------------------------------
// Energy identity over D_{u, ubar}
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdentityMultiplier {
    Dt,
    L,
    Lbar,
    LTilde,
    LbarTilde,
}

impl IdentityMultiplier {
    pub fn name(&self) -> &'static str {
        match self {
            IdentityMultiplier::Dt => "dt",
            IdentityMultiplier::L => "L",
            IdentityMultiplier::Lbar => "Lbar",
            IdentityMultiplier::LTilde => "Ltilde",
            IdentityMultiplier::LbarTilde => "Lbartilde",
        }
    }

    pub fn all() -> [IdentityMultiplier; 5] {
        [
            IdentityMultiplier::Dt,
            IdentityMultiplier::L,
            IdentityMultiplier::Lbar,
            IdentityMultiplier::LTilde,
            IdentityMultiplier::LbarTilde,
        ]
    }
}

/// Everything the identity needs at one spacetime point, for psi = theta.
struct IdentityPoint {
    l_psi: f64,
    lb_psi: f64,
    /// multiplier decomposition X = xl L + xlb Lbar
    xl: f64,
    xlb: f64,
    /// (d_t w, d_r w) of the scheme weight (f or fbar), zero for plain fields
    w_grad: (f64, f64),
    box_psi: f64,
    r: f64,
}

impl IdentityPoint {
    fn t_xl(&self) -> f64 {
        // T(X, L) = xl (L psi)^2 (radial: T(L, Lbar) = 0)
        self.xl * self.l_psi * self.l_psi
    }

    fn t_xlb(&self) -> f64 {
        self.xlb * self.lb_psi * self.lb_psi
    }

    fn t_xdt(&self) -> f64 {
        0.5 * self.xl * self.l_psi * self.l_psi + 0.5 * self.xlb * self.lb_psi * self.lb_psi
    }

    fn x_psi(&self) -> f64 {
        self.xl * self.l_psi + self.xlb * self.lb_psi
    }

    /// K^X for X = base + w * (other base); w's gradient supplied.
    fn k_current(&self, m: IdentityMultiplier) -> f64 {
        let kl = self.l_psi * self.lb_psi / self.r;
        let grad_n2 = -self.l_psi * self.lb_psi; // |grad psi|^2_g radial
        let psi_t = 0.5 * (self.l_psi + self.lb_psi);
        let psi_r = 0.5 * (self.l_psi - self.lb_psi);
        let (w_t, w_r) = self.w_grad;
        let q_w_psi = -w_t * psi_t + w_r * psi_r;
        match m {
            IdentityMultiplier::Dt => 0.0,
            IdentityMultiplier::L => kl,
            IdentityMultiplier::Lbar => -kl,
            IdentityMultiplier::LTilde => {
                // K^L + K^{f Lbar}: weight value enters through xlb
                let f = self.xlb;
                let lb_w = w_t - w_r;
                kl + (-f * kl + q_w_psi * self.lb_psi - 0.5 * lb_w * grad_n2)
            }
            IdentityMultiplier::LbarTilde => {
                let fb = self.xl;
                let l_w = w_t + w_r;
                -kl + (fb * kl + q_w_psi * self.l_psi - 0.5 * l_w * grad_n2)
            }
        }
    }
}

fn identity_point(
    sampler: &Sampler,
    m: IdentityMultiplier,
    t: f64,
    r: f64,
) -> Result<IdentityPoint> {
    let l_psi = sampler.null_deriv(Base::Theta, &[], NullOp::L, t, r)?;
    let lb_psi = sampler.null_deriv(Base::Theta, &[], NullOp::Lbar, t, r)?;
    let (xl, xlb, w_grad) = match m {
        IdentityMultiplier::Dt => (0.5, 0.5, (0.0, 0.0)),
        IdentityMultiplier::L => (1.0, 0.0, (0.0, 0.0)),
        IdentityMultiplier::Lbar => (0.0, 1.0, (0.0, 0.0)),
        IdentityMultiplier::LTilde => {
            // f = (L theta)^2 + (L phi)^2 and its (t, r) gradient
            let l_ph = sampler.null_deriv(Base::Phi, &[], NullOp::L, t, r)?;
            let f = l_psi * l_psi + l_ph * l_ph;
            let d = |b: Base, op: Op| -> Result<(f64, f64)> {
                let ww = [op];
                let dt = sampler.null_deriv(b, &ww, NullOp::Dt, t, r)?;
                let dr = sampler.null_deriv(b, &ww, NullOp::Dr, t, r)?;
                Ok((dt, dr))
            };
            let _ = d;
            let dt_lth = sampler.null_deriv(Base::Theta, &[Op::Dt], NullOp::L, t, r)?;
            let dr_lth = sampler.null_deriv(Base::Theta, &[Op::Dr], NullOp::L, t, r)?;
            let dt_lph = sampler.null_deriv(Base::Phi, &[Op::Dt], NullOp::L, t, r)?;
            let dr_lph = sampler.null_deriv(Base::Phi, &[Op::Dr], NullOp::L, t, r)?;
            let w_t = 2.0 * l_psi * dt_lth + 2.0 * l_ph * dt_lph;
            let w_r = 2.0 * l_psi * dr_lth + 2.0 * l_ph * dr_lph;
            (1.0, f, (w_t, w_r))
        }
        IdentityMultiplier::LbarTilde => {
            let lb_ph = sampler.null_deriv(Base::Phi, &[], NullOp::Lbar, t, r)?;
            let fb = lb_psi * lb_psi + lb_ph * lb_ph;
            let dt_lbth = sampler.null_deriv(Base::Theta, &[Op::Dt], NullOp::Lbar, t, r)?;
            let dr_lbth = sampler.null_deriv(Base::Theta, &[Op::Dr], NullOp::Lbar, t, r)?;
            let dt_lbph = sampler.null_deriv(Base::Phi, &[Op::Dt], NullOp::Lbar, t, r)?;
            let dr_lbph = sampler.null_deriv(Base::Phi, &[Op::Dr], NullOp::Lbar, t, r)?;
            let w_t = 2.0 * lb_psi * dt_lbth + 2.0 * lb_ph * dt_lbph;
            let w_r = 2.0 * lb_psi * dr_lbth + 2.0 * lb_ph * dr_lbph;
            (fb, 1.0, (w_t, w_r))
        }
    };
    let box_psi = sampler.box_from_equations(Base::Theta, t, r)?;
    Ok(IdentityPoint {
        l_psi,
        lb_psi,
        xl,
        xlb,
        w_grad,
        box_psi,
        r,
    })
}

/// |boundary fluxes - bulk| for the divergence identity on
/// D_{u*, ubar*} = {t >= 1, 0 <= u <= u*, ubar <= ubar*}, with psi = theta
/// and Box psi substituted from the evolved equations. Boundary fluxes use
/// first-order Riemann sums throughout, so the residual converges at a
/// controlled first order under grid refinement.
pub fn energy_identity_check(
    hist: &History,
    m: IdentityMultiplier,
    u_star: f64,
    ubar_star: f64,
) -> Result<f64> {
    let sampler = Sampler::new(hist);
    let step = math::max(hist.cadence, 2.0 * hist.grid.dr);
    let four_pi = 4.0 * core::f64::consts::PI;

    // Outgoing boundary C_{u*}: T(X, L) r^2 dubar.
    let nodes = cone_nodes(1.0 - u_star, ubar_star, step);
    let mut vals = Vec::with_capacity(nodes.len());
    for &ub in &nodes {
        let (t, r) = (u_star + ub, ub - u_star);
        let p = identity_point(&sampler, m, t, r)?;
        vals.push(p.t_xl() * r * r);
    }
    let f_out = four_pi * riemann_left(&nodes, &vals);

    // Incoming boundary Cbar_{ubar*}: T(X, Lbar) r^2 du.
    let n_u = (libm::ceil(u_star / step) as usize).max(8);
    let u_nodes: Vec<f64> = (0..=n_u)
        .map(|k| u_star * k as f64 / n_u as f64)
        .collect();
    let mut vals = Vec::with_capacity(u_nodes.len());
    for &uu in &u_nodes {
        let (t, r) = (uu + ubar_star, ubar_star - uu);
        let p = identity_point(&sampler, m, t, r)?;
        vals.push(p.t_xlb() * r * r);
    }
    let f_in = four_pi * riemann_left(&u_nodes, &vals);

    // Initial slice t = 1, r in [1 - 2 u*, 1]: T(X, d_t) r^2 dr.
    let r_lo = 1.0 - 2.0 * u_star;
    let nr = (libm::ceil((1.0 - r_lo) / math::min(step, hist.grid.dr * 2.0)) as usize).max(8);
    let r_nodes: Vec<f64> = (0..=nr)
        .map(|k| r_lo + (1.0 - r_lo) * k as f64 / nr as f64)
        .collect();
    let mut vals = Vec::with_capacity(r_nodes.len());
    for &r in &r_nodes {
        let p = identity_point(&sampler, m, 1.0, r)?;
        vals.push(p.t_xdt() * r * r);
    }
    let f_init = four_pi * riemann_left(&r_nodes, &vals);

    // Bulk: (Box psi X psi + K^X) 2 r^2 du dubar; first-order in u.
    let mut bulk = 0.0;
    let du = u_star / n_u as f64;
    for iu in 0..n_u {
        let uu = du * iu as f64;
        let ub_nodes = cone_nodes(1.0 - uu, ubar_star, step);
        let mut vals = Vec::with_capacity(ub_nodes.len());
        for &ub in &ub_nodes {
            let (t, r) = (uu + ub, ub - uu);
            let p = identity_point(&sampler, m, t, r)?;
            vals.push((p.box_psi * p.x_psi() + p.k_current(m)) * 2.0 * r * r);
        }
        bulk += riemann_left(&ub_nodes, &vals) * du;
    }
    bulk *= four_pi;

    Ok(math::abs(f_out + f_in - f_init - bulk))
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct FitResult {
    pub slope: f64,
    /// 95 percent half-width on the slope.
    pub ci: f64,
    pub n: usize,
}

/// Least squares on (ln x, ln y); requires positive data.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (math::ln(x), math::ln(y)))
        .collect();
    let n = data.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { needed: 3, have: n });
    }
    let nf = n as f64;
    let sx: f64 = data.iter().map(|p| p.0).sum();
    let sy: f64 = data.iter().map(|p| p.1).sum();
    let (mx, my) = (sx / nf, sy / nf);
    let sxx: f64 = data.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("degenerate abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = data
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    let se = if n > 2 {
        math::sqrt(ss_res / (n as f64 - 2.0) / sxx)
    } else {
        0.0
    };
    Ok(FitResult {
        slope,
        ci: 1.96 * se,
        n,
    })
}

/// Quantity measured by the decay fits.
#[derive(Clone, Debug)]
pub struct FitQuantity {
    pub field: DerivedField,
    pub deriv: NullOp,
}

impl FitQuantity {
    pub fn name(&self) -> String {
        if self.deriv == NullOp::Value {
            format!("sup|{}|", self.field.name())
        } else {
            format!("sup|{} {}|", self.deriv.name(), self.field.name())
        }
    }
}

/// sup over the sphere foliation of region II at fixed ubar: for radial
/// fields the sup over S_{u, ubar} is a point value; the sup runs over
/// u in [0, delta].
pub fn sup_region2(
    sampler: &Sampler,
    q: &FitQuantity,
    ubar: f64,
    delta: f64,
    n_u: usize,
) -> Result<f64> {
    let wgt = q.field.weight(delta);
    let mut sup = 0.0_f64;
    for iu in 0..=n_u {
        let uu = delta * iu as f64 / n_u as f64;
        let (t, r) = (uu + ubar, ubar - uu);
        let v = sampler.null_deriv(q.field.base, &q.field.word, q.deriv, t, r)?;
        sup = math::max(sup, math::abs(wgt * v));
    }
    Ok(sup)
}

/// Point value of the quantity on C_delta at the given ubar.
pub fn value_on_cdelta(sampler: &Sampler, q: &FitQuantity, ubar: f64) -> Result<f64> {
    let delta = sampler.hist.delta;
    let (t, r) = (delta + ubar, ubar - delta);
    let v = sampler.null_deriv(q.field.base, &q.field.word, q.deriv, t, r)?;
    Ok(math::abs(q.field.weight(delta) * v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitDomain {
    RegionII,
    CDelta,
}

/// Log-log slope of the quantity against ubar over [a, b].
pub fn decay_fit(
    hist: &History,
    q: &FitQuantity,
    domain: FitDomain,
    window: (f64, f64),
    n_samples: usize,
) -> Result<FitResult> {
    let sampler = Sampler::new(hist);
    if n_samples < 3 || window.1 <= window.0 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            have: n_samples,
        });
    }
    let mut pts = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let ubar = window.0 * libm::pow(window.1 / window.0, k as f64 / (n_samples - 1) as f64);
        let v = match domain {
            FitDomain::RegionII => sup_region2(&sampler, q, ubar, hist.delta, 32)?,
            FitDomain::CDelta => value_on_cdelta(&sampler, q, ubar)?,
        };
        pts.push((ubar, v));
    }
    loglog_fit(&pts)
}

/// Exponent of the measured quantity against delta across a sweep, at a
/// fixed (u, ubar) sample set; needs at least three deltas.
pub fn delta_scaling_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            have: points.len(),
        });
    }
    loglog_fit(points)
}

// ---------------------------------------------------------------------------
// Transport identity on C_delta
// ---------------------------------------------------------------------------

/// |L(Lbar Gamma^k theta) + (1/r) Lbar Gamma^k theta| along C_delta,
/// together with the majorant shape delta^{3/4} ubar^{-5/2}; returns
/// (ubar, residual, ratio) triples. k <= 1 (word empty, [B] or [S]).
pub fn transport_residual_on_cdelta(
    hist: &History,
    word: &[Op],
    ubars: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    if word.len() > 1 {
        return Err(Error::InvalidInput("transport check supports k <= 1"));
    }
    let sampler = Sampler::new(hist);
    let delta = hist.delta;
    let mut out = Vec::with_capacity(ubars.len());
    for &ubar in ubars {
        let (t, r) = (delta + ubar, ubar - delta);
        // Lbar Gamma^k theta as a derived word, then L of it by one more level.
        let mut w_dt = vec![Op::Dt];
        w_dt.extend_from_slice(word);
        let mut w_dr = vec![Op::Dr];
        w_dr.extend_from_slice(word);
        // L(Lbar v) = (d_t + d_r)(d_t - d_r) v
        let dtt = {
            let mut w = vec![Op::Dt];
            w.extend_from_slice(&w_dt);
            sampler.value(Base::Theta, &w, t, r)?
        };
        let dtr = {
            let mut w = vec![Op::Dr];
            w.extend_from_slice(&w_dt);
            sampler.value(Base::Theta, &w, t, r)?
        };
        let drr = {
            let mut w = vec![Op::Dr];
            w.extend_from_slice(&w_dr);
            sampler.value(Base::Theta, &w, t, r)?
        };
        let l_lbar = dtt - drr;
        let lbar_v = sampler.value(Base::Theta, &w_dt, t, r)? - sampler.value(Base::Theta, &w_dr, t, r)?;
        let _ = dtr;
        let residual = math::abs(l_lbar + lbar_v / r);
        let majorant = libm::pow(delta, 0.75) * libm::pow(ubar, -2.5);
        out.push((ubar, residual, residual / majorant));
    }
    Ok(out)
}

/// Region-I smallness sample: sup |d Z^k theta|, |d Z^k phi| (k <= 1,
/// Euclidean gradient norm in (t, r)) over grid-aligned samples of the
/// given region.
pub fn sup_gradient_in_region(hist: &History, region: Region, k_max: usize) -> Result<f64> {
    let sampler = Sampler::new(hist);
    let words: [&[Op]; 3] = [&[], &[Op::BoostB], &[Op::ScaleS]];
    let m = hist.snaps.len();
    let n = hist.grid.n;
    let mut sup = 0.0_f64;
    let jstride = (m / 64).max(1);
    let istride = (n / 512).max(1);
    for j in (8..m.saturating_sub(8)).step_by(jstride) {
        let t = hist.snaps[j].t;
        for i in (8..n - 8).step_by(istride) {
            let r = hist.grid.radius(i);
            if region_of(t, r, hist.delta) != region {
                continue;
            }
            for base in [Base::Theta, Base::Phi] {
                for (kw, word) in words.iter().enumerate() {
                    if (kw > 0) as usize > k_max {
                        continue;
                    }
                    let dt = {
                        let mut w = vec![Op::Dt];
                        w.extend_from_slice(word);
                        sampler.at_aligned(base, &w, j, i)?
                    };
                    let dr = {
                        let mut w = vec![Op::Dr];
                        w.extend_from_slice(word);
                        sampler.at_aligned(base, &w, j, i)?
                    };
                    sup = math::max(sup, math::sqrt(dt * dt + dr * dr));
                }
            }
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{run, RadialGrid, RunParams};
    use crate::pulse::PulseSpec;

    fn synthetic_history(
        f: impl Fn(f64, f64) -> f64,
        ft: impl Fn(f64, f64) -> f64,
        g: impl Fn(f64, f64) -> f64,
        gt: impl Fn(f64, f64) -> f64,
        n: usize,
        r_max: f64,
        cadence: f64,
        levels: usize,
        delta: f64,
    ) -> History {
        let grid = RadialGrid::new(r_max, n).unwrap();
        let snaps = (0..levels)
            .map(|j| {
                let t = 1.0 + cadence * j as f64;
                crate::evolve::Snapshot {
                    t,
                    theta: grid.radii().iter().map(|&r| f(t, r)).collect(),
                    phi: grid.radii().iter().map(|&r| g(t, r)).collect(),
                    theta_t: grid.radii().iter().map(|&r| ft(t, r)).collect(),
                    phi_t: grid.radii().iter().map(|&r| gt(t, r)).collect(),
                }
            })
            .collect();
        History {
            grid,
            delta,
            cadence,
            snaps,
            stats: crate::evolve::RunStats::default(),
        }
    }

    #[test]
    fn derived_word_enumeration() {
        let words = derived_words(Base::Theta, 2);
        // k=0: 1; k=1: 2+2; k=2: 4+4+4
        assert_eq!(words.len(), 1 + 4 + 12);
        assert!(words.iter().all(|w| w.l <= w.k));
        let raw = &words[0];
        assert_eq!(raw.k, 0);
        assert!(raw.word.is_empty());
    }

    #[test]
    fn scaling_field_annihilates_scale_invariant_data() {
        // f(r/t) has S f = 0.
        let hist = synthetic_history(
            |t, r| (r / t) * (r / t),
            |t, r| -2.0 * r * r / (t * t * t),
            |_, _| 0.0,
            |_, _| 0.0,
            257,
            8.0,
            0.02,
            41,
            0.1,
        );
        let sampler = Sampler::new(&hist);
        let v = sampler
            .at_aligned(Base::Theta, &[Op::ScaleS], 20, 128)
            .unwrap();
        assert!(v.abs() < 1e-5, "S f(r/t) = {v}");
        // and the raw word returns the field itself
        let raw = sampler.at_aligned(Base::Theta, &[], 20, 128).unwrap();
        let t = hist.snaps[20].t;
        let r = hist.grid.radius(128);
        assert!((raw - (r / t) * (r / t)).abs() < 1e-14);
    }

    #[test]
    fn boost_word_matches_analytic_boost() {
        // B f = t f_r + r f_t on a smooth analytic field.
        let f = |t: f64, r: f64| (0.7 * t - 0.4 * r * r).sin();
        let ft = |t: f64, r: f64| 0.7 * (0.7 * t - 0.4 * r * r).cos();
        let hist = synthetic_history(f, ft, |_, _| 0.0, |_, _| 0.0, 513, 8.0, 0.02, 41, 0.1);
        let sampler = Sampler::new(&hist);
        let (j, i) = (20, 300);
        let t = hist.snaps[j].t;
        let r = hist.grid.radius(i);
        let exact = t * (-(0.8 * r) * (0.7 * t - 0.4 * r * r).cos())
            + r * (0.7 * (0.7 * t - 0.4 * r * r).cos());
        let got = sampler.at_aligned(Base::Theta, &[Op::BoostB], j, i).unwrap();
        assert!((got - exact).abs() < 1e-4 * (1.0 + exact.abs()), "{got} vs {exact}");
    }

    #[test]
    fn fitter_self_tests() {
        // Exact power law: slope recovered to 1e-6.
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let x = 3.0 * libm::pow(5.0, k as f64 / 39.0);
                (x, 2.7 * libm::pow(x, -1.5))
            })
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-6, "{}", fit.slope);
        assert!(fit.ci < 1e-6);

        // Synthetic delta scaling c delta^1.
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&d| (d, 0.3 * d))
            .collect();
        let fit = delta_scaling_fit(&pts).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-6);

        assert!(matches!(
            delta_scaling_fit(&[(0.1, 1.0)]),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn zero_field_conventions() {
        let mut spec = PulseSpec::new(0.1).unwrap();
        spec.amp_theta = 0.0;
        spec.amp_phi = 0.0;
        let grid = RadialGrid::new(4.2, 513).unwrap();
        let hist = run(&spec, &grid, &RunParams::new(3.0, 0.025), None).unwrap();
        let (e, eb) = cone_energies(&hist, 0, 0.05, 1.6).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(eb, 0.0);
        let (_, _, ratio) =
            multiplier_energy(&hist, 0, 0, MultScheme::LTilde, ConeSide::Outgoing, 0.05, 1.6)
                .unwrap();
        assert_eq!(ratio, 1.0, "zero fields report ratio 1");
        let res = energy_identity_check(&hist, IdentityMultiplier::L, 0.05, 1.6).unwrap();
        assert_eq!(res, 0.0);
        let tr = transport_residual_on_cdelta(&hist, &[], &[1.5, 1.8]).unwrap();
        assert!(tr.iter().all(|&(_, res, _)| res == 0.0));
    }

    /// d'Alembert oracle for the linear regime: w = r theta solves the 1+1
    /// wave equation; the outgoing flux on C_u matches the 1D integral.
    #[test]
    fn linear_flux_matches_dalembert_oracle() {
        let delta = 0.1;
        let mut spec = PulseSpec::new(delta).unwrap();
        spec.amp_theta = 1e-6;
        spec.amp_phi = 0.0;
        let grid = RadialGrid::new(6.4, 2049).unwrap();
        let hist = run(&spec, &grid, &RunParams::new(5.0, delta / 20.0), None).unwrap();

        let u = 0.02;
        let ubar = 4.4;
        let (e2, _) = cone_flux_k(&hist, 0, u, ubar).unwrap();

        // Oracle: theta(t, r) from the explicit d'Alembert solution.
        // w0(x) = x theta0(x) odd, U(x) = int_0^x w1, w1 = -w0' + theta0.
        let theta0 = |x: f64| spec.data_at(x)[0];
        let w0 = |x: f64| x.abs() * theta0(x.abs()) * x.signum();
        let w0p = |x: f64| {
            let h = 1e-6;
            (w0(x + h) - w0(x - h)) / (2.0 * h)
        };
        let cap_theta = |x: f64| {
            // int_0^x theta0: only the shell (1-2delta, 1) contributes
            let lo = 1.0 - 2.0 * delta;
            let hi = x.abs().min(1.0);
            if hi <= lo {
                return 0.0;
            }
            let n = 4000;
            let mut acc = 0.0;
            for i in 0..n {
                let s = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
                acc += theta0(s);
            }
            acc * (hi - lo) / n as f64 * x.signum()
        };
        let u_fn = |x: f64| -w0(x) + cap_theta(x); // int of w1, even
        let theta_exact = |t: f64, r: f64| -> f64 {
            let tau = t - 1.0;
            let (xp, xm) = (r + tau, r - tau);
            let w = 0.5 * (w0(xp) + w0(xm)) + 0.5 * (u_fn(xp) - u_fn(xm));
            w / r
        };
        let l_theta = |t: f64, r: f64| -> f64 {
            let h = 1e-4;
            let dt = (theta_exact(t + h, r) - theta_exact(t - h, r)) / (2.0 * h);
            let dr = (theta_exact(t, r + h) - theta_exact(t, r - h)) / (2.0 * h);
            dt + dr
        };
        let _ = w0p;
        // 1D oracle integral of |L theta|^2 r^2 over the same cone segment.
        let n = 1200;
        let (lo, hi) = (1.0 - u, ubar);
        let mut acc = 0.0;
        for i in 0..n {
            let ub = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            let (t, r) = (u + ub, ub - u);
            let v = l_theta(t, r);
            acc += v * v * r * r;
        }
        let oracle = 4.0 * core::f64::consts::PI * acc * (hi - lo) / n as f64;
        assert!(
            (e2 - oracle).abs() <= 1e-3 * oracle,
            "flux {e2:.6e} vs oracle {oracle:.6e}, rel {}",
            (e2 - oracle).abs() / oracle
        );
    }

    #[test]
    fn delta_weights_sit_where_specified() {
        // Recompute the k=1 energies at two different delta parameters on
        // the same frozen field arrays: E_k carries delta^2, Ebar_k delta,
        // and the l=1 words carry delta^l inside the flux.
        let mut spec = PulseSpec::new(0.1).unwrap();
        spec.amp_theta = 0.02;
        spec.amp_phi = 0.02;
        let grid = RadialGrid::new(4.4, 1025).unwrap();
        let hist = run(&spec, &grid, &RunParams::new(3.2, 0.025), None).unwrap();
        let (u, ubar) = (0.05, 1.9);
        let (f1, fb1) = cone_flux_k(&hist, 0, u, ubar).unwrap();
        let mut hist2 = hist.clone();
        hist2.delta = 0.2; // frozen fields, different delta parameter
        let (f2, fb2) = cone_flux_k(&hist2, 0, u, ubar).unwrap();
        // k = 0 has no delta^l weights: fluxes identical
        assert!((f1 - f2).abs() <= 1e-12 * f1.abs().max(1e-30));
        assert!((fb1 - fb2).abs() <= 1e-12 * fb1.abs().max(1e-30));
        // energies: E^2 = flux/delta^2, Ebar^2 = flux/delta
        let (e1, eb1) = cone_energies(&hist, 0, u, ubar).unwrap();
        let (e2, eb2) = cone_energies(&hist2, 0, u, ubar).unwrap();
        assert!((e1 / e2 - 4.0).abs() < 1e-9, "delta^2 weight on E^2");
        assert!((eb1 / eb2 - 2.0).abs() < 1e-9, "delta weight on Ebar^2");
    }

    #[test]
    fn tiny_amplitude_coercivity_ratio_near_one() {
        let mut spec = PulseSpec::new(0.1).unwrap();
        spec.amp_theta = 1e-6;
        spec.amp_phi = 1e-6;
        let grid = RadialGrid::new(4.4, 1025).unwrap();
        let hist = run(&spec, &grid, &RunParams::new(3.2, 0.025), None).unwrap();
        let (_, _, ratio) =
            multiplier_energy(&hist, 0, 0, MultScheme::LTilde, ConeSide::Outgoing, 0.05, 1.9)
                .unwrap();
        assert!((ratio - 1.0).abs() < 1e-3, "ratio {ratio}");
        let (_, _, ratio) =
            multiplier_energy(&hist, 1, 1, MultScheme::LbarTilde, ConeSide::Incoming, 0.05, 1.9)
                .unwrap();
        assert!((ratio - 1.0).abs() < 1e-2, "ratio {ratio}");
    }

    #[test]
    fn energy_identity_linear_conservation_and_refinement() {
        // Linear regime, X = d_t: the identity is energy conservation.
        let mut residuals = Vec::new();
        for lvl in 0..2 {
            let delta = 0.1;
            let mut spec = PulseSpec::new(delta).unwrap();
            spec.amp_theta = 1e-3;
            spec.amp_phi = 0.0;
            let n = 512 * (1 << lvl) + 1;
            let grid = RadialGrid::new(4.4, n).unwrap();
            let cad = 0.04 / (1 << lvl) as f64;
            let hist = run(&spec, &grid, &RunParams::new(3.0, cad), None).unwrap();
            let res = energy_identity_check(&hist, IdentityMultiplier::Dt, 0.05, 1.8).unwrap();
            residuals.push(res);
        }
        // residual small on the amplitude-squared scale of the energy
        assert!(residuals[0] <= 1e-3 * 1e-6, "{residuals:?}");
        let factor = residuals[0] / residuals[1];
        assert!(
            (1.4..6.0).contains(&factor),
            "refinement factor {factor} ({residuals:?})"
        );
    }

    #[test]
    fn region_masks() {
        assert_eq!(region_of(2.0, 2.5, 0.1), Region::III);
        assert_eq!(region_of(2.0, 1.95, 0.1), Region::II);
        assert_eq!(region_of(2.0, 1.0, 0.1), Region::I);
    }
}

//! Null coordinates, null frame, good/bad derivatives and the vector-field
//! method objects: momentum tensor, deformation currents K^X and the
//! pointwise divergence identity.
//!
//! Metric signature is (-,+,+,+) throughout; index raising and lowering is
//! centralized here.

use crate::error::{Error, Result};
use crate::jet::{Jet2, Point4};

/// Diagonal Minkowski metric g = diag(-1, 1, 1, 1). `g[a]` is both the
/// covariant and contravariant entry.
#[inline]
pub const fn metric(a: usize) -> f64 {
    if a == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Raise (or lower) one gradient index: v^a = g^{ab} v_b.
#[inline]
pub fn raise(v: &[f64; 4]) -> [f64; 4] {
    [-v[0], v[1], v[2], v[3]]
}

/// Q(xi, chi) on gradients: g^{ab} d_a xi d_b chi.
#[inline]
pub fn grad_pair(da: &[f64; 4], db: &[f64; 4]) -> f64 {
    -da[0] * db[0] + da[1] * db[1] + da[2] * db[2] + da[3] * db[3]
}

/// |grad psi|^2_g = g^{ab} d_a psi d_b psi.
#[inline]
pub fn grad_norm2(dpsi: &[f64; 4]) -> f64 {
    grad_pair(dpsi, dpsi)
}

/// Null coordinates u = (t - r)/2, ubar = (t + r)/2. Level sets C_u are the
/// outgoing cones, Cbar_ubar the incoming ones; the sphere S_{u,ubar} has
/// radius ubar - u.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullCoords {
    pub u: f64,
    pub ubar: f64,
}

impl NullCoords {
    pub fn from_point(t: f64, r: f64) -> Self {
        Self {
            u: 0.5 * (t - r),
            ubar: 0.5 * (t + r),
        }
    }

    pub fn t(&self) -> f64 {
        self.u + self.ubar
    }

    pub fn r(&self) -> f64 {
        self.ubar - self.u
    }
}

/// A gradient decomposed into the null frame: L psi, Lbar psi and the
/// sphere-tangential part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameDeriv {
    pub l: f64,
    pub lbar: f64,
    pub pbar: [f64; 3],
}

impl FrameDeriv {
    pub fn dt(&self) -> f64 {
        0.5 * (self.l + self.lbar)
    }

    pub fn dr(&self) -> f64 {
        0.5 * (self.l - self.lbar)
    }

    /// Euclidean norm of the tangential part.
    pub fn pbar_norm(&self) -> f64 {
        crate::math::sqrt(
            self.pbar[0] * self.pbar[0] + self.pbar[1] * self.pbar[1] + self.pbar[2] * self.pbar[2],
        )
    }
}

/// Split a 4-gradient into L, Lbar and tangential parts at p (requires r > 0).
pub fn frame_decompose(dpsi: &[f64; 4], p: Point4) -> Result<FrameDeriv> {
    p.require_off_axis()?;
    let w = p.omega();
    let dr = w[0] * dpsi[1] + w[1] * dpsi[2] + w[2] * dpsi[3];
    let mut pbar = [0.0; 3];
    for i in 0..3 {
        pbar[i] = dpsi[i + 1] - w[i] * dr;
    }
    Ok(FrameDeriv {
        l: dpsi[0] + dr,
        lbar: dpsi[0] - dr,
        pbar,
    })
}

/// Inverse of [`frame_decompose`].
pub fn frame_reassemble(fd: &FrameDeriv, p: Point4) -> [f64; 4] {
    let w = p.omega();
    let dr = fd.dr();
    let mut dpsi = [fd.dt(), 0.0, 0.0, 0.0];
    for i in 0..3 {
        dpsi[i + 1] = fd.pbar[i] + w[i] * dr;
    }
    dpsi
}

/// Null vectors as spacetime vectors at p: L = (1, omega), Lbar = (1, -omega).
pub fn l_vec(p: Point4) -> [f64; 4] {
    let w = p.omega();
    [1.0, w[0], w[1], w[2]]
}

pub fn lbar_vec(p: Point4) -> [f64; 4] {
    let w = p.omega();
    [1.0, -w[0], -w[1], -w[2]]
}

/// T_{ab}[psi] = d_a psi d_b psi - (1/2) g_{ab} |grad psi|^2_g.
pub fn momentum_tensor(dpsi: &[f64; 4]) -> [[f64; 4]; 4] {
    let n2 = grad_norm2(dpsi);
    let mut t = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let g = if a == b { metric(a) } else { 0.0 };
            t[a][b] = dpsi[a] * dpsi[b] - 0.5 * g * n2;
        }
    }
    t
}

/// T(X, Y) = X^a Y^b T_{ab}.
pub fn momentum_contract(t: &[[f64; 4]; 4], x: &[f64; 4], y: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            acc += x[a] * y[b] * t[a][b];
        }
    }
    acc
}

/// A scalar multiplier weight with its exact gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight {
    pub value: f64,
    pub grad: [f64; 4],
}

impl Weight {
    pub fn one() -> Self {
        Self {
            value: 1.0,
            grad: [0.0; 4],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            value: c,
            grad: [0.0; 4],
        }
    }
}

/// Base vector fields a multiplier can be built on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseField {
    Dt,
    L,
    Lbar,
}

impl BaseField {
    pub fn vec(&self, p: Point4) -> [f64; 4] {
        match self {
            BaseField::Dt => [1.0, 0.0, 0.0, 0.0],
            BaseField::L => l_vec(p),
            BaseField::Lbar => lbar_vec(p),
        }
    }

    /// d_mu X^beta, indexed [mu][beta]. Only the radial direction field
    /// omega contributes.
    pub fn dvec(&self, p: Point4) -> [[f64; 4]; 4] {
        let mut d = [[0.0; 4]; 4];
        let sign = match self {
            BaseField::Dt => return d,
            BaseField::L => 1.0,
            BaseField::Lbar => -1.0,
        };
        let w = p.omega();
        let r = p.r();
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                d[i + 1][j + 1] = sign * (delta - w[i] * w[j]) / r;
            }
        }
        d
    }

    pub fn apply(&self, dpsi: &[f64; 4], p: Point4) -> f64 {
        let x = self.vec(p);
        x[0] * dpsi[0] + x[1] * dpsi[1] + x[2] * dpsi[2] + x[3] * dpsi[3]
    }

    /// Bulk current of the unweighted base field:
    /// K^L = (1/r) L psi Lbar psi, K^{Lbar} = -K^L, K^{d_t} = 0.
    pub fn current(&self, dpsi: &[f64; 4], p: Point4) -> Result<f64> {
        match self {
            BaseField::Dt => Ok(0.0),
            BaseField::L | BaseField::Lbar => {
                p.require_off_axis()?;
                let fd = frame_decompose(dpsi, p)?;
                let k = fd.l * fd.lbar / p.r();
                Ok(if *self == BaseField::L { k } else { -k })
            }
        }
    }
}

/// A multiplier X = w X0 with X0 one of {d_t, L, Lbar} and w a scalar weight
/// carried with its gradient. The unweighted fields use w = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Multiplier {
    pub base: BaseField,
    pub weight: Weight,
}

impl Multiplier {
    pub fn plain(base: BaseField) -> Self {
        Self {
            base,
            weight: Weight::one(),
        }
    }

    pub fn weighted(base: BaseField, weight: Weight) -> Self {
        Self { base, weight }
    }

    /// Parse a multiplier name; weighted forms take the weight separately.
    pub fn parse(name: &str, weight: Option<Weight>) -> Result<Self> {
        match name {
            "dt" | "d_t" => Ok(Self::plain(BaseField::Dt)),
            "L" => Ok(Self::plain(BaseField::L)),
            "Lbar" | "Lb" => Ok(Self::plain(BaseField::Lbar)),
            "fL" | "f*L" => Ok(Self::weighted(
                BaseField::L,
                weight.ok_or(Error::UnknownMultiplier)?,
            )),
            "fLbar" | "f*Lbar" => Ok(Self::weighted(
                BaseField::Lbar,
                weight.ok_or(Error::UnknownMultiplier)?,
            )),
            _ => Err(Error::UnknownMultiplier),
        }
    }

    pub fn vec(&self, p: Point4) -> [f64; 4] {
        let x0 = self.base.vec(p);
        let mut x = [0.0; 4];
        for a in 0..4 {
            x[a] = self.weight.value * x0[a];
        }
        x
    }

    pub fn apply(&self, dpsi: &[f64; 4], p: Point4) -> f64 {
        self.weight.value * self.base.apply(dpsi, p)
    }

    /// Bulk current K^{wX0}[psi] from the deformation-tensor identity for a
    /// rescaled field:
    ///   K^{wX0} = w K^{X0} + (X0 psi) Q(psi, w) - (1/2)(X0 w) |grad psi|^2_g.
    pub fn current(&self, dpsi: &[f64; 4], p: Point4) -> Result<f64> {
        let base_k = self.base.current(dpsi, p)?;
        let x0psi = self.base.apply(dpsi, p);
        let x0w = self.base.apply(&self.weight.grad, p);
        Ok(self.weight.value * base_k + x0psi * grad_pair(dpsi, &self.weight.grad)
            - 0.5 * x0w * grad_norm2(dpsi))
    }
}

/// Spec-facing current evaluation: K^X[psi] for a multiplier.
pub fn current_k(x: &Multiplier, dpsi: &[f64; 4], p: Point4) -> Result<f64> {
    x.current(dpsi, p)
}

/// Pointwise residual of the divergence identity
///   div P = Box psi . X psi + K^X[psi],   P_a = T_{ab} X^b,
/// evaluated from the exact 2-jet of psi. For exact jets the residual is
/// machine-size; `box_psi` is supplied by the caller so solver-fed values can
/// be tested against the same identity.
pub fn divergence_identity_residual(
    x: &Multiplier,
    psi: &Jet2,
    box_psi: f64,
    p: Point4,
) -> Result<f64> {
    p.require_off_axis()?;
    let dpsi = psi.grad;
    let xv = x.base.vec(p);
    let dxv = x.base.dvec(p);
    let w = x.weight;

    // d_mu |grad psi|^2 from the jet.
    let mut dn2 = [0.0; 4];
    for mu in 0..4 {
        let mut acc = 0.0;
        for n in 0..4 {
            acc += 2.0 * metric(n) * psi.hess(mu, n) * dpsi[n];
        }
        dn2[mu] = acc;
    }

    // div P = g^{am} d_m (T_{ab} w X0^b); the contraction collapses to m = a.
    let n2 = grad_norm2(&dpsi);
    let mut div_p = 0.0;
    for a in 0..4 {
        let ga = metric(a);
        for b in 0..4 {
            let gab = if a == b { metric(a) } else { 0.0 };
            let t_ab = dpsi[a] * dpsi[b] - 0.5 * gab * n2;
            let dt_ab = psi.hess(a, a) * dpsi[b] + dpsi[a] * psi.hess(a, b) - 0.5 * gab * dn2[a];
            div_p +=
                ga * (dt_ab * w.value * xv[b] + t_ab * (w.grad[a] * xv[b] + w.value * dxv[a][b]));
        }
    }

    let rhs = box_psi * x.apply(&dpsi, p) + x.current(&dpsi, p)?;
    Ok(crate::math::abs(div_p - rhs))
}

/// All frame first and second derivative compositions of a scalar, computed
/// exactly from its 2-jet. Compositions act on the scalar produced by the
/// previous field, so derivatives of the omega coefficients are included.
#[derive(Clone, Copy, Debug)]
pub struct FrameJet {
    pub l: f64,
    pub lbar: f64,
    pub pbar: [f64; 3],
    /// L(L psi)
    pub ll: f64,
    /// L(Lbar psi) = Lbar(L psi)
    pub llbar: f64,
    /// Lbar(Lbar psi)
    pub lbarlbar: f64,
    /// L(pbar_i psi)
    pub l_pbar: [f64; 3],
    /// Lbar(pbar_i psi)
    pub lbar_pbar: [f64; 3],
    /// pbar_i(pbar_j psi)
    pub pbar_pbar: [[f64; 3]; 3],
}

impl FrameJet {
    pub fn new(psi: &Jet2, p: Point4) -> Result<Self> {
        p.require_off_axis()?;
        let w = p.omega();
        let r = p.r();
        let fd = frame_decompose(&psi.grad, p)?;

        let h = |a: usize, b: usize| psi.hess(a, b);
        let mut wtw = 0.0; // omega^i omega^j d_ij psi
        let mut w_dt = 0.0; // omega^i d_ti psi
        for i in 0..3 {
            w_dt += w[i] * h(0, i + 1);
            for j in 0..3 {
                wtw += w[i] * w[j] * h(i + 1, j + 1);
            }
        }
        let dtt = h(0, 0);

        // hr_i = omega^k d_ki psi (radial derivative of the spatial gradient).
        let mut hr = [0.0; 3];
        for i in 0..3 {
            for k in 0..3 {
                hr[i] += w[k] * h(k + 1, i + 1);
            }
        }

        let mut l_pbar = [0.0; 3];
        let mut lbar_pbar = [0.0; 3];
        for i in 0..3 {
            let time_part = h(0, i + 1) - w[i] * w_dt;
            let rad_part = hr[i] - w[i] * wtw;
            l_pbar[i] = time_part + rad_part;
            lbar_pbar[i] = time_part - rad_part;
        }

        let dr = fd.dr();
        let mut pbar_pbar = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let dij = if i == j { 1.0 } else { 0.0 };
                pbar_pbar[i][j] = h(i + 1, j + 1) - w[j] * hr[i] - w[i] * hr[j]
                    + w[i] * w[j] * wtw
                    - (dij - w[i] * w[j]) / r * dr
                    - w[j] / r * fd.pbar[i];
            }
        }

        Ok(Self {
            l: fd.l,
            lbar: fd.lbar,
            pbar: fd.pbar,
            ll: dtt + 2.0 * w_dt + wtw,
            llbar: dtt - wtw,
            lbarlbar: dtt - 2.0 * w_dt + wtw,
            l_pbar,
            lbar_pbar,
            pbar_pbar,
        })
    }

    /// pbar_i(L psi) = L(pbar_i psi) + (1/r) pbar_i psi.
    pub fn pbar_l(&self, i: usize, r: f64) -> f64 {
        self.l_pbar[i] + self.pbar[i] / r
    }

    /// pbar_i(Lbar psi) = Lbar(pbar_i psi) - (1/r) pbar_i psi.
    pub fn pbar_lbar(&self, i: usize, r: f64) -> f64 {
        self.lbar_pbar[i] - self.pbar[i] / r
    }

    /// Euclidean norm of the good first derivatives {L, pbar}.
    pub fn good_norm(&self) -> f64 {
        crate::math::sqrt(
            self.l * self.l
                + self.pbar[0] * self.pbar[0]
                + self.pbar[1] * self.pbar[1]
                + self.pbar[2] * self.pbar[2],
        )
    }

    /// Euclidean norm of all first derivatives.
    pub fn full_norm(&self) -> f64 {
        let dt = 0.5 * (self.l + self.lbar);
        let dr = 0.5 * (self.l - self.lbar);
        crate::math::sqrt(
            dt * dt
                + dr * dr
                + self.pbar[0] * self.pbar[0]
                + self.pbar[1] * self.pbar[1]
                + self.pbar[2] * self.pbar[2],
        )
    }
}

/// Residual of the frame decomposition of a symmetric second-order operator:
/// for symmetric k^{ab},
///   k^{ab} d_a d_b psi = k_{LbLb} L^2 psi + 2 k_{LLb} L Lbar psi
///     + k_{LL} Lbar^2 psi + k^{ij} pbar_i pbar_j psi + k_Lb^i L pbar_i psi
///     + k_L^i Lbar pbar_i psi + (1/2r) trbar(k) (L - Lbar) psi
///     + (1/r) k^{ij} omega_j pbar_i psi.
pub fn symmetric_tensor_frame_residual(k: &[[f64; 4]; 4], psi: &Jet2, p: Point4) -> Result<f64> {
    let fj = FrameJet::new(psi, p)?;
    let w = p.omega();
    let r = p.r();

    let mut lhs = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            lhs += k[a][b] * psi.hess(a, b);
        }
    }

    let mut k0w = 0.0;
    let mut kww = 0.0;
    let mut tr = 0.0;
    for i in 0..3 {
        k0w += k[0][i + 1] * w[i];
        tr += k[i + 1][i + 1];
        for j in 0..3 {
            kww += k[i + 1][j + 1] * w[i] * w[j];
        }
    }
    let k_lblb = 0.25 * k[0][0] + 0.5 * k0w + 0.25 * kww;
    let k_llb = 0.25 * (k[0][0] - kww);
    let k_ll = 0.25 * k[0][0] - 0.5 * k0w + 0.25 * kww;
    let trbar = tr - kww;

    let mut rhs = k_lblb * fj.ll + 2.0 * k_llb * fj.llbar + k_ll * fj.lbarlbar;
    for i in 0..3 {
        let kwi: f64 = (0..3).map(|j| k[i + 1][j + 1] * w[j]).sum();
        let k_lb_i = k[0][i + 1] + kwi;
        let k_l_i = k[0][i + 1] - kwi;
        rhs += k_lb_i * fj.l_pbar[i] + k_l_i * fj.lbar_pbar[i];
        for j in 0..3 {
            rhs += k[i + 1][j + 1] * fj.pbar_pbar[i][j];
            rhs += k[i + 1][j + 1] * w[j] * fj.pbar[i] / r;
        }
    }
    rhs += 0.5 / r * trbar * (fj.l - fj.lbar);

    Ok(crate::math::abs(lhs - rhs))
}

/// Residual of the frame expansion of the vector field
///   d^a xi d_a d^b chi d_b
/// checked component by component in the coordinate basis.
pub fn grad_contraction_frame_residual(xi: &Jet2, chi: &Jet2, p: Point4) -> Result<f64> {
    let fx = FrameJet::new(xi, p)?;
    let fc = FrameJet::new(chi, p)?;
    let w = p.omega();
    let r = p.r();

    // Left side: V^b = g^{bn} (d^a xi) hess(chi)_{an}.
    let dxi_up = raise(&xi.grad);
    let mut lhs = [0.0; 4];
    for b in 0..4 {
        let mut acc = 0.0;
        for a in 0..4 {
            acc += dxi_up[a] * chi.hess(a, b);
        }
        lhs[b] = metric(b) * acc;
    }

    let pbar_dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

    let c_l = 0.25
        * (fx.lbar * fc.llbar - 2.0 * pbar_dot(&fx.pbar, &fc.lbar_pbar) + fx.l * fc.lbarlbar);
    let c_lbar =
        0.25 * (fx.l * fc.llbar - 2.0 * pbar_dot(&fx.pbar, &fc.l_pbar) + fx.lbar * fc.ll);

    let mut rhs = [c_l + c_lbar, 0.0, 0.0, 0.0];
    for i in 0..3 {
        rhs[i + 1] += (c_l - c_lbar) * w[i];
    }
    for i in 0..3 {
        let mut c_i = -0.5 * fx.l * fc.lbar_pbar[i] - 0.5 * fx.lbar * fc.l_pbar[i];
        for j in 0..3 {
            c_i += fx.pbar[j] * fc.pbar_pbar[j][i];
        }
        c_i += 0.5 / r * fx.pbar[i] * (fc.l - fc.lbar);
        // pbar_i basis vector: components (0, delta_ij - omega_i omega_j).
        for j in 0..3 {
            let dij = if i == j { 1.0 } else { 0.0 };
            rhs[j + 1] += c_i * (dij - w[i] * w[j]);
        }
    }

    let mut res = 0.0_f64;
    for b in 0..4 {
        res = crate::math::max(res, crate::math::abs(lhs[b] - rhs[b]));
    }
    Ok(res)
}

/// Weight f = (L theta)^2 + (L phi)^2 with its exact gradient, from 2-jets.
pub fn weight_f_from_jets(theta: &Jet2, phi: &Jet2, p: Point4) -> Weight {
    let lv = l_vec(p);
    let dlv = BaseField::L.dvec(p);
    let mut parts = [0.0; 2];
    let mut grads = [[0.0; 4]; 2];
    for (idx, jet) in [theta, phi].iter().enumerate() {
        let mut lpsi = 0.0;
        for a in 0..4 {
            lpsi += lv[a] * jet.grad[a];
        }
        parts[idx] = lpsi;
        for m in 0..4 {
            let mut d = 0.0;
            for a in 0..4 {
                d += dlv[m][a] * jet.grad[a] + lv[a] * jet.hess(m, a);
            }
            grads[idx][m] = d;
        }
    }
    let mut grad = [0.0; 4];
    for m in 0..4 {
        grad[m] = 2.0 * parts[0] * grads[0][m] + 2.0 * parts[1] * grads[1][m];
    }
    Weight {
        value: parts[0] * parts[0] + parts[1] * parts[1],
        grad,
    }
}

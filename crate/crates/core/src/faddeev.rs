//! Assembly of the radial Faddeev field equations: semilinear right-hand
//! sides, effective metrics, the 2x2 principal solve for the second time
//! derivatives, and manufactured-solution forcing.
//!
//! The evolved system is the radially symmetric subcase theta(t, r),
//! phi(t, r); all angular derivatives vanish. In radial variables
//!   Q(xi, chi) = -xi_t chi_t + xi_r chi_r,
//!   Q^{ab}(theta, phi) Q_{ab}(theta, phi) = -2 A^2,
//!   A = theta_t phi_r - theta_r phi_t,
//! and the double null form reduces to
///   DN(psi; xi, chi) = 2 [ -psi_t (A_r + (2/r) A) + psi_r A_t ].
use crate::error::{Error, Result};
use crate::math;
use crate::rjet::RJet2;

/// Determinant floor below which the principal solve reports
/// hyperbolicity loss instead of clamping.
pub const DET_FLOOR: f64 = 1e-8;

/// Fields and derivatives of (theta, phi) at one radial point. Mixed
/// derivatives d_t d_r come from differentiating the evolved time
/// derivatives in r, so only the pure second time derivatives are unknown.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointState {
    pub theta: f64,
    pub phi: f64,
    pub dt_theta: f64,
    pub dt_phi: f64,
    pub dr_theta: f64,
    pub dr_phi: f64,
    pub drr_theta: f64,
    pub drr_phi: f64,
    pub dtr_theta: f64,
    pub dtr_phi: f64,
    pub r: f64,
}

impl PointState {
    /// Hyperbolicity domain check: |theta| < pi/2 and finite entries.
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.theta,
            self.phi,
            self.dt_theta,
            self.dt_phi,
            self.dr_theta,
            self.dr_phi,
            self.drr_theta,
            self.drr_phi,
            self.dtr_theta,
            self.dtr_phi,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NanDetected { t: f64::NAN, r: self.r });
        }
        if math::abs(self.theta) >= core::f64::consts::FRAC_PI_2 {
            return Err(Error::HyperbolicityLoss {
                t: f64::NAN,
                r: self.r,
                det: 0.0,
                theta: self.theta,
            });
        }
        Ok(())
    }

    /// From exact radial 2-jets of the two fields at (t, r).
    pub fn from_rjets(theta: &RJet2, phi: &RJet2, r: f64) -> Self {
        Self {
            theta: theta.v,
            phi: phi.v,
            dt_theta: theta.dt,
            dt_phi: phi.dt,
            dr_theta: theta.dr,
            dr_phi: phi.dr,
            drr_theta: theta.drr,
            drr_phi: phi.drr,
            dtr_theta: theta.dtr,
            dtr_phi: phi.dtr,
            r,
        }
    }

    /// A = theta_t phi_r - theta_r phi_t (odd in r; zero at the origin).
    pub fn a_bracket(&self) -> f64 {
        self.dt_theta * self.dr_phi - self.dr_theta * self.dt_phi
    }

    /// d_r A by the product rule on the stored derivatives.
    pub fn a_bracket_dr(&self) -> f64 {
        self.dtr_theta * self.dr_phi + self.dt_theta * self.drr_phi
            - self.drr_theta * self.dt_phi
            - self.dr_theta * self.dtr_phi
    }

    /// The time-derivative part of d_t A that does not involve the unknown
    /// accelerations: B_t = theta_t phi_tr - phi_t theta_tr.
    pub fn a_bracket_dt_known(&self) -> f64 {
        self.dt_theta * self.dtr_phi - self.dt_phi * self.dtr_theta
    }

    /// A_r + (2/r) A, with the parity limit 3 A_r at the origin.
    pub fn a_flux(&self) -> f64 {
        if self.r == 0.0 {
            3.0 * self.a_bracket_dr()
        } else {
            self.a_bracket_dr() + 2.0 * self.a_bracket() / self.r
        }
    }

    /// Radial Laplacian Delta f = f_rr + (2/r) f_r, with the parity limit
    /// 3 f_rr at the origin.
    fn laplacian(&self, drr: f64, dr: f64) -> f64 {
        if self.r == 0.0 {
            3.0 * drr
        } else {
            drr + 2.0 * dr / self.r
        }
    }

    pub fn laplacian_theta(&self) -> f64 {
        self.laplacian(self.drr_theta, self.dr_theta)
    }

    pub fn laplacian_phi(&self) -> f64 {
        self.laplacian(self.drr_phi, self.dr_phi)
    }

    /// Radial null form Q(xi, chi) on the stored first derivatives.
    pub fn q_radial(dt_xi: f64, dr_xi: f64, dt_chi: f64, dr_chi: f64) -> f64 {
        -dt_xi * dt_chi + dr_xi * dr_chi
    }
}

/// Radial reduction of the double null form DN(psi; xi, chi) given the
/// bracket A of (xi, chi) and its derivatives.
pub fn radial_double_null(psi_t: f64, psi_r: f64, a: f64, a_r: f64, a_t: f64, r: f64) -> f64 {
    let flux = if r == 0.0 { 3.0 * a_r } else { a_r + 2.0 * a / r };
    2.0 * (-psi_t * flux + psi_r * a_t)
}

/// The first-derivative-dependent coefficients of the quasilinear principal
/// part, embedded in 4-index form (the radial direction mapped onto x1).
#[derive(Clone, Debug)]
pub struct EffectiveMetric {
    pub g1: [[f64; 4]; 4],
    pub h1: [[f64; 4]; 4],
    pub g2: [[f64; 4]; 4],
    pub h2: [[f64; 4]; 4],
}

/// g1^{ab} = cos^2 theta (d^a phi d^b phi - g^{ab} Q(phi, phi)),
/// h1^{ab} = cos^2 theta (g^{ab} Q(theta, phi) - d^a theta d^b phi),
/// g2, h2 the theta/phi-swapped counterparts.
pub fn effective_metric(s: &PointState) -> Result<EffectiveMetric> {
    s.validate()?;
    let cos2 = math::cos(s.theta) * math::cos(s.theta);
    // Raised radial gradients along x1: d^0 f = -f_t, d^1 f = f_r.
    let dth = [-s.dt_theta, s.dr_theta, 0.0, 0.0];
    let dph = [-s.dt_phi, s.dr_phi, 0.0, 0.0];
    let q_pp = PointState::q_radial(s.dt_phi, s.dr_phi, s.dt_phi, s.dr_phi);
    let q_tt = PointState::q_radial(s.dt_theta, s.dr_theta, s.dt_theta, s.dr_theta);
    let q_tp = PointState::q_radial(s.dt_theta, s.dr_theta, s.dt_phi, s.dr_phi);
    let gup = |a: usize, b: usize| -> f64 {
        if a != b {
            0.0
        } else if a == 0 {
            -1.0
        } else {
            1.0
        }
    };
    let mut em = EffectiveMetric {
        g1: [[0.0; 4]; 4],
        h1: [[0.0; 4]; 4],
        g2: [[0.0; 4]; 4],
        h2: [[0.0; 4]; 4],
    };
    for a in 0..4 {
        for b in 0..4 {
            em.g1[a][b] = cos2 * (dph[a] * dph[b] - gup(a, b) * q_pp);
            em.h1[a][b] = cos2 * (gup(a, b) * q_tp - dth[a] * dph[b]);
            em.g2[a][b] = cos2 * (dth[a] * dth[b] - gup(a, b) * q_tt);
            em.h2[a][b] = cos2 * (gup(a, b) * q_tp - dph[a] * dth[b]);
        }
    }
    Ok(em)
}

/// Semilinear right-hand sides (terms with no second derivatives):
/// theta row: -(1/2) sin 2theta Q(phi, phi) - (1/2) sin 2theta A^2,
/// phi row: (sin 2theta / cos^2 theta) Q(theta, phi).
pub fn rhs_lower_order(s: &PointState) -> Result<[f64; 2]> {
    s.validate()?;
    let sin2t = math::sin(2.0 * s.theta);
    let cos2 = math::cos(s.theta) * math::cos(s.theta);
    let q_pp = PointState::q_radial(s.dt_phi, s.dr_phi, s.dt_phi, s.dr_phi);
    let q_tp = PointState::q_radial(s.dt_theta, s.dr_theta, s.dt_phi, s.dr_phi);
    let a = s.a_bracket();
    Ok([
        -0.5 * sin2t * q_pp - 0.5 * sin2t * a * a,
        sin2t / cos2 * q_tp,
    ])
}

/// The 2x2 system M (theta_tt, phi_tt)^T = b, the phi row scaled by
/// cos^2 theta so M is symmetric.
#[derive(Clone, Copy, Debug)]
pub struct PrincipalSystem {
    pub m: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub det: f64,
}

/// Assemble the principal system at a point. Optional forcing (f_theta,
/// f_phi) enters the equations as Box theta - RHS_theta = f_theta and
/// Box phi - RHS_phi = f_phi.
pub fn principal_system(s: &PointState, forcing: Option<[f64; 2]>) -> Result<PrincipalSystem> {
    s.validate()?;
    let cos2 = math::cos(s.theta) * math::cos(s.theta);
    let m00 = -(1.0 + cos2 * s.dr_phi * s.dr_phi);
    let m01 = cos2 * s.dr_theta * s.dr_phi;
    let m11 = -cos2 * (1.0 + s.dr_theta * s.dr_theta);
    let det = m00 * m11 - m01 * m01;

    let sl = rhs_lower_order(s)?;
    let flux = s.a_flux();
    let b_t = s.a_bracket_dt_known();
    let f = forcing.unwrap_or([0.0, 0.0]);

    let b_theta =
        -s.laplacian_theta() + sl[0] - cos2 * s.dt_phi * flux + cos2 * s.dr_phi * b_t + f[0];
    let b_phi = cos2 * (-s.laplacian_phi() + sl[1] + s.dt_theta * flux - s.dr_theta * b_t + f[1]);

    Ok(PrincipalSystem {
        m: [[m00, m01], [m01, m11]],
        b: [b_theta, b_phi],
        det,
    })
}

/// Exact 2x2 solve; reports hyperbolicity loss when |det| < DET_FLOOR.
pub fn solve_accelerations(ps: &PrincipalSystem) -> Result<(f64, f64)> {
    if math::abs(ps.det) < DET_FLOOR {
        return Err(Error::HyperbolicityLoss {
            t: f64::NAN,
            r: f64::NAN,
            det: ps.det,
            theta: f64::NAN,
        });
    }
    let a_theta = (ps.b[0] * ps.m[1][1] - ps.b[1] * ps.m[0][1]) / ps.det;
    let a_phi = (ps.m[0][0] * ps.b[1] - ps.m[1][0] * ps.b[0]) / ps.det;
    Ok((a_theta, a_phi))
}

/// Closed form of det(M): cos^2 theta (1 + theta_r^2 + cos^2 theta phi_r^2).
/// Follows from expanding the product of the diagonal entries minus the
/// square of the coupling.
pub fn det_closed_form(s: &PointState) -> f64 {
    let cos2 = math::cos(s.theta) * math::cos(s.theta);
    cos2 * (1.0 + s.dr_theta * s.dr_theta + cos2 * s.dr_phi * s.dr_phi)
}

/// Direct residual of the field equations for given accelerations:
/// row 0: Box theta - RHS_theta, row 1: Box phi - RHS_phi (unweighted),
/// with the quasilinear double-null terms evaluated from the supplied
/// accelerations. Forcing is subtracted when provided.
pub fn direct_residual(
    s: &PointState,
    accel: (f64, f64),
    forcing: Option<[f64; 2]>,
) -> Result<[f64; 2]> {
    s.validate()?;
    let cos2 = math::cos(s.theta) * math::cos(s.theta);
    let (a_theta, a_phi) = accel;
    let sl = rhs_lower_order(s)?;
    let a = s.a_bracket();
    let a_r = s.a_bracket_dr();
    let a_t = a_theta * s.dr_phi - a_phi * s.dr_theta + s.a_bracket_dt_known();
    let f = forcing.unwrap_or([0.0, 0.0]);

    // Box theta = -theta_tt + Delta theta; DN(phi; theta, phi) with bracket A.
    let dn_theta = radial_double_null(s.dt_phi, s.dr_phi, a, a_r, a_t, s.r);
    let res_theta = -a_theta + s.laplacian_theta() - sl[0] - 0.5 * cos2 * dn_theta - f[0];

    // DN(theta; phi, theta) carries the bracket of (phi, theta) = -A.
    let dn_phi = radial_double_null(s.dt_theta, s.dr_theta, -a, -a_r, -a_t, s.r);
    let res_phi = -a_phi + s.laplacian_phi() - sl[1] - 0.5 * dn_phi - f[1];

    Ok([res_theta, res_phi])
}

/// Closed-form target fields for the method of manufactured solutions:
/// theta* = a_th cos(w_th t + p_th) exp(-r^2 / s_th^2) and the phi
/// counterpart. Even in r, so the origin parity of the solver applies.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedTarget {
    pub amp_theta: f64,
    pub amp_phi: f64,
    pub freq_theta: f64,
    pub freq_phi: f64,
    pub phase_theta: f64,
    pub phase_phi: f64,
    pub sigma_theta: f64,
    pub sigma_phi: f64,
}

impl Default for ManufacturedTarget {
    fn default() -> Self {
        Self {
            amp_theta: 0.12,
            amp_phi: 0.1,
            freq_theta: 1.3,
            freq_phi: 0.9,
            phase_theta: 0.3,
            phase_phi: 1.1,
            sigma_theta: 1.0,
            sigma_phi: 1.2,
        }
    }
}

impl ManufacturedTarget {
    /// Identically zero target.
    pub fn zero() -> Self {
        Self {
            amp_theta: 0.0,
            amp_phi: 0.0,
            ..Default::default()
        }
    }

    pub fn jets(&self, t: f64, r: f64) -> (RJet2, RJet2) {
        let tj = RJet2::coord_t(t);
        let rj = RJet2::coord_r(r);
        let r2 = rj.mul(&rj);
        let theta = tj
            .scale(self.freq_theta)
            .add(&RJet2::constant(self.phase_theta))
            .cos()
            .mul(&r2.scale(-1.0 / (self.sigma_theta * self.sigma_theta)).exp())
            .scale(self.amp_theta);
        let phi = tj
            .scale(self.freq_phi)
            .add(&RJet2::constant(self.phase_phi))
            .cos()
            .mul(&r2.scale(-1.0 / (self.sigma_phi * self.sigma_phi)).exp())
            .scale(self.amp_phi);
        (theta, phi)
    }

    /// Exact state (with r-derivatives) of the target at (t, r).
    pub fn state(&self, t: f64, r: f64) -> PointState {
        let (th, ph) = self.jets(t, r);
        PointState::from_rjets(&th, &ph, r)
    }
}

/// Forcing that makes the target an exact solution: the residual of the
/// unforced equations evaluated on the target's exact jets.
pub fn manufactured_forcing(target: &ManufacturedTarget, t: f64, r: f64) -> Result<[f64; 2]> {
    let (th, ph) = target.jets(t, r);
    let s = PointState::from_rjets(&th, &ph, r);
    direct_residual(&s, (th.dtt, ph.dtt), None)
}

//! Exact 2-jets in the two radial variables (t, r), used for manufactured
//! solutions and for embedding radial closed forms into full spacetime jets.

use crate::jet::{Jet2, Point4};
use crate::math;

/// Value plus first and second partials of a function of (t, r).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RJet2 {
    pub v: f64,
    pub dt: f64,
    pub dr: f64,
    pub dtt: f64,
    pub dtr: f64,
    pub drr: f64,
}

impl RJet2 {
    pub fn constant(c: f64) -> Self {
        Self {
            v: c,
            ..Default::default()
        }
    }

    pub fn coord_t(t: f64) -> Self {
        Self {
            v: t,
            dt: 1.0,
            ..Default::default()
        }
    }

    pub fn coord_r(r: f64) -> Self {
        Self {
            v: r,
            dr: 1.0,
            ..Default::default()
        }
    }

    pub fn add(&self, o: &RJet2) -> RJet2 {
        RJet2 {
            v: self.v + o.v,
            dt: self.dt + o.dt,
            dr: self.dr + o.dr,
            dtt: self.dtt + o.dtt,
            dtr: self.dtr + o.dtr,
            drr: self.drr + o.drr,
        }
    }

    pub fn sub(&self, o: &RJet2) -> RJet2 {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> RJet2 {
        RJet2 {
            v: c * self.v,
            dt: c * self.dt,
            dr: c * self.dr,
            dtt: c * self.dtt,
            dtr: c * self.dtr,
            drr: c * self.drr,
        }
    }

    pub fn mul(&self, o: &RJet2) -> RJet2 {
        RJet2 {
            v: self.v * o.v,
            dt: self.dt * o.v + self.v * o.dt,
            dr: self.dr * o.v + self.v * o.dr,
            dtt: self.dtt * o.v + 2.0 * self.dt * o.dt + self.v * o.dtt,
            dtr: self.dtr * o.v + self.dt * o.dr + self.dr * o.dt + self.v * o.dtr,
            drr: self.drr * o.v + 2.0 * self.dr * o.dr + self.v * o.drr,
        }
    }

    pub fn compose(&self, g0: f64, g1: f64, g2: f64) -> RJet2 {
        RJet2 {
            v: g0,
            dt: g1 * self.dt,
            dr: g1 * self.dr,
            dtt: g1 * self.dtt + g2 * self.dt * self.dt,
            dtr: g1 * self.dtr + g2 * self.dt * self.dr,
            drr: g1 * self.drr + g2 * self.dr * self.dr,
        }
    }

    pub fn sin(&self) -> RJet2 {
        let (s, c) = (math::sin(self.v), math::cos(self.v));
        self.compose(s, c, -s)
    }

    pub fn cos(&self) -> RJet2 {
        let (s, c) = (math::sin(self.v), math::cos(self.v));
        self.compose(c, -s, -c)
    }

    pub fn exp(&self) -> RJet2 {
        let e = math::exp(self.v);
        self.compose(e, e, e)
    }
}

/// Embed the radial 2-jet of F(t, r) as a full spacetime 2-jet at p
/// (requires p.r() > 0):
///   d_i F = F_r omega_i,
///   d_i d_j F = F_rr omega_i omega_j + F_r (delta_ij - omega_i omega_j)/r.
pub fn radial_to_jet(f: &RJet2, p: Point4) -> Jet2 {
    let w = p.omega();
    let r = p.r();
    let mut out = Jet2::constant(f.v);
    out.grad[0] = f.dt;
    for i in 0..3 {
        out.grad[i + 1] = f.dr * w[i];
    }
    out.set_hess(0, 0, f.dtt);
    for i in 0..3 {
        out.set_hess(0, i + 1, f.dtr * w[i]);
        for j in i..3 {
            let dij = if i == j { 1.0 } else { 0.0 };
            out.set_hess(
                i + 1,
                j + 1,
                f.drr * w[i] * w[j] + f.dr * (dij - w[i] * w[j]) / r,
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SplitMix64;

    /// Random smooth radial test jet from closed-form packets.
    pub fn sample_rjet(rng: &mut SplitMix64, t: f64, r: f64) -> RJet2 {
        let tj = RJet2::coord_t(t);
        let rj = RJet2::coord_r(r);
        let mut acc = RJet2::constant(0.0);
        for _ in 0..3 {
            let amp = rng.range(0.2, 1.0);
            let a = rng.range(-1.2, 1.2);
            let b = rng.range(-1.2, 1.2);
            let ph = rng.range(0.0, 6.28);
            let arg = tj.scale(a).add(&rj.scale(b)).add(&RJet2::constant(ph));
            acc = acc.add(&arg.sin().scale(amp));
        }
        acc
    }

    #[test]
    fn product_and_chain_rules() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..200 {
            let t = rng.range(0.5, 3.0);
            let r = rng.range(0.2, 3.0);
            let f = sample_rjet(&mut rng, t, r);
            let g = sample_rjet(&mut rng, t, r);
            let fg = f.mul(&g);
            let expect = f.dtr * g.v + f.dt * g.dr + f.dr * g.dt + f.v * g.dtr;
            assert!((fg.dtr - expect).abs() < 1e-14 * (1.0 + expect.abs()));
            let s = f.sin();
            let expect = math::cos(f.v) * f.drr - math::sin(f.v) * f.dr * f.dr;
            assert!((s.drr - expect).abs() < 1e-14 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn embedding_matches_direct_jet() {
        // F(t, r) = sin(a t + b r): embed and compare against the full jet
        // of sin(a t + b |x|) built from jet_r.
        use crate::jet::{jet_r, Jet2, Point4};
        let p = Point4::new(1.4, [0.6, -0.3, 0.9]);
        let (a, b) = (0.7, -1.1);
        let f = RJet2::coord_t(p.t)
            .scale(a)
            .add(&RJet2::coord_r(p.r()).scale(b))
            .sin();
        let embedded = radial_to_jet(&f, p);
        let direct = Jet2::coord(0, p).scale(a).add(&jet_r(p).scale(b)).sin();
        assert!((embedded.value - direct.value).abs() < 1e-14);
        for i in 0..4 {
            assert!((embedded.grad[i] - direct.grad[i]).abs() < 1e-13);
            for j in 0..4 {
                assert!((embedded.hess(i, j) - direct.hess(i, j)).abs() < 1e-13);
            }
        }
    }
}

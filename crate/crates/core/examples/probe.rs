// Isolate the energy-identity pieces on an exact linear solution.
use faddeev_core::diagnose::{energy_identity_check, IdentityMultiplier};
use faddeev_core::evolve::{History, RadialGrid, RunStats, Snapshot};
use faddeev_core::pulse::PulseSpec;

fn main() {
    let delta = 0.1_f64;
    let spec = PulseSpec::new(delta).unwrap();
    let amp = 1e-3;
    // exact d'Alembert solution of the radial wave from the pulse data
    let theta0 = |x: f64| amp * spec.data_at(x)[0];
    let w0 = |x: f64| x.abs() * theta0(x.abs()) * x.signum();
    let cap = |x: f64| {
        let lo = 1.0 - 2.0 * delta;
        let hi = x.abs().min(1.0);
        if hi <= lo { return 0.0; }
        let n = 6000;
        let mut acc = 0.0;
        for i in 0..n {
            let s = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            acc += theta0(s);
        }
        acc * (hi - lo) / n as f64 * x.signum()
    };
    let ufn = |x: f64| -w0(x) + cap(x);
    let theta = move |t: f64, r: f64| {
        let tau = t - 1.0;
        let (xp, xm) = (r + tau, r - tau);
        (0.5 * (w0(xp) + w0(xm)) + 0.5 * (ufn(xp) - ufn(xm))) / r.max(1e-12)
    };
    let h = 1e-5;
    let theta_t = move |t: f64, r: f64| (theta(t + h, r) - theta(t - h, r)) / (2.0 * h);

    let n = 1025;
    let grid = RadialGrid::new(4.4, n).unwrap();
    let cadence = 0.02;
    let snaps: Vec<Snapshot> = (0..101).map(|j| {
        let t = 1.0 + cadence * j as f64;
        Snapshot {
            t,
            theta: grid.radii().iter().map(|&r| theta(t, r)).collect(),
            phi: vec![0.0; n],
            theta_t: grid.radii().iter().map(|&r| theta_t(t, r)).collect(),
            phi_t: vec![0.0; n],
        }
    }).collect();
    let hist = History { grid, delta, cadence, snaps, stats: RunStats::default() };
    for m in [IdentityMultiplier::Dt, IdentityMultiplier::L, IdentityMultiplier::Lbar] {
        let res = energy_identity_check(&hist, m, 0.05, 1.8).unwrap();
        println!("{}: residual {:.6e}", m.name(), res);
    }
}

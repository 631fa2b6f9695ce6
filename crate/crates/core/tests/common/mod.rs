#![allow(dead_code)]

use reset_orbit::{State, SystemParams};

fn rhs(p: &SystemParams, x: [f64; 3]) -> [f64; 3] {
    [x[1], -(p.k() * x[0] + p.c() * x[1]) / p.m(), x[1] * x[1]]
}

/// Classic RK4 on the state augmented with `∫ x2² dt`.
pub fn rk4_with_quadrature(p: &SystemParams, x: State, duration: f64, steps: usize) -> (State, f64) {
    let h = duration / steps as f64;
    let mut y = [x.x1, x.x2, 0.0];
    let axpy = |y: [f64; 3], k: [f64; 3], a: f64| [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]];
    for _ in 0..steps {
        let k1 = rhs(p, y);
        let k2 = rhs(p, axpy(y, k1, 0.5 * h));
        let k3 = rhs(p, axpy(y, k2, 0.5 * h));
        let k4 = rhs(p, axpy(y, k3, h));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (State::new(y[0], y[1]), y[2])
}

/// Fixed-step RK4 with step close to `h`.
pub fn rk4(p: &SystemParams, x: State, duration: f64, h: f64) -> State {
    let steps = (duration / h).round().max(1.0) as usize;
    rk4_with_quadrature(p, x, duration, steps).0
}

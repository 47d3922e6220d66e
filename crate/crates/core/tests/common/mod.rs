//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;

use followme::{Command, GestureClass, OccupancyGrid};

/// Weighted distance computed with plain loops.
pub fn ref_distance(x: &[f64], mu: &[f64], sigma: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        let s = if sigma[i] < 1e-6 { 1e-6 } else { sigma[i] };
        let z = (x[i] - mu[i]) / s;
        acc += z * z;
    }
    (acc / x.len() as f64).sqrt()
}

/// Mean and population std via a two-pass sum.
pub fn ref_mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

pub fn ref_rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Euclidean projection onto `{a : 0 <= a <= c, y'a = 0}`.
///
/// The projection is `clip(v - nu * y)` for the multiplier `nu` that zeroes
/// `y' clip(v - nu * y)`; that function is monotone in `nu`, so bisection
/// finds it.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let clip = |nu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - nu * yi).clamp(0.0, c)).collect() };
    let h = |nu: f64| -> f64 { clip(nu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while h(lo) < 0.0 {
        lo *= 2.0;
    }
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip(0.5 * (lo + hi))
}

/// Solution of the soft-margin dual by accelerated projected gradient.
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub b: f64,
}

pub fn dual_qp_oracle(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64) -> QpSolution {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * ref_rbf(&x[i], &x[j], gamma)).collect())
        .collect();
    // Gershgorin bound on the largest eigenvalue.
    let lip = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let grad = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| q[i].iter().zip(a).map(|(qij, aj)| qij * aj).sum::<f64>() - 1.0).collect() };

    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let g = grad(&z);
        let step: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lip).collect();
        let next = project(&step, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        let change = next.iter().zip(&a).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        z = next.iter().zip(&a).map(|(p, q)| p + beta * (p - q)).collect();
        a = next;
        t = t_next;
        if change < 1e-14 {
            break;
        }
    }

    // Bias from margin vectors, else the middle of the feasible interval.
    let f = |i: usize| -> f64 { (0..n).map(|j| a[j] * y[j] * ref_rbf(&x[j], &x[i], gamma)).sum() };
    let eps = 1e-7 * c;
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > eps && a[i] < c - eps).collect();
    let b = if !free.is_empty() {
        free.iter().map(|&i| y[i] - f(i)).sum::<f64>() / free.len() as f64
    } else {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let r = y[i] - f(i);
            let at_upper = a[i] >= c - eps;
            // y_i f(x_i) >= 1 at alpha = 0, <= 1 at alpha = C.
            if (y[i] > 0.0) != at_upper {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
        }
        0.5 * (lo + hi)
    };
    QpSolution { alpha: a, b }
}

pub fn qp_decision(sol: &QpSolution, x: &[Vec<f64>], y: &[f64], gamma: f64, p: &[f64]) -> f64 {
    (0..y.len()).map(|j| sol.alpha[j] * y[j] * ref_rbf(&x[j], p, gamma)).sum::<f64>() + sol.b
}

/// Shortest 8-connected path cost (in cells) without corner cutting, by
/// Dijkstra over an ordered set.
pub fn dijkstra_cost(g: &OccupancyGrid, start: (usize, usize), goal: (usize, usize)) -> Option<f64> {
    let (w, h) = (g.width(), g.height());
    let mut dist = vec![f64::INFINITY; w * h];
    let key = |d: f64| (d * 1e9).round() as u64;
    let mut open = BTreeSet::new();
    dist[start.1 * w + start.0] = 0.0;
    open.insert((0u64, start.1 * w + start.0));
    while let Some((_, i)) = open.pop_first() {
        let (cx, cy) = (i % w, i / w);
        if (cx, cy) == goal {
            return Some(dist[i]);
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if g.is_blocked(nx, ny) {
                    continue;
                }
                if dx != 0 && dy != 0 && (g.is_blocked(nx, cy) || g.is_blocked(cx, ny)) {
                    continue;
                }
                let step = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                let j = ny * w + nx;
                let nd = dist[i] + step;
                if nd < dist[j] - 1e-12 {
                    if dist[j].is_finite() {
                        open.remove(&(key(dist[j]), j));
                    }
                    dist[j] = nd;
                    open.insert((key(nd), j));
                }
            }
        }
    }
    None
}

/// One axis of the constant-velocity filter written out in scalar form.
#[derive(Debug, Clone, Copy)]
pub struct AxisFilter {
    pub p: f64,
    pub v: f64,
    pub ppp: f64,
    pub ppv: f64,
    pub pvv: f64,
}

impl AxisFilter {
    pub fn new(z: f64, r: f64, v_std: f64) -> Self {
        Self { p: z, v: 0.0, ppp: r * r, ppv: 0.0, pvv: v_std * v_std }
    }

    pub fn predict(&mut self, dt: f64, q: f64) {
        self.p += dt * self.v;
        let (a, b, c) = (self.ppp, self.ppv, self.pvv);
        self.ppp = a + 2.0 * dt * b + dt * dt * c + q * dt.powi(3) / 3.0;
        self.ppv = b + dt * c + q * dt * dt / 2.0;
        self.pvv = c + q * dt;
    }

    pub fn update(&mut self, z: f64, r: f64) {
        let s = self.ppp + r * r;
        let (kp, kv) = (self.ppp / s, self.ppv / s);
        let innov = z - self.p;
        self.p += kp * innov;
        self.v += kv * innov;
        let (a, b, c) = (self.ppp, self.ppv, self.pvv);
        self.ppp = (1.0 - kp) * a;
        self.ppv = (1.0 - kp) * b;
        self.pvv = c - kv * b;
    }
}

/// Distance from a point to a polyline.
pub fn polyline_distance(p: [f64; 2], line: &[[f64; 2]]) -> f64 {
    line.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
            (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Input symbol for the exhaustive debouncer check; `None` resets.
pub type Sym = Option<GestureClass>;

/// Reference: emit on the frame where the current run reaches exactly `xi`.
pub fn ref_debounce(stream: &[Sym], xi: usize) -> Vec<Option<Command>> {
    let mut run = 0usize;
    let mut last: Option<GestureClass> = None;
    stream
        .iter()
        .map(|s| match s {
            None => {
                run = 0;
                last = None;
                None
            }
            Some(c) => {
                run = if last == Some(*c) { run + 1 } else { 1 };
                last = Some(*c);
                match (run == xi, c) {
                    (true, GestureClass::Wait) => Some(Command::Wait),
                    (true, GestureClass::Follow) => Some(Command::Follow),
                    _ => None,
                }
            }
        })
        .collect()
}

pub const SYMS: [Sym; 4] = [Some(GestureClass::Wait), Some(GestureClass::Follow), Some(GestureClass::Other), None];

/// Every (mode, alpha, beta, gamma) combination with its expected outcome,
/// written out by hand. `-` means no command.
pub const DECISION_TABLE: [(&str, bool, bool, &str, &str, &str); 48] = [
    ("steady", false, false, "-", "steady", "idle"),
    ("steady", false, false, "wait", "steady", "idle"),
    ("steady", false, false, "follow", "search", "rotate_toward"),
    ("steady", false, true, "-", "steady", "idle"),
    ("steady", false, true, "wait", "steady", "idle"),
    ("steady", false, true, "follow", "search", "rotate_toward"),
    ("steady", true, false, "-", "steady", "idle"),
    ("steady", true, false, "wait", "steady", "idle"),
    ("steady", true, false, "follow", "follow", "send_goal"),
    ("steady", true, true, "-", "steady", "idle"),
    ("steady", true, true, "wait", "steady", "idle"),
    ("steady", true, true, "follow", "follow", "cancel_and_hold"),
    ("follow", false, false, "-", "search", "rotate_toward"),
    ("follow", false, false, "wait", "wait", "cancel_and_hold"),
    ("follow", false, false, "follow", "search", "rotate_toward"),
    ("follow", false, true, "-", "search", "rotate_toward"),
    ("follow", false, true, "wait", "wait", "cancel_and_hold"),
    ("follow", false, true, "follow", "search", "rotate_toward"),
    ("follow", true, false, "-", "follow", "send_goal"),
    ("follow", true, false, "wait", "wait", "cancel_and_hold"),
    ("follow", true, false, "follow", "follow", "send_goal"),
    ("follow", true, true, "-", "follow", "cancel_and_hold"),
    ("follow", true, true, "wait", "wait", "cancel_and_hold"),
    ("follow", true, true, "follow", "follow", "cancel_and_hold"),
    ("search", false, false, "-", "search", "rotate_toward"),
    ("search", false, false, "wait", "wait", "cancel_and_hold"),
    ("search", false, false, "follow", "search", "rotate_toward"),
    ("search", false, true, "-", "search", "rotate_toward"),
    ("search", false, true, "wait", "wait", "cancel_and_hold"),
    ("search", false, true, "follow", "search", "rotate_toward"),
    ("search", true, false, "-", "follow", "send_goal"),
    ("search", true, false, "wait", "wait", "cancel_and_hold"),
    ("search", true, false, "follow", "follow", "send_goal"),
    ("search", true, true, "-", "follow", "cancel_and_hold"),
    ("search", true, true, "wait", "wait", "cancel_and_hold"),
    ("search", true, true, "follow", "follow", "cancel_and_hold"),
    ("wait", false, false, "-", "wait", "idle"),
    ("wait", false, false, "wait", "wait", "cancel_and_hold"),
    ("wait", false, false, "follow", "search", "rotate_toward"),
    ("wait", false, true, "-", "wait", "idle"),
    ("wait", false, true, "wait", "wait", "cancel_and_hold"),
    ("wait", false, true, "follow", "search", "rotate_toward"),
    ("wait", true, false, "-", "wait", "idle"),
    ("wait", true, false, "wait", "wait", "cancel_and_hold"),
    ("wait", true, false, "follow", "follow", "send_goal"),
    ("wait", true, true, "-", "wait", "idle"),
    ("wait", true, true, "wait", "wait", "cancel_and_hold"),
    ("wait", true, true, "follow", "follow", "cancel_and_hold"),
];

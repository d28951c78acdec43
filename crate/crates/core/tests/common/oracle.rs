//! Independent numerical oracles shared by the integration and acceptance
//! tests. Nothing here goes through the closed forms or the adaptive
//! quadrature of the library: densities are rebuilt from the physical model
//! and integrated with fixed composite Gauss–Legendre rules.

#![allow(dead_code)]

use aerial_noma::analysis::DecodingThresholds;
use aerial_noma::montecarlo::{run_trial, Event};
use aerial_noma::SystemParams;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre over consecutive mesh pieces.
pub fn composite<F: FnMut(f64) -> f64>(mesh: &[f64], rule: &[(f64, f64)], mut f: F) -> f64 {
    let mut total = 0.0;
    for w in mesh.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        total += h * rule.iter().map(|&(x, wt)| wt * f(c + h * x)).sum::<f64>();
    }
    total
}

fn ln_fact(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// UAV received-power density rebuilt from the physical model: LoS with
/// probability `p_los`, Gamma(m, mean) power with mean `P_A η d^-α G_A`.
#[derive(Clone, Copy, Debug)]
pub struct UavDensity {
    pub comps: [(f64, f64, u32); 2], // (weight, mean power, shape)
}

impl UavDensity {
    pub fn new(p: &SystemParams, p_los: f64, d_a: f64) -> Self {
        let mean_l = p.aue_tx_power * p.eta_los * d_a.powf(-p.alpha_los) * p.aue_gain;
        let mean_n = p.aue_tx_power * p.eta_nlos * d_a.powf(-p.alpha_nlos) * p.aue_gain;
        Self {
            comps: [(p_los, mean_l, p.m_los), (1.0 - p_los, mean_n, p.m_nlos)],
        }
    }

    pub fn pdf(&self, a: f64) -> f64 {
        self.comps
            .iter()
            .filter(|c| c.0 > 0.0)
            .map(|&(w, mean, m)| {
                let theta = mean / m as f64;
                if a <= 0.0 {
                    return if m == 1 && a == 0.0 { w / theta } else { 0.0 };
                }
                let y = a / theta;
                w * ((m - 1) as f64 * y.ln() - y - ln_fact(m - 1)).exp() / theta
            })
            .sum()
    }

    /// Point beyond which every component has negligible mass.
    pub fn support_end(&self) -> f64 {
        self.comps
            .iter()
            .filter(|c| c.0 > 0.0)
            .map(|&(_, mean, m)| mean / m as f64 * (m as f64 + 45.0 + 12.0 * (m as f64).sqrt()))
            .fold(0.0, f64::max)
    }
}

fn push_refined(mesh: &mut Vec<f64>, b: f64, lo: f64, hi: f64, levels: i32) {
    if !(b > lo && b < hi) {
        return;
    }
    mesh.push(b);
    for k in 1..=levels {
        let s = 0.5f64.powi(k);
        mesh.push(b + (hi - b) * s);
        mesh.push(b - (b - lo) * s);
    }
}

fn finish(mut mesh: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    mesh.retain(|x| *x >= lo && *x <= hi && x.is_finite());
    mesh.sort_by(f64::total_cmp);
    mesh.dedup();
    mesh
}

/// Probabilities of E1..E5 by brute-force 2D integration of the joint
/// density of `(x_A, x_T)` over the regions carved out by the decoding tree.
pub fn region_probabilities(
    p: &SystemParams,
    p_los: f64,
    d_a: f64,
    th: &DecodingThresholds,
) -> [f64; 5] {
    let uav = UavDensity::new(p, p_los, d_a);
    let mu = p.tue_cutoff_power * p.tue_gain;
    let s2 = p.noise_power;
    let (ta, tt) = (th.theta_a, th.theta_t);
    let t_end = 60.0 * mu;
    let a_end = uav.support_end();
    let rule = gauss_legendre(12);

    let mut outer = vec![0.0, a_end];
    for k in 1..=70 {
        outer.push(a_end * 0.5f64.powi(k));
    }
    let mut kinks = vec![ta * s2, ta * (1.0 + tt) * s2, ta * (t_end + s2)];
    if tt > 0.0 {
        kinks.push(t_end / tt - s2);
    }
    if ta * tt < 1.0 {
        kinks.push(ta * s2 * (1.0 + tt) / (1.0 - ta * tt));
    }
    for b in kinks {
        push_refined(&mut outer, b, 0.0, a_end, 50);
    }
    let outer = finish(outer, 0.0, a_end);

    let mut acc = [0.0; 5];
    let tue_pdf = |t: f64| (-t / mu).exp() / mu;
    for w in outer.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for &(x, wt) in &rule {
            let a = c + h * x;
            let fa = uav.pdf(a);
            if fa == 0.0 {
                continue;
            }
            let mut cuts = vec![0.0, t_end, tt * s2, tt * (a + s2)];
            if ta > 0.0 {
                cuts.push(a / ta - s2);
            }
            let cuts = finish(cuts, 0.0, t_end);
            for seg in cuts.windows(2) {
                let (t0, t1) = (seg[0], seg[1]);
                if t1 <= t0 {
                    continue;
                }
                let ev = run_trial(a, 0.5 * (t0 + t1), th, s2).event;
                let pieces = (((t1 - t0) / (0.25 * mu)).ceil() as usize).clamp(1, 400);
                let mesh: Vec<f64> = (0..=pieces)
                    .map(|i| t0 + (t1 - t0) * i as f64 / pieces as f64)
                    .collect();
                let mass = composite(&mesh, &rule, tue_pdf);
                acc[ev.index()] += h * wt * fa * mass;
            }
        }
    }
    acc
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn event_name(e: Event) -> &'static str {
    match e {
        Event::E1 => "p1",
        Event::E2 => "p2",
        Event::E3 => "p3",
        Event::E4 => "p4",
        Event::E5 => "p5",
    }
}

/// Adaptive-free Gauss–Legendre integral of `t^{s-1} e^{-t}` over `[x, ∞)`,
/// on a mesh dense enough for relative 1e-12 at the shapes used here.
pub fn upper_gamma_by_quadrature(s: u32, x: f64) -> f64 {
    let end = x + 200.0 + 10.0 * s as f64;
    let pieces = 2000;
    let mesh: Vec<f64> = (0..=pieces)
        .map(|i| x + (end - x) * i as f64 / pieces as f64)
        .collect();
    let rule = gauss_legendre(16);
    composite(&mesh, &rule, |t| {
        if t == 0.0 && s == 1 {
            1.0
        } else {
            ((s - 1) as f64 * t.ln() - t).exp()
        }
    })
}

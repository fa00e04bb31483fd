#![allow(dead_code)]

use carnot_lab::carnot::{CarnotGroup, Step2Spec};
use carnot_lab::rng::StreamKey;

pub fn r1() -> CarnotGroup {
    CarnotGroup::euclidean(1).unwrap()
}

pub fn r2() -> CarnotGroup {
    CarnotGroup::euclidean(2).unwrap()
}

pub fn h1() -> CarnotGroup {
    CarnotGroup::heisenberg(1).unwrap()
}

pub fn free3() -> CarnotGroup {
    let mut forms = Vec::new();
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let mut m = vec![vec![0.0; 3]; 3];
        m[i][j] = 1.0;
        m[j][i] = -1.0;
        forms.push(m);
    }
    CarnotGroup::step2(&Step2Spec { generators: 3, forms }, "step2:free3").unwrap()
}

/// Groups exercised by the structural properties.
pub fn groups() -> Vec<CarnotGroup> {
    vec![
        CarnotGroup::euclidean(3).unwrap(),
        h1(),
        CarnotGroup::heisenberg(2).unwrap(),
        free3(),
    ]
}

/// Hit-or-miss estimate of `|B(0, r)|` from a box with layer-`i` half-widths `r^i`.
pub fn box_volume(group: &CarnotGroup, r: f64, samples: usize, key: StreamKey) -> (f64, f64) {
    let n = group.ambient_dim();
    let half: Vec<f64> = (0..n).map(|i| r.powi(group.sigma(i) as i32)).collect();
    let box_volume: f64 = half.iter().map(|h| 2.0 * h).product();
    let mut hits = 0usize;
    let mut x = vec![0.0; n];
    for s in 0..samples {
        let mut rng = key.sample(s as u64);
        for (v, h) in x.iter_mut().zip(&half) {
            *v = rng.uniform(-h, *h);
        }
        if group.gauge(&x) < r {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let se = (frac * (1.0 - frac) / samples as f64).sqrt();
    (box_volume * frac, box_volume * se)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope_of(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the code paths it is used to check.
#![allow(dead_code)]

use eed_core::diffusion::{Kernel1D, Sym2, TensorField};
use eed_core::metrics::{LabelMask, IGNORE_ID};
use eed_core::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> Image {
    Image::from_fn(h, w, c, |_, _, _| rng.random::<f64>()).unwrap()
}

/// Random symmetric positive definite field with eigenvalues in `(0, 1]`.
pub fn random_spd_field(rng: &mut ChaCha8Rng, h: usize, w: usize) -> TensorField {
    TensorField::from_fn(h, w, |_, _| {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let l1: f64 = rng.random_range(0.05..=1.0);
        let l2: f64 = rng.random_range(0.05..=1.0);
        let (s, c) = theta.sin_cos();
        Sym2::new(l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c)
    })
}

/// Random PSD field: sums of a few rank-one tensors.
pub fn random_psd_field(rng: &mut ChaCha8Rng, h: usize, w: usize) -> TensorField {
    TensorField::from_fn(h, w, |_, _| {
        let mut t = Sym2::default();
        for _ in 0..rng.random_range(1..3) {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            t = Sym2::new(t.a + x * x, t.b + x * y, t.c + y * y);
        }
        t
    })
}

/// Half-sample mirror by repeated folding.
pub fn fold(mut idx: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if idx < 0 {
            idx = -idx - 1;
        } else if idx >= n {
            idx = 2 * n - 1 - idx;
        } else {
            return idx as usize;
        }
    }
}

/// Direct 2D convolution with the full outer-product kernel.
pub fn brute_convolve(img: &Image, k: &Kernel1D) -> Image {
    let r = (k.len() / 2) as isize;
    let w = k.weights();
    Image::from_fn(img.height(), img.width(), img.channels(), |c, i, j| {
        let mut acc = 0.0;
        for di in -r..=r {
            for dj in -r..=r {
                let si = fold(i as isize + di, img.height());
                let sj = fold(j as isize + dj, img.width());
                acc += w[(di + r) as usize] * w[(dj + r) as usize] * img.get(c, si, sj);
            }
        }
        acc
    })
    .unwrap()
}

/// Dense operator `A` with `u' = u + tau * A u` for one channel, assembled
/// from padded ghost arrays: `u`, `a`, `c` mirrored evenly, `b` oddly.
pub fn assemble_operator(d: &TensorField) -> Vec<Vec<f64>> {
    let (h, w) = (d.height() as isize, d.width() as isize);
    let n = (h * w) as usize;
    let idx = |i: isize, j: isize| (i.clamp(0, h - 1) * w + j.clamp(0, w - 1)) as usize;
    let even = |field: &[f64], i: isize, j: isize| field[idx(i, j)];
    let odd = |i: isize, j: isize| {
        let outside = i < 0 || i >= h || j < 0 || j >= w;
        let v = d.b()[idx(i, j)];
        if outside {
            -v
        } else {
            v
        }
    };
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..h {
        for j in 0..w {
            let row = &mut m[idx(i, j)];
            let p = idx(i, j);
            let mut add = |q: usize, v: f64| row[q] += v;
            // axial x
            let ar = 0.5 * (even(d.a(), i, j) + even(d.a(), i, j + 1));
            let al = 0.5 * (even(d.a(), i, j) + even(d.a(), i, j - 1));
            add(idx(i, j + 1), ar);
            add(p, -ar - al);
            add(idx(i, j - 1), al);
            // axial y
            let cd = 0.5 * (even(d.c(), i, j) + even(d.c(), i + 1, j));
            let cu = 0.5 * (even(d.c(), i, j) + even(d.c(), i - 1, j));
            add(idx(i + 1, j), cd);
            add(p, -cd - cu);
            add(idx(i - 1, j), cu);
            // d/dx (b du/dy)
            let br = 0.25 * odd(i, j + 1);
            let bl = 0.25 * odd(i, j - 1);
            add(idx(i + 1, j + 1), br);
            add(idx(i - 1, j + 1), -br);
            add(idx(i + 1, j - 1), -bl);
            add(idx(i - 1, j - 1), bl);
            // d/dy (b du/dx)
            let bd = 0.25 * odd(i + 1, j);
            let bu = 0.25 * odd(i - 1, j);
            add(idx(i + 1, j + 1), bd);
            add(idx(i + 1, j - 1), -bd);
            add(idx(i - 1, j + 1), -bu);
            add(idx(i - 1, j - 1), bu);
        }
    }
    m
}

pub fn matrix_step(u: &Image, d: &TensorField, tau: f64) -> Image {
    let m = assemble_operator(d);
    let n = u.height() * u.width();
    let mut out = Vec::with_capacity(u.as_slice().len());
    for c in 0..u.channels() {
        let plane = u.plane(c);
        for p in 0..n {
            let lap: f64 = m[p].iter().zip(plane).map(|(a, x)| a * x).sum();
            out.push(plane[p] + tau * lap);
        }
    }
    Image::new(u.height(), u.width(), u.channels(), out).unwrap()
}

/// Connected components by union-find over 8-neighbour pairs; returns
/// sorted pixel lists with their class, sorted by first pixel.
pub fn union_find_components(m: &LabelMask) -> Vec<(u8, Vec<usize>)> {
    let (h, w) = (m.height(), m.width());
    let mut parent: Vec<usize> = (0..h * w).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..h {
        for j in 0..w {
            let here = m.get(i, j);
            if here == IGNORE_ID {
                continue;
            }
            for (di, dj) in [(0isize, 1isize), (1, -1), (1, 0), (1, 1)] {
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if ni < 0 || nj < 0 || ni >= h as isize || nj >= w as isize {
                    continue;
                }
                let (ni, nj) = (ni as usize, nj as usize);
                if m.get(ni, nj) == here {
                    let (ra, rb) = (find(&mut parent, i * w + j), find(&mut parent, ni * w + nj));
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for k in 0..h * w {
        if m.labels()[k] != IGNORE_ID {
            let root = find(&mut parent, k);
            groups.entry(root).or_default().push(k);
        }
    }
    let mut out: Vec<(u8, Vec<usize>)> = groups
        .into_values()
        .map(|px| (m.labels()[px[0]], px))
        .collect();
    out.sort_by_key(|(_, px)| px[0]);
    out
}

/// IoU per class id from explicit pixel counting.
pub fn brute_iou(pairs: &[(LabelMask, LabelMask)], classes: &[u8]) -> Vec<Option<f64>> {
    classes
        .iter()
        .map(|&k| {
            let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
            for (pred, gt) in pairs {
                for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
                    if g == IGNORE_ID {
                        continue;
                    }
                    match (p == k, g == k) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fn_ += 1,
                        _ => {}
                    }
                }
            }
            let d = tp + fp + fn_;
            (d > 0).then(|| tp as f64 / d as f64)
        })
        .collect()
}

pub fn random_mask(rng: &mut ChaCha8Rng, h: usize, w: usize, classes: &[u8], ignore_rate: f64) -> LabelMask {
    LabelMask::from_fn(h, w, |_, _| {
        if rng.random::<f64>() < ignore_rate {
            IGNORE_ID
        } else {
            classes[rng.random_range(0..classes.len())]
        }
    })
    .unwrap()
}

/// Blocky shapes plus high-frequency texture, in `[0, 1]`.
pub fn textured_scene(rng: &mut ChaCha8Rng, h: usize, w: usize, channels: usize) -> Image {
    let base: Vec<[f64; 3]> = vec![[0.15, 0.2, 0.25], [0.8, 0.75, 0.6], [0.4, 0.6, 0.3], [0.9, 0.2, 0.1]];
    Image::from_fn(h, w, channels, |c, i, j| {
        let region = if i < h / 3 {
            0
        } else if (j as isize - (w / 2) as isize).pow(2) + (i as isize - (2 * h / 3) as isize).pow(2)
            < (h as isize / 4).pow(2)
        {
            3
        } else if j < w / 2 {
            1
        } else {
            2
        };
        let texture = 0.12 * (rng.random::<f64>() - 0.5) + 0.05 * (((i + 2 * j) % 4) as f64 - 1.5) / 1.5;
        (base[region][c % 3] + texture).clamp(0.0, 1.0)
    })
    .unwrap()
}

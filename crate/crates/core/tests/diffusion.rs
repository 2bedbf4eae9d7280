mod common;

use common::*;
use eed_core::diffusion::{
    charbonnier, convolve_gaussian, diffusion_tensor, diffusion_tensor_at, dirichlet_energy,
    divergence_step, energy, smooth_tensor, structure_tensor, spatial_gradient, Kernel1D, Sym2, TensorField,
};
use eed_core::{eed_run, preset, DiffusionParams, Image};
use nalgebra::{Matrix2, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;

fn components_image(t: &TensorField) -> Image {
    let planes = [t.a(), t.b(), t.c()].concat();
    Image::new(t.height(), t.width(), 3, planes).unwrap()
}

#[test]
fn separable_convolution_matches_direct_sum() {
    let mut r = rng(1);
    for &(h, w, sigma, size) in &[(3, 3, 3.0, 9), (5, 4, 1.0, 7), (17, 11, 2.2, 5), (6, 30, 10.0, 41)] {
        let img = random_image(&mut r, h, w, 2);
        let k = Kernel1D::gaussian(sigma, size).unwrap();
        let fast = convolve_gaussian(&img, &k);
        let slow = brute_convolve(&img, &k);
        assert!(fast.max_abs_diff(&slow) <= 1e-10, "{h}x{w} size {size}");
    }
}

#[test]
fn orientation_smoothing_is_componentwise_convolution() {
    let mut r = rng(2);
    for _ in 0..10 {
        let (h, w) = (r.random_range(3..20), r.random_range(3..20));
        let j = random_psd_field(&mut r, h, w);
        let k = Kernel1D::gaussian(r.random_range(0.5..3.0), 2 * r.random_range(1..5) + 1).unwrap();
        let smoothed = smooth_tensor(&j, &k);
        let oracle = brute_convolve(&components_image(&j), &k);
        assert!(components_image(&smoothed).max_abs_diff(&oracle) <= 1e-12);
        assert!(smoothed.min_det() >= -1e-10);
    }
}

fn nalgebra_tensor(j: Sym2, kappa: f64) -> Matrix2<f64> {
    let eig = SymmetricEigen::new(Matrix2::new(j.a, j.b, j.b, j.c));
    let (major, minor) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let v1 = eig.eigenvectors.column(major).into_owned();
    let v2 = eig.eigenvectors.column(minor).into_owned();
    let mu1 = eig.eigenvalues[major].max(0.0);
    let g = 1.0 / (1.0 + mu1 / (kappa * kappa)).sqrt();
    v1 * v1.transpose() * g + v2 * v2.transpose()
}

#[test]
fn diffusion_tensor_matches_eigensolver() {
    let mut r = rng(3);
    let j = random_psd_field(&mut r, 12, 12);
    for kappa in [0.1, 1.0 / 15.0, 1.0] {
        let d = diffusion_tensor(&j, kappa).unwrap();
        for i in 0..12 {
            for k in 0..12 {
                let ours = d.at(i, k);
                let oracle = nalgebra_tensor(j.at(i, k), kappa);
                assert!((ours.a - oracle[(0, 0)]).abs() <= 1e-10);
                assert!((ours.b - oracle[(0, 1)]).abs() <= 1e-10);
                assert!((ours.c - oracle[(1, 1)]).abs() <= 1e-10);
            }
        }
    }
    assert_eq!(diffusion_tensor_at(Sym2::default(), 0.1), Sym2::IDENTITY);
}

#[test]
fn stencil_matches_matrix_assembly() {
    let mut r = rng(4);
    for n in 0..100 {
        let (h, w) = if n % 10 == 9 { (r.random_range(3..9), r.random_range(3..9)) } else { (8, 8) };
        let u = random_image(&mut r, h, w, 1 + n % 3);
        let d = random_spd_field(&mut r, h, w);
        let tau = r.random_range(0.01..=0.25);
        let fast = divergence_step(&u, &d, tau).unwrap();
        assert!(fast.max_abs_diff(&matrix_step(&u, &d, tau)) <= 1e-12, "instance {n}");
    }
}

#[test]
fn assembled_operator_has_zero_column_sums() {
    let mut r = rng(5);
    let d = random_spd_field(&mut r, 7, 9);
    let m = assemble_operator(&d);
    for q in 0..m.len() {
        let s: f64 = m.iter().map(|row| row[q]).sum();
        assert!(s.abs() < 1e-14);
    }
}

#[test]
fn divergence_step_conserves_means() {
    let mut r = rng(6);
    let u = random_image(&mut r, 16, 16, 3);
    let d = random_spd_field(&mut r, 16, 16);
    let next = divergence_step(&u, &d, 0.2).unwrap();
    for c in 0..3 {
        let (m0, m1) = (u.channel_mean(c), next.channel_mean(c));
        assert!((m1 - m0).abs() <= 1e-12 * m0.abs());
    }
}

#[test]
fn explicit_step_descends_frozen_energy() {
    let mut r = rng(7);
    for _ in 0..20 {
        let u = random_image(&mut r, 12, 10, 2);
        let d = random_spd_field(&mut r, 12, 10);
        let next = divergence_step(&u, &d, 0.2).unwrap();
        assert!(energy(&next, &d).unwrap() <= energy(&u, &d).unwrap() + 1e-8);
    }
}

#[test]
fn energy_with_identity_is_dirichlet() {
    let mut r = rng(8);
    let u = random_image(&mut r, 9, 13, 3);
    let g = spatial_gradient(&u);
    let mut manual = 0.0;
    for c in 0..3 {
        manual += g.dx_plane(c).iter().chain(g.dy_plane(c)).map(|v| v * v).sum::<f64>();
    }
    let id = TensorField::uniform(9, 13, Sym2::IDENTITY);
    assert!((energy(&u, &id).unwrap() - 0.5 * manual).abs() < 1e-12);
    assert!((dirichlet_energy(&u) - 0.5 * manual).abs() < 1e-12);
}

#[test]
fn heat_equation_limit() {
    let mut r = rng(9);
    let u = random_image(&mut r, 64, 64, 1);
    let p = DiffusionParams::new(1e6, 1.0, 3, 250).unwrap();
    let out = eed_run(&u, &p).unwrap().pop().unwrap().image;
    let gauss = convolve_gaussian(&u, &Kernel1D::gaussian(10.0, 81).unwrap());
    let mut err: f64 = 0.0;
    for i in 5..59 {
        for j in 5..59 {
            err = err.max((out.get(0, i, j) - gauss.get(0, i, j)).abs());
        }
    }
    assert!(err <= 1e-2, "max interior error {err}");
}

#[test]
fn run_is_flip_and_rotation_equivariant() {
    let mut r = rng(10);
    let u = textured_scene(&mut r, 24, 24, 3);
    let p = preset("P_mild").unwrap().params.with_steps(16);
    let run = |img: &Image| eed_run(img, &p).unwrap().pop().unwrap().image;
    let base = run(&u);
    let transforms: [fn(&Image) -> Image; 3] = [Image::flip_horizontal, Image::flip_vertical, Image::rotate90];
    for t in transforms {
        assert!(run(&t(&u)).max_abs_diff(&t(&base)) <= 1e-6);
    }
}

#[test]
fn snapshots_dirichlet_energy_non_increasing_and_bounded() {
    let mut r = rng(11);
    let u = textured_scene(&mut r, 32, 40, 3);
    let p = preset("P_strong").unwrap().params.with_steps(120).with_snapshots(vec![0, 10, 30, 60, 120]);
    let snaps = eed_run(&u, &p).unwrap();
    assert_eq!(snaps.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 10, 30, 60, 120]);
    for pair in snaps.windows(2) {
        assert!(dirichlet_energy(&pair[1].image) <= dirichlet_energy(&pair[0].image));
    }
    for c in 0..3 {
        let (lo, hi) = u.channel_range(c);
        let (a, b) = snaps.last().unwrap().image.channel_range(c);
        assert!(a >= lo - 0.01 && b <= hi + 0.01);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn charbonnier_in_unit_interval(s in 0.0f64..1e6, kappa in 1e-3f64..10.0) {
        let g = charbonnier(s, kappa).unwrap();
        prop_assert!(g > 0.0 && g <= 1.0);
        prop_assert!(charbonnier(s + 1.0, kappa).unwrap() <= g);
    }

    #[test]
    fn diffusion_eigenvalues_in_unit_interval(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0, kappa in 0.01f64..2.0) {
        let j = Sym2::new(x * x + z * z, x * y, y * y + 0.5 * z * z);
        let e = diffusion_tensor_at(j, kappa).eigen();
        prop_assert!(e.minor > 0.0 && e.major <= 1.0 + 1e-12);
        prop_assert!((e.major - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smoothing_keeps_psd(seed in any::<u64>(), h in 3usize..12, w in 3usize..12, half in 1usize..5) {
        let mut r = rng(seed);
        let j = random_psd_field(&mut r, h, w);
        let k = Kernel1D::gaussian(1.5, 2 * half + 1).unwrap();
        prop_assert!(smooth_tensor(&j, &k).min_det() >= -1e-10);
    }

    #[test]
    fn steps_keep_mean_and_range(seed in any::<u64>(), steps in 1usize..12) {
        let mut r = rng(seed);
        let u = random_image(&mut r, 10, 9, 2);
        let p = preset("P_strong").unwrap().params.with_steps(steps);
        let out = eed_run(&u, &p).unwrap().pop().unwrap().image;
        for c in 0..2 {
            let (lo, hi) = u.channel_range(c);
            let (a, b) = out.channel_range(c);
            prop_assert!(a >= lo - 0.01 && b <= hi + 0.01);
            prop_assert!((out.channel_mean(c) - u.channel_mean(c)).abs() <= 1e-11 * u.channel_mean(c));
        }
    }
}

#[test]
fn structure_tensor_of_orthogonal_channels_is_isotropic() {
    let u = Image::from_fn(5, 5, 2, |c, i, j| if c == 0 { j as f64 } else { i as f64 }).unwrap();
    let t = structure_tensor(&spatial_gradient(&u)).at(2, 2);
    assert_eq!((t.a, t.b, t.c), (1.0, 0.0, 1.0));
}

mod common;

use common::*;
use eed_core::analysis::{analyze, write_outputs, AnalyzeSpec, REPORT_FILE, SCATTER_FILE, SEGMENTS_FILE};
use eed_core::diffusion::spatial_gradient;
use eed_core::io::write_png;
use eed_core::metrics::*;
use eed_core::{Error, Image};
use proptest::prelude::*;

fn classes(ids: &[u8]) -> ClassSet {
    ClassSet::new(ids.iter().map(|&id| ClassEntry { id, name: format!("class{id}") }).collect()).unwrap()
}

fn mask(rows: &[&str]) -> LabelMask {
    LabelMask::from_fn(rows.len(), rows[0].len(), |i, j| match rows[i].as_bytes()[j] {
        b'.' => IGNORE_ID,
        b => b - b'0',
    })
    .unwrap()
}

#[test]
fn components_match_union_find() {
    let mut r = rng(20);
    for n in 0..50 {
        let m = random_mask(&mut r, 16, 16, &[0, 1, 2], if n % 2 == 0 { 0.0 } else { 0.15 });
        let ours: Vec<(u8, Vec<usize>)> = connected_components(&m).into_iter().map(|s| (s.class, s.pixels)).collect();
        assert_eq!(ours, union_find_components(&m));
    }
}

#[test]
fn boundary_is_subset_with_outside_neighbour() {
    let mut r = rng(21);
    let m = random_mask(&mut r, 12, 15, &[3, 4], 0.1);
    for seg in connected_components(&m) {
        for &k in &seg.boundary {
            assert!(seg.pixels.binary_search(&k).is_ok());
            let (i, j) = seg.coords(k);
            let on_border = i == 0 || j == 0 || i == 11 || j == 14;
            let outside = [(0, 1), (2, 1), (1, 0), (1, 2)].iter().any(|&(di, dj)| {
                let (ni, nj) = (i + di, j + dj);
                ni >= 1 && nj >= 1 && ni <= 12 && nj <= 15 && seg.pixels.binary_search(&((ni - 1) * 15 + nj - 1)).is_err()
            });
            assert!(on_border || outside);
        }
    }
}

#[test]
fn class_iou_matches_brute_force_confusion() {
    let mut r = rng(22);
    let ids = [0u8, 1, 2, 3];
    let set = classes(&ids);
    let pairs: Vec<(LabelMask, LabelMask)> = (0..8)
        .map(|_| (random_mask(&mut r, 8, 8, &ids, 0.1), random_mask(&mut r, 8, 8, &ids, 0.1)))
        .collect();
    let refs: Vec<(&LabelMask, &LabelMask)> = pairs.iter().map(|(p, g)| (p, g)).collect();
    let table = class_iou(&refs, &set).unwrap();
    let oracle = brute_iou(&pairs, &ids);
    assert_eq!(table.classes.iter().map(|c| c.iou).collect::<Vec<_>>(), oracle);
    let defined: Vec<f64> = oracle.iter().flatten().copied().collect();
    assert_eq!(table.miou, Some(defined.iter().sum::<f64>() / defined.len() as f64));
}

#[test]
fn absent_class_is_flagged_and_excluded() {
    let gt = mask(&["0011", "0011", "0011"]);
    let table = class_iou(&[(&gt, &gt)], &classes(&[0, 1, 7])).unwrap();
    assert_eq!(table.undefined, vec!["class7".to_string()]);
    assert_eq!(table.miou, Some(1.0));
}

#[test]
fn unknown_ground_truth_class_is_an_error() {
    let gt = mask(&["0091", "0011", "0011"]);
    assert!(class_iou(&[(&gt, &gt)], &classes(&[0, 1])).is_err());
}

#[test]
fn tiling_does_not_change_global_iou() {
    let mut r = rng(23);
    let ids = [0u8, 1, 2];
    let (pred, gt) = (random_mask(&mut r, 16, 16, &ids, 0.05), random_mask(&mut r, 16, 16, &ids, 0.05));
    let tile = |m: &LabelMask, i0: usize, j0: usize| LabelMask::from_fn(8, 8, |i, j| m.get(i0 + i, j0 + j)).unwrap();
    let tiles: Vec<(LabelMask, LabelMask)> = [(0, 0), (0, 8), (8, 0), (8, 8)]
        .iter()
        .map(|&(i, j)| (tile(&pred, i, j), tile(&gt, i, j)))
        .collect();
    let refs: Vec<(&LabelMask, &LabelMask)> = tiles.iter().map(|(p, g)| (p, g)).collect();
    let whole = class_iou(&[(&pred, &gt)], &classes(&ids)).unwrap();
    let tiled = class_iou(&refs, &classes(&ids)).unwrap();
    assert_eq!(whole.classes, tiled.classes);
    assert_eq!(whole.miou, tiled.miou);
}

#[test]
fn class_iou_symmetric_under_relabeling() {
    let mut r = rng(24);
    let ids = [0u8, 1, 2, 3];
    let perm = |c: u8| if c == IGNORE_ID { c } else { [9u8, 4, 0, 6][c as usize] };
    let (pred, gt) = (random_mask(&mut r, 10, 10, &ids, 0.1), random_mask(&mut r, 10, 10, &ids, 0.1));
    let relabel = |m: &LabelMask| LabelMask::from_fn(10, 10, |i, j| perm(m.get(i, j))).unwrap();
    let a = class_iou(&[(&pred, &gt)], &classes(&ids)).unwrap();
    let b = class_iou(&[(&relabel(&pred), &relabel(&gt))], &classes(&[9, 4, 0, 6])).unwrap();
    for (x, y) in a.classes.iter().zip(&b.classes) {
        assert_eq!((perm(x.id), x.iou), (y.id, y.iou));
    }
    assert_eq!(a.miou, b.miou);
}

#[test]
fn s_iou_hand_fixtures() {
    // 2x2 segment, prediction covers 2 of its pixels plus 2 outside
    let gt = mask(&["....", ".11.", ".11.", "...."]);
    let pred = mask(&[".1..", ".1..", ".1..", ".1.."]);
    let seg = &connected_components(&gt)[0];
    assert_eq!(s_iou(&pred, seg).unwrap(), 2.0 / 6.0);
    assert_eq!(s_iou(&gt, seg).unwrap(), 1.0);
    assert_eq!(s_iou(&mask(&["2222"; 4]), seg).unwrap(), 0.0);
}

#[test]
fn visibility_matches_naive_recomputation() {
    let mut r = rng(25);
    let img = random_image(&mut r, 10, 12, 3);
    let m = random_mask(&mut r, 10, 12, &[0, 1], 0.0);
    let fold101 = |x: isize, n: usize| -> usize {
        if x < 0 {
            1
        } else if x as usize >= n {
            n - 2
        } else {
            x as usize
        }
    };
    for seg in connected_components(&m) {
        let mut total = 0.0;
        for &k in &seg.boundary {
            let (i, j) = seg.coords(k);
            let mut sq = 0.0;
            for c in 0..3 {
                let dx = (img.get(c, i, fold101(j as isize + 1, 12)) - img.get(c, i, fold101(j as isize - 1, 12))) / 2.0;
                let dy = (img.get(c, fold101(i as isize + 1, 10), j) - img.get(c, fold101(i as isize - 1, 10), j)) / 2.0;
                sq += dx * dx + dy * dy;
            }
            total += sq.sqrt();
        }
        let naive = total / seg.boundary.len() as f64;
        assert!((boundary_visibility(&img, &seg).unwrap() - naive).abs() < 1e-12);
        assert!((boundary_visibility_with(&spatial_gradient(&img), &seg).unwrap() - naive).abs() < 1e-12);
    }
}

#[test]
fn visibility_of_unit_step_is_half() {
    let img = Image::from_fn(6, 6, 1, |_, _, j| if j < 3 { 0.0 } else { 1.0 }).unwrap();
    let m = LabelMask::from_fn(6, 6, |_, j| u8::from(j >= 3)).unwrap();
    let segs = connected_components(&m);
    // keep only the pixels along the step; the border ring has zero gradient in y
    let seg = SegmentRecord { boundary: segs[0].boundary.iter().copied().filter(|k| k % 6 == 2).collect(), ..segs[0].clone() };
    assert_eq!(boundary_visibility(&img, &seg).unwrap(), 0.5);
}

#[test]
fn diff_count_is_hamming_distance() {
    let mut r = rng(26);
    for _ in 0..20 {
        let a = random_mask(&mut r, 9, 7, &[0, 1, 2], 0.1);
        let b = random_mask(&mut r, 9, 7, &[0, 1, 2], 0.1);
        let hamming = a.labels().iter().zip(b.labels()).filter(|(x, y)| x != y).count();
        let d = prediction_diff(&a, &b).unwrap();
        assert_eq!(d.count_different(), hamming);
        assert_eq!(d.to_gray().iter().filter(|&&v| v == 0).count(), hamming);
    }
}

#[test]
fn acc_rel_examples() {
    assert_eq!(acc_rel(0.9, 0.45).unwrap(), 0.5);
    assert_eq!(acc_rel(0.7, 0.0).unwrap(), 0.0);
    assert_eq!(acc_rel(0.37, 0.37).unwrap(), 1.0);
    assert!(matches!(acc_rel(0.0, 0.1), Err(Error::Param { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn s_iou_in_unit_interval(seed in any::<u64>()) {
        let mut r = rng(seed);
        let gt = random_mask(&mut r, 10, 10, &[0, 1], 0.1);
        let pred = random_mask(&mut r, 10, 10, &[0, 1], 0.1);
        let comps = PredictionComponents::new(&pred);
        for seg in connected_components(&gt) {
            let v = comps.s_iou(&seg).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn visibility_shift_and_scale(seed in any::<u64>(), shift in -2.0f64..2.0, scale in 0.1f64..5.0) {
        let mut r = rng(seed);
        let img = random_image(&mut r, 8, 8, 2);
        let m = random_mask(&mut r, 8, 8, &[0, 1], 0.0);
        let shifted = Image::from_fn(8, 8, 2, |c, i, j| img.get(c, i, j) + shift).unwrap();
        let scaled = Image::from_fn(8, 8, 2, |c, i, j| img.get(c, i, j) * scale).unwrap();
        for seg in connected_components(&m) {
            let v = boundary_visibility(&img, &seg).unwrap();
            prop_assert!((boundary_visibility(&shifted, &seg).unwrap() - v).abs() < 1e-9);
            prop_assert!((boundary_visibility(&scaled, &seg).unwrap() - scale * v).abs() < 1e-9);
        }
    }
}

#[test]
fn analysis_over_trees() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let mut r = rng(27);
    let ids = [0u8, 1, 2];
    for name in ["a/x.png", "b.png"] {
        let gt = random_mask(&mut r, 12, 10, &ids, 0.05);
        gt.write_png(&root.join("gt").join(name)).unwrap();
        gt.write_png(&root.join("p1").join(name)).unwrap();
        random_mask(&mut r, 12, 10, &ids, 0.0).write_png(&root.join("p2").join(name)).unwrap();
        write_png(&root.join("img").join(name), &random_image(&mut r, 12, 10, 3)).unwrap();
    }
    let spec = AnalyzeSpec {
        gt_root: root.join("gt"),
        preds: vec![("clean".into(), root.join("p1")), ("eed".into(), root.join("p2"))],
        images: Some(root.join("img")),
        classes: classes(&ids),
        pattern: "**/*.png".into(),
    };
    let out = analyze(&spec).unwrap();
    assert_eq!(out.report.class_iou[0].miou, Some(1.0));
    let scatter = out.scatter.as_ref().unwrap();
    assert_eq!(scatter.len(), out.report.segments.len());
    for (row, seg) in scatter.iter().zip(&out.report.segments) {
        assert_eq!(row.s_iou_diff, seg.s_iou[0] - seg.s_iou[1]);
        assert_eq!(seg.s_iou[0], 1.0);
    }
    assert_eq!(out.diffs.len(), 2);
    write_outputs(&root.join("out"), &out).unwrap();
    for f in [REPORT_FILE, SEGMENTS_FILE, SCATTER_FILE, "diff/a/x.png", "diff/b.png"] {
        assert!(root.join("out").join(f).is_file(), "{f}");
    }

    std::fs::remove_file(root.join("p2/b.png")).unwrap();
    match analyze(&spec) {
        Err(Error::Misaligned(missing)) => assert!(missing.iter().any(|m| m.contains("b.png"))),
        other => panic!("expected misalignment, got {other:?}"),
    }
}

#[test]
fn class_file_round_trip() {
    let set = ClassSet::street14();
    assert_eq!(set.len(), 14);
    assert_eq!(ClassSet::parse(&set.to_text()).unwrap(), set);
}

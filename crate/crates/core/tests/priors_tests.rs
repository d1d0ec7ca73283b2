//! Center-bias geometry and fusion behavior.

use saliency_core::map::{DensityMap, SaliencyMap};
use saliency_core::priors::{
    dva_to_sigma, fuse, make_gaussian_cb, make_supervised_cb, normalize_map, CbShape,
    CenterBiasSpec, FusionMode, FusionSpec, Normalization, SplitHalf,
};

/// Weighted second moments of a map around the grid center.
fn fitted_sigmas(map: &SaliencyMap) -> (f64, f64) {
    let cx = (map.width() as f64 - 1.0) / 2.0;
    let cy = (map.height() as f64 - 1.0) / 2.0;
    let (mut wsum, mut sx2, mut sy2) = (0.0, 0.0, 0.0);
    for y in 0..map.height() {
        for x in 0..map.width() {
            let w = map.get(x, y);
            wsum += w;
            sx2 += w * (x as f64 - cx) * (x as f64 - cx);
            sy2 += w * (y as f64 - cy) * (y as f64 - cy);
        }
    }
    ((sx2 / wsum).sqrt(), (sy2 / wsum).sqrt())
}

#[test]
fn dva_to_sigma_closed_form_values() {
    // sigma = dva * pxva / (2 sqrt(2 ln 2)), evaluated independently.
    let s = dva_to_sigma(2.0, 36.0).unwrap();
    assert!((s - 30.575_584_810_368_685).abs() < 1e-9, "sigma = {s}");
    let s = dva_to_sigma(14.0, 35.0).unwrap();
    assert!((s - 208.083_841_070_564_66).abs() < 1e-9, "sigma = {s}");
}

#[test]
fn dva_to_sigma_is_linear_and_validates() {
    let base = dva_to_sigma(1.7, 23.0).unwrap();
    for k in [2.0, 3.5, 10.0] {
        let scaled = dva_to_sigma(1.7 * k, 23.0).unwrap();
        assert!((scaled - k * base).abs() < 1e-9 * scaled);
    }
    assert!(dva_to_sigma(0.0, 36.0).is_err());
    assert!(dva_to_sigma(2.0, -1.0).is_err());
}

#[test]
fn gaussian_cb_peak_and_flip_symmetry() {
    let spec = CenterBiasSpec::circular(2.0, 6.0, 41, 31);
    let map = make_gaussian_cb(&spec).unwrap();
    assert_eq!(map.get(20, 15), 1.0);
    assert_eq!(map.max(), 1.0);
    for y in 0..31 {
        for x in 0..41 {
            assert_eq!(map.get(x, y), map.get(40 - x, y), "horizontal flip");
            assert_eq!(map.get(x, y), map.get(x, 30 - y), "vertical flip");
        }
    }
}

#[test]
fn circular_cb_is_rotation_invariant_on_odd_squares() {
    let spec = CenterBiasSpec::circular(3.0, 4.0, 33, 33);
    let map = make_gaussian_cb(&spec).unwrap();
    for y in 0..33 {
        for x in 0..33 {
            assert_eq!(map.get(x, y), map.get(y, 32 - x), "90-degree rotation");
        }
    }
}

#[test]
fn gaussian_cb_one_sigma_point_is_exp_half() {
    let spec = CenterBiasSpec::circular(2.0, 6.0, 101, 101);
    let (sx, _) = spec.sigmas().unwrap();
    let (cx, cy) = spec.center();
    let v = spec.value_at(cx + sx, cy).unwrap();
    assert!((v - 0.606_530_659_712_633_4).abs() < 1e-12);
}

#[test]
fn ellipsoid_stretch_equivalence_on_continuous_points() {
    let spec = CenterBiasSpec::ellipsoid(2.0, 8.0, 101, 101);
    let (cx, cy) = spec.center();
    for d in [1.0, 3.0, 7.5, 12.0] {
        let horizontal = spec.value_at(cx + 1.5 * d, cy).unwrap();
        let vertical = spec.value_at(cx, cy + d).unwrap();
        assert!(
            (horizontal - vertical).abs() < 1e-12,
            "stretch equivalence at d={d}"
        );
    }
}

#[test]
fn cb_moment_fit_recovers_sigma_within_one_percent() {
    // sigma ~= 7.6 px on a map wider than 10 sigma: truncation is negligible.
    let spec = CenterBiasSpec::circular(2.0, 9.0, 81, 81);
    let sigma = dva_to_sigma(2.0, 9.0).unwrap();
    let map = make_gaussian_cb(&spec).unwrap();
    let (sx, sy) = fitted_sigmas(&map);
    assert!((sx - sigma).abs() / sigma < 0.01, "sx {sx} vs sigma {sigma}");
    assert!((sy - sigma).abs() / sigma < 0.01, "sy {sy} vs sigma {sigma}");
}

#[test]
fn ellipsoid_moment_ratio_is_one_and_a_half() {
    let spec = CenterBiasSpec::ellipsoid(2.0, 6.0, 161, 121);
    let map = make_gaussian_cb(&spec).unwrap();
    let (sx, sy) = fitted_sigmas(&map);
    let ratio = sx / sy;
    assert!((ratio - 1.5).abs() / 1.5 < 0.02, "ratio {ratio}");
}

#[test]
fn larger_dva_dominates_pointwise() {
    let mk = |dva: f64| {
        make_gaussian_cb(&CenterBiasSpec::circular(dva, 4.0, 65, 65)).unwrap()
    };
    let m2 = mk(2.0);
    let m5 = mk(5.0);
    let m14 = mk(14.0);
    for i in 0..65 * 65 {
        assert!(m5.values()[i] >= m2.values()[i] - 1e-12);
        assert!(m14.values()[i] >= m5.values()[i] - 1e-12);
    }
}

#[test]
fn cb_spec_validation() {
    let mut spec = CenterBiasSpec::ellipsoid(2.0, 6.0, 10, 10);
    spec.horizontal_stretch = 0.5;
    assert!(spec.validate().is_err());
    assert!(make_gaussian_cb(&spec).is_err());
    assert!(matches!(spec.shape, CbShape::Ellipsoid));
}

fn density(w: usize, h: usize, values: Vec<f64>) -> DensityMap {
    DensityMap::from_values(SaliencyMap::new(w, h, values).unwrap()).unwrap()
}

#[test]
fn supervised_cb_identical_maps_and_two_map_degenerate_split() {
    let d = density(2, 2, vec![0.1, 0.2, 0.3, 0.4]);
    let maps = vec![d.clone(), d.clone(), d.clone(), d.clone()];
    let scb = make_supervised_cb(&maps, 9).unwrap();
    // Mean of identical maps, peak-normalized.
    let expect: Vec<f64> = d.values().iter().map(|&v| v / 0.4).collect();
    for (a, b) in scb.cb_a.values().iter().zip(&expect) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(scb.cb_a.values(), scb.cb_b.values());

    // Two maps: each one's evaluation map is exactly the opposite map.
    let d1 = density(2, 1, vec![1.0, 3.0]);
    let d2 = density(2, 1, vec![2.0, 1.0]);
    let scb = make_supervised_cb(&[d1.clone(), d2.clone()], 4).unwrap();
    let norm = |d: &DensityMap| -> Vec<f64> {
        let peak = d.values().iter().cloned().fold(0.0, f64::max);
        d.values().iter().map(|&v| v / peak).collect()
    };
    let (first_half, opposite_of_first) = match scb.assignment[0] {
        SplitHalf::A => (&scb.cb_a, &scb.cb_b),
        SplitHalf::B => (&scb.cb_b, &scb.cb_a),
    };
    for (a, b) in first_half.values().iter().zip(norm(&d1)) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in opposite_of_first.values().iter().zip(norm(&d2)) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_ne!(scb.assignment[0], scb.assignment[1]);
    // cb_for returns the opposite half's map.
    assert_eq!(
        scb.cb_for(0).values(),
        opposite_of_first.values()
    );
}

#[test]
fn supervised_cb_seeded_split_and_hand_means() {
    let maps = vec![
        density(2, 1, vec![1.0, 0.0]),
        density(2, 1, vec![0.0, 1.0]),
        density(2, 1, vec![1.0, 1.0]),
        density(2, 1, vec![3.0, 1.0]),
    ];
    let a = make_supervised_cb(&maps, 42).unwrap();
    let b = make_supervised_cb(&maps, 42).unwrap();
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.cb_a.values(), b.cb_a.values());
    assert_eq!(a.cb_b.values(), b.cb_b.values());

    // Hand-computed pixel means for whichever half each map landed in.
    for half in [SplitHalf::A, SplitHalf::B] {
        let members: Vec<usize> = (0..4).filter(|&i| a.assignment[i] == half).collect();
        assert_eq!(members.len(), 2);
        let mut mean = vec![0.0; 2];
        for &i in &members {
            for (m, &v) in mean.iter_mut().zip(maps[i].values()) {
                *m += v / 2.0;
            }
        }
        let peak = mean.iter().cloned().fold(0.0, f64::max);
        let cb = match half {
            SplitHalf::A => &a.cb_a,
            SplitHalf::B => &a.cb_b,
        };
        for (got, want) in cb.values().iter().zip(mean.iter().map(|v| v / peak)) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    assert!(make_supervised_cb(&maps[..1], 1).is_err());
}

#[test]
fn normalize_map_cases() {
    let m = SaliencyMap::new(2, 1, vec![1.0, 3.0]).unwrap();
    let n = normalize_map(&m, Normalization::MinMax);
    assert_eq!(n.values(), &[0.0, 1.0]);

    let c = SaliencyMap::new(2, 2, vec![0.7; 4]).unwrap();
    assert!(normalize_map(&c, Normalization::MinMax)
        .values()
        .iter()
        .all(|&v| v == 0.0));

    let already = SaliencyMap::new(4, 1, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
    let twice = normalize_map(&already, Normalization::MinMax);
    assert_eq!(twice.values(), already.values());
}

#[test]
fn fuse_identity_idempotence_and_degenerate_result() {
    let s = SaliencyMap::new(2, 2, vec![0.0, 1.0, 0.5, 0.25]).unwrap();
    let ones = SaliencyMap::new(2, 2, vec![1.0; 4]).unwrap();
    let fused = fuse(&s, &ones, FusionSpec::new(FusionMode::Mult)).unwrap();
    let s_norm = normalize_map(&s, Normalization::MinMax);
    assert_eq!(fused.values(), s_norm.values(), "multiplicative identity");

    let self_sum = fuse(&s, &s, FusionSpec::new(FusionMode::Sum)).unwrap();
    assert_eq!(self_sum.values(), s_norm.values(), "sum idempotence");

    // Complementary maps sum to a constant, which normalizes to zeros.
    let a = SaliencyMap::new(2, 2, vec![0.0, 1.0, 0.5, 0.5]).unwrap();
    let b = SaliencyMap::new(2, 2, vec![1.0, 0.0, 0.5, 0.5]).unwrap();
    let fused = fuse(&a, &b, FusionSpec::new(FusionMode::Sum)).unwrap();
    assert!(fused.values().iter().all(|&v| v == 0.0));
}

#[test]
fn fuse_output_in_unit_interval_and_dims_checked() {
    let mut rng_state = 88172645463325252u64;
    let mut next = move || {
        // xorshift, just to avoid pulling rand in here
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..30 {
        let s = SaliencyMap::new(5, 4, (0..20).map(|_| next()).collect()).unwrap();
        let c = SaliencyMap::new(5, 4, (0..20).map(|_| next()).collect()).unwrap();
        for mode in [FusionMode::Sum, FusionMode::Mult] {
            let fused = fuse(&s, &c, FusionSpec::new(mode)).unwrap();
            assert!(fused.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
    let s = SaliencyMap::zeros(3, 3);
    let c = SaliencyMap::zeros(4, 3);
    assert!(fuse(&s, &c, FusionSpec::new(FusionMode::Sum)).is_err());
}

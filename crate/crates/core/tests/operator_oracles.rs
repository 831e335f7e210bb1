use hsio_core::curvature::{curvature_energy, in_sigma, sigma_enumerate};
use hsio_core::heis::HPoint;
use hsio_core::kernels::{check_growth, check_hoelder, CzParams, KernelSpec};
use hsio_core::koch::{build_stage, AngleSchedule, PlanarPoint};
use hsio_core::lifts::{cantor_build, lift_stage, Sampling};
use hsio_core::measure::{from_cantor, from_polyline, DiscreteMeasure};
use hsio_core::numeric::seeded_rng;
use hsio_core::sio::{
    kernel_matrix, koch_stagewise_form, l1_divergence_scan, l2_norm_estimate, quadratic_form, row_sup,
};
use nalgebra::DMatrix;
use rand::RngExt;

const UNIT: (PlanarPoint, PlanarPoint) = (PlanarPoint::ORIGIN, PlanarPoint { x: 1.0, y: 0.0 });

fn random_measure(n: usize, seed: u64) -> DiscreteMeasure {
    let mut rng = seeded_rng(seed);
    let pts = (0..n)
        .map(|_| HPoint::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let w = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
    DiscreteMeasure::new(pts, w).unwrap()
}

fn koch_measure(n: usize, c: f64) -> DiscreteMeasure {
    let s = AngleSchedule::power_law(c, 2.0).unwrap();
    from_polyline(&lift_stage(&build_stage(n, &s, UNIT).unwrap(), 0.0).unwrap(), 1).unwrap()
}

#[test]
fn hoelder_calibration_alpha4() {
    // empirical supremum over 10^6 samples is about 1.60 for every seed tried
    let params = CzParams::new(0.1, 1.0, 2.0).unwrap();
    let r = check_hoelder(&KernelSpec::Alpha(4.0), params, 1_000_000, 17).unwrap();
    println!("K_4 Hoelder supremum (beta 1, kappa 0.1): {}", r.max_ratio);
    assert!(!r.violated(), "max ratio {}", r.max_ratio);
    let rb = check_hoelder(&KernelSpec::B, CzParams::new(0.1, 1.0, 1.5).unwrap(), 1_000_000, 17).unwrap();
    println!("K_b Hoelder supremum (beta 1, kappa 0.1): {}", rb.max_ratio);
    assert!(rb.max_ratio.is_finite() && !rb.violated());
}

#[test]
fn growth_constants() {
    let ok = CzParams::new(0.1, 1.0, 1.0).unwrap();
    assert!(!check_growth(&KernelSpec::Alpha(4.0), ok, 100_000, 1).unwrap().violated());
    assert!(!check_growth(&KernelSpec::B, ok, 100_000, 1).unwrap().violated());
    let tight = CzParams::new(0.1, 1.0, 0.5).unwrap();
    let r = check_growth(&KernelSpec::Alpha(4.0), tight, 1000, 1).unwrap();
    assert!(r.violations.iter().any(|v| v.p1 == HPoint::new(0.0, 0.0, 1.0)));
}

#[test]
fn power_iteration_matches_dense_eigensolver() {
    for (m, seed) in [(from_cantor(&cantor_build(5).unwrap()).unwrap(), 1), (random_measure(60, 3), 2)] {
        for kernel in [KernelSpec::B, KernelSpec::Alpha(4.0), KernelSpec::Alpha(1.0)] {
            let a = kernel_matrix(kernel, &m, 0.0).unwrap();
            let n = a.size();
            let s = a.symmetrized();
            let dense = DMatrix::from_row_slice(n, n, &s);
            assert!((&dense - dense.transpose()).abs().max() <= 1e-15 * dense.abs().max());
            let top = dense.symmetric_eigen().eigenvalues.max();
            let est = l2_norm_estimate(&a, 1e-13, 100_000, seed).unwrap();
            assert!((est - top).abs() <= 1e-8 * top, "{kernel}: {est} vs {top}");
            let schur = s.chunks(n).map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
            assert!(est <= schur * (1.0 + 1e-12));
        }
    }
}

#[test]
fn quadratic_form_paths_agree_and_truncation_is_monotone() {
    for m in [random_measure(150, 9), koch_measure(3, 0.3), from_cantor(&cantor_build(7).unwrap()).unwrap()] {
        for kernel in [KernelSpec::B, KernelSpec::Alpha(4.0), KernelSpec::Alpha(0.5)] {
            let mut prev = f64::INFINITY;
            for k in 0..8 {
                let eps = m.diameter() * k as f64 / 8.0;
                let q = quadratic_form(kernel, &m, eps).unwrap().value;
                let via_matrix = kernel_matrix(kernel, &m, eps).unwrap().bilinear_ones();
                assert!((q - via_matrix).abs() <= 1e-12 * q.abs().max(f64::MIN_POSITIVE), "{q} vs {via_matrix}");
                assert!(q >= 0.0 && q <= prev);
                prev = q;
            }
        }
    }
}

#[test]
fn weighted_matrix_is_balanced() {
    let m = random_measure(40, 5);
    let a = kernel_matrix(KernelSpec::B, &m, 0.1).unwrap();
    let w = m.weights();
    for i in 0..40 {
        for j in 0..40 {
            assert!((a.entry(i, j) * w[i] - a.entry(j, i) * w[j]).abs() <= 1e-15 * (a.entry(i, j) * w[i]).max(1e-300));
        }
    }
    let cantor = from_cantor(&cantor_build(5).unwrap()).unwrap();
    let a = kernel_matrix(KernelSpec::B, &cantor, 0.0).unwrap();
    for i in 0..32 {
        for j in 0..32 {
            assert_eq!(a.entry(i, j), a.entry(j, i));
        }
    }
}

#[test]
fn left_translation_invariance() {
    let g = HPoint::new(0.7, -1.3, 2.1);
    for m in [random_measure(80, 21), koch_measure(2, 0.3)] {
        let t = m.left_translated(g).unwrap();
        for kernel in [KernelSpec::B, KernelSpec::Alpha(4.0)] {
            let eps = 0.05;
            let q0 = quadratic_form(kernel, &m, eps).unwrap().value;
            let q1 = quadratic_form(kernel, &t, eps).unwrap().value;
            assert!((q0 - q1).abs() <= 1e-10 * q0.max(1e-300));
            let r0 = row_sup(kernel, &m, eps).unwrap();
            let r1 = row_sup(kernel, &t, eps).unwrap();
            assert!((r0 - r1).abs() <= 1e-10 * r0.max(1e-300));
            let l0 = l2_norm_estimate(&kernel_matrix(kernel, &m, eps).unwrap(), 1e-13, 100_000, 0).unwrap();
            let l1 = l2_norm_estimate(&kernel_matrix(kernel, &t, eps).unwrap(), 1e-13, 100_000, 0).unwrap();
            assert!((l0 - l1).abs() <= 1e-10 * l0.max(1e-300));
        }
        let c = m.points()[m.len() / 2];
        let e0 = curvature_energy(&m, 0.5, c, 0.3, usize::MAX, 0).unwrap();
        let e1 = curvature_energy(&t, 0.5, g.mul(c), 0.3, usize::MAX, 0).unwrap();
        assert_eq!(e0.triple_count, e1.triple_count);
        assert!((e0.energy - e1.energy).abs() <= 1e-10 * e0.energy.max(1e-300));
    }
}

#[test]
fn l1_scan_quadrature_refinement() {
    let coarse = l1_divergence_scan(1.0, 3, 20, 16).unwrap();
    let fine = l1_divergence_scan(1.0, 3, 20, 32).unwrap();
    for (a, b) in coarse.iter().zip(&fine) {
        assert!(a.value >= 0.0);
        assert!((a.value - b.value).abs() < 1e-3 * b.value);
    }
}

/// Stage-`n` block summed over a fully materialized stage `n + 2` with the
/// kernel `|z|^(1/2) / ||.||^2` written out by hand.
fn stagewise_global(n: usize, s: &AngleSchedule) -> f64 {
    let m = from_polyline(&lift_stage(&build_stage(n + 2, s, UNIT).unwrap(), 0.0).unwrap(), 1).unwrap();
    let (p, w) = (m.points(), m.weights());
    let mut total = 0.0;
    for prefix in 0..6usize.pow(n as u32 - 1) {
        let base = prefix * 216;
        for i in base..base + 36 {
            for j in base + 108..base + 144 {
                let (a, b) = (p[i], p[j]);
                let (x, y) = (b.x - a.x, b.y - a.y);
                let z = b.z - a.z + 0.5 * (a.y * b.x - a.x * b.y);
                let norm = ((x * x + y * y).powi(2) + z * z).powf(0.25);
                total += w[i] * w[j] * z.abs().sqrt() / (norm * norm);
            }
        }
    }
    total
}

#[test]
fn stagewise_local_frames_match_global_oracle() {
    let s = AngleSchedule::power_law(0.2, 2.0).unwrap();
    let local = koch_stagewise_form(&s, UNIT, 0.5, 4, Sampling::Exhaustive).unwrap();
    for n in 1..=4 {
        let global = stagewise_global(n, &s);
        let got = local.rows[n - 1].value;
        assert!((got - global).abs() <= 1e-8 * global, "n = {n}: {got} vs {global}");
    }
}

#[test]
fn stagewise_sampler_agrees_with_exhaustive() {
    let s = AngleSchedule::power_law(0.2, 2.0).unwrap();
    let ex = koch_stagewise_form(&s, UNIT, 0.5, 4, Sampling::Exhaustive).unwrap();
    let mc = koch_stagewise_form(&s, UNIT, 0.5, 4, Sampling::Sampled { samples: 20_000, seed: 5 }).unwrap();
    for (e, m) in ex.rows.iter().zip(&mc.rows) {
        let se = m.std_error.unwrap();
        assert!((e.value - m.value).abs() <= 4.0 * se, "n = {}: {} vs {} (se {se})", e.n, e.value, m.value);
    }
    // a pair's stage is the first position where its words differ, so stage blocks are disjoint
    for (n, pairs) in mc.sampled_pairs.iter().enumerate() {
        for (p, q) in pairs {
            let first_diff = p.digits().iter().zip(q.digits()).position(|(a, b)| a != b).unwrap();
            assert_eq!(first_diff, n);
            assert_eq!((p.digits()[n], q.digits()[n]), (1, 4));
        }
    }
}

#[test]
fn curvature_sampler_agrees_with_exhaustive() {
    let full = koch_measure(3, 0.3);
    let m = DiscreteMeasure::new(full.points()[..200].to_vec(), full.weights()[..200].to_vec()).unwrap();
    let c = m.points()[100];
    let exact = curvature_energy(&m, 0.5, c, 0.4, usize::MAX, 0).unwrap();
    assert!(exact.exhaustive && exact.triple_count > 10_000);
    let mut within = 0;
    for seed in 0..10 {
        let est = curvature_energy(&m, 0.5, c, 0.4, 4000, seed).unwrap();
        assert!(!est.exhaustive && est.evaluated == 4000);
        if (est.energy - exact.energy).abs() <= 3.0 * est.std_error.unwrap() {
            within += 1;
        }
    }
    assert!(within >= 9, "only {within}/10 sampled estimates within 3 standard errors");
}

#[test]
fn enumerated_triples_pass_an_independent_window_check() {
    let m = koch_measure(3, 0.3);
    let c = m.points()[108];
    for alpha in [0.3, 0.5, 0.8] {
        let f = sigma_enumerate(&m, alpha, c, 0.35, usize::MAX, 0).unwrap();
        let p = m.points();
        for &[i, j, k] in &f.triples {
            assert!(i < j && j < k);
            for idx in [i, j, k] {
                assert!(c.dist(p[idx]) <= 0.35);
            }
            let d = [p[i].dist(p[j]), p[i].dist(p[k]), p[j].dist(p[k])];
            let r = d.iter().cloned().fold(0.0, f64::max);
            assert!(d.iter().all(|&x| x >= alpha * r && x <= r));
        }
        // brute force count over all member triples
        let mem = &f.members;
        let mut brute = 0u64;
        for a in 0..mem.len() {
            for b in a + 1..mem.len() {
                for e in b + 1..mem.len() {
                    let (x, y, z) = (p[mem[a]], p[mem[b]], p[mem[e]]);
                    if in_sigma(alpha, x.dist(y), x.dist(z), y.dist(z)) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, f.admissible);
    }
}

#[test]
fn curvature_energy_ignores_atom_order() {
    let m = koch_measure(3, 0.3);
    let n = m.len();
    let perm: Vec<usize> = (0..n).map(|i| (i * 97) % n).collect();
    let shuffled = DiscreteMeasure::new(perm.iter().map(|&i| m.points()[i]).collect(), perm.iter().map(|&i| m.weights()[i]).collect()).unwrap();
    let c = m.points()[71];
    let a = curvature_energy(&m, 0.5, c, 0.3, usize::MAX, 0).unwrap();
    let b = curvature_energy(&shuffled, 0.5, c, 0.3, usize::MAX, 0).unwrap();
    assert_eq!(a.triple_count, b.triple_count);
    assert!((a.energy - b.energy).abs() <= 1e-12 * a.energy);
}

use proptest::prelude::*;

use prsplit::functions::{project_affine, project_sparse_box, AffineSet, BoxSet, SparseBoxSet};
use prsplit::linalg::{GaussianSource, Vector};

fn affine(seed: u64, m: usize, n: usize) -> AffineSet {
    let mut g = GaussianSource::new(seed);
    let a = g.matrix(m, n);
    let b = g.vector(m);
    AffineSet::new(a, b).unwrap()
}

fn brute_force(w: &[f64], r: usize, bound: f64) -> f64 {
    let n = w.len();
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize <= r)
        .map(|mask| {
            (0..n)
                .map(|i| {
                    let keep = if mask & (1 << i) != 0 { w[i].clamp(-bound, bound) } else { 0.0 };
                    (w[i] - keep).powi(2)
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_projection_is_idempotent_and_nonexpansive(
        m in 1usize..6, extra in 1usize..10, seed in any::<u64>(), scale in 0.1f64..100.0,
    ) {
        let n = m + extra;
        let set = affine(seed, m, n);
        let mut g = GaussianSource::new(seed.wrapping_add(1));
        let u = g.vector(n).scaled(scale);
        let v = g.vector(n).scaled(scale);
        let pu = project_affine(&set, &u).unwrap();
        let pv = project_affine(&set, &v).unwrap();
        let again = project_affine(&set, &pu).unwrap();
        prop_assert!(again.dist(&pu) <= 1e-10 * pu.norm().max(1.0));
        prop_assert!(set.residual(&pu).norm() <= 1e-9 * pu.norm().max(1.0));
        prop_assert!(pu.dist(&pv) <= u.dist(&v) * (1.0 + 1e-12));
    }

    #[test]
    fn sparse_box_projection_is_idempotent_and_optimal(
        w in prop::collection::vec(-5.0f64..5.0, 1..=10),
        r in 1usize..5,
        bound in prop::sample::select(vec![0.5, 1.0, 3.0, 1e6]),
    ) {
        let set = SparseBoxSet::new(r, bound).unwrap();
        let wv = Vector::from(w.clone());
        let p = project_sparse_box(&set, &wv);
        prop_assert!(set.contains(&p));
        let again = project_sparse_box(&set, &p);
        prop_assert!(again.dist(&p) <= 1e-10);
        let best = brute_force(&w, r, bound);
        prop_assert!(wv.dist_sq(&p) <= best + 1e-10, "{} vs {}", wv.dist_sq(&p), best);
    }

    #[test]
    fn box_projection_is_idempotent_and_nonexpansive(
        u in prop::collection::vec(-10.0f64..10.0, 6),
        v in prop::collection::vec(-10.0f64..10.0, 6),
        lo in -3.0f64..0.0, width in 0.0f64..4.0,
    ) {
        let set = BoxSet::new(lo, lo + width).unwrap();
        let (u, v) = (Vector::from(u), Vector::from(v));
        let pu = set.project(&u);
        prop_assert!(set.contains(&pu));
        prop_assert_eq!(set.project(&pu), pu.clone());
        prop_assert!(pu.dist(&set.project(&v)) <= u.dist(&v) + 1e-12);
    }
}

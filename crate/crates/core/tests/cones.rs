use hypersphere::cones::{project_cone_slice, project_polar_slice, ConeKind, SetBlock};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn cone(kind: ConeKind, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    project_cone_slice(kind, &mut y);
    y
}

fn polar(kind: ConeKind, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    project_polar_slice(kind, &mut y);
    y
}

fn kind_strategy() -> impl Strategy<Value = ConeKind> {
    prop_oneof![
        Just(ConeKind::Zero),
        Just(ConeKind::Nonnegative),
        Just(ConeKind::SecondOrder)
    ]
}

fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
    (2usize..8).prop_flat_map(|n| prop::collection::vec(-10.0..10.0f64, n))
}

fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-10.0..10.0f64, n),
        )
    })
}

fn set_strategy() -> impl Strategy<Value = SetBlock> {
    (2usize..6, 0usize..4, 0.1..5.0f64, prop::collection::vec(0.2..5.0f64, 6)).prop_map(|(n, kind, size, scale)| {
        let uniform = vec![scale[0]; n];
        match kind {
            0 => SetBlock::bounded(0, vec![-size; n], (0..n).map(|i| size * (1.0 + i as f64)).collect())
                .with_scale(scale[..n].to_vec()),
            1 => SetBlock::ball(0, n, size).with_scale(uniform),
            2 => SetBlock::halfspace(0, (0..n).map(|i| 1.0 - i as f64 * 0.7).collect(), size)
                .with_scale(scale[..n].to_vec()),
            _ => SetBlock::second_order_cone(0, n).with_scale(uniform),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cone_projection_is_idempotent(kind in kind_strategy(), x in vec_strategy()) {
        let p = cone(kind, &x);
        prop_assert!(dist(&cone(kind, &p), &p) <= TOL);
        let q = polar(kind, &x);
        prop_assert!(dist(&polar(kind, &q), &q) <= TOL);
    }

    #[test]
    fn moreau_decomposition(kind in kind_strategy(), x in vec_strategy()) {
        let p = cone(kind, &x);
        let q = polar(kind, &x);
        let sum: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a + b).collect();
        prop_assert!(dist(&sum, &x) <= TOL);
        prop_assert!(dot(&p, &q).abs() <= TOL);
    }

    #[test]
    fn positive_homogeneity(kind in kind_strategy(), x in vec_strategy(), t in 0.01..100.0f64) {
        let scaled: Vec<f64> = x.iter().map(|v| t * v).collect();
        let a = cone(kind, &scaled);
        let b: Vec<f64> = cone(kind, &x).iter().map(|v| t * v).collect();
        prop_assert!(dist(&a, &b) <= TOL * (1.0 + t));
    }

    #[test]
    fn cone_projection_is_nonexpansive(kind in kind_strategy(), (x, y) in pair_strategy()) {
        prop_assert!(dist(&cone(kind, &x), &cone(kind, &y)) <= dist(&x, &y) + TOL);
        prop_assert!(dist(&polar(kind, &x), &polar(kind, &y)) <= dist(&x, &y) + TOL);
    }

    #[test]
    fn polar_is_orthogonal_to_the_cone(kind in kind_strategy(), (x, y) in pair_strategy()) {
        // every element of the polar has a nonpositive inner product with every cone element
        let p = cone(kind, &x);
        let q = polar(kind, &y);
        prop_assert!(dot(&p, &q) <= TOL);
    }

    #[test]
    fn set_projection_properties(set in set_strategy(), x in prop::collection::vec(-20.0..20.0f64, 6), y in prop::collection::vec(-20.0..20.0f64, 6)) {
        let n = set.dim;
        let mut px = x[..n].to_vec();
        set.project_slice(&mut px).unwrap();
        let mut ppx = px.clone();
        set.project_slice(&mut ppx).unwrap();
        prop_assert!(dist(&ppx, &px) <= TOL);
        let mut py = y[..n].to_vec();
        set.project_slice(&mut py).unwrap();
        prop_assert!(dist(&px, &py) <= dist(&x[..n], &y[..n]) + TOL);
        // variational inequality: (x − Πx)ᵀ(c − Πx) ≤ 0 for c in the set
        let r: Vec<f64> = x[..n].iter().zip(&px).map(|(a, b)| a - b).collect();
        let d: Vec<f64> = py.iter().zip(&px).map(|(a, b)| a - b).collect();
        prop_assert!(dot(&r, &d) <= 1e-8);
    }
}

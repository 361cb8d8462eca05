mod common;

use proptest::prelude::*;

use snblock::cerf::{whitney_value, Chart, WhitneyModel};
use snblock::field::{Family, SigmaSlice, VectorField};
use snblock::synthesis::lyapunov::LyapunovFunction;

fn outside_block() -> impl Strategy<Value = f64> {
    prop_oneof![-4.0..=-2.0f64, 2.0..=4.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn corrections_vanish_outside_the_block(
        x in outside_block(),
        lambda in 0.0..=1.0f64,
        sigma in 0.0..=1.0f64,
    ) {
        let fam = common::fold_1d_family();
        let base = fam.f.eval(&[x], lambda);
        prop_assert_eq!(fam.eval(&[x], lambda, sigma), base.clone());
        for stage in fam.stages() {
            prop_assert_eq!(stage.eval(&[x], lambda, sigma), base.clone());
        }
        for e in [&fam.stage1.f0, &fam.stage1.f1] {
            prop_assert_eq!(e.rho.eval(&[x]), 0.0);
            prop_assert!(e.correction(&[x], sigma).is_none());
        }
        prop_assert_eq!(fam.stage2.rho.eval(&[x]), 0.0);
    }

    #[test]
    fn stages_meet_exactly_at_the_junctions(x in -3.0..3.0f64, lambda in 0.0..=1.0f64) {
        let fam = common::fold_1d_family();
        let [s1, s2, s3] = fam.stages();
        prop_assert_eq!(s1.eval(&[x], lambda, 1.0), s2.eval(&[x], lambda, 0.0));
        prop_assert_eq!(s2.eval(&[x], lambda, 1.0), s3.eval(&[x], lambda, 0.0));
        prop_assert_eq!(fam.eval(&[x], lambda, 1.0 / 3.0), s2.eval(&[x], lambda, 0.0));
        prop_assert_eq!(fam.eval(&[x], lambda, 2.0 / 3.0), s3.eval(&[x], lambda, 0.0));
        prop_assert_eq!(fam.eval(&[x], lambda, 1.0), s3.eval(&[x], lambda, 1.0));
    }

    #[test]
    fn interpolated_gradients_match_the_whitney_form(
        n in 1usize..=2,
        k in 1usize..=2,
        lambda0 in 0.1..0.9f64,
        t in prop::collection::vec(0.0..1.0f64, 2),
        lambda in 0.0..=1.0f64,
    ) {
        let k = k.min(n);
        let bounds = vec![(-2.0, 2.0); n];
        let model = WhitneyModel::saddle_node(lambda0, k, Chart::from_bounds(&bounds, 0, 1.0)).unwrap();
        let nodes = if n == 1 { 161 } else { 41 };
        let h = 4.0 / (nodes - 1) as f64;
        let g = LyapunovFunction::from_function(bounds, vec![nodes; n], 20, |x, l| {
            whitney_value(&model, x, l).unwrap()
        });
        // keep one cell away from the one-sided boundary differences
        let x: Vec<f64> = t[..n].iter().map(|s| -2.0 + h + s * (4.0 - 2.0 * h)).collect();
        let grad = g.gradient(&x, lambda);
        let d = 1e-5;
        for a in 0..n {
            let (mut p, mut m) = (x.clone(), x.clone());
            p[a] += d;
            m[a] -= d;
            let fd = (whitney_value(&model, &p, lambda).unwrap()
                - whitney_value(&model, &m, lambda).unwrap())
                / (2.0 * d);
            prop_assert!(
                (grad[a] - fd).abs() <= 10.0 * h * h,
                "axis {}: {} vs {} at {:?}", a, grad[a], fd, x
            );
        }
    }
}

#[test]
fn blended_field_decreases_the_lyapunov_function() {
    let fam = common::fold_1d_family();
    let g = fam.lyapunov();
    assert!(g.samples.len() >= 1000, "{} samples", g.samples.len());
    assert!(g.margin > 0.0);
    for sigma in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let slice = SigmaSlice {
            family: fam.stage2.as_ref(),
            sigma,
        };
        assert_eq!(slice.dim(), 1);
        let (margin, worst) = g.decrease_margin(&slice, &g.samples);
        assert!(
            margin > 0.0,
            "σ = {sigma}: margin {margin} at {:?}",
            worst.map(|i| &g.samples[i])
        );
    }
}

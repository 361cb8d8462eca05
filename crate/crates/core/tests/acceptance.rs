//! Acceptance criteria 1–8, one line per criterion.
//!
//! Runs without the libtest harness so the summary is printed on every run.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use snblock::cerf::{
    apply_uniqueness_of_birth, canceling_pair, close_right_end, simplify_to_single_death,
    unit_mesh, whitney_critical_values, Chart, EventKind, WhitneyModel,
};
use snblock::certify::{Condition, Verdict as Certified};
use snblock::dynamics::continuation::{continue_branch, ContinuationOptions};
use snblock::dynamics::equilibria::{find_equilibria, grid_seeds};
use snblock::dynamics::verify::{saddle_node_test, Verdict, VerifyOptions};
use snblock::field::{Family, FnField, SigmaSlice};
use snblock::homology::{relative_homology, HomologyResult};
use snblock::ingest::{Sample, SampledVectorField};
use snblock::pipeline::{
    block_stage, certify_stage, ingest_stage, synthesize_stage, verify_stage, BlockSpec,
    PipelineConfig,
};
use snblock::synthesis::family::SynthesizedFamily;

type Outcome = Result<String, String>;

type Rhs = fn(f64, f64) -> f64;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn config() -> PipelineConfig {
    PipelineConfig::new("samples.txt".into(), None, "out".into())
}

/// Nonzero betti numbers as `(degree, rank)`.
fn support(h: &HomologyResult) -> Vec<(usize, usize)> {
    h.betti
        .iter()
        .enumerate()
        .filter(|(_, &b)| b > 0)
        .map(|(d, &b)| (d, b))
        .collect()
}

/// `f(x, λ) = 1 − 2λ − x²` on `[−3, 3] × [0, 1]`, wider than the block `[−2, 2]`.
fn fold_1d_wide() -> SampledVectorField {
    let samples = (0..=120)
        .flat_map(|i| {
            (0..=20).map(move |j| {
                let x = -3.0 + 0.05 * i as f64;
                let l = 0.05 * j as f64;
                Sample {
                    x: vec![x],
                    lambda: l,
                    f: vec![1.0 - 2.0 * l - x * x],
                }
            })
        })
        .collect();
    SampledVectorField::new(1, samples, 7.0).unwrap()
}

struct OneDim {
    svf: SampledVectorField,
    family: SynthesizedFamily,
}

fn criterion_1() -> Outcome {
    let fixtures = common::homology_fixtures();
    for (name, n, l, expected) in &fixtures {
        let h = relative_homology(n, l).map_err(|e| format!("{name}: {e}"))?;
        let (betti, torsion) = common::oracle_homology(n, l);
        check(h.betti == betti && h.torsion == torsion, || {
            format!(
                "{name}: {:?}/{:?} vs oracle {betti:?}/{torsion:?}",
                h.betti, h.torsion
            )
        })?;
        check(&h.betti == expected, || format!("{name}: {:?}", h.betti))?;
    }
    Ok(format!("{} pairs agree with the oracle", fixtures.len()))
}

fn criterion_2(one: &mut Option<OneDim>) -> Outcome {
    let svf = fold_1d_wide();
    let spec = common::fold_1d_block();
    let cfg = config();
    let assumptions = ingest_stage(&svf, &spec).map_err(|e| e.to_string())?;
    check(assumptions.certified(), || assumptions.to_text())?;
    let pair = block_stage(&svf, &spec).map_err(|e| e.to_string())?;
    let outcome = certify_stage(&pair).map_err(|e| e.to_string())?;
    check(outcome.verdict == Certified::Certificate { k: 1 }, || {
        outcome.document().to_string()
    })?;
    let r = &outcome.report;
    check(
        support(&r.ch_s).is_empty()
            && support(&r.ch_a) == [(0, 1)]
            && support(&r.ch_astar) == [(1, 1)]
            && !(r.ch_s.has_torsion() || r.ch_a.has_torsion() || r.ch_astar.has_torsion()),
        || outcome.document().to_string(),
    )?;
    let (family, _) = synthesize_stage(&svf, &pair, 1, &cfg).map_err(|e| e.to_string())?;
    let report = verify_stage(&family, &cfg).map_err(|e| e.to_string())?;
    check(report.verdict() == Verdict::Pass, || report.to_text())?;
    let estimate = report.lambda0_estimate.ok_or("no fold estimate")?;
    check((estimate - cfg.lambda0).abs() < 1e-3, || {
        format!("fold at {estimate}, target {}", cfg.lambda0)
    })?;
    *one = Some(OneDim { svf, family });
    Ok(format!("k = 1, verify pass, fold at {estimate:.6}"))
}

fn criterion_3(one: &OneDim) -> Outcome {
    let (lo, hi) = one.family.block_bounds[0];
    let mut outside = 0;
    let mut worst_outside: f64 = 0.0;
    let mut worst_zero: f64 = 0.0;
    for s in &one.svf.samples {
        let dev = |sigma: f64| {
            one.family
                .eval(&s.x, s.lambda, sigma)
                .iter()
                .zip(&s.f)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        worst_zero = worst_zero.max(dev(0.0));
        if s.x[0] <= lo || s.x[0] >= hi {
            outside += 1;
            for i in 0..=10 {
                worst_outside = worst_outside.max(dev(i as f64 / 10.0));
            }
        }
    }
    check(outside > 0, || "no samples outside the block".into())?;
    check(worst_outside == 0.0 && worst_zero == 0.0, || {
        format!("outside {worst_outside:e}, at σ = 0 {worst_zero:e}")
    })?;
    Ok(format!("{outside} samples outside Int(B), deviation 0"))
}

fn criterion_4(one: &OneDim) -> Outcome {
    let g = one.family.lyapunov();
    check(g.samples.len() >= 1000, || {
        format!("{} samples", g.samples.len())
    })?;
    let mut worst = f64::INFINITY;
    for sigma in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let slice = SigmaSlice {
            family: one.family.stage2.as_ref(),
            sigma,
        };
        let (m, _) = g.decrease_margin(&slice, &g.samples);
        check(m > 0.0, || format!("margin {m} at σ = {sigma}"))?;
        worst = worst.min(m);
    }
    Ok(format!(
        "{} samples, worst margin {worst:.4e}, reported {:.4e}",
        g.samples.len(),
        g.margin
    ))
}

fn criterion_5(one: &OneDim) -> Outcome {
    let cfg = config();
    let report = verify_stage(&one.family, &cfg).map_err(|e| e.to_string())?;
    let sn = report.saddle_node.as_ref().ok_or("no saddle-node report")?;
    let (a, b) = sn.gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), g| {
        (a.min(g.0), b.max(g.0))
    });
    check(a <= 1e-4 * 1.0001 && b >= 1e-2 * 0.9999, || {
        format!("gap fit over [{a:e}, {b:e}]")
    })?;
    check((0.45..=0.55).contains(&sn.exponent), || {
        format!("exponent {}", sn.exponent)
    })?;
    check(sn.null_eigenvalue < 1e-6, || {
        format!("eigenvalue {:e}", sn.null_eigenvalue)
    })?;
    let field = SigmaSlice {
        family: &one.family,
        sigma: 1.0,
    };
    let bounds = &one.family.block_bounds;
    let seeds = grid_seeds(bounds, 81);
    let l0 = one.family.whitney().lambda0;
    let step = 1.0 / 40.0;
    let counts: Vec<usize> = [l0 - step, l0, l0 + step]
        .iter()
        .map(|&l| find_equilibria(&field, l, bounds, &seeds).len())
        .collect();
    check(counts == [2, 1, 0], || format!("census {counts:?}"))?;
    Ok(format!(
        "exponent {:.4}, eigenvalue {:.1e}, census {counts:?}",
        sn.exponent, sn.null_eigenvalue
    ))
}

fn criterion_6() -> Outcome {
    let opts = VerifyOptions::for_dim(1);
    let cont = ContinuationOptions::default();
    let families: [(&str, Rhs, [f64; 2]); 2] = [
        ("pitchfork", |x, mu| mu * x - x * x * x, [0.4, 0.0]),
        ("transcritical", |x, mu| mu * x - x * x, [0.2, 0.0]),
    ];
    let mut notes = Vec::new();
    for (name, rhs, seeds) in families {
        let f = FnField::new(1, move |x: &[f64], l: f64| vec![rhs(x[0], 0.5 - l)]);
        let [a, b] = seeds.map(|s| continue_branch(&f, (0.3, 0.5 - 1e-6), &[s], &cont));
        let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
        let r = saddle_node_test(&f, [&a, &b], 0.5, &opts).map_err(|e| e.to_string())?;
        check(!r.passed(), || format!("{name} passed: {r:?}"))?;
        notes.push(format!("{name} rejected (exponent {:.3})", r.exponent));
    }
    // ż = −z: a single attractor, CH(S) = ℤ in degree 0
    let samples = (0..=80)
        .flat_map(|i| {
            (0..=20).map(move |j| Sample {
                x: vec![-2.0 + 0.05 * i as f64],
                lambda: 0.05 * j as f64,
                f: vec![2.0 - 0.05 * i as f64],
            })
        })
        .collect();
    let svf = SampledVectorField::new(1, samples, 2.0).unwrap();
    let spec = BlockSpec::parse("box=-2 2\nresolution=8 ; 10\nsplit=0 1\n").unwrap();
    let pair = block_stage(&svf, &spec).map_err(|e| e.to_string())?;
    let outcome = certify_stage(&pair).map_err(|e| e.to_string())?;
    check(support(&outcome.report.ch_s) == [(0, 1)], || {
        outcome.document().to_string()
    })?;
    check(
        matches!(
            outcome.verdict,
            Certified::Rejection {
                condition: Condition::TrivialIndex,
                ..
            }
        ) && outcome.document().contains("condition iii"),
        || outcome.document().to_string(),
    )?;
    notes.push("CH(S) = ℤ@0 rejected at condition iii".into());
    Ok(notes.join("; "))
}

fn e<T>(r: Result<T, snblock::cerf::CerfError>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let fig3 = e(canceling_pair(&unit_mesh(20), (0, -2.0), (1, 2.0)))?;
    let birth = e(apply_uniqueness_of_birth(&fig3))?;
    check(
        birth.event_kinds() == [EventKind::CubicDeath, EventKind::CubicBirth],
        || format!("{:?}", birth.event_kinds()),
    )?;
    check(
        birth.left_endpoint() == fig3.left_endpoint()
            && birth.right_endpoint() == fig3.right_endpoint(),
        || "uniqueness of birth moved an endpoint".into(),
    )?;
    let fig4 = e(close_right_end(&birth, 0.9))?;
    let single = e(simplify_to_single_death(&fig4))?;
    check(single.event_kinds() == [EventKind::CubicDeath], || {
        format!("{:?}", single.event_kinds())
    })?;
    check(
        single.left_endpoint() == fig4.left_endpoint()
            && single.right_endpoint() == fig4.right_endpoint()
            && single.right_endpoint().is_empty(),
        || "simplification moved an endpoint".into(),
    )?;
    let model = e(WhitneyModel::new(
        0.5,
        1.0,
        0.0,
        (0, 0),
        Chart::from_bounds(&[(-2.0, 2.0)], 0, 1.0),
    ))?;
    let at_mu = |mu: f64| 0.5 - mu;
    let cards: Vec<usize> = [1.0, 0.0, -1.0]
        .iter()
        .map(|&mu| whitney_critical_values(&model, at_mu(mu)).len())
        .collect();
    check(cards == [2, 1, 0], || format!("cardinalities {cards:?}"))?;
    let vals = whitney_critical_values(&model, at_mu(3.0));
    check(
        vals.len() == 2 && (vals[0] + 2.0).abs() < 1e-12 && (vals[1] - 2.0).abs() < 1e-12,
        || format!("values at μ = 3: {vals:?}"),
    )?;
    Ok(format!(
        "[Death, Birth] then [Death], cusp {cards:?}, values {vals:?}"
    ))
}

fn criterion_8() -> Outcome {
    let svf = common::fold_2d_samples();
    let spec = common::fold_2d_block();
    let cfg = config();
    let assumptions = ingest_stage(&svf, &spec).map_err(|e| e.to_string())?;
    check(assumptions.certified(), || assumptions.to_text())?;
    let pair = block_stage(&svf, &spec).map_err(|e| e.to_string())?;
    let outcome = certify_stage(&pair).map_err(|e| e.to_string())?;
    check(outcome.verdict == Certified::Certificate { k: 1 }, || {
        outcome.document().to_string()
    })?;
    let (family, _) = synthesize_stage(&svf, &pair, 1, &cfg).map_err(|e| e.to_string())?;
    check(family.dim() == 2, || "wrong dimension".into())?;
    let report = verify_stage(&family, &cfg).map_err(|e| e.to_string())?;
    check(report.verdict() == Verdict::Pass, || report.to_text())?;
    Ok(format!(
        "k = 1, verify pass, exponent {:.4}",
        report.scaling_exponent.unwrap_or(f64::NAN)
    ))
}

fn main() -> ExitCode {
    let mut one = None;
    let mut failed = 0;
    let mut report = |n: usize, limit: Duration, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {limit:?}")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {n}: {} ({:.2} s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    };
    let secs = Duration::from_secs;
    report(1, secs(1), &mut criterion_1);
    report(2, secs(30), &mut || criterion_2(&mut one));
    let skipped = || Err("no synthesized 1D family".to_string());
    report(3, secs(5), &mut || {
        one.as_ref().map_or_else(skipped, criterion_3)
    });
    report(4, secs(10), &mut || {
        one.as_ref().map_or_else(skipped, criterion_4)
    });
    report(5, secs(30), &mut || {
        one.as_ref().map_or_else(skipped, criterion_5)
    });
    report(6, secs(10), &mut criterion_6);
    report(7, secs(1), &mut criterion_7);
    report(8, secs(120), &mut criterion_8);
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}

//! Welch and Pearson results checked against reference values computed with
//! scipy (`tests/data/welch_reference.json`).

use patchtree::analysis::{correlate, pearson, WinRateCell, WinRateSeries};
use patchtree::ingestion::{ChampionId, PatchVersion};
use patchtree::tree::{difference_p_value, estimate_effect};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct WelchCase {
    treated: Vec<f64>,
    control: Vec<f64>,
    tau: f64,
    se: f64,
    p: f64,
}

#[derive(Deserialize)]
struct PearsonCase {
    a: Vec<f64>,
    b: Vec<f64>,
    r: f64,
    p: f64,
}

#[derive(Deserialize)]
struct Reference {
    welch: Vec<WelchCase>,
    pearson: Vec<PearsonCase>,
}

fn reference() -> Reference {
    serde_json::from_str(include_str!("data/welch_reference.json")).unwrap()
}

#[test]
fn welch_matches_reference() {
    let cases = reference().welch;
    assert_eq!(cases.len(), 51);
    for (i, c) in cases.iter().enumerate() {
        let e = estimate_effect(&c.treated, &c.control).unwrap();
        assert!(
            (e.tau - c.tau).abs() <= 1e-6,
            "case {i}: tau {} vs {}",
            e.tau,
            c.tau
        );
        assert!(
            (e.se - c.se).abs() <= 1e-6,
            "case {i}: se {} vs {}",
            e.se,
            c.se
        );
        assert!(
            (e.p_value - c.p).abs() <= 1e-6,
            "case {i}: p {} vs {}",
            e.p_value,
            c.p
        );
        assert_eq!(e.n_treated, c.treated.len());
        assert_eq!(e.n_control, c.control.len());
    }
}

#[test]
fn pearson_matches_reference() {
    for c in reference().pearson {
        let got = pearson(&c.a, &c.b).unwrap();
        assert!((got.r - c.r).abs() <= 1e-12, "{} vs {}", got.r, c.r);
        assert!(
            (got.p_value - c.p).abs() <= 1e-9,
            "{} vs {}",
            got.p_value,
            c.p
        );
        assert_eq!(got.n, 4);
    }
}

fn series(rates: &[f64]) -> WinRateSeries {
    WinRateSeries {
        champion: ChampionId::new("c"),
        cells: rates
            .iter()
            .enumerate()
            .map(|(i, &rate)| WinRateCell {
                patch: PatchVersion::new(4, i as u32),
                wins: 0,
                games: 1,
                rate,
            })
            .collect(),
    }
}

#[test]
fn correlate_aligns_on_common_patches() {
    let a = series(&[0.1, 0.2, 0.3, 0.4]);
    let mut b = series(&[0.5, 0.4, 0.3, 0.9]);
    b.cells.pop();
    let c = correlate(&a, &b).unwrap();
    assert_eq!(c.n, 3);
    assert!((c.r + 1.0).abs() < 1e-12);
    b.cells.pop();
    assert!(correlate(&a, &b).is_err());
}

fn arm() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 2..30)
}

proptest! {
    #[test]
    fn effect_is_antisymmetric(t in arm(), c in arm()) {
        let a = estimate_effect(&t, &c).unwrap();
        let b = estimate_effect(&c, &t).unwrap();
        prop_assert!((a.tau + b.tau).abs() <= 1e-9 * (1.0 + a.tau.abs()));
        prop_assert!((a.se - b.se).abs() <= 1e-9 * (1.0 + a.se));
        prop_assert!((a.p_value - b.p_value).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
        prop_assert!((a.tau - (a.mean_treated - a.mean_control)).abs() == 0.0);
    }

    #[test]
    fn effect_shift_and_scale(t in arm(), c in arm(), shift in -1e3f64..1e3, scale in 1e-3f64..1e3) {
        let a = estimate_effect(&t, &c).unwrap();
        let st: Vec<f64> = t.iter().map(|y| y * scale + shift).collect();
        let sc: Vec<f64> = c.iter().map(|y| y * scale + shift).collect();
        let b = estimate_effect(&st, &sc).unwrap();
        prop_assert!((b.tau - scale * a.tau).abs() <= 1e-7 * (1.0 + scale * (a.tau.abs() + 100.0)));
        prop_assert!((b.se - scale * a.se).abs() <= 1e-7 * (1.0 + scale * a.se));
        prop_assert!((b.p_value - a.p_value).abs() <= 1e-6);
    }

    #[test]
    fn difference_test_is_symmetric(ta in -5.0f64..5.0, sa in 0.01f64..3.0, tb in -5.0f64..5.0, sb in 0.01f64..3.0) {
        let p = difference_p_value(ta, sa, tb, sb);
        prop_assert!((p - difference_p_value(tb, sb, ta, sa)).abs() <= 1e-15);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn correlation_symmetric_and_affine_invariant(
        a in prop::collection::vec(0.0f64..1.0, 3..40),
        noise in prop::collection::vec(-0.5f64..0.5, 40),
        slope in 0.01f64..50.0,
        offset in -10.0f64..10.0,
    ) {
        let b: Vec<f64> = a.iter().zip(&noise).map(|(x, e)| x + e).collect();
        prop_assume!(pearson(&a, &b).is_ok());
        let r = pearson(&a, &b).unwrap().r;
        prop_assert!((r - pearson(&b, &a).unwrap().r).abs() <= 1e-12);
        let mapped: Vec<f64> = a.iter().map(|x| slope * x + offset).collect();
        prop_assert!((r - pearson(&mapped, &b).unwrap().r).abs() <= 1e-9);
        let sa = series(&a);
        let sb = series(&b);
        prop_assert!((correlate(&sa, &sb).unwrap().r - correlate(&sb, &sa).unwrap().r).abs() <= 1e-12);
    }
}

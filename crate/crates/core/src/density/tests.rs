use super::*;
use crate::ifs::parse_spec;
use crate::measure::build_model;
use crate::typing::{classify_types, incidence_template};

struct Fixture {
    spec: IfsSpec,
    table: TypeTable,
    model: CertifiedModel,
}

fn fixture(text: &str) -> Fixture {
    let spec = parse_spec(text).unwrap();
    let table = classify_types(&spec, 12).unwrap();
    let model = build_model(&incidence_template(&table), 1e-13, 128).unwrap();
    Fixture { spec, table, model }
}

const CANTOR: &str = r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/3","b":"2/3"}]}"#;
const SIXTEENTHS: &str = r#"{"maps":[{"rho":"1/16","b":"0"},{"rho":"1/16","b":"15/256"},{"rho":"1/16","b":"15/16"}]}"#;
const LAMBDA_NINTH: &str =
    r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/9","b":"8/27"},{"rho":"1/3","b":"2/3"}],"scheme":"lambda"}"#;
const FOUR_QUARTERS: &str =
    r#"{"maps":[{"rho":"1/4","b":"0"},{"rho":"1/4","b":"1/4"},{"rho":"1/4","b":"3/8"},{"rho":"1/4","b":"3/4"}]}"#;
const RELAXED_SIXTHS: &str =
    r#"{"maps":[{"rho":"1/6","b":"0"},{"rho":"1/6","b":"5/42"},{"rho":"1/6","b":"5/6"}],"mode":"relaxed-b"}"#;

const BOTH: Request = Request { hausdorff: true, packing: true };

fn close(v: &CertifiedReal, expect: f64, what: &str) {
    assert!((v.mid_f64() - expect).abs() < 1e-10, "{what}: {} vs {expect}", v.mid_f64());
}

#[test]
fn cantor_is_classical() {
    let f = fixture(CANTOR);
    let mut e = DensityEngine::new(&f.spec, &f.table, &f.model);
    let r = e.report(BOTH).unwrap();
    let a = 2f64.ln() / 3f64.ln();
    // [0, 2/3] carries mass 1/2 and 3^α = 2.
    close(&r.d0_under.as_ref().unwrap().value, 2f64.powf(-a), "left boundary");
    close(&r.d1_under.as_ref().unwrap().value, 2f64.powf(-a), "right boundary");
    close(r.hausdorff.as_ref().unwrap(), 1.0, "H");
    close(r.packing.as_ref().unwrap(), 4f64.powf(a), "P");
    assert!(r.pair_minimum.is_none());
    assert_eq!(r.case_taken, Some(Case::SeparatedLakes));
}

#[test]
fn sixteenths_separated_lakes() {
    let f = fixture(SIXTEENTHS);
    let a = f.model.alpha_f64();
    let mut e = DensityEngine::new(&f.spec, &f.table, &f.model);
    let r = e.report(BOTH).unwrap();
    close(&r.d0_under.as_ref().unwrap().value, (16f64.powf(a) - 1.0) / 15f64.powf(a), "D0");
    close(&r.d1_under.as_ref().unwrap().value, (16.0f64 / 225.0).powf(a), "D1");
    assert_eq!(r.thresholds.k, Some(3));
    close(r.d_max.as_ref().unwrap(), (256f64.powf(a) - 16f64.powf(a)) / 31f64.powf(a), "d_max");
    close(r.pair_minimum.as_ref().unwrap(), (8.0f64 / 225.0).powf(a), "pair minimum");
    close(r.d_min.as_ref().unwrap(), (8.0f64 / 225.0).powf(a), "d_min");
    let w = r.d_max_witness.as_ref().unwrap();
    assert!(w.recompute(&f.model).overlaps(r.d_max.as_ref().unwrap()));
    let w = r.d_min_witness.as_ref().unwrap();
    assert!(w.recompute(&f.model).overlaps(r.d_min.as_ref().unwrap()));
}

#[test]
fn lambda_ninth_densities() {
    let f = fixture(LAMBDA_NINTH);
    let a = f.model.alpha_f64();
    let mut e = DensityEngine::new(&f.spec, &f.table, &f.model);
    let r = e.report(BOTH).unwrap();
    close(&r.d0_under.as_ref().unwrap().value, (3f64.powf(a) - 1.0) / 2f64.powf(a), "D0");
    close(&r.d1_under.as_ref().unwrap().value, (9.0f64 / 16.0).powf(a), "D1");
    assert_eq!(r.thresholds.k, Some(10));
    close(r.d_max.as_ref().unwrap(), (27f64.powf(a) - 9f64.powf(a)) / 11f64.powf(a), "d_max");
    close(r.d_min.as_ref().unwrap(), (9.0f64 / 32.0).powf(a), "d_min");
}

#[test]
fn four_quarters_threshold_is_out_of_reach() {
    let f = fixture(FOUR_QUARTERS);
    let a = f.model.alpha_f64();
    let mut e = DensityEngine::new(&f.spec, &f.table, &f.model);
    match e.report(Request { hausdorff: true, packing: false }) {
        Err(Error::ThresholdInfeasible { k, cap }) => assert_eq!((k, cap), (81, DEFAULT_MAX_GENERATION)),
        other => panic!("{other:?}"),
    }
    let r = e.report(Request { hausdorff: false, packing: true }).unwrap();
    close(&r.d0_under.as_ref().unwrap().value, (4f64.powf(a) - 1.0) / 3f64.powf(a), "D0");
    close(&r.d1_under.as_ref().unwrap().value, (2.0f64 / 3.0).powf(a), "D1");
    close(r.packing.as_ref().unwrap(), 3f64.powf(a), "P");
}

#[test]
fn relaxed_sixths_min() {
    let f = fixture(RELAXED_SIXTHS);
    let a = f.model.alpha_f64();
    let golden = (3.0 + 5f64.sqrt()) / 2.0;
    assert!((a - golden.ln() / 6f64.ln()).abs() < 1e-12);
    let mut e = DensityEngine::new(&f.spec, &f.table, &f.model);
    let r = e.report(BOTH).unwrap();
    close(&r.d0_under.as_ref().unwrap().value, (6f64.powf(a) - 1.0) / 5f64.powf(a), "D0");
    close(&r.d1_under.as_ref().unwrap().value, (7.0f64 / 30.0).powf(a), "D1");
    assert_eq!(r.thresholds.k, Some(5));
    close(r.d_max.as_ref().unwrap(), 2.0 * (6f64.powf(a) - 1.0) / 6f64.powf(a), "d_max");
    close(r.d_min.as_ref().unwrap(), (7.0f64 / 60.0).powf(a), "d_min");
}

#[test]
fn degenerate_tiling() {
    let f = fixture(r#"{"maps":[{"rho":"1/4","b":"0"},{"rho":"1/4","b":"1/4"},{"rho":"1/2","b":"1/2"}]}"#);
    let mut e = DensityEngine::new(&f.spec, &f.table, &f.model);
    let r = e.report(BOTH).unwrap();
    assert_eq!(r.case_taken, Some(Case::Degenerate));
    assert!(r.hausdorff.unwrap().contains_f64(1.0));
    assert!(r.packing.unwrap().contains_f64(1.0));
}

#[test]
fn branch_and_bound_matches_enumeration() {
    for text in [SIXTEENTHS, LAMBDA_NINTH, CANTOR] {
        let f = fixture(text);
        let mut e = DensityEngine::new(&f.spec, &f.table, &f.model);
        for k in 1..=3 {
            let min_len = Rational::from((1, 100));
            let fast = field_max(&e.tree, &mut e.ladder, &f.model, k, &min_len, &SearchOptions::default()).unwrap();
            let brute = brute_field_max(&e.tree, &f.model, k, &min_len);
            assert!((fast.value.mid_f64() - brute).abs() < 1e-12, "k={k}: {} vs {brute}", fast.value.mid_f64());
        }
    }
}

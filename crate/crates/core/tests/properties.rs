use gftc::density::{brute_field_max, commensurability, field_max, DensityEngine, Request, SearchOptions};
use gftc::generation::{build_frame, GenerationFrame};
use gftc::ifs::{parse_spec, IfsSpec};
use gftc::measure::{build_model, FramePrefix};
use gftc::numerics::{rational_pow, CertifiedReal};
use gftc::tree::{StatsLadder, TypedTree};
use gftc::typing::{classify_types, incidence_template, TypeTable};
use gftc::verify::{brute_force_extremum, check_assumption_a, check_assumption_b, AStatus};
use gftc::{CertifiedModel, Error};
use proptest::prelude::*;
use rug::Rational;

const EXAMPLES: [&str; 6] = [
    r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/3","b":"2/3"}]}"#,
    r#"{"maps":[{"rho":"1/16","b":"0"},{"rho":"1/16","b":"15/256"},{"rho":"1/16","b":"15/16"}]}"#,
    r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/4","b":"1/4"},{"rho":"1/4","b":"3/4"}]}"#,
    r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/9","b":"8/27"},{"rho":"1/3","b":"2/3"}],"scheme":"lambda"}"#,
    r#"{"maps":[{"rho":"1/4","b":"0"},{"rho":"1/4","b":"1/4"},{"rho":"1/4","b":"3/8"},{"rho":"1/4","b":"3/4"}]}"#,
    r#"{"maps":[{"rho":"1/6","b":"0"},{"rho":"1/6","b":"5/42"},{"rho":"1/6","b":"5/6"}],"mode":"relaxed-b"}"#,
];

struct Setup {
    spec: IfsSpec,
    table: TypeTable,
    model: CertifiedModel,
    tree: TypedTree,
}

fn setup(text: &str) -> Setup {
    let spec = parse_spec(text).unwrap();
    let table = classify_types(&spec, 12).unwrap();
    let model = build_model(&incidence_template(&table), 1e-12, 128).unwrap();
    let tree = TypedTree::new(&table);
    Setup { spec, table, model, tree }
}

/// Vertex-level frame with types copied from the tree.
fn typed_frame(s: &Setup, k: usize) -> GenerationFrame {
    let mut f = build_frame(&s.spec, k).unwrap();
    let islands = s.tree.materialize(0, k);
    assert_eq!(f.islands.len(), islands.len());
    for (isl, t) in f.islands.iter_mut().zip(islands) {
        assert_eq!((&isl.left, isl.length()), (&t.left, t.len.clone()));
        isl.type_id = Some(t.type_id);
    }
    f
}

fn mass_is_conserved(s: &Setup, depth: usize) {
    for k in 0..=depth {
        let f = typed_frame(s, k);
        let total = FramePrefix::new(&s.model, &f).unwrap().total();
        assert!((total.mid_f64() - 1.0).abs() <= 1e-10, "generation {k}: {}", total.mid_f64());
    }
}

fn parent_is_sum_of_children(s: &Setup) {
    for (t, kids) in s.tree.children.iter().enumerate() {
        let parent = s.model.measure(t, &Rational::from(1));
        let sum = kids.iter().fold(CertifiedReal::zero(128), |acc, c| acc + s.model.measure(c.type_id, &c.ratio));
        assert!(parent.overlaps(&sum) || (parent.mid_f64() - sum.mid_f64()).abs() < 1e-12, "type {t}");
    }
}

fn search_matches_brute_force(s: &Setup, depth: usize) {
    let mut ladder = StatsLadder::new(&s.tree);
    let tiny = Rational::from((1, 1u64 << 60));
    for k in 0..=depth {
        let f = typed_frame(s, k);
        if 2 * f.islands.len() > gftc::verify::BRUTE_FORCE_ENDPOINTS {
            break;
        }
        let fast = field_max(&s.tree, &mut ladder, &s.model, k, &tiny, &SearchOptions::default()).unwrap();
        let (slow, _) = brute_force_extremum(&s.model, &s.tree, &f, gftc::density::Sense::Max, &tiny).unwrap().unwrap();
        assert!(fast.value.overlaps(&slow), "k={k}: {:?} vs {:?}", fast.value, slow);
        let plain = brute_field_max(&s.tree, &s.model, k, &tiny);
        assert!((plain - slow.mid_f64()).abs() < 1e-12);
    }
}

fn density_bounds(s: &Setup) {
    let mut e = DensityEngine::new(&s.spec, &s.table, &s.model);
    let r = match e.report(Request { hausdorff: true, packing: true }) {
        Ok(r) => r,
        // Too deep for the search cap; the packing half still applies.
        Err(Error::ThresholdInfeasible { .. }) => e.report(Request { hausdorff: false, packing: true }).unwrap(),
        Err(other) => panic!("{other}"),
    };
    let a = s.model.alpha_f64();
    let d_min = r.d_min.unwrap().mid_f64();
    let d0 = r.d0_under.unwrap().value.mid_f64();
    let d1 = r.d1_under.unwrap().value.mid_f64();
    let cap = match s.spec.mode {
        gftc::ifs::Mode::Standard => d0.min(d1),
        gftc::ifs::Mode::AssumptionBRelaxed => d1,
    };
    assert!(d_min <= 2f64.powf(-a) * cap + 1e-12);
    assert!(d_min <= 1.0 + 1e-12);
    if let Some(d_max) = r.d_max {
        assert!(d_max.mid_f64() >= 1.0 - 1e-12);
    }
}

#[test]
fn examples_conserve_mass() {
    for text in EXAMPLES {
        mass_is_conserved(&setup(text), 4);
    }
}

#[test]
fn examples_parent_equals_children() {
    for text in EXAMPLES {
        parent_is_sum_of_children(&setup(text));
    }
}

#[test]
fn examples_search_matches_brute_force() {
    for text in EXAMPLES {
        search_matches_brute_force(&setup(text), 4);
    }
}

#[test]
fn examples_density_bounds() {
    for text in EXAMPLES {
        density_bounds(&setup(text));
    }
}

/// An OSC system: `m` pieces of lengths `len[i]/den` separated by gaps of
/// `gap[i]/den`, first at 0 and last ending at 1.
fn osc_config(lens: &[u32], gaps: &[u32]) -> String {
    let den: u32 = lens.iter().sum::<u32>() + gaps.iter().sum::<u32>();
    let mut at = 0;
    let mut maps = Vec::new();
    for (i, l) in lens.iter().enumerate() {
        maps.push(format!(r#"{{"rho":"{l}/{den}","b":"{at}/{den}"}}"#));
        at += l + gaps.get(i).copied().unwrap_or(0);
    }
    format!(r#"{{"maps":[{}]}}"#, maps.join(","))
}

fn osc_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
    (2usize..=4).prop_flat_map(|m| (prop::collection::vec(1u32..=4, m), prop::collection::vec(1u32..=3, m - 1)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn osc_instances((lens, gaps) in osc_strategy()) {
        let s = setup(&osc_config(&lens, &gaps));
        prop_assert_eq!(s.table.q, 1);
        // Moran equation: Σ ρ_i^α = 1.
        let a = s.model.alpha_f64();
        let sum: f64 = s.spec.maps.iter().map(|m| m.ratio.to_f64().powf(a)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
        prop_assert_eq!(check_assumption_a(&s.table), AStatus::Holds);
        prop_assert!(check_assumption_b(&s.spec, &s.tree, 8).is_verified());
        mass_is_conserved(&s, 3);
        parent_is_sum_of_children(&s);
        search_matches_brute_force(&s, 3);
        density_bounds(&s);
    }

    #[test]
    fn commensurable_powers(p in 2u32..7, d in 2u32..7, a in 1u32..6, b in 1u32..6) {
        let base = Rational::from((p, p * d + 1));
        let (r1, rm) = (rational_pow(&base, a), rational_pow(&base, b));
        let (n1, nm) = commensurability(&r1, &rm).unwrap();
        prop_assert_eq!(rational_pow(&r1, n1 as u32), rational_pow(&rm, nm as u32));
        let g = gcd(a, b);
        prop_assert_eq!((n1, nm), ((b / g) as u64, (a / g) as u64));
    }

    #[test]
    fn interval_arithmetic_encloses(a in 1i64..1000, b in 1i64..1000, c in 1i64..1000, e in 1i64..100) {
        let x = Rational::from((a, b));
        let y = Rational::from((c, b + 1));
        let cx = CertifiedReal::from_rational(&x, 96);
        let cy = CertifiedReal::from_rational(&y, 96);
        prop_assert!((&cx + &cy).contains_rational(&Rational::from(&x + &y)));
        prop_assert!((&cx * &cy).contains_rational(&Rational::from(&x * &y)));
        prop_assert!(cx.checked_div(&cy).unwrap().contains_rational(&Rational::from(&x / &y)));
        let ex = CertifiedReal::from_rational(&Rational::from((e, 100)), 96);
        let p = cx.pow(&ex).unwrap();
        let expect = (a as f64 / b as f64).powf(e as f64 / 100.0);
        prop_assert!((p.mid_f64() - expect).abs() <= 1e-12 * expect.max(1.0));
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

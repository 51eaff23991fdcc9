use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn gftc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gftc")).args(args).output().unwrap()
}

fn with_config(cmd: &str, name: &str, extra: &[&str]) -> Output {
    let path = config(name);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    gftc(&args)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_reports_types_and_dimension() {
    let out = with_config("analyze", "four_quarters", &["--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["gftc"]["q"], 3);
    assert_eq!(v["gftc"]["types"][0]["id"], 1);
    let lo: f64 = v["alpha"]["lo"].as_str().unwrap().parse().unwrap();
    assert!((lo - 0.9276).abs() < 5e-5);
    assert!(v.get("timings").is_none());
    assert!(v.get("density").is_none());
}

#[test]
fn timings_only_on_request() {
    let v = json(&with_config("analyze", "cantor", &["--json", "--timings"]));
    assert!(v["timings"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn text_is_the_default() {
    let out = with_config("packing", "cantor", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("packing")));
    assert!(serde_json::from_str::<Value>(&text).is_err());
}

#[test]
fn exit_codes() {
    assert_eq!(gftc(&["analyze", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(with_config("analyze", "invalid", &[]).status.code(), Some(2));
    assert_eq!(with_config("analyze", "four_quarters", &["--type-generations", "1"]).status.code(), Some(3));
    assert_eq!(with_config("analyze", "reducible", &[]).status.code(), Some(4));
    assert_eq!(with_config("hausdorff", "four_quarters", &[]).status.code(), Some(5));
    assert_eq!(with_config("hausdorff", "nested_ninth", &[]).status.code(), Some(6));
}

#[test]
fn threshold_error_names_the_generation() {
    let out = with_config("hausdorff", "four_quarters", &["--json"]);
    let v = json(&out);
    assert_eq!(v["error"]["code"], 5);
    assert_eq!(v["error"]["required_generation"], 81);
    // A larger cap does not change the required generation.
    let v = json(&with_config("hausdorff", "four_quarters", &["--json", "--max-generation", "40"]));
    assert_eq!(v["error"]["required_generation"], 81);
}

#[test]
fn check_command() {
    assert_eq!(with_config("check", "sixteenths", &[]).status.code(), Some(0));
    let out = with_config("check", "relaxed_sixths", &["--json"]);
    assert_eq!(out.status.code(), Some(6));
    let v = json(&out);
    assert_eq!(v["assumptions"]["b"]["status"], "violation_found");
    assert_eq!(v["assumptions"]["b"]["point"], "5/42");
}

#[test]
fn standard_mode_refuses_violated_b() {
    let text = std::fs::read_to_string(config("relaxed_sixths")).unwrap().replace("relaxed-b", "standard");
    let dir = std::env::temp_dir().join(format!("gftc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sixths_standard.json");
    std::fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(gftc(&["packing", p]).status.code(), Some(6));
    // The override skips the check.
    assert_eq!(gftc(&["packing", p, "--assume-b"]).status.code(), Some(0));
}

fn render(name: &str, levels: &str) -> String {
    let out_path = std::env::temp_dir().join(format!("gftc-{name}-{levels}-{}.svg", std::process::id()));
    let out = with_config("render", name, &["--levels", levels, "-o", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    std::fs::read_to_string(out_path).unwrap()
}

fn rects(svg: &str) -> Vec<(String, String, String)> {
    let attr = |line: &str, key: &str| {
        let start = line.find(&format!(" {key}=\"")).unwrap() + key.len() + 3;
        line[start..].split('"').next().unwrap().to_string()
    };
    svg.lines()
        .filter(|l| l.starts_with("<rect") && !l.contains("width=\"16\""))
        .map(|l| (attr(l, "x"), attr(l, "y"), attr(l, "width")))
        .collect()
}

#[test]
fn render_level_zero_is_one_bar() {
    let svg = render("cantor", "0");
    assert!(svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(rects(&svg), vec![("0.000000000000".into(), "0".into(), "1000.000000000000".into())]);
}

#[test]
fn render_touching_islands_have_no_gap() {
    let svg = render("four_quarters", "1");
    let r = rects(&svg);
    let row: Vec<_> = r.iter().filter(|(_, y, _)| y != "0").collect();
    // [0,1/4], [1/4,5/8] touching, [3/4,1].
    assert_eq!(row.len(), 3);
    assert_eq!((row[0].0.as_str(), row[0].2.as_str()), ("0.000000000000", "250.000000000000"));
    assert_eq!((row[1].0.as_str(), row[1].2.as_str()), ("250.000000000000", "375.000000000000"));
    assert_eq!((row[2].0.as_str(), row[2].2.as_str()), ("750.000000000000", "250.000000000000"));
}

#[test]
fn render_legend_lists_types() {
    let svg = render("third_quarter", "5");
    assert_eq!(svg.matches(">type ").count(), 2);
    // [0,1/9] and [1/12,1/6] merge at generation 2; widths round to twelve digits.
    assert!(svg.contains(r#"<rect x="0.000000000000" y="72" width="166.666666666667""#));
}

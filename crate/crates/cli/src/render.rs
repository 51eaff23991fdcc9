//! SVG bar diagram of the islands of the first generations.

use std::fmt::Write;

use gftc::ifs::IfsSpec;
use gftc::tree::TypedTree;
use gftc::typing::classify_types;
use gftc::Error;
use rug::{Integer, Rational};

pub const WIDTH: u32 = 1000;
const MARGIN: u32 = 40;
const ROW: u32 = 36;
const BAR: u32 = 20;
const ISLAND_CAP: usize = 100_000;

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Fixed-point decimal with 12 fractional digits, rounded to nearest.
pub fn decimal12(q: &Rational) -> String {
    let scale = Integer::from(Integer::u_pow_u(10, 12));
    let scaled = Rational::from(q * &scale);
    let n = scaled.round().into_numer_denom().0;
    let neg = n < 0;
    let digits = n.abs().to_string();
    let digits = format!("{digits:0>13}");
    let (int, frac) = digits.split_at(digits.len() - 12);
    format!("{}{int}.{frac}", if neg { "-" } else { "" })
}

pub fn render(spec: &IfsSpec, levels: usize, type_generations: usize) -> gftc::Result<String> {
    let table = classify_types(spec, type_generations)?;
    let tree = TypedTree::new(&table);
    let width = Rational::from(WIDTH);
    let height = 2 * MARGIN + ROW * (levels as u32 + 1) + 24 * table.q as u32;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{height}">"#,
        WIDTH + 2 * MARGIN
    );
    let _ = writeln!(svg, r#"<g transform="translate({MARGIN},{MARGIN})" font-family="sans-serif" font-size="12">"#);
    let mut level = vec![tree.root(0)];
    for k in 0..=levels {
        if k > 0 {
            level = level.iter().flat_map(|n| tree.child_islands(n).collect::<Vec<_>>()).collect();
        }
        if level.len() > ISLAND_CAP {
            return Err(Error::SizeGuard(format!("generation {k} has {} islands (cap {ISLAND_CAP})", level.len())));
        }
        let y = ROW * k as u32;
        let _ = writeln!(svg, r#"<text x="-30" y="{}">{k}</text>"#, y + BAR - 5);
        for isl in &level {
            let x = Rational::from(&isl.left * &width);
            let w = Rational::from(&isl.len * &width);
            let _ = writeln!(
                svg,
                r#"<rect x="{}" y="{y}" width="{}" height="{BAR}" fill="{}"/>"#,
                decimal12(&x),
                decimal12(&w),
                PALETTE[isl.type_id % PALETTE.len()]
            );
        }
    }
    let base = ROW * (levels as u32 + 1) + 8;
    for t in 0..table.q {
        let y = base + 24 * t as u32;
        let _ = writeln!(svg, r#"<rect x="0" y="{y}" width="16" height="16" fill="{}"/>"#, PALETTE[t % PALETTE.len()]);
        let _ = writeln!(svg, r#"<text x="24" y="{}">type {}</text>"#, y + 13, t + 1);
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

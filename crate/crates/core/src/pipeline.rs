//! End-to-end runs: configuration to types, dimension, measure and densities.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::density::{DensityEngine, DensityReport, Request, SearchOptions, DEFAULT_MAX_GENERATION};
use crate::error::{Error, Result};
use crate::ifs::{IfsSpec, Mode};
use crate::measure::{build_model, CertifiedModel};
use crate::numerics::{DEFAULT_PRECISION, MAX_PRECISION};
use crate::tree::TypedTree;
use crate::typing::{check_irreducible, classify_types, incidence_template, IncidenceTemplate, TypeTable, DEFAULT_MAX_GENERATIONS};
use crate::verify::{check_assumption_a, check_assumption_b, AStatus, AssumptionReport, BStatus, DEFAULT_B_DEPTH};

#[derive(Clone, Debug)]
pub struct Options {
    pub type_generations: usize,
    pub max_generation: usize,
    pub budget: Option<Duration>,
    pub assume_b: bool,
    pub precision_bits: u32,
    pub b_depth: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            type_generations: DEFAULT_MAX_GENERATIONS,
            max_generation: DEFAULT_MAX_GENERATION,
            budget: Some(Duration::from_secs(300)),
            assume_b: false,
            precision_bits: DEFAULT_PRECISION,
            b_depth: DEFAULT_B_DEPTH,
        }
    }
}

pub struct Analysis {
    pub spec: IfsSpec,
    pub table: TypeTable,
    pub template: IncidenceTemplate,
    pub model: CertifiedModel,
    pub assumptions: AssumptionReport,
    pub timings: Vec<(&'static str, f64)>,
}

fn escalate<T>(start: u32, mut f: impl FnMut(u32) -> Result<T>) -> Result<T> {
    let mut prec = start;
    loop {
        match f(prec) {
            Err(Error::Undecidable { .. } | Error::Inconclusive { .. } | Error::Residual { .. }) if prec < MAX_PRECISION => {
                prec = (prec * 2).min(MAX_PRECISION);
            }
            other => return other,
        }
    }
}

/// Types, dimension, Perron vector and assumption checks.
pub fn analyze(spec: IfsSpec, opts: &Options) -> Result<Analysis> {
    let mut timings = Vec::new();
    let t = Instant::now();
    let table = classify_types(&spec, opts.type_generations)?;
    timings.push(("types", t.elapsed().as_secs_f64()));
    let template = incidence_template(&table);
    if !check_irreducible(&template) {
        return Err(Error::NotIrreducible);
    }
    let t = Instant::now();
    let model = escalate(opts.precision_bits, |p| build_model(&template, spec.tolerances.alpha_tol, p))?;
    timings.push(("measure", t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let tree = TypedTree::new(&table);
    let assumptions = AssumptionReport { a: check_assumption_a(&table), b: check_assumption_b(&spec, &tree, opts.b_depth) };
    timings.push(("assumptions", t.elapsed().as_secs_f64()));
    Ok(Analysis { spec, table, template, model, assumptions, timings })
}

/// Refuse density work the theory does not cover.
pub fn gate(analysis: &Analysis, opts: &Options) -> Result<()> {
    if let AStatus::Violated { island, .. } = &analysis.assumptions.a {
        return Err(Error::AssumptionA { left: island[0].clone(), right: island[1].clone() });
    }
    if analysis.spec.mode == Mode::AssumptionBRelaxed || opts.assume_b {
        return Ok(());
    }
    match &analysis.assumptions.b {
        BStatus::VerifiedToDepth { .. } => Ok(()),
        BStatus::ViolationFound { point, .. } => Err(Error::AssumptionB(format!(
            "violated at {point}; rerun in relaxed mode"
        ))),
        BStatus::Inconclusive { depth } => Err(Error::AssumptionB(format!(
            "inconclusive at depth {depth}; pass --assume-b to proceed"
        ))),
    }
}

#[derive(Debug, Serialize)]
pub struct DensityRun {
    pub report: DensityReport,
    /// Working precision of the run that succeeded.
    pub precision_bits: u32,
    pub seconds: f64,
}

pub fn densities(analysis: &Analysis, req: Request, opts: &Options) -> Result<DensityRun> {
    gate(analysis, opts)?;
    let started = Instant::now();
    let deadline = opts.budget.map(|b| started + b);
    let mut used = analysis.model.prec;
    let report = escalate(analysis.model.prec, |p| {
        let rebuilt;
        let model = if p == analysis.model.prec {
            &analysis.model
        } else {
            rebuilt = build_model(&analysis.template, analysis.spec.tolerances.alpha_tol, p)?;
            &rebuilt
        };
        let mut engine = DensityEngine::new(&analysis.spec, &analysis.table, model);
        engine.max_generation = opts.max_generation;
        engine.opts = SearchOptions { workers: None, deadline };
        used = p;
        engine.report(req)
    })?;
    Ok(DensityRun { report, precision_bits: used, seconds: started.elapsed().as_secs_f64() })
}

use gftc::density::DensityReport;
use gftc::ifs::IfsSpec;
use gftc::pipeline::{Analysis, DensityRun};
use gftc::typing::OverlapType;
use gftc::verify::{AStatus, AssumptionReport, BStatus};
use gftc::{CertifiedReal, Error};
use serde::Serialize;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Serialize)]
struct Gftc<'a> {
    confirmed: bool,
    q: usize,
    k0: usize,
    types: &'a [OverlapType],
}

#[derive(Serialize)]
struct Timing {
    stage: &'static str,
    seconds: f64,
}

#[derive(Serialize)]
pub struct RunReport<'a> {
    schema: u32,
    command: &'static str,
    spec: &'a IfsSpec,
    gftc: Gftc<'a>,
    irreducible: bool,
    alpha: &'a CertifiedReal,
    perron: &'a [CertifiedReal],
    assumptions: &'a AssumptionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<DensityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision_bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Vec<Timing>>,
    #[serde(skip)]
    stage_times: Vec<(&'static str, f64)>,
    #[serde(skip)]
    search_nodes: Option<u64>,
}

impl<'a> RunReport<'a> {
    pub fn new(command: &'static str, a: &'a Analysis) -> Self {
        RunReport {
            schema: SCHEMA,
            command,
            spec: &a.spec,
            gftc: Gftc { confirmed: true, q: a.table.q, k0: a.table.k0, types: &a.table.types },
            irreducible: true,
            alpha: &a.model.alpha,
            perron: &a.model.perron,
            assumptions: &a.assumptions,
            density: None,
            precision_bits: None,
            timings: None,
            stage_times: a.timings.clone(),
            search_nodes: None,
        }
    }

    pub fn attach(&mut self, run: DensityRun) {
        self.stage_times.push(("density", run.seconds));
        self.search_nodes = run.report.search_nodes;
        self.precision_bits = Some(run.precision_bits);
        self.density = Some(run.report);
    }

    pub fn assumptions_hold(&self) -> bool {
        self.assumptions.a == AStatus::Holds && self.assumptions.b.is_verified()
    }

    pub fn emit(mut self, fmt: Format, timings: bool) {
        if timings {
            self.timings = Some(self.stage_times.iter().map(|&(stage, seconds)| Timing { stage, seconds }).collect());
        }
        let body = match fmt {
            Format::Json => serde_json::to_string_pretty(&self).expect("report serializes") + "\n",
            Format::Text => self.text(),
        };
        write_stdout(&body);
    }

    fn text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k:<16}{v}\n"));
        line("types", format!("q = {}, k0 = {}", self.gftc.q, self.gftc.k0));
        line("dimension", interval(self.alpha));
        line("assumption A", match &self.assumptions.a {
            AStatus::Holds => "holds".into(),
            AStatus::Violated { island, .. } => format!("violated in [{}, {}]", island[0], island[1]),
        });
        line("assumption B", match &self.assumptions.b {
            BStatus::VerifiedToDepth { depth, residual_length } => {
                format!("verified to depth {depth} (residual {residual_length})")
            }
            BStatus::ViolationFound { point, .. } => format!("violated at {point}"),
            BStatus::Inconclusive { depth } => format!("inconclusive at depth {depth}"),
        });
        if let Some(d) = &self.density {
            if let Some(b) = &d.d0_under {
                line("left boundary", interval(&b.value));
            }
            if let Some(b) = &d.d1_under {
                line("right boundary", interval(&b.value));
            }
            if let Some(c) = d.case_taken {
                line("case", format!("{c:?}"));
            }
            if let Some(k) = d.thresholds.k {
                line("generation k", k.to_string());
            }
            if let Some(v) = &d.d_max {
                line("d_max", interval(v));
            }
            if let Some(w) = &d.d_max_witness {
                line("  witness", gftc::density::witness_label(w));
            }
            if let Some(v) = &d.hausdorff {
                line("hausdorff", interval(v));
            }
            if let Some(v) = &d.d_min {
                line("d_min", interval(v));
            }
            if let Some(w) = &d.d_min_witness {
                line("  witness", gftc::density::witness_label(w));
            }
            if let Some(v) = &d.packing {
                line("packing", interval(v));
            }
        }
        if let Some(t) = &self.timings {
            for s in t {
                line(&format!("time {}", s.stage), format!("{:.3}s", s.seconds));
            }
            if let Some(n) = self.search_nodes {
                line("search nodes", n.to_string());
            }
        }
        out
    }
}

fn interval(v: &CertifiedReal) -> String {
    let (lo, hi) = v.to_decimal_pair();
    format!("{:.10}  [{lo}, {hi}]", v.mid_f64())
}

#[derive(Serialize)]
struct ErrorBody {
    code: u8,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    required_generation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generation_cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_uncertified: Option<f64>,
}

#[derive(Serialize)]
struct ErrorReport {
    schema: u32,
    error: ErrorBody,
}

/// Diagnostics go to stderr; with `--json` a report is also written to
/// stdout unless one was already printed.
pub fn emit_error(fmt: Format, e: &Error, code: u8, reported: bool) {
    eprintln!("error: {e}");
    if fmt != Format::Json || reported {
        return;
    }
    let (required_generation, generation_cap) = match e {
        Error::ThresholdInfeasible { k, cap } => (Some(*k), Some(*cap)),
        _ => (None, None),
    };
    let best_uncertified = match e {
        Error::BudgetExceeded { best, .. } => Some(*best),
        _ => None,
    };
    let body = ErrorBody { code, message: e.to_string(), required_generation, generation_cap, best_uncertified };
    let rep = ErrorReport { schema: SCHEMA, error: body };
    write_stdout(&(serde_json::to_string_pretty(&rep).expect("error serializes") + "\n"));
}

/// A closed pipe downstream is not an error worth a panic.
fn write_stdout(body: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(body.as_bytes());
}

//! Certificate reports and their text rendering.

use crate::chartab::FusionCheck;
use crate::feasibility::{FeasVerdict, IntVerdict, Outcome, ParamSystem, Propagation};
use crate::linalg::serde_rat_rows;
use crate::linform::{CycForm, RatForm};
use crate::rat::Rat;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Write;

pub const LAST_INFEASIBLE: &str = "module does not exist";
pub const NOT_EXCLUDED: &str = "module not excluded";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolationCheck {
    pub order: u64,
    pub primes: Vec<u64>,
    pub isolated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub orders: String,
    pub vertices: Vec<u64>,
    pub edges: Vec<(u64, u64)>,
    pub components: Vec<Vec<u64>>,
    pub isolated: Vec<u64>,
    pub hypotheses: Vec<IsolationCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpfReport {
    pub order: u64,
    pub classes: Vec<String>,
    /// Fixed-point dimension of every character on each class of the order.
    pub counts: BTreeMap<u32, Vec<String>>,
    pub survivors: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrefReport {
    #[serde(with = "serde_rat_rows")]
    pub a: Vec<Vec<Rat>>,
    pub rhs: Vec<RatForm>,
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: ParamSystem,
    pub system_hash: String,
    pub scaled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational: Option<FeasVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integer: Option<IntVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<Propagation>,
    pub outcome: String,
    pub expect: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinRecord {
    pub class: String,
    pub value: CycForm,
    /// False when an earlier stage already fixed this class and the values agree.
    pub new: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub parent: String,
    pub sub: String,
    pub fusion_check: FusionCheck,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpf: Option<FpfReport>,
    pub allowed: Vec<u32>,
    pub allowed_degrees: Vec<u64>,
    pub vars: Vec<String>,
    pub uses: Vec<String>,
    pub produces: Vec<PinRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub built_system: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational_system: Option<ParamSystem>,
    /// How `rational_system` was obtained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rref: Option<RrefReport>,
    pub solves: Vec<SolveReport>,
    pub resolved: BTreeMap<u32, RatForm>,
    pub expectations: Vec<ExpectCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactRecord {
    pub class: String,
    pub value: CycForm,
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub param: String,
    pub value: RatForm,
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub case: String,
    pub group: String,
    pub characteristic: u64,
    pub fixtures: BTreeMap<String, String>,
    pub prime_graph: GraphSummary,
    pub assumptions: Vec<String>,
    pub stages: Vec<StageReport>,
    pub facts: Vec<FactRecord>,
    pub relations: Vec<RelationRecord>,
    pub last_stage_infeasible: bool,
    pub verdict: String,
    pub expected_verdict: String,
    pub pass: bool,
}

impl CertificateReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn fact(&self, class: &str) -> Option<&FactRecord> {
        self.facts.iter().find(|f| f.class == class)
    }
}

fn outcome_word(o: &Outcome) -> &'static str {
    match o {
        Outcome::Contradiction => "contradiction",
        Outcome::Determined { .. } => "determined",
        Outcome::Residual { .. } => "residual",
    }
}

pub fn render_text(r: &CertificateReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "case {} ({} in characteristic {})", r.case, r.group, r.characteristic);
    let g = &r.prime_graph;
    let comps: Vec<String> = g.components.iter().map(|c| format!("{c:?}")).collect();
    let _ = writeln!(s, "prime graph: {} vertices, {} edges, components {}", g.vertices.len(), g.edges.len(), comps.join(" "));
    for h in &g.hypotheses {
        let _ = writeln!(s, "  order {} primes {:?} isolated: {}", h.order, h.primes, h.isolated);
    }
    for a in &r.assumptions {
        let _ = writeln!(s, "assumed: {a}");
    }
    for st in &r.stages {
        let _ = writeln!(s, "stage {} ({} in {}): {}", st.name, st.sub, st.parent, if st.pass { "pass" } else { "FAIL" });
        if let Some(f) = &st.fpf {
            let _ = writeln!(s, "  fixed-point-free on order {}: characters {:?}", f.order, f.survivors);
        }
        let _ = writeln!(s, "  allowed degrees {:?}", st.allowed_degrees);
        if !st.uses.is_empty() {
            let _ = writeln!(s, "  uses {}", st.uses.join(", "));
        }
        if let Some(sys) = &st.rational_system {
            let _ = writeln!(s, "  rational system {}x{}", sys.rows(), sys.cols());
        }
        for sv in &st.solves {
            let mut parts = Vec::new();
            if let Some(v) = &sv.rational {
                parts.push(format!("rational {}", if v.is_feasible() { "feasible" } else { "infeasible" }));
            }
            if let Some(v) = &sv.integer {
                parts.push(format!("integer {}", if v.is_feasible() { "feasible" } else { "infeasible" }));
            }
            if let Some(p) = &sv.propagation {
                parts.push(format!("propagation {} in {} steps", outcome_word(&p.outcome), p.chain.steps.len()));
            }
            let _ = writeln!(s, "  solve: {} -> {} (expected {})", parts.join(", "), sv.outcome, sv.expect);
            if let Some(p) = &sv.propagation {
                for step in &p.chain.steps {
                    let _ = writeln!(s, "    {}", step.text);
                }
            }
        }
        for p in &st.produces {
            let _ = writeln!(s, "  chi({}) = {}{}", p.class, p.value, if p.new { "" } else { " (agrees)" });
        }
        for e in &st.expectations {
            let _ = writeln!(s, "  check {}: {} {}", e.name, if e.pass { "ok" } else { "FAILED" }, e.detail);
        }
        if let Some(e) = &st.error {
            let _ = writeln!(s, "  error: {e}");
        }
    }
    let _ = writeln!(s, "verdict: {} (expected {}): {}", r.verdict, r.expected_verdict, if r.pass { "pass" } else { "FAIL" });
    s
}

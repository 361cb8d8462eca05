//! Assembles Conley index homology into a homological saddle-node certificate.

use std::fmt;
use std::fmt::Write as _;

use crate::block::{BlockPair, SimpleBlockReport};
use crate::homology::{conley_index_of_block, HomologyError, HomologyResult};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConleyIndexReport {
    /// Index of `Inv(B₀, φ₀)` from `(B₀, ∂B₀⁻)`.
    pub ch_s: HomologyResult,
    pub ch_a: HomologyResult,
    pub ch_astar: HomologyResult,
    pub k: Option<usize>,
}

impl ConleyIndexReport {
    pub fn new(ch_s: HomologyResult, ch_a: HomologyResult, ch_astar: HomologyResult) -> Self {
        let k = extract_unstable_dimension(&ch_a, &ch_astar);
        Self {
            ch_s,
            ch_a,
            ch_astar,
            k,
        }
    }

    pub fn from_pair(pair: &BlockPair) -> Result<Self, HomologyError> {
        Ok(Self::new(
            conley_index_of_block(&pair.parent)?,
            conley_index_of_block(&pair.attractor)?,
            conley_index_of_block(&pair.repeller)?,
        ))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format=snblock-index v1\n");
        let _ = writeln!(out, "CH(S)\t{}", self.ch_s);
        let _ = writeln!(out, "CH(A)\t{}", self.ch_a);
        let _ = writeln!(out, "CH(A*)\t{}", self.ch_astar);
        match self.k {
            Some(k) => {
                let _ = writeln!(out, "k={k}");
            }
            None => out.push_str("k=absent\n"),
        }
        out
    }
}

/// The unique `k ≥ 1` with `CH(A) = ℤ` in degree `k − 1` and `CH(A*) = ℤ` in
/// degree `k`, torsion-free and zero elsewhere.
pub fn extract_unstable_dimension(
    ch_a: &HomologyResult,
    ch_astar: &HomologyResult,
) -> Option<usize> {
    (1..ch_astar.betti.len())
        .find(|&k| ch_a.is_z_concentrated_in(k - 1) && ch_astar.is_z_concentrated_in(k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    /// Product structure `B ≅ B₀ × Λ`; holds by construction.
    Product,
    Simple,
    TrivialIndex,
    AttractorRepeller,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Product => "condition i",
            Condition::Simple => "condition ii",
            Condition::TrivialIndex => "condition iii",
            Condition::AttractorRepeller => "condition iv",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Certificate {
        k: usize,
    },
    Rejection {
        condition: Condition,
        reason: String,
    },
}

impl Verdict {
    pub fn is_certificate(&self) -> bool {
        matches!(self, Verdict::Certificate { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificationOutcome {
    pub verdict: Verdict,
    pub report: ConleyIndexReport,
    pub simple_passed: bool,
    document: String,
}

impl CertificationOutcome {
    pub fn document(&self) -> &str {
        &self.document
    }
}

pub fn certify_homological_saddle_node(
    report: &ConleyIndexReport,
    blocks: &BlockPair,
    simple: &SimpleBlockReport,
) -> CertificationOutcome {
    let simple_ok = simple.passed();
    let trivial = report.ch_s.is_zero();
    let verdict = if !simple_ok {
        let c = simple.first_failure().expect("failed report names a set");
        Verdict::Rejection {
            condition: Condition::Simple,
            reason: format!(
                "{} has {} component(s) and H1 rank {}",
                c.name, c.components, c.h1
            ),
        }
    } else if !trivial {
        Verdict::Rejection {
            condition: Condition::TrivialIndex,
            reason: format!("CH(S) is nonzero: {}", report.ch_s),
        }
    } else if let Some(k) = report.k {
        Verdict::Certificate { k }
    } else {
        Verdict::Rejection {
            condition: Condition::AttractorRepeller,
            reason: format!(
                "no k >= 1 with CH(A) = Z at k-1 and CH(A*) = Z at k (CH(A): {}; CH(A*): {})",
                report.ch_a, report.ch_astar
            ),
        }
    };

    let mut doc = String::from("format=snblock-certificate v1\n");
    match &verdict {
        Verdict::Certificate { k } => {
            let _ = writeln!(doc, "verdict=Certificate k={k}");
        }
        Verdict::Rejection { condition, reason } => {
            let _ = writeln!(doc, "verdict=Rejection {condition}: {reason}");
        }
    }
    let pf = |b: bool| if b { "pass" } else { "fail" };
    let _ = writeln!(
        doc,
        "condition i\tassumed\tproduct block B0 x Lambda, B0 bounds {:?}",
        blocks.parent.bounds()
    );
    let _ = writeln!(doc, "condition ii\t{}", pf(simple_ok));
    for c in &simple.checks {
        let _ = writeln!(
            doc,
            "  simple\t{}\tcomponents={}\th1={}{}\t{}",
            c.name,
            c.components,
            c.h1,
            if c.whole_boundary {
                "\twhole-boundary"
            } else {
                ""
            },
            pf(c.passed())
        );
    }
    let _ = writeln!(
        doc,
        "condition iii\t{}\tCH(S)\t{}",
        pf(trivial),
        report.ch_s
    );
    let _ = writeln!(
        doc,
        "condition iv\t{}\tCH(A)\t{}\tCH(A*)\t{}\tk={}",
        pf(report.k.is_some()),
        report.ch_a,
        report.ch_astar,
        report.k.map_or("absent".to_string(), |k| k.to_string())
    );
    CertificationOutcome {
        verdict,
        report: report.clone(),
        simple_passed: simple_ok,
        document: doc,
    }
}

/// Reads `k` back from a certificate document; `None` for rejections.
pub fn parse_certificate_k(doc: &str) -> Option<usize> {
    doc.lines()
        .find_map(|l| l.strip_prefix("verdict=Certificate k="))
        .and_then(|k| k.trim().parse().ok())
}

//! Machine-readable (JSON) and human-readable (stage table) renderings of a
//! solver run.
//!
//! Both renderings depend only on the run's results and configuration, never
//! on timings, so a fixed seed with one worker gives byte-identical output.
//! Timings appear in the text table only when explicitly requested.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{SolveOutput, SolverConfig, StageStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    /// `[re, im]` per variable, in declaration order.
    pub coords: Vec<[f64; 2]>,
    pub residual: f64,
    pub multiplicity_count: u32,
    pub singular: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSetRecord {
    pub codim: usize,
    pub count: usize,
    pub points: Vec<PointRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub n_vars: usize,
    pub n_equations: usize,
    pub seed: u64,
    pub mode: String,
    pub witness_sets: Vec<WitnessSetRecord>,
    pub stages: Vec<StageStats>,
    pub warnings: Vec<String>,
}

impl JsonReport {
    pub fn new(out: &SolveOutput, cfg: &SolverConfig) -> Self {
        let witness_sets = out
            .collection
            .sets()
            .map(|w| WitnessSetRecord {
                codim: w.codim(),
                count: w.len(),
                points: w
                    .points()
                    .iter()
                    .map(|p| PointRecord {
                        coords: p.point.iter().map(|c| [c.re, c.im]).collect(),
                        residual: p.residual,
                        multiplicity_count: p.multiplicity_count,
                        singular: p.singular,
                    })
                    .collect(),
            })
            .collect();
        Self {
            n_vars: out.system.n_vars(),
            n_equations: out.system.len(),
            seed: cfg.seed,
            mode: cfg.mode.clone(),
            witness_sets,
            stages: out.stages.clone(),
            warnings: out.warnings.clone(),
        }
    }

    pub fn counts(&self) -> BTreeMap<usize, usize> {
        self.witness_sets.iter().map(|w| (w.codim, w.count)).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad report JSON: {e}")))
    }
}

/// Stage table plus input summary, configuration echo and final counts.
pub fn text_report(out: &SolveOutput, cfg: &SolverConfig, timings: bool) -> String {
    let mut s = String::new();
    let degrees: Vec<String> = out.system.degrees().iter().map(u32::to_string).collect();
    writeln!(s, "system: {} equations in {} unknowns, degrees [{}]", out.system.len(), out.system.n_vars(), degrees.join(", ")).unwrap();
    if out.order.iter().enumerate().any(|(i, &o)| i != o) {
        let order: Vec<String> = out.order.iter().map(|i| (i + 1).to_string()).collect();
        writeln!(s, "equation order: {}", order.join(", ")).unwrap();
    }
    writeln!(
        s,
        "seed {}  mode {}  order {}  threads {}",
        cfg.seed, cfg.mode, cfg.order, cfg.worker_count
    )
    .unwrap();
    let t = &cfg.tolerances;
    writeln!(s, "tolerances: zero {:e}  dup {:e}  slice {:e}  rank {:e}  res {:e}", t.zero, t.dup, t.slice, t.rank, t.res).unwrap();
    let hs: Vec<String> = out.hypersurface_counts.iter().map(usize::to_string).collect();
    writeln!(s, "hypersurface witness counts: {}", hs.join(", ")).unwrap();
    s.push('\n');

    let mut header = format!(
        "{:>5} {:>7} {:>8} {:>9} {:>8} {:>6} {:>8} {:>6} {:>8}",
        "stage", "tracked", "diverged", "converged", "failed", "short", "singular", "junk", "accepted"
    );
    if timings {
        write!(header, " {:>10} {:>10}", "time(s)", "ms/path").unwrap();
    }
    writeln!(s, "{header}").unwrap();
    for st in &out.stages {
        write!(
            s,
            "{:>5} {:>7} {:>8} {:>9} {:>8} {:>6} {:>8} {:>6} {:>8}",
            st.stage,
            st.tracked,
            st.diverged,
            st.converged,
            st.failed,
            st.shortcut_a,
            st.discarded_singular,
            st.junk_g,
            st.accepted
        )
        .unwrap();
        if timings {
            let secs = st.wall_time.as_secs_f64();
            let per_path = if st.tracked > 0 { 1e3 * secs / st.tracked as f64 } else { 0.0 };
            write!(s, " {secs:>10.3} {per_path:>10.3}").unwrap();
        }
        s.push('\n');
    }
    let total = |f: fn(&StageStats) -> usize| out.stages.iter().map(f).sum::<usize>();
    writeln!(
        s,
        "{:>5} {:>7} {:>8} {:>9} {:>8}",
        "total",
        total(|st| st.tracked),
        total(|st| st.diverged),
        total(|st| st.converged),
        total(|st| st.failed)
    )
    .unwrap();
    s.push('\n');

    writeln!(s, "witness sets:").unwrap();
    for w in out.collection.sets() {
        let singular = w.points().iter().filter(|p| p.singular).count();
        writeln!(s, "  codim {:>3}  dim {:>3}  count {:>5}  singular {:>3}", w.codim(), w.dimension(), w.len(), singular).unwrap();
    }
    if out.collection.total_points() == 0 {
        writeln!(s, "  (empty solution set)").unwrap();
    }
    for w in &out.warnings {
        writeln!(s, "warning: {w}").unwrap();
    }
    s
}

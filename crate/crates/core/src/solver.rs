//! Equation-by-equation driver: witness sets for `V(f_1..f_k)` are extended
//! one hypersurface at a time.
//!
//! Stage `k` turns the collection for the first `k` equations into the
//! collection for the first `k + 1`. Points that already satisfy the next
//! equation shortcut into the same codimension; the rest are intersected with
//! the new hypersurface by diagonal homotopy and land one codimension lower,
//! after duplicate, ignore-set, singularity and membership filtering.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::diagonal::intersect_with_hypersurface;
use crate::error::{Error, Result};
use crate::linalg::Rng;
use crate::policy::{ordering_by_name, policy_by_name, StagePolicy};
use crate::poly::{PolySystem, Polynomial};
use crate::tracker::{SlicedSystem, TrackOptions};
use crate::witness::{
    hypersurface_witness, is_duplicate, is_singular_point, make_flag, membership_test, refine_point,
    sliced_square_system, vanishes_all, vanishes_any, vanishes_at, GenericFlag, Randomizers, Tolerances,
    WitnessCollection, WitnessPoint, WitnessSet,
};
use crate::workers::Workers;

/// Everything that parameterizes a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub seed: u64,
    /// Name of a registered stage policy (`all`, `nonsingular`).
    pub mode: String,
    /// Name of a registered equation ordering (`given`, `degree`).
    pub order: String,
    pub tolerances: Tolerances,
    pub track: TrackOptions,
    /// Path-tracking threads; 1 runs everything inline.
    pub worker_count: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: "all".into(),
            order: "given".into(),
            tolerances: Tolerances::default(),
            track: TrackOptions::default(),
            worker_count: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.worker_count == 0 {
            return Err(Error::InvalidArgument("worker count must be at least 1".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [("zero", t.zero), ("dup", t.dup), ("slice", t.slice), ("res", t.res)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if !(t.rank > 0.0 && t.rank < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance rank must lie in (0, 1), got {}", t.rank)));
        }
        self.track.validate()?;
        policy_by_name(&self.mode)?;
        ordering_by_name(&self.order)?;
        Ok(())
    }
}

/// Bookkeeping for one stage (introduction of one equation).
///
/// Conservation: `input_points = shortcut_a + discarded_isolated + pooled`;
/// `hypersurface_points = hypersurface_ignored + discarded_b + hypersurface_kept`
/// (both counted with multiplicity); `tracked = converged + diverged + failed`;
/// `converged = dropped_d + dropped_e + discarded_singular + junk_g + accepted`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStats {
    /// Index of the equation being introduced, counting from 1 (stage 1 adds `f_2`).
    pub stage: usize,
    pub input_points: usize,
    pub shortcut_a: usize,
    /// Isolated points that fail test (a); they cannot continue.
    pub discarded_isolated: usize,
    pub pooled: usize,
    pub hypersurface_points: usize,
    pub hypersurface_ignored: usize,
    pub discarded_b: usize,
    pub hypersurface_kept: usize,
    pub tracked: usize,
    pub converged: usize,
    pub diverged: usize,
    pub failed: usize,
    pub dropped_d: usize,
    pub dropped_e: usize,
    /// Singular candidates dropped without a membership test (nonsingular mode).
    pub discarded_singular: usize,
    pub junk_g: usize,
    pub accepted: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl StageStats {
    /// Checks the conservation identities; returns the first violation.
    pub fn check_conservation(&self) -> std::result::Result<(), String> {
        let checks = [
            ("input", self.input_points, self.shortcut_a + self.discarded_isolated + self.pooled),
            ("hypersurface", self.hypersurface_points, self.hypersurface_ignored + self.discarded_b + self.hypersurface_kept),
            ("paths", self.tracked, self.converged + self.diverged + self.failed),
            (
                "endpoints",
                self.converged,
                self.dropped_d + self.dropped_e + self.discarded_singular + self.junk_g + self.accepted,
            ),
        ];
        for (what, total, parts) in checks {
            if total != parts {
                return Err(format!("stage {}: {what} total {total} != sum of buckets {parts}", self.stage));
            }
        }
        Ok(())
    }
}

/// What preprocessing did to the input.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    /// Original indices of identically zero polynomials that were removed.
    pub dropped_zero: Vec<usize>,
    /// Original index of a nonzero constant polynomial; the solution set is empty.
    pub constant: Option<usize>,
}

/// Removes zero polynomials and detects nonzero constants.
pub fn preprocess(sys: &PolySystem) -> (PolySystem, PreprocessReport) {
    let (kept, dropped_zero) = sys.drop_zero();
    let constant = sys.polys().iter().position(|p| !p.is_zero() && p.is_constant());
    (kept, PreprocessReport { dropped_zero, constant })
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub collection: WitnessCollection,
    pub stages: Vec<StageStats>,
    /// The system actually solved: preprocessed and reordered.
    pub system: PolySystem,
    /// Original index of each equation of `system`.
    pub order: Vec<usize>,
    /// Witness counts of each hypersurface on the witness line, with multiplicity.
    pub hypersurface_counts: Vec<usize>,
    pub preprocess: PreprocessReport,
    pub warnings: Vec<String>,
}

impl SolveOutput {
    /// Paths that neither converged nor diverged; nonzero means the output may be incomplete.
    pub fn failed_paths(&self) -> usize {
        self.stages.iter().map(|s| s.failed).sum()
    }
}

/// Runs the full computation with the configured policy.
pub fn solve(sys: &PolySystem, q: Option<&PolySystem>, cfg: &SolverConfig) -> Result<SolveOutput> {
    Solver::new(cfg)?.run(sys, q)
}

/// Runs in nonsingular mode regardless of `cfg.mode`.
pub fn solve_nonsingular(sys: &PolySystem, q: Option<&PolySystem>, cfg: &SolverConfig) -> Result<SolveOutput> {
    let cfg = SolverConfig { mode: "nonsingular".into(), ..cfg.clone() };
    solve(sys, q, &cfg)
}

/// Per-run state: policy, random constants and workers.
pub struct Solver {
    cfg: SolverConfig,
    policy: Arc<dyn StagePolicy>,
    workers: Workers,
    randomizers: Randomizers,
}

/// Fixed data shared by every stage of one run.
struct RunContext<'a> {
    system: &'a PolySystem,
    q: Option<&'a PolySystem>,
    flag: Arc<GenericFlag>,
}

impl Solver {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            policy: policy_by_name(&cfg.mode)?,
            workers: Workers::new(cfg.worker_count),
            randomizers: Randomizers::new(cfg.seed),
        })
    }

    pub fn run(&self, sys: &PolySystem, q: Option<&PolySystem>) -> Result<SolveOutput> {
        let n_vars = sys.n_vars();
        if let Some(q) = q {
            if q.n_vars() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, got: q.n_vars() });
            }
        }
        let mut rng = Rng::new(self.cfg.seed);
        let flag = Arc::new(make_flag(&mut rng, n_vars));
        let (kept, report) = preprocess(sys);
        let mut out = SolveOutput {
            collection: WitnessCollection::new(n_vars, Arc::clone(&flag)),
            stages: Vec::new(),
            system: kept.clone(),
            order: Vec::new(),
            hypersurface_counts: Vec::new(),
            preprocess: report,
            warnings: Vec::new(),
        };
        for i in &out.preprocess.dropped_zero {
            out.warnings.push(format!("equation {} is identically zero and was dropped", i + 1));
        }
        if let Some(i) = out.preprocess.constant {
            out.warnings.push(format!("equation {} is a nonzero constant: the solution set is empty", i + 1));
            return Ok(out);
        }
        if kept.is_empty() {
            out.warnings.push("no nonzero equations: the solution set is all of the ambient space".into());
            return Ok(out);
        }
        self.policy.check_shape(kept.len(), n_vars)?;

        let order = ordering_by_name(&self.cfg.order)?.order(&kept);
        let polys: Vec<Polynomial> = order.iter().map(|&i| kept.polys()[i].clone()).collect();
        let system = PolySystem::with_names(kept.names().to_vec(), polys)?;
        let original: Vec<usize> = (0..sys.len()).filter(|i| !out.preprocess.dropped_zero.contains(i)).collect();
        out.order = order.iter().map(|&i| original[i]).collect();

        let ctx = RunContext { system: &system, q, flag };
        let mut current = self.first_collection(&ctx, &mut out)?;
        for k in 1..system.len() {
            let (next, stats) = self.stage(&ctx, &current, k, &mut rng, &mut out)?;
            log::info!(
                "stage {k}: tracked {} converged {} diverged {} failed {} accepted {}",
                stats.tracked,
                stats.converged,
                stats.diverged,
                stats.failed,
                stats.accepted
            );
            out.stages.push(stats);
            current = next;
        }
        if !self.policy.keep_shortcut() {
            // Only the top codimension carries output in this mode.
            let top = system.len().min(n_vars);
            let mut only = WitnessCollection::new(n_vars, Arc::clone(&ctx.flag));
            if let Some(set) = current.get(top) {
                only.insert(set.clone());
            }
            current = only;
        }
        let failed = out.failed_paths();
        if failed > 0 {
            out.warnings.push(format!("{failed} paths failed; witness sets may be incomplete"));
        }
        out.collection = current;
        out.system = system;
        Ok(out)
    }

    fn sliced(&self, ctx: &RunContext<'_>, k: usize, codim: usize) -> Result<Arc<SlicedSystem>> {
        Ok(Arc::new(sliced_square_system(&ctx.system.prefix(k), codim, &ctx.flag, &self.randomizers)?))
    }

    fn empty_collection(&self, ctx: &RunContext<'_>, k: usize) -> Result<WitnessCollection> {
        let n = ctx.system.n_vars();
        let system = Arc::new(ctx.system.prefix(k));
        let mut c = WitnessCollection::new(n, Arc::clone(&ctx.flag));
        for codim in 1..=k.min(n) {
            c.insert(WitnessSet::new(codim, Arc::clone(&system), self.sliced(ctx, k, codim)?));
        }
        Ok(c)
    }

    /// `W^1`: the witness points of `V(f_1) \ Q` as the codim-1 set.
    fn first_collection(&self, ctx: &RunContext<'_>, out: &mut SolveOutput) -> Result<WitnessCollection> {
        let tol = &self.cfg.tolerances;
        let f1 = &ctx.system.polys()[0];
        let hw = hypersurface_witness(f1, &ctx.flag, ctx.q, tol)?;
        out.hypersurface_counts.push(hw.count_with_multiplicity() + hw.dropped);
        if let Some(w) = hw.warning {
            out.warnings.push(format!("equation 1: {w}"));
        }
        let mut collection = self.empty_collection(ctx, 1)?;
        let set = collection.get_mut(1).expect("codim 1 always exists");
        let sliced = set.sliced_arc();
        for p in hw.points {
            let (x, residual) = refine_point(&sliced, &p.point, tol.dup);
            let singular = p.multiplicity_count > 1 || is_singular_point(&sliced, &x, tol.rank);
            if singular && !self.policy.test_singular() {
                continue;
            }
            set.push(WitnessPoint { point: x, residual, multiplicity_count: p.multiplicity_count, singular });
        }
        Ok(collection)
    }

    /// Introduces equation `k + 1` (index `k`) into the collection for the first `k`.
    fn stage(
        &self,
        ctx: &RunContext<'_>,
        current: &WitnessCollection,
        k: usize,
        rng: &mut Rng,
        out: &mut SolveOutput,
    ) -> Result<(WitnessCollection, StageStats)> {
        let started = Instant::now();
        let tol = &self.cfg.tolerances;
        let n = ctx.system.n_vars();
        let g = &ctx.system.polys()[k];
        let mut stats = StageStats { stage: k, ..Default::default() };
        let mut next = self.empty_collection(ctx, k + 1)?;

        // Test (a) on every codimension before any diagonal homotopy runs.
        let mut pools: BTreeMap<usize, Vec<WitnessPoint>> = BTreeMap::new();
        for set in current.sets() {
            let j = set.codim();
            for w in set.points() {
                stats.input_points += 1;
                if vanishes_at(g, &w.point, tol.zero) {
                    stats.shortcut_a += 1;
                    if self.policy.keep_shortcut() {
                        let target = next.get_mut(j).expect("codims only grow");
                        let (x, residual) = refine_point(target.sliced(), &w.point, tol.dup);
                        target.push(WitnessPoint { point: x, residual, ..w.clone() });
                    }
                } else if j == n {
                    stats.discarded_isolated += 1;
                } else {
                    stats.pooled += 1;
                    pools.entry(j).or_default().push(w.clone());
                }
            }
        }

        // Test (b): drop hypersurface points lying on any earlier equation.
        let hw = hypersurface_witness(g, &ctx.flag, ctx.q, tol)?;
        stats.hypersurface_points = hw.count_with_multiplicity() + hw.dropped;
        stats.hypersurface_ignored = hw.dropped;
        out.hypersurface_counts.push(stats.hypersurface_points);
        if let Some(w) = &hw.warning {
            out.warnings.push(format!("equation {}: {w}", k + 1));
        }
        let earlier = &ctx.system.polys()[..k];
        let mut survivors = Vec::new();
        for x in hw.points {
            if vanishes_any(earlier, &x.point, tol.zero) {
                stats.discarded_b += x.multiplicity_count as usize;
            } else {
                stats.hypersurface_kept += x.multiplicity_count as usize;
                survivors.push(x);
            }
        }

        // Diagonal homotopies by increasing codimension, then tests (d)-(g).
        for (&j, pool) in &pools {
            if survivors.is_empty() {
                break;
            }
            let source = current.get(j).expect("pooled codim exists");
            let target = next.get(j + 1).expect("codim j + 1 <= N").sliced_arc();
            let outcome = intersect_with_hypersurface(
                pool,
                &source.sliced().polys,
                g,
                &survivors,
                &ctx.flag,
                &target,
                rng,
                &self.cfg.track,
                tol,
                &self.workers,
            )?;
            stats.tracked += outcome.stats.tracked;
            stats.converged += outcome.stats.converged;
            stats.diverged += outcome.stats.diverged;
            stats.failed += outcome.stats.failed;

            for cand in outcome.candidates {
                let y = cand.point;
                let dest = next.get_mut(j + 1).expect("codim j + 1 exists");
                if let Some(i) = is_duplicate(dest.points(), &y, tol.dup) {
                    dest.points_mut()[i].multiplicity_count += 1;
                    stats.dropped_d += 1;
                    continue;
                }
                if ctx.q.is_some_and(|q| vanishes_all(q, &y, tol.zero)) {
                    stats.dropped_e += 1;
                    continue;
                }
                let singular = is_singular_point(&target, &y, tol.rank);
                if singular {
                    if !self.policy.test_singular() {
                        stats.discarded_singular += 1;
                        continue;
                    }
                    if self.is_junk(&next, j, &y, rng, out)? {
                        stats.junk_g += 1;
                        continue;
                    }
                }
                stats.accepted += 1;
                let dest = next.get_mut(j + 1).expect("codim j + 1 exists");
                dest.push(WitnessPoint { point: y, residual: cand.residual, multiplicity_count: 1, singular });
            }
        }
        stats.wall_time = started.elapsed();
        debug_assert_eq!(stats.check_conservation(), Ok(()));
        Ok((next, stats))
    }

    /// Test (g): does `y` lie on a component of codimension at most `j`?
    fn is_junk(
        &self,
        next: &WitnessCollection,
        j: usize,
        y: &[num_complex::Complex64],
        rng: &mut Rng,
        out: &mut SolveOutput,
    ) -> Result<bool> {
        for i in 1..=j {
            let Some(set) = next.get(i) else { continue };
            let m = membership_test(set, y, rng, &self.cfg.track, &self.cfg.tolerances, &self.workers)?;
            if m.failed_paths > 0 {
                out.warnings.push(format!(
                    "membership test against codim {i}: {} paths did not converge; candidate treated as junk",
                    m.failed_paths
                ));
            }
            if m.member {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

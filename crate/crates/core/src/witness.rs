//! Witness sets, the generic slicing flag, and the point filters used while
//! assembling them: vanishing, duplicate, singularity and membership tests.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{distance, lu_solve, norm, numerical_rank, random_matrix, random_unit_complex, ComplexMatrix, Rng};
use crate::poly::{PolySystem, Polynomial};
use crate::tracker::{newton_refine, track_path, AffineRow, Homotopy, PathStatus, SlicedSystem, SquareSystem, TrackOptions};
use crate::univariate::{solve_univariate, UnivariateRoots, LEADING_TOL};
use crate::workers::Workers;

/// Numerical thresholds shared by every filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Scaled threshold for "polynomial vanishes at a point".
    pub zero: f64,
    /// Relative distance below which two points are the same point.
    pub dup: f64,
    pub slice: f64,
    /// Relative singular value cutoff for rank decisions.
    pub rank: f64,
    pub res: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { zero: 1e-8, dup: 1e-6, slice: 1e-8, rank: 1e-8, res: 1e-8 }
    }
}

/// Tolerance for refinement of stored points.
pub const REFINE_TOL: f64 = 1e-12;
pub const REFINE_ITERS: usize = 8;

/// `N` random affine hyperplanes; the slice of a dimension-`d` set is the first `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericFlag {
    hyperplanes: Vec<AffineRow>,
    line_base: Vec<Complex64>,
    line_dir: Vec<Complex64>,
}

/// Draws a flag of `n` hyperplanes in `C^n`.
pub fn make_flag(rng: &mut Rng, n: usize) -> GenericFlag {
    assert!(n >= 1, "ambient dimension must be positive");
    loop {
        let normals = random_matrix(rng, n, n);
        let constants = rng.complex_vector(n);
        let extra = rng.complex_vector(n);
        // Probability-zero failure: redraw.
        if numerical_rank(&normals, 1e-8).unwrap_or(0) < n {
            continue;
        }
        let hyperplanes: Vec<AffineRow> =
            (0..n).map(|i| AffineRow::new(normals.row(i).to_vec(), constants[i])).collect();
        // Line H_1 .. H_{n-1}: base + s dir, normalized by an extra generic row.
        let mut rows: Vec<Vec<Complex64>> = hyperplanes[..n - 1].iter().map(|h| h.coeffs.clone()).collect();
        rows.push(extra);
        let system = ComplexMatrix::from_rows(&rows).expect("rows have equal length");
        let mut rhs: Vec<Complex64> = hyperplanes[..n - 1].iter().map(|h| -h.constant).collect();
        rhs.push(Complex64::new(0.0, 0.0));
        let Ok(base) = lu_solve(&system, &rhs) else { continue };
        let mut unit = vec![Complex64::new(0.0, 0.0); n];
        unit[n - 1] = Complex64::new(1.0, 0.0);
        let Ok(mut dir) = lu_solve(&system, &unit) else { continue };
        let dn = norm(&dir);
        dir.iter_mut().for_each(|d| *d /= dn);
        // Shift the base to the point of the line nearest the origin, so the
        // line parameter of a root is comparable to the root's own size.
        let along: Complex64 = dir.iter().zip(&base).map(|(d, b)| d.conj() * b).sum();
        let base = base.iter().zip(&dir).map(|(b, d)| b - along * d).collect();
        return GenericFlag { hyperplanes, line_base: base, line_dir: dir };
    }
}

impl GenericFlag {
    pub fn dim(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn hyperplanes(&self) -> &[AffineRow] {
        &self.hyperplanes
    }

    /// Slice for a set of dimension `d`: `H_1 .. H_d`.
    pub fn prefix(&self, d: usize) -> &[AffineRow] {
        &self.hyperplanes[..d]
    }

    /// Slice for a set of codimension `c`.
    pub fn slice_for_codim(&self, c: usize) -> &[AffineRow] {
        self.prefix(self.dim() - c)
    }

    /// Parameterization `base + s dir` of `H_1 ∩ .. ∩ H_{N-1}`.
    pub fn witness_line(&self) -> (&[Complex64], &[Complex64]) {
        (&self.line_base, &self.line_dir)
    }

    pub fn point_on_line(&self, s: Complex64) -> Vec<Complex64> {
        self.line_base.iter().zip(&self.line_dir).map(|(b, d)| b + s * d).collect()
    }
}

/// Seeded source of the randomization matrix `R_c` for the first `m` equations.
///
/// Every `(m, c)` pair maps to its own stream, so every consumer sees the
/// same randomized system regardless of the order of requests.
#[derive(Clone, Debug)]
pub struct Randomizers {
    seed: u64,
}

const RANDOMIZER_STREAM: u64 = 0x5241_4e44_0000_0000;

impl Randomizers {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn matrix(&self, m: usize, c: usize) -> ComplexMatrix {
        let stream = RANDOMIZER_STREAM | ((m as u64) << 16) | c as u64;
        random_matrix(&mut Rng::new(self.seed).substream(stream), c, m)
    }
}

/// `[R_c f; H_1 .. H_{N-c}]`, the square system cutting out codim-`c` witness points.
pub fn sliced_square_system(system: &PolySystem, codim: usize, flag: &GenericFlag, randomizers: &Randomizers) -> Result<SlicedSystem> {
    let n = system.n_vars();
    if codim == 0 || codim > n {
        return Err(Error::InvalidArgument(format!("codimension {codim} outside 1..={n}")));
    }
    if flag.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: flag.dim() });
    }
    let r = randomizers.matrix(system.len(), codim);
    let randomized = system.randomize(&r)?;
    SlicedSystem::new(randomized, flag.slice_for_codim(codim).to_vec())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessPoint {
    pub point: Vec<Complex64>,
    pub residual: f64,
    pub multiplicity_count: u32,
    pub singular: bool,
}

impl WitnessPoint {
    pub fn new(point: Vec<Complex64>, residual: f64) -> Self {
        Self { point, residual, multiplicity_count: 1, singular: false }
    }
}

/// Witness points of a pure codim-`c` set of `V(system)`.
#[derive(Clone, Debug)]
pub struct WitnessSet {
    codim: usize,
    system: Arc<PolySystem>,
    sliced: Arc<SlicedSystem>,
    points: Vec<WitnessPoint>,
}

impl WitnessSet {
    pub fn new(codim: usize, system: Arc<PolySystem>, sliced: Arc<SlicedSystem>) -> Self {
        Self { codim, system, sliced, points: Vec::new() }
    }

    pub fn codim(&self) -> usize {
        self.codim
    }

    pub fn n_vars(&self) -> usize {
        self.system.n_vars()
    }

    pub fn dimension(&self) -> usize {
        self.n_vars() - self.codim
    }

    pub fn system(&self) -> &PolySystem {
        &self.system
    }

    pub fn sliced(&self) -> &SlicedSystem {
        &self.sliced
    }

    pub fn sliced_arc(&self) -> Arc<SlicedSystem> {
        Arc::clone(&self.sliced)
    }

    pub fn slice(&self) -> &[AffineRow] {
        &self.sliced.rows
    }

    pub fn points(&self) -> &[WitnessPoint] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut Vec<WitnessPoint> {
        &mut self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: WitnessPoint) {
        self.points.push(p);
    }

    /// Scaled residual of `x` against the defining sliced system.
    pub fn residual(&self, x: &[Complex64]) -> f64 {
        scaled_residual(&self.sliced, x)
    }

    /// Checks the stored-point invariants; returns a description of the first violation.
    pub fn check_invariants(&self, tol: &Tolerances) -> std::result::Result<(), String> {
        for (i, p) in self.points.iter().enumerate() {
            let scale = 1.0 + norm(&p.point);
            if p.multiplicity_count < 1 {
                return Err(format!("codim {} point {i}: zero multiplicity", self.codim));
            }
            if p.residual.is_nan() || p.residual > tol.res * scale {
                return Err(format!("codim {} point {i}: residual {:e}", self.codim, p.residual));
            }
            for h in self.slice() {
                if h.eval(&p.point).norm() > tol.slice * scale {
                    return Err(format!("codim {} point {i}: off slice", self.codim));
                }
            }
            for (j, q) in self.points[..i].iter().enumerate() {
                if distance(&p.point, &q.point) <= tol.dup * scale {
                    return Err(format!("codim {} points {j} and {i} coincide", self.codim));
                }
            }
        }
        Ok(())
    }
}

/// Witness sets by codimension, all cut by one flag.
#[derive(Clone, Debug)]
pub struct WitnessCollection {
    n_vars: usize,
    flag: Arc<GenericFlag>,
    sets: BTreeMap<usize, WitnessSet>,
}

impl WitnessCollection {
    pub fn new(n_vars: usize, flag: Arc<GenericFlag>) -> Self {
        Self { n_vars, flag, sets: BTreeMap::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn flag(&self) -> &GenericFlag {
        &self.flag
    }

    pub fn insert(&mut self, set: WitnessSet) {
        self.sets.insert(set.codim(), set);
    }

    pub fn get(&self, codim: usize) -> Option<&WitnessSet> {
        self.sets.get(&codim)
    }

    pub fn get_mut(&mut self, codim: usize) -> Option<&mut WitnessSet> {
        self.sets.get_mut(&codim)
    }

    pub fn sets(&self) -> impl Iterator<Item = &WitnessSet> {
        self.sets.values()
    }

    pub fn count(&self, codim: usize) -> usize {
        self.sets.get(&codim).map_or(0, WitnessSet::len)
    }

    /// `codim -> number of points`, including empty sets.
    pub fn counts(&self) -> BTreeMap<usize, usize> {
        self.sets.iter().map(|(c, s)| (*c, s.len())).collect()
    }

    pub fn total_points(&self) -> usize {
        self.sets.values().map(WitnessSet::len).sum()
    }
}

/// Roots of `f` on the flag's witness line, with repeated roots merged.
#[derive(Clone, Debug, Default)]
pub struct HypersurfaceWitness {
    pub points: Vec<WitnessPoint>,
    /// Roots discarded because they lie on the ignore set.
    pub dropped: usize,
    pub effective_degree: usize,
    pub warning: Option<String>,
}

impl HypersurfaceWitness {
    /// Number of roots kept, counted with multiplicity.
    pub fn count_with_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity_count as usize).sum()
    }
}

/// Witness points of `V(f) \ Q` on the line `H_1 ∩ .. ∩ H_{N-1}`.
pub fn hypersurface_witness(f: &Polynomial, flag: &GenericFlag, q: Option<&PolySystem>, tol: &Tolerances) -> Result<HypersurfaceWitness> {
    if f.n_vars() != flag.dim() {
        return Err(Error::DimensionMismatch { expected: flag.dim(), got: f.n_vars() });
    }
    let (base, dir) = flag.witness_line();
    let coeffs = f.restrict_to_line(base, dir)?;
    let roots = line_roots(f, &coeffs, dir)?;
    let mut out = HypersurfaceWitness { effective_degree: roots.effective_degree, ..Default::default() };
    if roots.no_roots() {
        out.warning = Some("polynomial is constant on the witness line".into());
        return Ok(out);
    }
    if !roots.converged {
        log::debug!("univariate iteration hit its limit; roots may be clustered");
    }
    let line = flag.prefix(flag.dim() - 1);
    // Roots of the restricted polynomial carry the cancellation error of its
    // monomial basis; Newton in the original coordinates removes it. Each
    // root may move by a fraction of its distance to the nearest other root.
    let on_line = SlicedSystem::new(PolySystem::new(f.n_vars(), vec![f.clone()])?, line.to_vec())?;
    for (i, s) in roots.roots.iter().enumerate() {
        let separation = roots
            .roots
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| (r - s).norm())
            .fold(f64::INFINITY, f64::min);
        let x0 = flag.point_on_line(*s);
        let max_move = (0.25 * separation).max(tol.dup * (1.0 + norm(&x0)));
        let (x, residual) = polish(&on_line, &x0, max_move);
        if let Some(q) = q {
            if vanishes_all(q, &x, tol.zero) {
                out.dropped += 1;
                continue;
            }
        }
        if let Some(i) = is_duplicate(&out.points, &x, tol.dup) {
            out.points[i].multiplicity_count += 1;
            continue;
        }
        out.points.push(WitnessPoint::new(x, residual));
    }
    Ok(out)
}

/// Roots of `f` restricted to the witness line (`coeffs`, direction `dir`).
///
/// Whether the degree drops on the line is decided on the top-degree form of
/// `f` at `dir`, which does not depend on where the line's base point sits.
/// A genuine leading coefficient is then made dominant by rescaling `s`, so
/// that far-away roots are not mistaken for a degree drop.
fn line_roots(f: &Polynomial, coeffs: &[Complex64], dir: &[Complex64]) -> Result<UnivariateRoots> {
    let d = coeffs.len() - 1;
    let (lead, size) = f.leading_form(dir);
    if d == 0 || lead.norm() <= LEADING_TOL * size {
        return solve_univariate(coeffs);
    }
    let cd = coeffs[d].norm();
    // Root radius bound: after s = rho s' no coefficient exceeds the leading one.
    let rho = (0..d)
        .map(|k| (coeffs[k].norm() / cd).powf(1.0 / (d - k) as f64))
        .fold(0.0, f64::max);
    if !(rho > 0.0 && rho.is_finite()) {
        return solve_univariate(coeffs);
    }
    let scaled: Vec<Complex64> = coeffs.iter().enumerate().map(|(k, c)| c * rho.powi(k as i32)).collect();
    let mut roots = solve_univariate(&scaled)?;
    roots.roots.iter_mut().for_each(|z| *z *= rho);
    Ok(roots)
}

/// Scaled zero test: `|p(x)| <= tol_zero * p.magnitude(x)`.
pub fn vanishes_at(p: &Polynomial, x: &[Complex64], tol_zero: f64) -> bool {
    if p.is_zero() {
        return true;
    }
    p.eval(x).norm() <= tol_zero * p.magnitude(x)
}

/// True when every polynomial of `sys` vanishes at `x`.
pub fn vanishes_all(sys: &PolySystem, x: &[Complex64], tol_zero: f64) -> bool {
    sys.polys().iter().all(|p| vanishes_at(p, x, tol_zero))
}

/// True when at least one polynomial of `polys` vanishes at `x`.
pub fn vanishes_any(polys: &[Polynomial], x: &[Complex64], tol_zero: f64) -> bool {
    polys.iter().any(|p| vanishes_at(p, x, tol_zero))
}

/// Index of the first stored point within `tol_dup (1 + |x|)` of `x`.
pub fn is_duplicate(points: &[WitnessPoint], x: &[Complex64], tol_dup: f64) -> Option<usize> {
    let radius = tol_dup * (1.0 + norm(x));
    points.iter().position(|p| distance(&p.point, x) <= radius)
}

/// Rank-deficiency of the sliced square system's Jacobian at `x`.
///
/// Rows are equilibrated first: rank is invariant under row scaling, while
/// the raw gradients of high-degree equations at large points can exceed the
/// affine rows by many orders of magnitude and swamp the relative cutoff.
pub fn is_singular_point(sliced: &SlicedSystem, x: &[Complex64], tol_rank: f64) -> bool {
    let (_, mut jac) = sliced.eval_jacobian(x);
    for i in 0..jac.rows() {
        let row = jac.row_mut(i);
        let m = norm(row);
        if m > 0.0 {
            row.iter_mut().for_each(|v| *v /= m);
        }
    }
    match numerical_rank(&jac, tol_rank) {
        Ok(rank) => rank < sliced.dim(),
        Err(_) => true,
    }
}

/// Residual with each equation divided by its natural magnitude at `x`
/// ([`Polynomial::magnitude`]; `sum |a_i| (1 + |x_i|) + |b|` for affine rows
/// `a.x + b`). Raw residuals of high-degree equations at large points are
/// dominated by roundoff, so this is the quantity tolerances bound.
pub fn scaled_residual(sliced: &SlicedSystem, x: &[Complex64]) -> f64 {
    let ratio = |value: f64, size: f64| if value == 0.0 { 0.0 } else { value / size };
    let mut sum = 0.0;
    for p in sliced.polys.polys() {
        sum += ratio(p.eval(x).norm(), p.magnitude(x)).powi(2);
    }
    for h in &sliced.rows {
        let size = h.coeffs.iter().zip(x).map(|(a, xi)| a.norm() * (1.0 + xi.norm())).sum::<f64>() + h.constant.norm();
        sum += ratio(h.eval(x).norm(), size).powi(2);
    }
    sum.sqrt()
}

/// Refines `x` against `sliced`; keeps the input when Newton wanders off.
/// The returned residual is [`scaled_residual`].
pub fn refine_point(sliced: &SlicedSystem, x: &[Complex64], tol_dup: f64) -> (Vec<Complex64>, f64) {
    polish(sliced, x, tol_dup * (1.0 + norm(x)))
}

/// Newton refinement accepted only if it lowers the scaled residual without
/// moving more than `max_move`.
fn polish(sliced: &SlicedSystem, x: &[Complex64], max_move: f64) -> (Vec<Complex64>, f64) {
    let before = scaled_residual(sliced, x);
    let out = newton_refine(sliced, x, REFINE_TOL, REFINE_ITERS);
    let after = scaled_residual(sliced, &out.x);
    if after.is_finite() && after <= before && distance(&out.x, x) <= max_move {
        (out.x, after)
    } else {
        (x.to_vec(), before)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Paths that did not converge; a nonzero count makes the answer conservative.
    pub failed_paths: usize,
}

/// Homotopy membership test: moves the slice of `w` to a generic slice through `x`.
pub fn membership_test(w: &WitnessSet, x: &[Complex64], rng: &mut Rng, opts: &TrackOptions, tol: &Tolerances, workers: &Workers) -> Result<Membership> {
    let n = w.n_vars();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if w.is_empty() {
        return Ok(Membership { member: false, failed_paths: 0 });
    }
    let d = w.dimension();
    if d == 0 {
        return Ok(Membership { member: is_duplicate(w.points(), x, tol.dup).is_some(), failed_paths: 0 });
    }
    let target: Vec<AffineRow> = (0..d).map(|_| AffineRow::through(rng.complex_vector(n), x)).collect();
    let gamma = random_unit_complex(rng);
    let h = Homotopy::new(w.sliced().polys.clone(), w.slice().to_vec(), target, gamma)?;
    let starts: Vec<Vec<Complex64>> = w.points().iter().map(|p| p.point.clone()).collect();
    let results = workers.map(&starts, |s| track_path(&h, s, opts));
    let radius = tol.dup * (1.0 + norm(x));
    let hit = results
        .iter()
        .any(|r| r.status == PathStatus::Converged && distance(&r.endpoint, x) <= radius);
    let failed_paths = results.iter().filter(|r| r.status != PathStatus::Converged).count();
    if !hit && failed_paths > 0 {
        log::warn!("membership test: {failed_paths} paths did not converge; treating point as a member");
        return Ok(Membership { member: true, failed_paths });
    }
    Ok(Membership { member: hit, failed_paths })
}

/// Moves every witness point of `w` to the slice `new_rows`.
pub fn move_slice(w: &WitnessSet, new_rows: Vec<AffineRow>, rng: &mut Rng, opts: &TrackOptions, tol: &Tolerances, workers: &Workers) -> Result<WitnessSet> {
    if new_rows.len() != w.dimension() {
        return Err(Error::DimensionMismatch { expected: w.dimension(), got: new_rows.len() });
    }
    let polys = w.sliced().polys.clone();
    let sliced = Arc::new(SlicedSystem::new(polys.clone(), new_rows.clone())?);
    let mut out = WitnessSet::new(w.codim(), Arc::clone(&w.system), Arc::clone(&sliced));
    if new_rows == w.slice() {
        out.points = w.points.clone();
        return Ok(out);
    }
    let gamma = random_unit_complex(rng);
    let h = Homotopy::new(polys, w.slice().to_vec(), new_rows, gamma)?;
    let starts: Vec<Vec<Complex64>> = w.points().iter().map(|p| p.point.clone()).collect();
    let results = workers.map(&starts, |s| track_path(&h, s, opts));
    for (p, r) in w.points().iter().zip(results) {
        if r.status != PathStatus::Converged {
            return Err(Error::SliceMotion(format!("path ended {:?} (target slice not generic?)", r.status)));
        }
        let (x, residual) = refine_point(&sliced, &r.endpoint, tol.dup);
        out.push(WitnessPoint { point: x, residual, multiplicity_count: p.multiplicity_count, singular: p.singular });
    }
    Ok(out)
}

/// Random slice rows for a set of the given dimension.
pub fn random_slice(rng: &mut Rng, n: usize, dimension: usize) -> Vec<AffineRow> {
    (0..dimension).map(|_| AffineRow::new(rng.complex_vector(n), rng.complex_normal())).collect()
}

//! Diagonal homotopy intersecting a pure-dimensional witness set with a
//! hypersurface.
//!
//! Work happens in `C^{2N}` with coordinates `(u, v)`. The fixed block keeps
//! `u` on the component `A` (randomized equations plus the slice rows shared
//! with the output) and `v` on `V(g)`. The moving block starts as the product
//! slice `{H_a(u); H_1(v)..H_{N-1}(v)}` and ends on the diagonal `u = v`, so
//! start points are pairs of stored witness points and converged endpoints
//! project to witness points of `A ∩ V(g)` on the codim-`(j+1)` slice.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{distance, norm, random_unit_complex, Rng};
use crate::poly::{PolySystem, Polynomial};
use crate::tracker::{track_path, AffineRow, Homotopy, PathResult, PathStatus, SlicedSystem, TrackOptions};
use crate::witness::{refine_point, GenericFlag, Tolerances, WitnessPoint};
use crate::workers::Workers;

/// Inputs of one diagonal homotopy.
#[derive(Clone, Debug)]
pub struct DiagonalProblem<'a> {
    /// Dimension of the input component `A`.
    pub a: usize,
    /// `R_A f^A`, exactly `N - a` equations in `N` variables.
    pub randomized_a: &'a PolySystem,
    pub g: &'a Polynomial,
    pub flag: &'a GenericFlag,
    pub gamma: Complex64,
}

/// Builds the `2N`-variable homotopy for `A ∩ V(g)`.
pub fn build_diagonal_homotopy(p: &DiagonalProblem<'_>) -> Result<Homotopy> {
    let n = p.flag.dim();
    if p.a == 0 || p.a >= n {
        return Err(Error::InvalidArgument(format!(
            "component dimension {} must lie in 1..{n}; isolated points never enter the diagonal",
            p.a
        )));
    }
    if p.randomized_a.n_vars() != n || p.g.n_vars() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.randomized_a.n_vars() });
    }
    if p.randomized_a.len() != n - p.a {
        return Err(Error::DimensionMismatch { expected: n - p.a, got: p.randomized_a.len() });
    }
    if p.g.degree() == 0 {
        return Err(Error::InvalidArgument("hypersurface polynomial must be nonconstant".into()));
    }
    let two_n = 2 * n;
    let mut fixed = Vec::with_capacity(two_n - n);
    for f in p.randomized_a.polys() {
        fixed.push(f.embed(two_n, 0)?);
    }
    fixed.push(p.g.embed(two_n, n)?);
    for h in p.flag.prefix(p.a - 1) {
        fixed.push(Polynomial::linear(&h.embed(two_n, 0).coeffs, h.constant));
    }
    let mut start = Vec::with_capacity(n);
    start.push(p.flag.hyperplanes()[p.a - 1].embed(two_n, 0));
    start.extend(p.flag.prefix(n - 1).iter().map(|h| h.embed(two_n, n)));
    let target = (0..n)
        .map(|i| {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); two_n];
            coeffs[i] = Complex64::new(1.0, 0.0);
            coeffs[n + i] = Complex64::new(-1.0, 0.0);
            AffineRow::new(coeffs, Complex64::new(0.0, 0.0))
        })
        .collect();
    let names = (0..two_n).map(|i| if i < n { format!("u{}", i + 1) } else { format!("v{}", i - n + 1) }).collect();
    Homotopy::new(PolySystem::with_names(names, fixed)?, start, target, p.gamma)
}

/// One converged diagonal endpoint projected to `C^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub point: Vec<Complex64>,
    pub residual: f64,
    /// Indices of the `(A, V(g))` start pair.
    pub pair: (usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiagonalStats {
    pub tracked: usize,
    pub converged: usize,
    pub diverged: usize,
    pub failed: usize,
}

#[derive(Clone, Debug)]
pub struct DiagonalOutcome {
    pub candidates: Vec<Candidate>,
    pub stats: DiagonalStats,
    pub paths: Vec<PathResult>,
}

/// Tracks all `#points_a * #points_g` pairs and refines the projected endpoints.
///
/// `randomized_a` cuts out the input component with `N - a` equations;
/// `target` is the sliced square system of the output codimension.
#[allow(clippy::too_many_arguments)]
pub fn intersect_with_hypersurface(
    points_a: &[WitnessPoint],
    randomized_a: &PolySystem,
    g: &Polynomial,
    points_g: &[WitnessPoint],
    flag: &GenericFlag,
    target: &SlicedSystem,
    rng: &mut Rng,
    opts: &TrackOptions,
    tol: &Tolerances,
    workers: &Workers,
) -> Result<DiagonalOutcome> {
    let n = flag.dim();
    let a = n - randomized_a.len();
    let gamma = random_unit_complex(rng);
    let homotopy = build_diagonal_homotopy(&DiagonalProblem { a, randomized_a, g, flag, gamma })?;
    let mut starts = Vec::with_capacity(points_a.len() * points_g.len());
    let mut pairs = Vec::with_capacity(starts.capacity());
    for (i, pa) in points_a.iter().enumerate() {
        for (k, pg) in points_g.iter().enumerate() {
            let mut s = pa.point.clone();
            s.extend_from_slice(&pg.point);
            starts.push(s);
            pairs.push((i, k));
        }
    }
    let retry = opts.tightened();
    let paths = workers.map(&starts, |s| {
        let first = track_path(&homotopy, s, opts);
        if first.status == PathStatus::Failed {
            track_path(&homotopy, s, &retry)
        } else {
            first
        }
    });

    let mut stats = DiagonalStats { tracked: paths.len(), ..Default::default() };
    let refined: Vec<Option<Candidate>> = workers.map(&(0..paths.len()).collect::<Vec<_>>(), |&idx| {
        let r = &paths[idx];
        if r.status != PathStatus::Converged {
            return None;
        }
        let (u, v) = r.endpoint.split_at(n);
        let (x, residual) = refine_point(target, u, tol.dup);
        let gap = distance(u, v);
        let scale = 1.0 + norm(&x);
        if gap > tol.dup * scale || residual > tol.res * scale {
            return None;
        }
        Some(Candidate { point: x, residual, pair: pairs[idx] })
    });
    let mut candidates = Vec::new();
    for (r, c) in paths.iter().zip(refined) {
        match (r.status, c) {
            (PathStatus::Converged, Some(c)) => {
                stats.converged += 1;
                candidates.push(c);
            }
            (PathStatus::Converged, None) => {
                log::warn!("diagonal endpoint off the diagonal or not refinable; counted as failed");
                stats.failed += 1;
            }
            (PathStatus::Diverged, _) => stats.diverged += 1,
            (PathStatus::Failed, _) => stats.failed += 1,
        }
    }
    candidates.sort_by(|p, q| lex_cmp(&p.point, &q.point));
    Ok(DiagonalOutcome { candidates, stats, paths })
}

/// Lexicographic order on `(re, im)` coordinate pairs.
pub fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

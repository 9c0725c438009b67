//! Predictor–corrector continuation of solution paths of `H(x, t) = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{distance, lu_solve, norm, ComplexMatrix};
use crate::poly::PolySystem;

/// Affine-linear equation `coeffs . x + constant = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineRow {
    pub coeffs: Vec<Complex64>,
    pub constant: Complex64,
}

impl AffineRow {
    pub fn new(coeffs: Vec<Complex64>, constant: Complex64) -> Self {
        Self { coeffs, constant }
    }

    /// Row with the given normal passing through `point`.
    pub fn through(coeffs: Vec<Complex64>, point: &[Complex64]) -> Self {
        let dot: Complex64 = coeffs.iter().zip(point).map(|(a, x)| a * x).sum();
        Self { coeffs, constant: -dot }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<Complex64>() + self.constant
    }

    /// The row acting on coordinates `offset..offset+dim` of an `n_total` space.
    pub fn embed(&self, n_total: usize, offset: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n_total];
        coeffs[offset..offset + self.dim()].copy_from_slice(&self.coeffs);
        Self { coeffs, constant: self.constant }
    }
}

/// A square map `F: C^n -> C^n` with its Jacobian.
pub trait SquareSystem {
    fn dim(&self) -> usize;
    fn eval_jacobian(&self, x: &[Complex64]) -> (Vec<Complex64>, ComplexMatrix);

    fn evaluate(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.eval_jacobian(x).0
    }
}

/// Polynomial equations followed by affine rows.
#[derive(Clone, Debug)]
pub struct SlicedSystem {
    pub polys: PolySystem,
    pub rows: Vec<AffineRow>,
}

impl SlicedSystem {
    pub fn new(polys: PolySystem, rows: Vec<AffineRow>) -> Result<Self> {
        let n = polys.n_vars();
        if polys.len() + rows.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: polys.len() + rows.len() });
        }
        if let Some(r) = rows.iter().find(|r| r.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.dim() });
        }
        Ok(Self { polys, rows })
    }
}

impl SquareSystem for SlicedSystem {
    fn dim(&self) -> usize {
        self.polys.n_vars()
    }

    fn eval_jacobian(&self, x: &[Complex64]) -> (Vec<Complex64>, ComplexMatrix) {
        let n = self.dim();
        let mut jac = ComplexMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (i, p) in self.polys.polys().iter().enumerate() {
            values.push(p.eval_with_gradient(x, jac.row_mut(i)));
        }
        let m = self.polys.len();
        for (k, r) in self.rows.iter().enumerate() {
            values.push(r.eval(x));
            jac.row_mut(m + k).copy_from_slice(&r.coeffs);
        }
        (values, jac)
    }
}

/// A homotopy `H(x, t)` together with `dH/dx` and `dH/dt`.
pub trait HomotopyMap {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[Complex64], t: f64) -> (Vec<Complex64>, ComplexMatrix, Vec<Complex64>);
}

/// `H(x,t) = [fixed(x); gamma (1-t) start(x) + t target(x)]`.
#[derive(Clone, Debug)]
pub struct Homotopy {
    fixed: PolySystem,
    start: Vec<AffineRow>,
    target: Vec<AffineRow>,
    gamma: Complex64,
}

impl Homotopy {
    pub fn new(fixed: PolySystem, start: Vec<AffineRow>, target: Vec<AffineRow>, gamma: Complex64) -> Result<Self> {
        let n = fixed.n_vars();
        if start.len() != target.len() {
            return Err(Error::DimensionMismatch { expected: start.len(), got: target.len() });
        }
        if fixed.len() + start.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: fixed.len() + start.len() });
        }
        if let Some(r) = start.iter().chain(&target).find(|r| r.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.dim() });
        }
        if gamma == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument("gamma must be nonzero".into()));
        }
        Ok(Self { fixed, start, target, gamma })
    }

    pub fn fixed(&self) -> &PolySystem {
        &self.fixed
    }

    pub fn start(&self) -> &[AffineRow] {
        &self.start
    }

    pub fn target(&self) -> &[AffineRow] {
        &self.target
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    /// Same fixed block, start and target exchanged, new gamma.
    pub fn reversed(&self, gamma: Complex64) -> Result<Self> {
        Self::new(self.fixed.clone(), self.target.clone(), self.start.clone(), gamma)
    }
}

impl HomotopyMap for Homotopy {
    fn dim(&self) -> usize {
        self.fixed.n_vars()
    }

    fn eval(&self, x: &[Complex64], t: f64) -> (Vec<Complex64>, ComplexMatrix, Vec<Complex64>) {
        let n = self.dim();
        let m = self.fixed.len();
        let mut jac = ComplexMatrix::zeros(n, n);
        let mut h = Vec::with_capacity(n);
        let mut ht = vec![Complex64::new(0.0, 0.0); n];
        for (i, p) in self.fixed.polys().iter().enumerate() {
            h.push(p.eval_with_gradient(x, jac.row_mut(i)));
        }
        let a = self.gamma * (1.0 - t);
        for (k, (s, g)) in self.start.iter().zip(&self.target).enumerate() {
            let sv = s.eval(x);
            let gv = g.eval(x);
            h.push(a * sv + t * gv);
            ht[m + k] = gv - self.gamma * sv;
            for (dst, (sc, gc)) in jac.row_mut(m + k).iter_mut().zip(s.coeffs.iter().zip(&g.coeffs)) {
                *dst = a * sc + t * gc;
            }
        }
        (h, jac, ht)
    }
}

/// A homotopy frozen at one value of `t`.
pub struct AtTime<'a, H: HomotopyMap + ?Sized> {
    pub homotopy: &'a H,
    pub t: f64,
}

impl<H: HomotopyMap + ?Sized> SquareSystem for AtTime<'_, H> {
    fn dim(&self) -> usize {
        self.homotopy.dim()
    }

    fn eval_jacobian(&self, x: &[Complex64]) -> (Vec<Complex64>, ComplexMatrix) {
        let (h, jac, _) = self.homotopy.eval(x, self.t);
        (h, jac)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub max_steps: usize,
    pub diverge_norm: f64,
    pub t_end_offset: f64,
    /// Norm at `1 - t_end_offset` (or at step collapse) above which a path
    /// counts as diverged.
    pub endgame_norm: f64,
    pub endgame_iters: usize,
    /// Largest relative move the final refinement at `t = 1` may make; a
    /// larger move means Newton left the path's basin.
    pub endgame_move: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            step_init: 0.05,
            step_min: 1e-10,
            step_max: 0.2,
            newton_tol: 1e-9,
            max_newton_iters: 4,
            max_steps: 5000,
            diverge_norm: 1e8,
            t_end_offset: 1e-6,
            endgame_norm: 1e4,
            endgame_iters: 50,
            endgame_move: 0.1,
        }
    }
}

impl TrackOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.step_min
            && self.step_min <= self.step_init
            && self.step_init <= self.step_max
            && self.step_max < 1.0
            && self.newton_tol > 0.0
            && self.t_end_offset > 0.0
            && self.t_end_offset < 1.0
            && self.endgame_move > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("inconsistent tracking options {self:?}")))
        }
    }

    /// Smaller steps and a longer step budget, for a second attempt at a
    /// path that failed.
    pub fn tightened(&self) -> Self {
        Self {
            step_init: (self.step_init / 8.0).max(self.step_min),
            step_max: (self.step_max / 8.0).max(self.step_min),
            max_steps: self.max_steps * 4,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathStatus {
    Converged,
    Diverged,
    Failed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub status: PathStatus,
    pub endpoint: Vec<Complex64>,
    pub endpoint_residual: f64,
    pub steps_taken: usize,
    pub max_norm_seen: f64,
    /// Last value of `t` the path was followed to.
    pub t_reached: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<Complex64>,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Newton's method until `|update| <= tol (1 + |x|)` or `max_iters` updates.
pub fn newton_refine<S: SquareSystem + ?Sized>(sys: &S, x: &[Complex64], tol: f64, max_iters: usize) -> NewtonOutcome {
    let mut x = x.to_vec();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let (f, jac) = sys.eval_jacobian(&x);
        if f.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            converged = true;
            break;
        }
        let rhs: Vec<Complex64> = f.iter().map(|v| -v).collect();
        let Ok(dx) = lu_solve(&jac, &rhs) else {
            break;
        };
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        iterations += 1;
        if norm(&dx) <= tol * (1.0 + norm(&x)) {
            converged = true;
            break;
        }
    }
    let residual = norm(&sys.evaluate(&x));
    NewtonOutcome { x, residual, converged, iterations }
}

fn tangent<H: HomotopyMap + ?Sized>(h: &H, x: &[Complex64], t: f64) -> Option<Vec<Complex64>> {
    let (_, jac, ht) = h.eval(x, t);
    let rhs: Vec<Complex64> = ht.iter().map(|v| -v).collect();
    lu_solve(&jac, &rhs).ok()
}

/// Newton corrections at fixed `t`; each update must contract the previous one.
fn correct<H: HomotopyMap + ?Sized>(h: &H, mut x: Vec<Complex64>, t: f64, opts: &TrackOptions) -> Option<Vec<Complex64>> {
    let mut prev = f64::INFINITY;
    for _ in 0..opts.max_newton_iters {
        let (f, jac, _) = h.eval(&x, t);
        let rhs: Vec<Complex64> = f.iter().map(|v| -v).collect();
        let dx = lu_solve(&jac, &rhs).ok()?;
        let step = norm(&dx);
        if step > 0.5 * prev {
            return None;
        }
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        if step <= opts.newton_tol * (1.0 + norm(&x)) {
            return Some(x);
        }
        prev = step;
    }
    None
}

/// Fraction of `t_end_offset` the growth check tracks down to.
const ENDGAME_DEPTH: f64 = 1e-2;
/// Norm growth over the extra decades that marks a path as diverging.
const ENDGAME_GROWTH: f64 = 2.0;

/// Mutable state of a path while it is advanced in `t`.
struct Leg<'a> {
    x: &'a mut Vec<Complex64>,
    t: &'a mut f64,
    dx: &'a mut Vec<Complex64>,
    steps: &'a mut usize,
    max_norm: &'a mut f64,
}

impl Leg<'_> {
    /// Predictor-corrector steps up to `t_stop`; the error is the status the
    /// path ends with when it cannot get there.
    fn advance<H: HomotopyMap + ?Sized>(&mut self, h: &H, t_stop: f64, step_init: f64, opts: &TrackOptions) -> std::result::Result<(), PathStatus> {
        let mut step = step_init;
        let mut accepted_run = 0usize;
        while *self.t < t_stop {
            if *self.steps >= opts.max_steps {
                return Err(PathStatus::Failed);
            }
            *self.steps += 1;
            let dt = step.min(t_stop - *self.t);
            let t_next = if dt >= t_stop - *self.t { t_stop } else { *self.t + dt };
            let predicted: Vec<Complex64> = self.x.iter().zip(self.dx.iter()).map(|(xi, di)| xi + di * dt).collect();
            match correct(h, predicted, t_next, opts) {
                Some(xn) => {
                    *self.x = xn;
                    *self.t = t_next;
                    let nx = norm(self.x);
                    *self.max_norm = self.max_norm.max(nx);
                    if nx > opts.diverge_norm {
                        return Err(PathStatus::Diverged);
                    }
                    accepted_run += 1;
                    if accepted_run >= 4 {
                        step = (2.0 * step).min(opts.step_max);
                        accepted_run = 0;
                    }
                    *self.dx = tangent(h, self.x, *self.t).ok_or(PathStatus::Failed)?;
                }
                None => {
                    step *= 0.5;
                    accepted_run = 0;
                    if step < opts.step_min {
                        return Err(if *self.max_norm >= opts.endgame_norm { PathStatus::Diverged } else { PathStatus::Failed });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Follows the path through `x0` from `t = 0` to `t = 1`.
pub fn track_path<H: HomotopyMap + ?Sized>(h: &H, x0: &[Complex64], opts: &TrackOptions) -> PathResult {
    let mut steps = 0usize;
    let finish = |status, x: Vec<Complex64>, t: f64, steps: usize, max_norm: f64| {
        let residual = norm(&AtTime { homotopy: h, t }.evaluate(&x));
        PathResult { status, endpoint: x, endpoint_residual: residual, steps_taken: steps, max_norm_seen: max_norm, t_reached: t }
    };

    let start = newton_refine(&AtTime { homotopy: h, t: 0.0 }, x0, opts.newton_tol, opts.max_newton_iters);
    let start_ok = start.residual.is_finite() && (start.converged || start.residual <= 1e-6 * (1.0 + norm(&start.x)));
    if !start_ok {
        let n0 = norm(x0);
        return finish(PathStatus::Failed, x0.to_vec(), 0.0, 0, n0);
    }
    let mut x = start.x;
    let mut t = 0.0f64;
    let mut max_norm = norm(&x);
    let mut dx = match tangent(h, &x, t) {
        Some(d) => d,
        None => return finish(PathStatus::Failed, x, t, steps, max_norm),
    };
    let mut leg = Leg { x: &mut x, t: &mut t, dx: &mut dx, steps: &mut steps, max_norm: &mut max_norm };
    if let Err(status) = leg.advance(h, 1.0 - opts.t_end_offset, opts.step_init, opts) {
        return finish(status, x, t, steps, max_norm);
    }

    // A large point at the stop time is either a genuine large solution or a
    // path heading to infinity. Two more decades of `t` tell them apart: a
    // diverging path keeps growing, a finite one barely moves.
    let stop_norm = norm(&x);
    if stop_norm >= opts.endgame_norm {
        let deeper = 1.0 - opts.t_end_offset * ENDGAME_DEPTH;
        let mut leg = Leg { x: &mut x, t: &mut t, dx: &mut dx, steps: &mut steps, max_norm: &mut max_norm };
        let reached = leg.advance(h, deeper, opts.t_end_offset * ENDGAME_DEPTH, opts).is_ok();
        if !reached || norm(&x) > ENDGAME_GROWTH * stop_norm {
            return finish(PathStatus::Diverged, x, t, steps, max_norm);
        }
    }
    let stop_norm = norm(&x);
    let predicted: Vec<Complex64> = x.iter().zip(&dx).map(|(xi, di)| xi + di * (1.0 - t)).collect();
    let end = newton_refine(&AtTime { homotopy: h, t: 1.0 }, &predicted, opts.newton_tol, opts.endgame_iters);
    let stayed = distance(&end.x, &x) <= opts.endgame_move * (1.0 + stop_norm);
    // Convergence is judged by the Newton update: raw residuals of
    // high-degree equations at large points are dominated by roundoff.
    if end.converged && stayed && end.residual.is_finite() {
        max_norm = max_norm.max(norm(&end.x));
        return PathResult {
            status: PathStatus::Converged,
            endpoint: end.x,
            endpoint_residual: end.residual,
            steps_taken: steps,
            max_norm_seen: max_norm,
            t_reached: 1.0,
        };
    }
    finish(PathStatus::Failed, x, t, steps, max_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng;
    use crate::parse::parse_system;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// (1-t)(x^2-1) + t(x^2-4), written without the linear-block structure.
    struct Quadratic;

    impl HomotopyMap for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, x: &[Complex64], t: f64) -> (Vec<Complex64>, ComplexMatrix, Vec<Complex64>) {
            let v = x[0] * x[0] - 1.0 - 3.0 * t;
            let mut j = ComplexMatrix::zeros(1, 1);
            j[(0, 0)] = 2.0 * x[0];
            (vec![v], j, vec![c(-3.0)])
        }
    }

    #[test]
    fn closed_form_quadratic_path() {
        let r = track_path(&Quadratic, &[c(1.0)], &TrackOptions::default());
        assert_eq!(r.status, PathStatus::Converged);
        assert!((r.endpoint[0] - 2.0).norm() < 1e-12);
    }

    #[test]
    fn newton_examples() {
        struct Sq;
        impl SquareSystem for Sq {
            fn dim(&self) -> usize {
                1
            }
            fn eval_jacobian(&self, x: &[Complex64]) -> (Vec<Complex64>, ComplexMatrix) {
                let mut j = ComplexMatrix::zeros(1, 1);
                j[(0, 0)] = 2.0 * x[0];
                (vec![x[0] * x[0] - 4.0], j)
            }
        }
        let out = newton_refine(&Sq, &[c(2.0001)], 1e-9, 10);
        assert!(out.converged);
        assert_eq!(out.iterations, 2);
        assert!((out.x[0] - 2.0).norm() < 1e-12);
        let exact = newton_refine(&Sq, &[c(2.0)], 1e-9, 10);
        assert!(exact.converged);
        assert_eq!(exact.iterations, 0);
        assert_eq!(exact.x, vec![c(2.0)]);
        let singular = newton_refine(&Sq, &[c(0.0)], 1e-9, 10);
        assert!(!singular.converged);
    }

    fn sphere_slice_homotopy(rng: &mut Rng) -> (Homotopy, Vec<Vec<Complex64>>) {
        // Start: sphere cut by z = 0 and y = 0, points (+-1, 0, 0).
        let sphere = parse_system("vars: x,y,z; x^2+y^2+z^2-1;").unwrap();
        let start = vec![
            AffineRow::new(vec![c(0.0), c(1.0), c(0.0)], c(0.0)),
            AffineRow::new(vec![c(0.0), c(0.0), c(1.0)], c(0.0)),
        ];
        let target = vec![
            AffineRow::new(rng.complex_vector(3), rng.complex_normal()),
            AffineRow::new(rng.complex_vector(3), rng.complex_normal()),
        ];
        let gamma = crate::linalg::random_unit_complex(rng);
        let h = Homotopy::new(sphere, start, target, gamma).unwrap();
        (h, vec![vec![c(1.0), c(0.0), c(0.0)], vec![c(-1.0), c(0.0), c(0.0)]])
    }

    #[test]
    fn slice_motion_on_sphere() {
        let mut rng = Rng::new(12);
        let (h, starts) = sphere_slice_homotopy(&mut rng);
        let sphere = parse_system("vars: x,y,z; x^2+y^2+z^2-1;").unwrap();
        let mut ends = Vec::new();
        for s in &starts {
            let r = track_path(&h, s, &TrackOptions::default());
            assert_eq!(r.status, PathStatus::Converged);
            assert!(sphere.evaluate(&r.endpoint).unwrap()[0].norm() <= 1e-8);
            assert!(r.endpoint_residual <= 1e-8 * (1.0 + norm(&r.endpoint)));
            ends.push(r.endpoint);
        }
        assert!(crate::linalg::distance(&ends[0], &ends[1]) > 1e-3);
        // Reverse tracking returns to the start points.
        let back = h.reversed(crate::linalg::random_unit_complex(&mut rng)).unwrap();
        for (e, s) in ends.iter().zip(&starts) {
            let r = track_path(&back, e, &TrackOptions::default());
            assert_eq!(r.status, PathStatus::Converged);
            assert!(crate::linalg::distance(&r.endpoint, s) <= 1e-6);
        }
    }

    #[test]
    fn tracking_is_deterministic() {
        let mut rng = Rng::new(99);
        let (h, starts) = sphere_slice_homotopy(&mut rng);
        let a = track_path(&h, &starts[0], &TrackOptions::default());
        let b = track_path(&h, &starts[0], &TrackOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn path_to_infinity_is_diverged() {
        // x*y - 1 with y moving from 1 to 0: x = 1/y blows up.
        let fixed = parse_system("vars: x,y; x*y-1;").unwrap();
        let start = vec![AffineRow::new(vec![c(0.0), c(1.0)], c(-1.0))];
        let target = vec![AffineRow::new(vec![c(0.0), c(1.0)], c(0.0))];
        let h = Homotopy::new(fixed, start, target, Complex64::from_polar(1.0, 0.7)).unwrap();
        let r = track_path(&h, &[c(1.0), c(1.0)], &TrackOptions::default());
        assert_eq!(r.status, PathStatus::Diverged);
    }

    #[test]
    fn homotopy_shape_is_checked() {
        let fixed = parse_system("vars: x,y; x*y-1;").unwrap();
        let row = AffineRow::new(vec![c(0.0), c(1.0)], c(-1.0));
        assert!(Homotopy::new(fixed.clone(), vec![row.clone()], vec![], c(1.0)).is_err());
        assert!(Homotopy::new(fixed.clone(), vec![row.clone(), row.clone()], vec![row.clone(), row.clone()], c(1.0)).is_err());
        assert!(Homotopy::new(fixed, vec![row.clone()], vec![row], c(0.0)).is_err());
    }

    #[test]
    fn options_validate() {
        assert!(TrackOptions::default().validate().is_ok());
        let bad = TrackOptions { step_min: 0.5, ..TrackOptions::default() };
        assert!(bad.validate().is_err());
    }
}

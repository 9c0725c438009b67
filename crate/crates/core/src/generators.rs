//! Built-in test systems, registered by name: the three-component
//! illustrative example, adjacent minors, the eigenvalue problem and random
//! dense systems.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Rng;
use crate::parse::{format_system, parse_system};
use crate::poly::{Monomial, PolySystem, Polynomial};
use crate::registry::Registry;

/// Size and seed parameters; each generator reads the ones it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub size: usize,
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    pub vars: usize,
    /// One degree per equation, or a single degree used for all of them.
    pub degrees: Vec<u32>,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self { size: 6, rows: 2, cols: 9, n: 2, vars: 2, degrees: vec![2], seed: 0 }
    }
}

pub trait SystemGenerator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// The system in the input grammar.
    fn generate(&self, params: &GenParams) -> Result<String>;
}

/// Sphere, twisted cubic, two lines and a point, all in `C^3`.
pub const ILLUSTRATIVE_TEXT: &str = "\
# Sphere, twisted cubic, two lines and the point (0.5, 0.5, 0.5).
vars: x, y, z;
(y - x^2)*(x^2 + y^2 + z^2 - 1)*(x - 0.5);
(z - x^3)*(x^2 + y^2 + z^2 - 1)*(y - 0.5);
(y - x^2)*(z - x^3)*(x^2 + y^2 + z^2 - 1)*(z - 0.5);
";

#[derive(Debug, Default)]
pub struct Illustrative;

impl SystemGenerator for Illustrative {
    fn name(&self) -> &'static str {
        "illustrative"
    }
    fn description(&self) -> &'static str {
        "3 equations of degrees 5, 6, 8 in x, y, z"
    }
    fn generate(&self, _params: &GenParams) -> Result<String> {
        Ok(ILLUSTRATIVE_TEXT.to_string())
    }
}

/// Adjacent 2×2 minors of a general `rows × cols` matrix of unknowns.
#[derive(Debug, Default)]
pub struct AdjacentMinors;

impl SystemGenerator for AdjacentMinors {
    fn name(&self) -> &'static str {
        "minors"
    }
    fn description(&self) -> &'static str {
        "adjacent 2x2 minors of a rows x cols matrix (--rows, --cols)"
    }
    fn generate(&self, p: &GenParams) -> Result<String> {
        if p.rows < 2 || p.cols < 2 {
            return Err(Error::InvalidArgument(format!("minors need at least 2 rows and 2 columns, got {}x{}", p.rows, p.cols)));
        }
        let n = p.rows * p.cols;
        let names: Vec<String> = (1..=p.rows)
            .flat_map(|i| (1..=p.cols).map(move |j| format!("x{i}_{j}")))
            .collect();
        let var = |i: usize, j: usize| Polynomial::variable(n, i * p.cols + j);
        let mut polys = Vec::new();
        for i in 0..p.rows - 1 {
            for j in 0..p.cols - 1 {
                let minor = &(&var(i, j)? * &var(i + 1, j + 1)?) - &(&var(i, j + 1)? * &var(i + 1, j)?);
                polys.push(minor);
            }
        }
        Ok(format_system(&PolySystem::with_names(names, polys)?))
    }
}

/// `lam x - A x` for a random complex `size × size` matrix `A`.
#[derive(Debug, Default)]
pub struct Eigenproblem;

impl SystemGenerator for Eigenproblem {
    fn name(&self) -> &'static str {
        "eigen"
    }
    fn description(&self) -> &'static str {
        "lam*x - A*x with random complex A (--size, --seed)"
    }
    fn generate(&self, p: &GenParams) -> Result<String> {
        let s = p.size;
        if s == 0 {
            return Err(Error::InvalidArgument("eigen needs size >= 1".into()));
        }
        let n = s + 1;
        let mut names: Vec<String> = (1..=s).map(|i| format!("x{i}")).collect();
        names.push("lam".into());
        let mut rng = Rng::new(p.seed);
        let lam = Polynomial::variable(n, s)?;
        let mut polys = Vec::with_capacity(s);
        for i in 0..s {
            let mut f = &lam * &Polynomial::variable(n, i)?;
            for j in 0..s {
                f = &f - &Polynomial::variable(n, j)?.scale(rng.complex_normal());
            }
            polys.push(f);
        }
        Ok(format_system(&PolySystem::with_names(names, polys)?))
    }
}

/// Dense polynomials with every monomial up to the given degree.
#[derive(Debug, Default)]
pub struct RandomDense;

impl SystemGenerator for RandomDense {
    fn name(&self) -> &'static str {
        "randomdense"
    }
    fn description(&self) -> &'static str {
        "random dense system (--n equations, --vars unknowns, --degrees d1,d2,..., --seed)"
    }
    fn generate(&self, p: &GenParams) -> Result<String> {
        if p.n == 0 || p.vars == 0 {
            return Err(Error::InvalidArgument("randomdense needs n >= 1 and vars >= 1".into()));
        }
        let degrees: Vec<u32> = match p.degrees.len() {
            1 => vec![p.degrees[0]; p.n],
            len if len == p.n => p.degrees.clone(),
            len => {
                return Err(Error::InvalidArgument(format!("{len} degrees given for {} equations", p.n)));
            }
        };
        if degrees.contains(&0) {
            return Err(Error::InvalidArgument("degrees must be positive".into()));
        }
        let mut rng = Rng::new(p.seed);
        let polys = degrees
            .iter()
            .map(|&d| {
                let monomials = exponents_up_to(p.vars, d)
                    .into_iter()
                    .map(|e| Monomial::new(rng.complex_normal(), e))
                    .collect();
                Polynomial::new(p.vars, monomials)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(format_system(&PolySystem::new(p.vars, polys)?))
    }
}

/// All exponent vectors in `n` variables of total degree at most `d`, in a fixed order.
fn exponents_up_to(n: usize, d: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=d {
        for mut rest in exponents_up_to(n - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn generators() -> Registry<dyn SystemGenerator> {
    let mut r: Registry<dyn SystemGenerator> = Registry::new("generator");
    r.register("illustrative", Arc::new(Illustrative))
        .register("minors", Arc::new(AdjacentMinors))
        .register("eigen", Arc::new(Eigenproblem))
        .register("randomdense", Arc::new(RandomDense));
    r
}

/// Generates and parses in one step.
pub fn generate_system(name: &str, params: &GenParams) -> Result<PolySystem> {
    let generator = generators().require(name).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    parse_system(&generator.generate(params)?)
}

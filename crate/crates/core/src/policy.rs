//! Run-time selectable solver strategies: what to keep (`all` vs
//! `nonsingular`) and in which order equations are introduced.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::poly::PolySystem;
use crate::registry::Registry;

/// What a stage does with points that take a shortcut or turn out singular.
pub trait StagePolicy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Keep points that satisfy the next equation (test (a)) as
    /// higher-dimensional output.
    fn keep_shortcut(&self) -> bool;

    /// Send singular candidates through the membership test; otherwise
    /// they are discarded.
    fn test_singular(&self) -> bool;

    fn check_shape(&self, _n_equations: usize, _n_vars: usize) -> Result<()> {
        Ok(())
    }
}

/// Witness sets for every component of every dimension.
#[derive(Debug, Default)]
pub struct AllComponents;

impl StagePolicy for AllComponents {
    fn name(&self) -> &'static str {
        "all"
    }
    fn keep_shortcut(&self) -> bool {
        true
    }
    fn test_singular(&self) -> bool {
        true
    }
}

/// Only the multiplicity-one components of codimension `n`.
#[derive(Debug, Default)]
pub struct NonsingularOnly;

impl StagePolicy for NonsingularOnly {
    fn name(&self) -> &'static str {
        "nonsingular"
    }
    fn keep_shortcut(&self) -> bool {
        false
    }
    fn test_singular(&self) -> bool {
        false
    }
    fn check_shape(&self, n_equations: usize, n_vars: usize) -> Result<()> {
        if n_equations > n_vars {
            return Err(Error::InvalidArgument(format!(
                "nonsingular mode needs at most as many equations as unknowns ({n_equations} > {n_vars})"
            )));
        }
        Ok(())
    }
}

/// Permutation applied to the equations before solving.
pub trait EquationOrdering: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    /// Original indices in processing order.
    fn order(&self, sys: &PolySystem) -> Vec<usize>;
}

#[derive(Debug, Default)]
pub struct AsGiven;

impl EquationOrdering for AsGiven {
    fn name(&self) -> &'static str {
        "given"
    }
    fn order(&self, sys: &PolySystem) -> Vec<usize> {
        (0..sys.len()).collect()
    }
}

/// Lowest degree first; ties keep input order.
#[derive(Debug, Default)]
pub struct AscendingDegree;

impl EquationOrdering for AscendingDegree {
    fn name(&self) -> &'static str {
        "degree"
    }
    fn order(&self, sys: &PolySystem) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..sys.len()).collect();
        idx.sort_by_key(|&i| sys.polys()[i].degree());
        idx
    }
}

pub fn stage_policies() -> Registry<dyn StagePolicy> {
    let mut r: Registry<dyn StagePolicy> = Registry::new("mode");
    r.register("all", Arc::new(AllComponents)).register("nonsingular", Arc::new(NonsingularOnly));
    r
}

pub fn equation_orderings() -> Registry<dyn EquationOrdering> {
    let mut r: Registry<dyn EquationOrdering> = Registry::new("equation order");
    r.register("given", Arc::new(AsGiven)).register("degree", Arc::new(AscendingDegree));
    r
}

pub fn policy_by_name(name: &str) -> Result<Arc<dyn StagePolicy>> {
    stage_policies().require(name).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn ordering_by_name(name: &str) -> Result<Arc<dyn EquationOrdering>> {
    equation_orderings().require(name).map_err(|e| Error::InvalidArgument(e.to_string()))
}

//! Block-diagonal semidefinite programming: problem container, the
//! embedded primal-dual solver, and SDPA sparse-format interchange.
//!
//! Convention: the stored data describe
//!     min ⟨C,X⟩  s.t.  ⟨A_p,X⟩ = b_p (p = 1..m),  X ⪰ 0 block-diagonal
//! whose dual is max bᵀy s.t. C − Σ y_p A_p ⪰ 0. Relaxation builders
//! recover their bound as `obj_const − ⟨C,X⟩`.

pub mod sdpa;
pub mod solver;

use crate::rational::{rat_to_f64, Rat};
use nalgebra::DMatrix;

/// One entry of a symmetric matrix, upper triangle (i ≤ j); the mirrored
/// entry is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymEntry {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: Rat,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    /// right-hand sides b_p
    pub rhs: Vec<Rat>,
    /// cost matrix C
    pub cost: Vec<SparseSymEntry>,
    /// constraint matrices A_p
    pub cons: Vec<Vec<SparseSymEntry>>,
    /// additive constant: relaxation bound = obj_const − ⟨C,X⟩
    pub obj_const: Rat,
    /// optional equation grouping for the structured Schur solve;
    /// group 0 is the coupled border
    pub eq_groups: Option<Vec<usize>>,
}

impl SdpProblem {
    pub fn num_eqs(&self) -> usize {
        self.rhs.len()
    }

    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn rhs_f64(&self) -> Vec<f64> {
        self.rhs.iter().map(rat_to_f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalTrouble,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// primal blocks X (the Gram matrices of SOS relaxations)
    pub primal_blocks: Vec<DMatrix<f64>>,
    pub dual_y: Vec<f64>,
    pub dual_slacks: Vec<DMatrix<f64>>,
    /// ⟨C,X⟩
    pub primal_objective: f64,
    /// bᵀy
    pub dual_objective: f64,
    /// relative duality gap achieved
    pub gap: f64,
    /// primal feasibility residual ‖b − A(X)‖/(1+‖b‖)
    pub pinfeas: f64,
    /// dual feasibility residual ‖C − Z − Aᵀy‖/(1+‖C‖)
    pub dinfeas: f64,
    pub iterations: usize,
    /// relaxation bound obj_const − ⟨C,X⟩
    pub bound: f64,
}

impl SdpSolution {
    /// Worst of gap and feasibility residuals; a cheap usability signal
    /// for callers that post-correct bounds through certification.
    pub fn merit(&self) -> f64 {
        self.gap.max(self.pinfeas).max(self.dinfeas)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveParams {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 120,
        }
    }
}

pub use solver::solve;

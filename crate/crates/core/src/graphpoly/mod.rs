//! Graph polynomials on finite multigraphs: Tutte polynomials, the first
//! Kirchhoff–Symanzik polynomial and spanning-tree counts.

mod multigraph;
mod poly;
mod symanzik;
mod tutte;

pub use multigraph::{connected_multigraphs_up_to, Certificate, MultiGraph, CERTIFICATE_PERMUTATION_LIMIT};
pub use poly::{Monomial, MultiPoly, Var};
pub use symanzik::{
    edge_assignment, fundamental_cycles, psi_deletion_contraction, psi_term_count, spanning_tree_count,
    symanzik_det, symanzik_det_in_basis, symanzik_psi, CycleBasis, Degenerate, DeletionContraction,
    SYMANZIK_EDGE_LIMIT,
};
pub use tutte::{
    check_subtree_formula, evaluate_xy, subtree_formula, subtree_formula_report, tutte, tutte_at_one,
    tutte_of_partial_sum, tutte_rank_nullity, tutte_with_limit, SubtreeFormulaCheck, RANK_NULLITY_EDGE_LIMIT,
    TUTTE_EDGE_LIMIT,
};

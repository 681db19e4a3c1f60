use thiserror::Error;

/// Crate-wide error type. Variants carry enough context to report the
/// offending object without re-deriving it.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A value cannot be expressed in `Q(zeta_N)`: a phase denominator or a
    /// source conductor does not divide the target conductor `N`.
    #[error("denominator {denominator} does not divide conductor {conductor}")]
    IncompatibleConductor { denominator: u64, conductor: u32 },

    /// Matrix inversion was requested for a matrix of deficient rank.
    #[error("matrix of size {size} is singular (rank {rank})")]
    SingularMatrix { size: usize, rank: usize },

    /// Matrix dimensions (or a map's shape against the dimension vector)
    /// do not line up.
    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    /// A reflection or convolution was requested at a vertex with a loop.
    #[error("vertex {vertex} carries a loop")]
    LoopAtVertex { vertex: String },

    /// Middle convolution was requested at a vertex where the parameter
    /// equals 1, where the functor is undefined.
    #[error("parameter at vertex {vertex} equals 1; convolution undefined there")]
    QIsOne { vertex: String },

    /// Jordan block sizes of a class do not sum to the ambient size `n`.
    #[error("class {class_index}: block sizes sum to {block_total}, expected {n}")]
    InconsistentSize {
        class_index: usize,
        block_total: usize,
        n: usize,
    },

    /// A user-supplied row of eigenvalues does not annihilate its class.
    #[error("class {class_index}: supplied eigenvalue row does not annihilate the class")]
    InvalidXiRow { class_index: usize },

    /// Enumeration state space exceeds the configured budget.
    #[error("enumeration needs {states} states, over the budget of {budget}")]
    BudgetExceeded { states: u128, budget: u64 },

    /// Construction was requested for an instance that is not rigid.
    #[error("instance is not rigid ({status}); explicit construction unavailable")]
    NotRigid { status: String },

    /// The reduction loop met a vertex with parameter 1 before reaching a
    /// coordinate vector. Cannot happen for instances that pass the rigidity
    /// test; reported instead of being silently ignored.
    #[error("reduction met parameter 1 at vertex {vertex} before terminating")]
    InternalContradiction { vertex: String },

    /// A representation is not strict (some leg map fails injectivity or
    /// surjectivity), so it does not correspond to a matrix tuple.
    #[error("representation is not strict at arrow {arrow}")]
    NotStrict { arrow: String },

    /// A matrix lies outside its prescribed conjugacy class. `annihilated`
    /// distinguishes closure membership (rank table off, annihilation fine)
    /// from outright failure.
    #[error(
        "matrix {class_index} is not in its class (annihilated: {annihilated}, rank table {ranks:?})"
    )]
    NotInClass {
        class_index: usize,
        annihilated: bool,
        ranks: Vec<usize>,
    },

    /// Two representations live over different quivers, orders or parameters.
    #[error("representations disagree on quiver, order or parameter: {context}")]
    MismatchedQ { context: String },

    /// An order swap was requested across an arrow and its own partner;
    /// that transposition is an orientation change, not an order change.
    #[error("cannot swap arrow {arrow} with its own partner in the order")]
    AdjacentLoopPair { arrow: String },

    /// Malformed user input (JSON structure, stray labels, bad numbers).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

//! Tree evaluation instances, fanin reduction and the catalytic evaluator.

mod driver;
mod fanin;
mod instance;

pub use driver::{
    eval_catalytic, expected_oracle_calls, handle_oracle_call, CatalyticOptions, CatalyticOutcome, TreeOracle,
    ValueSlotMode,
};
pub use fanin::{gadget_height, reduce_fanin, reduced_ell, MAX_REDUCED_ELL};
pub use instance::{NodePath, TreeEvalInstance, MAX_LEAVES_LOG2, MAX_TABLE_LOG2};

//! Generators for the reduction programs that embed halting-style questions
//! about an ordinary program into questions about a probabilistic one.

mod decoder;
mod gadgets;
mod names;
mod stepper;

pub use decoder::{cheer_block, input_decoder_gadget};
pub use gadgets::{
    gadget_ast_to_exp, gadget_ast_to_uast, gadget_lexp, gadget_past, gadget_rexp,
    gadget_uh_to_ast, gadget_upast, generate, Gadget, GadgetOutput, Query,
};
pub use names::NameSupply;
pub use stepper::{flatten_to_stepper, flatten_with, NotOrdinary, OrdinaryProgram, StepperBundle};

//! Conjunctive query answering over CSV-backed relational data enriched
//! with Horn rules over unary and binary predicates.
//!
//! Rules are evaluated bottom-up, either over fully loaded relations or
//! through a magic-sets rewriting that fetches relational rows on demand.

pub mod corpus;
pub mod engine;
pub mod hybrid;
pub mod magic;
pub mod mapping;
pub mod program;
pub mod query;
pub mod relstore;
pub mod rule;
pub mod syntax;
pub mod term;

pub use engine::{naive_evaluate, seminaive_evaluate, EngineError, EvalOptions, EvalStats, WorkingMemory};
pub use hybrid::{answer_query, plan_fetch, AnswerError, AnswerSet, FetchGoal, KnowledgeBase, LoadError, Mode};
pub use magic::{adorn_program, magic_transform, Adornment, MagicProgram};
pub use mapping::{parse_mappings, MappingError, MappingSet};
pub use program::{parse_program, Program, ProgramError};
pub use query::{parse_query, Query, QueryError};
pub use relstore::{load_catalog, Catalog, RelError};
pub use rule::{Atom, Fact, Literal, Rule};
pub use term::{Constant, Name, Term};

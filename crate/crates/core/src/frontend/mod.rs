//! Text front end: expression grammar, model files and formatting.

mod expand;
mod format;
mod lexer;
mod model;
mod parser;

pub use expand::{Context, Def, IndexKind};
pub use format::{format_expression, Style};
pub use model::{
    format_model, parse_box, parse_characteristics, parse_expression, parse_expression_in, parse_model,
    parse_section, ParsedModel,
};

use std::fmt;

use crate::graded::Grading;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Position of a syntax problem inside a source text (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { expected: Vec<String>, found: String },
    UndeclaredIdentifier(String),
    IndexRange { name: String, slot: usize, value: i64, lo: i64, hi: i64 },
    IndexArity { name: String, expected: usize, found: usize },
    UnboundIndex(String),
    IndexRepeated(String),
    MetricDimension { vars: usize, metric: usize },
    Declaration(String),
    Semantic(String),
}

/// Positioned parse failure; `snippet` carries the offending line for caret display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: SourcePos,
    pub kind: ParseErrorKind,
    pub snippet: Option<String>,
}

impl ParseError {
    pub fn new(pos: SourcePos, kind: ParseErrorKind) -> Self {
        ParseError { pos, kind, snippet: None }
    }

    /// Renders the source line with a caret under the error column.
    pub fn caret(&self) -> Option<String> {
        self.snippet.as_ref().map(|line| {
            let pad = " ".repeat(self.pos.column.saturating_sub(1));
            format!("{line}\n{pad}^")
        })
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.pos)?;
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => {
                write!(f, "syntax error: found {found}, expected one of {{{}}}", expected.join(", "))
            }
            ParseErrorKind::UndeclaredIdentifier(name) => write!(f, "undeclared identifier `{name}`"),
            ParseErrorKind::IndexRange { name, slot, value, lo, hi } => write!(
                f,
                "index {value} out of range {lo}..{hi} in slot {slot} of `{name}`"
            ),
            ParseErrorKind::IndexArity { name, expected, found } => {
                write!(f, "`{name}` takes {expected} indices, got {found}")
            }
            ParseErrorKind::UnboundIndex(letter) => write!(f, "free index `{letter}` is not bound"),
            ParseErrorKind::IndexRepeated(letter) => {
                write!(f, "index `{letter}` appears more than twice in one term")
            }
            ParseErrorKind::MetricDimension { vars, metric } => write!(
                f,
                "metric has {metric} diagonal entries but {vars} independent variables are declared"
            ),
            ParseErrorKind::Declaration(msg) => write!(f, "declaration error: {msg}"),
            ParseErrorKind::Semantic(msg) => write!(f, "{msg}"),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("expressions belong to different generator sets")]
    GeneratorMismatch,
    #[error("inhomogeneous expression with gradings {}", list_gradings(.0))]
    Inhomogeneous(Vec<Grading>),
    #[error("grading of the zero expression is undefined")]
    ZeroExpression,
    #[error("grading violation in {context}: expected {expected}, found {found}")]
    GradingViolation { context: String, expected: Grading, found: Grading },
    #[error("unknown independent variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("component {component:?} is outside the index ranges of `{name}`")]
    ComponentOutOfRange { name: String, component: Vec<i64> },
    #[error("theory has no independent variables")]
    ZeroVariables,
    #[error("density is not a total divergence")]
    NotADivergence,
    #[error("divergence witnesses are only constructed in one independent variable (theory has {0})")]
    UnsupportedDimension(usize),
    #[error("missing characteristic for `{0}`")]
    MissingCharacteristic(String),
    #[error("Euler-Lagrange expression for `{0}` is not solvable for its leading jet coordinate")]
    NotSolvable(String),
    #[error("on-shell rewriting exceeded its budget of {0} steps")]
    RewriteBudget(usize),
    #[error("density has nonzero ghost or antifield number ({0})")]
    NonzeroGhostNumber(Grading),
    #[error("density is odd")]
    OddDensity,
    #[error("parameter `{0}` has no value in the section")]
    UnboundParameter(String),
    #[error("invalid section: {0}")]
    InvalidSection(String),
    #[error("not a Noether identity; residual {0}")]
    NotAnIdentity(String),
    #[error("duplicate ghost name `{0}`")]
    DuplicateGhost(String),
    #[error("functionals belong to different BV extensions")]
    MismatchedExtension,
    #[error("master action does not reduce to the lagrangian at antifield number 0")]
    MasterActionMismatch,
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid theory: {0}")]
    InvalidTheory(String),
    #[error("{0}")]
    Parse(Box<ParseError>),
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(Box::new(e))
    }
}

impl Error {
    /// True for failures caused by malformed input text rather than mathematics.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse(_))
    }
}

fn list_gradings(gs: &[Grading]) -> String {
    gs.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(", ")
}

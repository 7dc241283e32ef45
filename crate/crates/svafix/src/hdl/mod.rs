//! Frontend for the synthesizable RTL subset and the bounded assertion
//! subset: parsing, identifier resolution, and assertion rendering.

pub mod ast;
pub mod lexer;
mod parser;
pub mod render;
pub mod sva;

pub use ast::{
    AlwaysBlock, CaseArm, ContAssign, DesignAst, Instance, LValue, ModuleAst, Net, NetKind, Port,
    PortDir, Select, Sensitivity, Stmt,
};
pub use parser::parse_design;
pub use render::render_assertion;
pub use sva::{parse_assertion, ClockEdge, ClockEvent, ImplicationKind, SvaAssertion};

use thiserror::Error;

/// Errors from parsing RTL or assertions. Positions are 1-based.
#[derive(Debug, Clone, Error)]
pub enum ParseError {
    #[error("{path}:{line}:{col}: syntax error: {message}")]
    Syntax {
        path: String,
        line: u32,
        col: u32,
        message: String,
        /// Byte offset within the file, kept for span reconstruction.
        offset: usize,
        file: u32,
    },
    #[error("{path}:{line}: unsupported construct `{construct}`")]
    UnsupportedConstruct {
        construct: String,
        path: String,
        line: u32,
    },
    #[error("{path}:{line}: unresolved identifier `{name}`")]
    UnresolvedIdentifier {
        name: String,
        path: String,
        line: u32,
    },
    #[error("unsupported assertion feature: {feature}")]
    UnsupportedSvaFeature { feature: String },
}

impl ParseError {
    pub(crate) fn syntax(file: u32, offset: usize, message: impl Into<String>) -> Self {
        // path/line/col are filled in by the parser, which owns the source map
        ParseError::Syntax {
            path: String::new(),
            line: 0,
            col: 0,
            message: message.into(),
            offset,
            file,
        }
    }

    pub(crate) fn locate(mut self, sources: &crate::source::SourceMap) -> Self {
        if let ParseError::Syntax {
            ref mut path,
            ref mut line,
            ref mut col,
            offset,
            file,
            ..
        } = self
        {
            if (file as usize) < sources.files.len() {
                let f = sources.file(file);
                *path = f.path.clone();
                *line = f.line_of(offset.min(f.text.len().saturating_sub(1)));
                *col = f.col_of(offset.min(f.text.len().saturating_sub(1)));
            }
        }
        self
    }
}

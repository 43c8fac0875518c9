//! Source frontend: lexing, parsing, name resolution and type checking.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod resolve;
pub mod span;
pub mod typed;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use ast::Program;
pub use parser::{parse_logic_expr, parse_source};
pub use resolve::{resolve, resolve_with_sources};
pub use span::Span;
pub use typed::TypedProgram;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolveError {
    #[error("{span}: undefined name `{name}`{hint}")]
    UndefinedName {
        span: Span,
        name: String,
        hint: String,
    },
    #[error("{span}: type mismatch: expected {expected}, found {found}")]
    TypeMismatch {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("{span}: duplicate {what} `{name}`")]
    DuplicateName {
        span: Span,
        name: String,
        what: &'static str,
    },
    #[error("{span}: `{name}` cannot be written here: {reason}")]
    IllegalWrite {
        span: Span,
        name: String,
        reason: String,
    },
    #[error("{span}: {message}")]
    Invalid { span: Span, message: String },
}

impl ResolveError {
    pub fn span(&self) -> &Span {
        match self {
            ResolveError::UndefinedName { span, .. }
            | ResolveError::TypeMismatch { span, .. }
            | ResolveError::DuplicateName { span, .. }
            | ResolveError::IllegalWrite { span, .. }
            | ResolveError::Invalid { span, .. } => span,
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

/// Parses `root` and every file it imports (transitively), merging them into
/// one program. `read` maps a path to its text, so callers can serve files
/// from disk or from embedded assets. Each file is loaded once.
pub fn load_program<F>(
    root: &Path,
    mut read: F,
) -> Result<(Program, BTreeMap<String, String>), LoadError>
where
    F: FnMut(&Path) -> std::io::Result<String>,
{
    let mut program = Program::default();
    let mut sources = BTreeMap::new();
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([normalize(root)]);
    let mut ordered = Vec::new();
    while let Some(path) = queue.pop_front() {
        if !seen.insert(path.clone()) {
            continue;
        }
        let name = path.to_string_lossy().into_owned();
        let text = read(&path).map_err(|e| LoadError::Io {
            path: name.clone(),
            message: e.to_string(),
        })?;
        let parsed = parse_source(&text, &name)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for imp in &parsed.imports {
            queue.push_back(normalize(&dir.join(&imp.path)));
        }
        sources.insert(name, text);
        ordered.push(parsed);
    }
    // Imported declarations come first so that dependencies precede users.
    for p in ordered.into_iter().rev() {
        program.merge(p);
    }
    Ok((program, sources))
}

/// Loads from disk and resolves.
pub fn load_file(root: &Path) -> Result<TypedProgram, LoadError> {
    let (program, sources) = load_program(root, |p| std::fs::read_to_string(p))?;
    Ok(resolve_with_sources(&program, sources)?)
}

/// Lexical normalization (`a/./b/../c` → `a/c`) without touching the disk.
fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for comp in path.components() {
        match comp {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            c => out.push(c),
        }
    }
    out
}

use std::fmt;
use std::path::Path;

/// Failure classes; each maps to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Parse,
    Validation,
    Planning,
    Io,
    Oracle,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 2,
            Category::Parse => 3,
            Category::Validation => 4,
            Category::Planning => 5,
            Category::Io => 6,
            Category::Oracle => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Parse => "parse",
            Category::Validation => "validation",
            Category::Planning => "planning",
            Category::Io => "io",
            Category::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Error {
    pub category: Category,
    pub message: String,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Error {
            category,
            message: message.into(),
        }
    }

    pub fn usage(m: impl Into<String>) -> Self {
        Self::new(Category::Usage, m)
    }

    pub fn parse(m: impl Into<String>) -> Self {
        Self::new(Category::Parse, m)
    }

    pub fn validation(m: impl fmt::Display) -> Self {
        Self::new(Category::Validation, m.to_string())
    }

    pub fn planning(m: impl fmt::Display) -> Self {
        Self::new(Category::Planning, m.to_string())
    }

    pub fn oracle(m: impl Into<String>) -> Self {
        Self::new(Category::Oracle, m)
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(Category::Io, format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.category.exit_code()
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.name(), self.message)
    }
}

impl std::error::Error for Error {}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

//! Output sink shared by the subcommands: stdout or a file, with
//! self-describing `#` header lines placed before the data.

use std::io::{BufWriter, Write};
use std::path::Path;

use super::{CliError, EXIT_INPUT};

pub struct OutputTarget {
    writer: Box<dyn Write>,
}

impl OutputTarget {
    pub fn create(path: Option<&Path>) -> Result<OutputTarget, CliError> {
        let writer: Box<dyn Write> = match path {
            Some(path) => {
                let file = std::fs::File::create(path).map_err(|e| {
                    CliError::new(
                        EXIT_INPUT,
                        "input",
                        format!("creating {}: {e}", path.display()),
                    )
                })?;
                Box::new(BufWriter::new(file))
            }
            None => Box::new(BufWriter::new(std::io::stdout())),
        };
        Ok(OutputTarget { writer })
    }

    /// `# record-sharpe vX` followed by one `#` line per entry.
    pub fn headers(&mut self, entries: &[&str]) -> Result<(), CliError> {
        self.line(&format!("# record-sharpe v{}", env!("CARGO_PKG_VERSION")))?;
        for entry in entries {
            self.line(&format!("# {entry}"))?;
        }
        Ok(())
    }

    pub fn line(&mut self, text: &str) -> Result<(), CliError> {
        writeln!(self.writer, "{text}")
            .map_err(|e| CliError::new(EXIT_INPUT, "input", e.to_string()))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer
            .flush()
            .map_err(|e| CliError::new(EXIT_INPUT, "input", e.to_string()))
    }
}

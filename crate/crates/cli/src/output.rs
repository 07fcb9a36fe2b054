//! Output files with a `#` header block naming the resolved configuration.
//! Files created by a failed command are removed.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

pub struct OutputSet {
    dir: PathBuf,
    header: Vec<String>,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: &Path, command: &str, description: &[String]) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut header = vec![format!("plate-spectra {} {}", env!("CARGO_PKG_VERSION"), command)];
        header.extend(description.iter().cloned());
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            header,
            written: Vec::new(),
        })
    }

    /// Writes `name` as the header block, any `extra` header lines, then `body`.
    pub fn write<F>(&mut self, name: &str, extra: &[String], body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        let io_err = |e: io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        for line in self.header.iter().chain(extra) {
            writeln!(w, "# {line}").map_err(io_err)?;
        }
        body(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
        Ok(path)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    /// Removes everything written so far.
    pub fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}

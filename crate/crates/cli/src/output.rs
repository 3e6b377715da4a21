use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_CONVERGENCE: u8 = 4;

/// Global options shared by all subcommands.
pub struct Context {
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name)?;
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_csv(
        &self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<PathBuf> {
        let path = self.path(name)?;
        let mut w = self.create(name)?;
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(path)
    }
}

pub fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn code_for(e: &longmix::Error) -> u8 {
    use longmix::Error::*;
    match e {
        Parse { .. } | Validation { .. } | EmptyCohort | RankDeficient { .. } | DegenerateInput(_) => EXIT_DATA,
        InvalidSpec(_) | Domain(_) | DimensionMismatch(_) | NotNested(_) => EXIT_USAGE,
        ConvergenceFailure { .. } | NotPositiveDefinite { .. } | NotSymmetric(_) => EXIT_CONVERGENCE,
        Sampler { source, .. } => code_for(source),
        Io(_) => EXIT_IO,
    }
}

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain().find_map(|c| c.downcast_ref::<longmix::Error>()).map(code_for).unwrap_or(EXIT_IO)
}

pub fn num(v: f64) -> String {
    v.to_string()
}

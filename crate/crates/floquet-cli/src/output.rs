//! Output sinks and the provenance header carried by every file.

use crate::CliError;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

pub const SCHEMA_VERSION: u32 = 1;
pub const RNG_SCHEME: &str = "ChaCha8 (rand_chacha 0.3)";

pub struct Paths {
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl Paths {
    pub fn new(out: Option<PathBuf>, summary: Option<PathBuf>) -> Self {
        Paths { out, summary }
    }

    /// Main output: the `--out` file, or stdout.
    pub fn main(&self) -> Result<Box<dyn Write>, CliError> {
        open(self.out.as_ref())
    }

    /// Write the JSON summary to `--summary`, or to stderr.
    pub fn write_summary(&self, value: &serde_json::Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)?;
        match &self.summary {
            Some(p) => {
                let mut f = File::create(p)?;
                writeln!(f, "{text}")?;
            }
            None => eprintln!("{text}"),
        }
        Ok(())
    }
}

fn open(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

#[derive(Clone, Debug)]
pub struct Header {
    pub schema: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

impl Header {
    /// Hash of the resolved configuration; output paths and the thread count
    /// are not part of it.
    pub fn new<C: Serialize>(subcommand: &str, config: &C, seed: Option<u64>) -> Result<Self, CliError> {
        let canonical = serde_json::to_vec(&json!({ "subcommand": subcommand, "config": config }))?;
        let digest = Sha256::digest(&canonical);
        Ok(Header {
            schema: format!("{subcommand}/{SCHEMA_VERSION}"),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
        })
    }

    fn rng(&self) -> String {
        match self.seed {
            Some(s) => format!("{RNG_SCHEME}, seed {s}"),
            None => "none".into(),
        }
    }

    /// `#`-prefixed lines for text outputs.
    pub fn write_comment<W: Write + ?Sized>(&self, w: &mut W) -> Result<(), CliError> {
        writeln!(w, "# floquet-cli {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# schema: {}", self.schema)?;
        writeln!(w, "# config-sha256: {}", self.config_sha256)?;
        writeln!(w, "# rng: {}", self.rng())?;
        Ok(())
    }

    pub fn json(&self) -> serde_json::Value {
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "schema": self.schema,
            "schema_version": SCHEMA_VERSION,
            "config_sha256": self.config_sha256,
            "rng": self.rng(),
        })
    }
}

/// A CSV writer positioned after the header block.
pub fn csv_writer(header: &Header, mut w: Box<dyn Write>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    header.write_comment(&mut w)?;
    Ok(csv::Writer::from_writer(w))
}

/// Shortest round-trip rendering of a float, without negative zero.
pub fn num(x: f64) -> String {
    format!("{}", if x == 0.0 { 0.0 } else { x })
}

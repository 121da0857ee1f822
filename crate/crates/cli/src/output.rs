use std::io::{self, Write};
use std::path::Path;

use metricforge_core::Tolerances;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::input::InputDocument;
use crate::CliError;

/// Writes every float as `{:.16e}` (17 significant digits) and delegates
/// layout to the wrapped formatter.
pub struct Sci<F>(pub F);

impl<F: Formatter> Formatter for Sci<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn encode<T: Serialize, F: Formatter>(value: &T, formatter: F) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci(formatter));
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization");
    buf
}

pub fn to_compact<T: Serialize>(value: &T) -> String {
    String::from_utf8(encode(value, CompactFormatter)).expect("JSON is UTF-8")
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    String::from_utf8(encode(value, PrettyFormatter::new())).expect("JSON is UTF-8")
}

/// Hex SHA-256 of the canonical compact encoding.
pub fn digest(doc: &InputDocument) -> String {
    hex::encode(Sha256::digest(to_compact(doc).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDocument {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name.
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub tolerances: Tolerances,
    pub results: serde_json::Value,
}

impl OutputDocument {
    pub fn new(
        command: Vec<String>,
        input: Option<&InputDocument>,
        tolerances: Tolerances,
        results: serde_json::Value,
    ) -> Self {
        OutputDocument {
            tool: "metricforge".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            input_digest: input.map(digest),
            tolerances,
            results,
        }
    }
}

/// Destination for `result.json` and CSV side files.
pub struct OutDir<'a>(pub Option<&'a Path>);

impl OutDir<'_> {
    pub fn prepare(&self) -> Result<(), CliError> {
        if let Some(dir) = self.0 {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        }
        Ok(())
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(dir) = self.0 {
            let path = dir.join(name);
            std::fs::write(&path, bytes)
                .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Run a CSV writer into memory and store the result.
    pub fn write_csv(
        &self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> metricforge_core::Result<()>,
    ) -> Result<(), CliError> {
        if self.0.is_some() {
            let mut buf = Vec::new();
            f(&mut buf)?;
            self.write(name, &buf)?;
        }
        Ok(())
    }

    pub fn enabled(&self) -> bool {
        self.0.is_some()
    }
}

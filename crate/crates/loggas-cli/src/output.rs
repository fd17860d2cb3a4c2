use serde::Serialize;
use std::path::Path;
use std::process::ExitCode;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_BAND: u8 = 4;

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: u8,
}

impl CliError {
    pub fn validation(kind: &str, message: impl Into<String>) -> Self {
        CliError { kind: kind.into(), message: message.into(), exit_code: EXIT_VALIDATION }
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("{}", serde_json::json!({ "error": self }));
        ExitCode::from(self.exit_code)
    }
}

impl From<loggas::Error> for CliError {
    fn from(e: loggas::Error) -> Self {
        use loggas::Error as E;
        let code = match e {
            E::Solver { .. } | E::WrongCutCount(_) | E::Geometry(_) | E::Resolution(_) => EXIT_SOLVER,
            _ => EXIT_VALIDATION,
        };
        CliError { kind: e.kind().into(), message: e.to_string(), exit_code: code }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::validation("json", e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// `{"command", "config", "result"}`: the resolved command next to its output.
pub fn envelope<C: Serialize, R: Serialize>(command: &C, result: &R) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(command)?;
    v["result"] = serde_json::to_value(result)?;
    Ok(v)
}

/// Write to `out` atomically, or to stdout.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => loggas::io::atomic_write(p, bytes).map_err(CliError::from),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| CliError::validation("io", e.to_string()))
        }
    }
}

pub fn json_bytes(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// CSV with a header line; values printed in shortest round-trip form.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s.into_bytes()
}

pub fn num(v: f64) -> String {
    format!("{v:?}")
}

//! File output: fixed numeric formatting, atomic writes, and the run
//! manifest.
//!
//! Every data file is UTF-8 with LF line endings and `%.12e` floats, and is
//! written to a temporary sibling then renamed into place once complete.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// `%.12e` rendering of a float: twelve fractional digits, signed two-digit
/// exponent.
pub fn e12(x: f64) -> String {
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

/// Write-temp-then-rename; the target appears only when complete.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Minimal JSON document model; floats render through [`e12`].
pub enum Json {
    Num(f64),
    Int(u64),
    Str(String),
    Null,
    Map(Vec<(String, Json)>),
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

impl Json {
    fn render_into(&self, out: &mut String, indent: usize) {
        match self {
            Json::Num(x) => out.push_str(&format!("\"{}\"", e12(*x))),
            Json::Int(x) => out.push_str(&x.to_string()),
            Json::Str(s) => out.push_str(&format!("\"{}\"", escape(s))),
            Json::Null => out.push_str("null"),
            Json::Map(entries) => {
                if entries.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                let pad = "  ".repeat(indent + 1);
                for (k, (key, value)) in entries.iter().enumerate() {
                    out.push_str(&pad);
                    out.push_str(&format!("\"{}\": ", escape(key)));
                    value.render_into(out, indent + 1);
                    if k + 1 < entries.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out.push('\n');
        out
    }
}

/// Run metadata written next to every data file; re-running with the echoed
/// configuration and seed reproduces the numeric outputs byte for byte on
/// the same build.
pub struct Manifest {
    pub config_echo: Vec<(String, String)>,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub timing: Vec<(String, f64)>,
}

impl Manifest {
    pub fn to_json(&self) -> Json {
        Json::Map(vec![
            (
                "config_echo".into(),
                Json::Map(
                    self.config_echo
                        .iter()
                        .map(|(k, v)| (k.clone(), Json::Str(v.clone())))
                        .collect(),
                ),
            ),
            (
                "tool_version".into(),
                Json::Str(env!("CARGO_PKG_VERSION").into()),
            ),
            ("seed".into(), Json::Int(self.seed)),
            (
                "outputs".into(),
                Json::Map(
                    self.outputs
                        .iter()
                        .enumerate()
                        .map(|(k, path)| (k.to_string(), Json::Str(path.clone())))
                        .collect(),
                ),
            ),
            (
                "timing".into(),
                Json::Map(
                    self.timing
                        .iter()
                        .map(|(k, v)| (format!("{k}_s"), Json::Num(*v)))
                        .collect(),
                ),
            ),
        ])
    }
}

/// Wall-clock phase timer feeding [`Manifest::timing`].
pub struct PhaseTimer {
    start: Instant,
    phases: Vec<(String, f64)>,
}

impl PhaseTimer {
    pub fn new() -> Self {
        PhaseTimer {
            start: Instant::now(),
            phases: Vec::new(),
        }
    }

    /// Close the current phase under `name` and start the next one.
    pub fn mark(&mut self, name: &str) {
        self.phases
            .push((name.to_string(), self.start.elapsed().as_secs_f64()));
        self.start = Instant::now();
    }

    pub fn into_phases(self) -> Vec<(String, f64)> {
        self.phases
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e12_matches_c_formatting() {
        assert_eq!(e12(1.0), "1.000000000000e+00");
        assert_eq!(e12(0.0), "0.000000000000e+00");
        assert_eq!(e12(-5e-7), "-5.000000000000e-07");
        assert_eq!(e12(2.997924580000e8), "2.997924580000e+08");
        assert_eq!(e12(1.23456789012345e-123), "1.234567890123e-123");
    }

    #[test]
    fn json_renders_fixed_order_and_escapes() {
        let doc = Json::Map(vec![
            ("b".into(), Json::Num(0.5)),
            ("a \"q\"".into(), Json::Null),
        ]);
        let text = doc.render();
        assert!(text.starts_with("{\n  \"b\": \"5.000000000000e-01\",\n"));
        assert!(text.contains("\\\"q\\\""));
    }
}

//! Text file formats.
//!
//! Everything is line-oriented UTF-8: `#` starts a comment, blank lines are
//! ignored, and the first significant line is a format tag. Files holding
//! key material or programmer secrets carry `SECRET` in their tag line;
//! tooling refuses to overwrite such files without explicit consent.
//!
//! Parsers here accept untrusted input: they never panic, and they bound
//! every allocation by the declared register caps before reserving memory.

use crate::circuit::GateSequence;
use crate::keying::KeyState;
use crate::protocol::PublicProgram;
use crate::reduction::ModifiedInstance;
use crate::sim::StateVector;
use num_complex::Complex64;

/// Cap on the register width of serialized states (2^16 amplitudes).
pub const MAX_STATE_FILE_QUBITS: usize = 16;

/// Cap on declared register widths in program headers.
pub const MAX_PROGRAM_FILE_QUBITS: usize = 40;

pub const STATE_TAG: &str = "AQC-STATE";
pub const KEY_TAG: &str = "AQC-KEY SECRET";
pub const PUBLIC_PROGRAM_TAG: &str = "AQC-PUBLIC-PROGRAM";
pub const MANIFEST_TAG: &str = "AQC-PROGRAM-SPEC";
pub const INSTANCE_TAG: &str = "AQC-INSTANCE SECRET";

/// Marker scanned for before overwriting files.
pub const SECRET_MARKER: &str = "SECRET";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl FormatError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        FormatError {
            line,
            message: message.into(),
        }
    }
}

/// Significant lines with their 1-based numbers; comments and blanks
/// stripped.
struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter_map(|(i, raw)| {
                let line = match raw.find('#') {
                    Some(p) => &raw[..p],
                    None => raw,
                };
                let trimmed = line.trim();
                (!trimmed.is_empty()).then_some((i + 1, trimmed))
            })
            .collect();
        Lines { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn expect_tag(&mut self, tag: &str) -> Result<(), FormatError> {
        match self.next() {
            Some((_, line)) if line == tag => Ok(()),
            Some((n, line)) => Err(FormatError::new(
                n,
                format!("expected `{tag}`, found `{line}`"),
            )),
            None => Err(FormatError::new(1, format!("missing `{tag}` header"))),
        }
    }

    fn expect_field(&mut self, key: &str) -> Result<(usize, &'a str), FormatError> {
        match self.next() {
            Some((n, line)) => {
                let mut parts = line.splitn(2, char::is_whitespace);
                let head = parts.next().unwrap_or("");
                if head != key {
                    return Err(FormatError::new(
                        n,
                        format!("expected `{key} …`, found `{line}`"),
                    ));
                }
                Ok((n, parts.next().map(str::trim).unwrap_or("")))
            }
            None => Err(FormatError::new(0, format!("missing `{key}` field"))),
        }
    }

    /// Remaining significant lines joined back into a text block.
    fn rest(&mut self) -> String {
        let mut out = String::new();
        while let Some((_, line)) = self.next() {
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    /// Lines up to (not including) the next line starting with `stop`.
    fn until(&mut self, stop: &str) -> String {
        let mut out = String::new();
        while let Some((_, line)) = self.peek() {
            if line.starts_with(stop) {
                break;
            }
            out.push_str(line);
            out.push('\n');
            self.pos += 1;
        }
        out
    }
}

fn parse_usize(line: usize, value: &str, what: &str) -> Result<usize, FormatError> {
    value
        .parse()
        .map_err(|_| FormatError::new(line, format!("bad {what} `{value}`")))
}

fn parse_u64(line: usize, value: &str, what: &str) -> Result<u64, FormatError> {
    value
        .parse()
        .map_err(|_| FormatError::new(line, format!("bad {what} `{value}`")))
}

fn fmt_amp(a: Complex64) -> String {
    format!("amp {:.16e} {:.16e}", a.re, a.im)
}

fn parse_amplitudes(
    lines: &mut Lines<'_>,
    num_qubits: usize,
) -> Result<Vec<Complex64>, FormatError> {
    let dim = 1usize << num_qubits;
    let mut amps = Vec::with_capacity(dim);
    for _ in 0..dim {
        let (n, rest) = lines.expect_field("amp")?;
        let mut parts = rest.split_whitespace();
        let re: f64 = parts
            .next()
            .ok_or_else(|| FormatError::new(n, "missing real part"))?
            .parse()
            .map_err(|_| FormatError::new(n, "bad real part"))?;
        let im: f64 = parts
            .next()
            .ok_or_else(|| FormatError::new(n, "missing imaginary part"))?
            .parse()
            .map_err(|_| FormatError::new(n, "bad imaginary part"))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(FormatError::new(n, "non-finite amplitude"));
        }
        if let Some(extra) = parts.next() {
            return Err(FormatError::new(n, format!("trailing token `{extra}`")));
        }
        amps.push(Complex64::new(re, im));
    }
    if let Some((n, line)) = lines.peek() {
        return Err(FormatError::new(n, format!("unexpected line `{line}`")));
    }
    Ok(amps)
}

fn state_qubits(lines: &mut Lines<'_>) -> Result<usize, FormatError> {
    let (n, value) = lines.expect_field("qubits")?;
    let qubits = parse_usize(n, value, "qubit count")?;
    if qubits == 0 || qubits > MAX_STATE_FILE_QUBITS {
        return Err(FormatError::new(
            n,
            format!("state files support 1..={MAX_STATE_FILE_QUBITS} qubits, got {qubits}"),
        ));
    }
    Ok(qubits)
}

/// Serialize a statevector.
pub fn write_state(state: &StateVector) -> String {
    let mut out = format!("{STATE_TAG}\nqubits {}\n", state.num_qubits());
    for a in state.amplitudes() {
        out.push_str(&fmt_amp(*a));
        out.push('\n');
    }
    out
}

/// Parse a statevector file; the amplitudes must be normalized.
pub fn parse_state(text: &str) -> Result<StateVector, FormatError> {
    let mut lines = Lines::new(text);
    lines.expect_tag(STATE_TAG)?;
    let qubits = state_qubits(&mut lines)?;
    let amps = parse_amplitudes(&mut lines, qubits)?;
    StateVector::from_amplitudes(qubits, amps).map_err(|e| FormatError::new(0, e.to_string()))
}

/// Serialize a key. The secret index never leaves the programmer: only the
/// program id and amplitudes are written.
pub fn write_key(key: &KeyState, program_id: &str) -> String {
    let mut out = format!(
        "{KEY_TAG}\nprogram {program_id}\nqubits {}\n",
        key.state.num_qubits()
    );
    for a in key.state.amplitudes() {
        out.push_str(&fmt_amp(*a));
        out.push('\n');
    }
    out
}

/// Parse a key file into its program id and (index-free) key state.
pub fn parse_key(text: &str) -> Result<(String, KeyState), FormatError> {
    let mut lines = Lines::new(text);
    lines.expect_tag(KEY_TAG)?;
    let (n, id) = lines.expect_field("program")?;
    if id.is_empty() {
        return Err(FormatError::new(n, "empty program id"));
    }
    let id = id.to_string();
    let qubits = state_qubits(&mut lines)?;
    let amps = parse_amplitudes(&mut lines, qubits)?;
    let state = StateVector::from_amplitudes(qubits, amps)
        .map_err(|e| FormatError::new(0, e.to_string()))?;
    Ok((
        id,
        KeyState {
            state,
            issued_index: None,
        },
    ))
}

/// The byte payload covered by a public program's signature: every header
/// field except the signature itself, plus the sequence text.
pub fn public_program_payload(program: &PublicProgram) -> String {
    format!(
        "program {}\nkey-qubits {}\ninput-qubits {}\nindex-qubits {}\nseed-digest {}\nsequence\n{}",
        program.program_id,
        program.key_qubits,
        program.input_qubits,
        program.index_qubits,
        program.seed_digest,
        program.sequence.to_text(),
    )
}

/// Serialize a public program artifact.
pub fn write_public_program(program: &PublicProgram) -> String {
    format!(
        "{PUBLIC_PROGRAM_TAG}\nsignature {}\n{}",
        hex::encode(&program.signature),
        public_program_payload(program),
    )
}

/// Parse a public program artifact. Structural checks only; signature
/// verification is the caller's job.
pub fn parse_public_program(text: &str) -> Result<PublicProgram, FormatError> {
    let mut lines = Lines::new(text);
    lines.expect_tag(PUBLIC_PROGRAM_TAG)?;
    let (n, sig_hex) = lines.expect_field("signature")?;
    let signature =
        hex::decode(sig_hex).map_err(|_| FormatError::new(n, "bad signature hex"))?;
    let (n, id) = lines.expect_field("program")?;
    if id.is_empty() {
        return Err(FormatError::new(n, "empty program id"));
    }
    let program_id = id.to_string();
    let (n, v) = lines.expect_field("key-qubits")?;
    let key_qubits = parse_usize(n, v, "key width")?;
    let (n, v) = lines.expect_field("input-qubits")?;
    let input_qubits = parse_usize(n, v, "input width")?;
    let (n, v) = lines.expect_field("index-qubits")?;
    let index_qubits = parse_usize(n, v, "index width")?;
    let (n, v) = lines.expect_field("seed-digest")?;
    if v.is_empty() || hex::decode(v).is_err() {
        return Err(FormatError::new(n, "bad seed digest hex"));
    }
    let seed_digest = v.to_string();
    if key_qubits == 0
        || input_qubits == 0
        || key_qubits + input_qubits > MAX_PROGRAM_FILE_QUBITS
        || index_qubits == 0
        || index_qubits > key_qubits
    {
        return Err(FormatError::new(
            n,
            format!(
                "inconsistent widths: key {key_qubits}, input {input_qubits}, index {index_qubits}"
            ),
        ));
    }
    let (n, _) = lines.expect_field("sequence")?;
    let block = lines.rest();
    let sequence = GateSequence::parse(&block)
        .map_err(|e| FormatError::new(n + e.line, e.kind.to_string()))?;
    if sequence.num_qubits() != key_qubits + input_qubits {
        return Err(FormatError::new(
            n,
            format!(
                "sequence acts on {} qubits, headers declare {}",
                sequence.num_qubits(),
                key_qubits + input_qubits
            ),
        ));
    }
    Ok(PublicProgram {
        program_id,
        key_qubits,
        input_qubits,
        index_qubits,
        seed_digest,
        signature,
        sequence,
    })
}

/// A parsed program-spec manifest: widths, seed, and file references. The
/// referenced sequence files are resolved by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramManifest {
    pub index_qubits: usize,
    pub key_qubits: usize,
    pub rng_seed: u64,
    pub gate_budget: Option<usize>,
    /// `(index, path)` pairs, one per program, each index exactly once.
    pub programs: Vec<(u64, String)>,
    pub dummy_pre_path: Option<String>,
    pub dummy_post_path: Option<String>,
}

/// Serialize a manifest.
pub fn write_manifest(manifest: &ProgramManifest) -> String {
    let mut out = format!(
        "{MANIFEST_TAG}\nindex-qubits {}\nkey-qubits {}\nseed {}\n",
        manifest.index_qubits, manifest.key_qubits, manifest.rng_seed
    );
    if let Some(budget) = manifest.gate_budget {
        out.push_str(&format!("budget {budget}\n"));
    }
    for (i, path) in &manifest.programs {
        out.push_str(&format!("program {i} {path}\n"));
    }
    if let Some(p) = &manifest.dummy_pre_path {
        out.push_str(&format!("m1 {p}\n"));
    }
    if let Some(p) = &manifest.dummy_post_path {
        out.push_str(&format!("m2 {p}\n"));
    }
    out
}

/// Parse a manifest file.
pub fn parse_manifest(text: &str) -> Result<ProgramManifest, FormatError> {
    let mut lines = Lines::new(text);
    lines.expect_tag(MANIFEST_TAG)?;
    let (n, v) = lines.expect_field("index-qubits")?;
    let index_qubits = parse_usize(n, v, "index width")?;
    if index_qubits == 0 || index_qubits >= 20 {
        return Err(FormatError::new(n, format!("index width {index_qubits} unsupported")));
    }
    let (n, v) = lines.expect_field("key-qubits")?;
    let key_qubits = parse_usize(n, v, "key width")?;
    if key_qubits < index_qubits || key_qubits > MAX_PROGRAM_FILE_QUBITS {
        return Err(FormatError::new(n, format!("key width {key_qubits} unsupported")));
    }
    let (n, v) = lines.expect_field("seed")?;
    let rng_seed = parse_u64(n, v, "seed")?;
    let mut gate_budget = None;
    let mut programs: Vec<(u64, String)> = Vec::new();
    let mut dummy_pre_path = None;
    let mut dummy_post_path = None;
    while let Some((n, line)) = lines.next() {
        let mut parts = line.splitn(2, char::is_whitespace);
        let head = parts.next().unwrap_or("");
        let rest = parts.next().map(str::trim).unwrap_or("");
        match head {
            "budget" => gate_budget = Some(parse_usize(n, rest, "budget")?),
            "program" => {
                let mut sub = rest.splitn(2, char::is_whitespace);
                let idx = parse_u64(n, sub.next().unwrap_or(""), "program index")?;
                let path = sub.next().map(str::trim).unwrap_or("");
                if path.is_empty() {
                    return Err(FormatError::new(n, "missing program path"));
                }
                if idx >= (1u64 << index_qubits) {
                    return Err(FormatError::new(n, format!("program index {idx} out of range")));
                }
                if programs.iter().any(|(i, _)| *i == idx) {
                    return Err(FormatError::new(n, format!("duplicate program index {idx}")));
                }
                programs.push((idx, path.to_string()));
            }
            "m1" | "m2" => {
                if rest.is_empty() {
                    return Err(FormatError::new(n, format!("missing {head} path")));
                }
                let slot = if head == "m1" {
                    &mut dummy_pre_path
                } else {
                    &mut dummy_post_path
                };
                if slot.is_some() {
                    return Err(FormatError::new(n, format!("duplicate {head} entry")));
                }
                *slot = Some(rest.to_string());
            }
            other => {
                return Err(FormatError::new(n, format!("unknown field `{other}`")));
            }
        }
    }
    let expected = 1u64 << index_qubits;
    if programs.len() as u64 != expected {
        return Err(FormatError::new(
            0,
            format!("need {expected} program entries, got {}", programs.len()),
        ));
    }
    Ok(ProgramManifest {
        index_qubits,
        key_qubits,
        rng_seed,
        gate_budget,
        programs,
        dummy_pre_path,
        dummy_post_path,
    })
}

/// Serialize a modified instance bundle, secrets included.
pub fn write_instance(instance: &ModifiedInstance, rng_seed: u64) -> String {
    let mut out = format!("{INSTANCE_TAG}\nseed {rng_seed}\n");
    for (name, seq) in [
        ("base", &instance.base),
        ("v-left", &instance.v_left),
        ("v-right", &instance.v_right),
        ("built", &instance.built),
        ("shuffled", &instance.shuffled),
    ] {
        out.push_str(&format!("section {name}\n"));
        out.push_str(&seq.to_text());
    }
    out
}

/// Parse an instance bundle, returning its seed and contents.
pub fn parse_instance(text: &str) -> Result<(u64, ModifiedInstance), FormatError> {
    let mut lines = Lines::new(text);
    lines.expect_tag(INSTANCE_TAG)?;
    let (n, v) = lines.expect_field("seed")?;
    let rng_seed = parse_u64(n, v, "seed")?;
    let mut sections: Vec<(String, GateSequence)> = Vec::new();
    while let Some((n, line)) = lines.next() {
        let Some(name) = line.strip_prefix("section ") else {
            return Err(FormatError::new(n, format!("expected `section …`, found `{line}`")));
        };
        let block = lines.until("section ");
        let seq = GateSequence::parse(&block)
            .map_err(|e| FormatError::new(n + e.line, e.kind.to_string()))?;
        sections.push((name.trim().to_string(), seq));
    }
    let mut take = |want: &str| -> Result<GateSequence, FormatError> {
        sections
            .iter()
            .position(|(name, _)| name == want)
            .map(|i| sections.remove(i).1)
            .ok_or_else(|| FormatError::new(0, format!("missing section `{want}`")))
    };
    let base = take("base")?;
    let v_left = take("v-left")?;
    let v_right = take("v-right")?;
    let built = take("built")?;
    let shuffled = take("shuffled")?;
    if let Some((name, _)) = sections.first() {
        return Err(FormatError::new(0, format!("unknown section `{name}`")));
    }
    for (name, v) in [("v-left", &v_left), ("v-right", &v_right)] {
        if v.num_qubits() != 1 {
            return Err(FormatError::new(
                0,
                format!("section `{name}` must act on one qubit"),
            ));
        }
    }
    let width = base.num_qubits() + 1;
    for (name, s) in [("built", &built), ("shuffled", &shuffled)] {
        if s.num_qubits() != width {
            return Err(FormatError::new(
                0,
                format!(
                    "section `{name}` acts on {} qubits, expected {width}",
                    s.num_qubits()
                ),
            ));
        }
    }
    Ok((
        rng_seed,
        ModifiedInstance {
            base,
            v_left,
            v_right,
            built,
            shuffled,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::keying::{issue_key, KeySecrets};
    use crate::sim::apply;

    fn plus_state() -> StateVector {
        apply(
            &GateSequence::new(1, vec![Gate::H { target: 0 }]).unwrap(),
            &StateVector::zero(1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn state_round_trip() {
        let state = plus_state();
        let text = write_state(&state);
        let back = parse_state(&text).unwrap();
        assert_eq!(state, back);
    }

    #[test]
    fn state_rejects_wrong_amp_count() {
        let text = format!("{STATE_TAG}\nqubits 2\namp 1.0 0.0\n");
        assert!(parse_state(&text).is_err());
    }

    #[test]
    fn state_rejects_unnormalized() {
        let text = format!("{STATE_TAG}\nqubits 1\namp 1.0 0.0\namp 1.0 0.0\n");
        assert!(parse_state(&text).is_err());
    }

    #[test]
    fn state_rejects_oversized_registers() {
        let text = format!("{STATE_TAG}\nqubits 30\n");
        let err = parse_state(&text).unwrap_err();
        assert!(err.message.contains("qubits"));
    }

    #[test]
    fn key_round_trip_drops_index() {
        let key = issue_key(1, &KeySecrets::sample(2, 5).unwrap(), 2, 1).unwrap();
        let text = write_key(&key, "demo");
        assert!(text.starts_with(KEY_TAG));
        assert!(!text.contains("index"));
        let (id, back) = parse_key(&text).unwrap();
        assert_eq!(id, "demo");
        assert_eq!(back.issued_index, None);
        assert!((back.state.fidelity(&key.state).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn manifest_round_trip() {
        let manifest = ProgramManifest {
            index_qubits: 1,
            key_qubits: 3,
            rng_seed: 42,
            gate_budget: Some(50_000),
            programs: vec![(0, "u0.seq".into()), (1, "u1.seq".into())],
            dummy_pre_path: Some("m1.seq".into()),
            dummy_post_path: None,
        };
        let text = write_manifest(&manifest);
        assert_eq!(parse_manifest(&text).unwrap(), manifest);
    }

    #[test]
    fn manifest_requires_all_programs() {
        let text = format!("{MANIFEST_TAG}\nindex-qubits 1\nkey-qubits 2\nseed 1\nprogram 0 a.seq\n");
        let err = parse_manifest(&text).unwrap_err();
        assert!(err.message.contains("program entries"));
    }

    #[test]
    fn manifest_rejects_duplicate_indices() {
        let text = format!(
            "{MANIFEST_TAG}\nindex-qubits 1\nkey-qubits 2\nseed 1\nprogram 0 a.seq\nprogram 0 b.seq\n"
        );
        assert!(parse_manifest(&text).is_err());
    }

    #[test]
    fn instance_round_trip() {
        use crate::shuffle::ShuffleConfig;
        let base = GateSequence::new(1, vec![Gate::H { target: 0 }]).unwrap();
        let v = GateSequence::new(1, vec![Gate::Ry { target: 0, angle: 0.4 }]).unwrap();
        let inst =
            crate::reduction::build_modified_instance(&base, &v, &v, &ShuffleConfig::new(10, 30, 3))
                .unwrap();
        let text = write_instance(&inst, 3);
        let (seed, back) = parse_instance(&text).unwrap();
        assert_eq!(seed, 3);
        assert_eq!(back.base, inst.base);
        assert_eq!(back.built, inst.built);
        assert_eq!(back.shuffled, inst.shuffled);
    }

    #[test]
    fn instance_rejects_missing_sections() {
        let text = format!("{INSTANCE_TAG}\nseed 1\nsection base\nqubits 1\nH 0\n");
        let err = parse_instance(&text).unwrap_err();
        assert!(err.message.contains("missing section"));
    }

    #[test]
    fn parsers_reject_wrong_tags() {
        assert!(parse_state("AQC-KEY SECRET\nqubits 1\n").is_err());
        assert!(parse_key("AQC-STATE\nqubits 1\n").is_err());
        assert!(parse_manifest("garbage").is_err());
        assert!(parse_instance("").is_err());
    }
}

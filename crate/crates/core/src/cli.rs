//! The run driver behind the `energylab` binary. A [`RunConfig`] is built
//! from flags or a JSON file; [`run`] resolves every input, executes one
//! command and returns the text to print together with the exact verdict.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::claims::{
    balance_exponents, check, reports_to_csv, reports_to_json, scan, scan_to_csv, scan_to_json, Bound, ClaimId,
    ClaimInputs, ClaimReport, ScanReport, ScanSpec,
};
use crate::convexfn::ConvexFn;
use crate::energy::{energy, Exponent};
use crate::error::{Error, Result};
use crate::generators::FamilySpec;
use crate::incidence::{count_incidences_hash, count_incidences_naive, line_energy_experiment, parse_lines, parse_points};
use crate::numeric::{parse_exponent, parse_rational, Scalar, Tolerance};
use crate::regularize::{decomp, verify_certificate, DecompositionCertificate};
use crate::set::{FiniteSet, SetOp};
use crate::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Gen,
    Energy,
    Decomp,
    Verify,
    Check,
    Scan,
    Incidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every option of every command. Set descriptors are either a path to a
/// set file or a sized family spec such as `gp:1:2:64`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub set: Option<String>,
    #[serde(default)]
    pub with: Option<String>,
    #[serde(default)]
    pub a: Option<String>,
    #[serde(default)]
    pub b: Option<String>,
    #[serde(default)]
    pub c: Option<String>,
    #[serde(default)]
    pub q: Option<String>,
    #[serde(default)]
    pub r: Option<String>,
    #[serde(default)]
    pub u: Option<String>,
    #[serde(default)]
    pub v: Option<String>,
    #[serde(default)]
    pub t: Option<u64>,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub family_b: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub k: Option<String>,
    #[serde(default)]
    pub c1: Option<String>,
    #[serde(default)]
    pub op: Option<SetOp>,
    #[serde(default)]
    pub qr_op: Option<SetOp>,
    #[serde(default)]
    pub sign: Option<SetOp>,
    #[serde(default)]
    pub claim: Option<String>,
    #[serde(default)]
    pub f: Option<String>,
    #[serde(default)]
    pub g: Option<String>,
    #[serde(default)]
    pub lambda: Option<String>,
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub b1: Option<String>,
    #[serde(default)]
    pub b2: Option<String>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub cert: Option<PathBuf>,
    #[serde(default)]
    pub points: Option<PathBuf>,
    #[serde(default)]
    pub lines: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub sequential: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            set: None,
            with: None,
            a: None,
            b: None,
            c: None,
            q: None,
            r: None,
            u: None,
            v: None,
            t: None,
            family: None,
            family_b: None,
            n: None,
            k: None,
            c1: None,
            op: None,
            qr_op: None,
            sign: None,
            claim: None,
            f: None,
            g: None,
            lambda: None,
            sizes: None,
            b1: None,
            b2: None,
            tau: None,
            cert: None,
            points: None,
            lines: None,
            out: None,
            format: None,
            sequential: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a JSON config and makes its relative paths relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.cert);
        fix(&mut self.points);
        fix(&mut self.lines);
        fix(&mut self.out);
        for s in [
            &mut self.set,
            &mut self.with,
            &mut self.a,
            &mut self.b,
            &mut self.c,
            &mut self.q,
            &mut self.r,
            &mut self.u,
            &mut self.v,
        ]
        .into_iter()
        .flatten()
        {
            let candidate = base.join(&*s);
            if Path::new(s).is_relative() && candidate.is_file() {
                *s = candidate.to_string_lossy().into_owned();
            }
        }
    }

    fn tolerance(&self) -> Result<Tolerance> {
        self.tau.map(Tolerance::new).transpose().map(Option::unwrap_or_default)
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }

    fn need<'a>(&self, v: &'a Option<String>, flag: &str) -> Result<&'a str> {
        v.as_deref().ok_or_else(|| {
            Error::InvalidParameter(format!("{} needs --{flag}", command_name(self.command)))
        })
    }
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Gen => "gen",
        Command::Energy => "energy",
        Command::Decomp => "decomp",
        Command::Verify => "verify",
        Command::Check => "check",
        Command::Scan => "scan",
        Command::Incidence => "incidence",
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    /// Text for standard output.
    pub stdout: String,
    /// Files written.
    pub artifacts: Vec<PathBuf>,
    /// False iff an exact assertion failed.
    pub exact_ok: bool,
}

/// Loads a set from a file path, an inline list such as `{1, 2, 5/2}`, or
/// a sized family spec.
pub fn resolve_set(desc: &str, tol: Tolerance) -> Result<FiniteSet> {
    if let Some(inner) = desc.trim().strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
        return FiniteSet::parse_text(&inner.replace(',', "\n"), tol);
    }
    let path = Path::new(desc);
    if path.is_file() {
        return FiniteSet::read_file(path, tol);
    }
    match FamilySpec::parse_sized(desc) {
        Ok((spec, n)) => spec.generate(n),
        Err(e) => Err(Error::InvalidParameter(format!(
            "{desc:?} is neither an existing set file nor a sized family spec like ap:0:1:64 ({e})"
        ))),
    }
}

fn opt_set(desc: &Option<String>, tol: Tolerance) -> Result<Option<FiniteSet>> {
    desc.as_deref().map(|d| resolve_set(d, tol)).transpose()
}

fn opt_fn(s: &Option<String>) -> Result<Option<ConvexFn>> {
    s.as_deref().map(str::parse).transpose()
}

fn opt_k(s: &Option<String>) -> Result<Option<Exponent>> {
    s.as_deref().map(parse_exponent).transpose()
}

fn ensure_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("input file {} does not exist", p.display())))
    }
}

/// Writes `content` to `out` if given, otherwise hands it back for stdout.
fn deliver(content: String, out: &Option<PathBuf>, summary: impl FnOnce(&Path) -> String) -> Result<RunOutput> {
    match out {
        Some(path) => {
            std::fs::write(path, &content)
                .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))?;
            Ok(RunOutput { stdout: summary(path), artifacts: vec![path.clone()], exact_ok: true })
        }
        None => Ok(RunOutput { stdout: content, artifacts: Vec::new(), exact_ok: true }),
    }
}

/// Serializes claim reports; CSV has the fixed column set.
pub fn emit_report(reports: &[ClaimReport], format: Format, out: Option<&Path>) -> Result<String> {
    let text = match format {
        Format::Csv => reports_to_csv(reports)?,
        Format::Json => reports_to_json(reports)? + "\n",
    };
    if let Some(path) = out {
        std::fs::write(path, &text)?;
    }
    Ok(text)
}

pub fn emit_scan(report: &ScanReport, format: Format, out: Option<&Path>) -> Result<String> {
    let text = match format {
        Format::Csv => scan_to_csv(report)?,
        Format::Json => scan_to_json(report)? + "\n",
    };
    if let Some(path) = out {
        std::fs::write(path, &text)?;
    }
    Ok(text)
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let tol = cfg.tolerance()?;
    for p in [&cfg.cert, &cfg.points, &cfg.lines].into_iter().flatten() {
        ensure_file(p)?;
    }
    match cfg.command {
        Command::Gen => run_gen(cfg),
        Command::Energy => run_energy(cfg, tol),
        Command::Decomp => run_decomp(cfg, tol),
        Command::Verify => run_verify(cfg),
        Command::Check => run_check(cfg, tol),
        Command::Scan => run_scan(cfg),
        Command::Incidence => run_incidence(cfg, tol),
    }
}

fn run_gen(cfg: &RunConfig) -> Result<RunOutput> {
    let desc = cfg.need(&cfg.family, "family")?;
    let (spec, n) = match cfg.n {
        Some(n) => (desc.parse::<FamilySpec>()?, n),
        None => FamilySpec::parse_sized(desc)?,
    };
    let set = spec.generate(n)?;
    let len = set.len();
    deliver(set.to_text(), &cfg.out, |p| format!("wrote {len} elements to {}\n", p.display()))
}

fn run_energy(cfg: &RunConfig, tol: Tolerance) -> Result<RunOutput> {
    let a = resolve_set(cfg.need(&cfg.set, "set")?, tol)?;
    let b = opt_set(&cfg.with, tol)?.unwrap_or_else(|| a.clone());
    let k = opt_k(&cfg.k)?.unwrap_or_else(|| Exponent::from_integer(2));
    let op = cfg.op.unwrap_or(SetOp::Diff);
    let e = energy(&a, &b, k, op)?;
    let text = match cfg.format {
        Some(Format::Json) => {
            let doc = serde_json::json!({
                "k": k.to_string(),
                "op": op,
                "value": e.value,
                "exact": e.value.is_exact(),
                "support": e.terms(),
                "size_a": a.len(),
                "size_b": b.len(),
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        _ => format!("E_{k}^{op}(A, B) = {}\nsupport = {}\n", e.value, e.terms()),
    };
    deliver(text.clone(), &cfg.out, |_| text)
}

fn run_decomp(cfg: &RunConfig, tol: Tolerance) -> Result<RunOutput> {
    let a = resolve_set(cfg.need(&cfg.a, "A")?, tol)?;
    let v = opt_set(&cfg.v, tol)?.unwrap_or_else(|| a.clone());
    let k = opt_k(&cfg.k)?.unwrap_or_else(|| Exponent::from_integer(2));
    let c1 = match &cfg.c1 {
        Some(s) => parse_rational(s)?,
        None => parse_rational("1/2")?,
    };
    let op = cfg.op.unwrap_or(SetOp::Diff);
    let cert = decomp(&a, &v, op, k, &c1)?;
    let report = verify_certificate(&cert);
    let summary = format!(
        "|A| = {}, |B| = {}, |C| = {}, t = {}, |D_t| = {}, iterations = {}, verification: {}\n",
        cert.a.len(),
        cert.b.len(),
        cert.c.len(),
        cert.t,
        cert.d_t.len(),
        cert.iterations,
        if report.passed() { "pass" } else { "FAIL" },
    );
    let mut out = deliver(cert.to_text(), &cfg.out, |p| format!("{summary}certificate written to {}\n", p.display()))?;
    if !report.passed() {
        for c in report.failures() {
            let _ = writeln!(out.stdout, "{c}");
        }
    }
    out.exact_ok = report.passed();
    Ok(out)
}

fn run_verify(cfg: &RunConfig) -> Result<RunOutput> {
    let path = cfg
        .cert
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("verify needs a certificate path".into()))?;
    let cert = DecompositionCertificate::from_text(&std::fs::read_to_string(path)?)?;
    let report = verify_certificate(&cert);
    let passed = report.passed();
    let mut text = report.to_string();
    let _ = writeln!(text, "{}", if passed { "certificate verified" } else { "certificate REJECTED" });
    let mut out = deliver(text, &cfg.out, |p| format!("report written to {}\n", p.display()))?;
    out.exact_ok = passed;
    Ok(out)
}

fn claim_inputs(cfg: &RunConfig, tol: Tolerance) -> Result<ClaimInputs> {
    let desc = cfg.need(&cfg.a, "A")?;
    let mut inputs = ClaimInputs::new(resolve_set(desc, tol)?).label(desc);
    inputs.b = opt_set(&cfg.b, tol)?;
    inputs.c = opt_set(&cfg.c, tol)?;
    inputs.q = opt_set(&cfg.q, tol)?;
    inputs.r = opt_set(&cfg.r, tol)?;
    inputs.u = opt_set(&cfg.u, tol)?;
    inputs.v = opt_set(&cfg.v, tol)?;
    inputs.t = cfg.t;
    inputs.f = opt_fn(&cfg.f)?;
    inputs.g = opt_fn(&cfg.g)?;
    inputs.k = opt_k(&cfg.k)?;
    inputs.c1 = cfg.c1.as_deref().map(parse_rational).transpose()?;
    inputs.lambda = cfg.lambda.as_deref().map(str::parse::<Scalar>).transpose()?;
    inputs.qr_op = cfg.qr_op;
    inputs.sign = cfg.sign;
    Ok(inputs)
}

fn run_check(cfg: &RunConfig, tol: Tolerance) -> Result<RunOutput> {
    let claim = cfg.need(&cfg.claim, "claim")?;
    if claim == "balance" {
        let b1: Bound = cfg.need(&cfg.b1, "b1")?.parse()?;
        let b2: Bound = cfg.need(&cfg.b2, "b2")?.parse()?;
        let (x, result) = balance_exponents(&b1, &b2)?;
        let text = match cfg.format {
            Some(Format::Json) => {
                serde_json::to_string_pretty(&serde_json::json!({
                    "b1": b1.to_string(),
                    "b2": b2.to_string(),
                    "x": crate::numeric::format_rational(&x),
                    "result": crate::numeric::format_rational(&result),
                }))? + "\n"
            }
            _ => format!(
                "x = {}\nresult = {}\n",
                crate::numeric::format_rational(&x),
                crate::numeric::format_rational(&result)
            ),
        };
        return deliver(text.clone(), &cfg.out, |_| text);
    }
    let id: ClaimId = claim.parse()?;
    let report = check(id, &claim_inputs(cfg, tol)?)?;
    let failures = report.exact_failures();
    let text = emit_report(std::slice::from_ref(&report), cfg.format.unwrap_or_default(), cfg.out.as_deref())?;
    Ok(RunOutput {
        stdout: match &cfg.out {
            Some(p) => format!("{} verdict: {}, report written to {}\n", id, report.verdict, p.display()),
            None => text,
        },
        artifacts: cfg.out.iter().cloned().collect(),
        exact_ok: failures.is_empty(),
    })
}

fn run_scan(cfg: &RunConfig) -> Result<RunOutput> {
    let id: ClaimId = cfg.need(&cfg.claim, "claim")?.parse()?;
    let family: FamilySpec = cfg.need(&cfg.family, "family")?.parse()?;
    let sizes = cfg
        .sizes
        .clone()
        .ok_or_else(|| Error::InvalidParameter("scan needs --sizes".into()))?;
    let mut spec = ScanSpec::new(id, family, sizes);
    spec.family_b = cfg.family_b.as_deref().map(str::parse).transpose()?;
    spec.f = opt_fn(&cfg.f)?;
    spec.g = opt_fn(&cfg.g)?;
    spec.k = opt_k(&cfg.k)?;
    let report = scan(&spec, cfg.exec())?;
    let text = emit_scan(&report, cfg.format.unwrap_or_default(), cfg.out.as_deref())?;
    let exact_ok = report.exact_failures().is_empty()
        && (id.pass_mode() != crate::claims::PassMode::Exact || report.verdict == crate::claims::Verdict::Pass);
    Ok(RunOutput {
        stdout: match &cfg.out {
            Some(p) => format!("{} scan verdict: {}, report written to {}\n", id, report.verdict, p.display()),
            None => text,
        },
        artifacts: cfg.out.iter().cloned().collect(),
        exact_ok,
    })
}

fn run_incidence(cfg: &RunConfig, tol: Tolerance) -> Result<RunOutput> {
    let exec = cfg.exec();
    if let (Some(pp), Some(lp)) = (&cfg.points, &cfg.lines) {
        let points = parse_points(&std::fs::read_to_string(pp)?)?;
        let lines = parse_lines(&std::fs::read_to_string(lp)?)?;
        let hash = count_incidences_hash(&points, &lines, exec);
        let naive = count_incidences_naive(&points, &lines, exec);
        let text = format!(
            "points = {}\nlines = {}\nincidences = {hash}\nnaive = {naive}\n",
            points.len(),
            lines.len()
        );
        let mut out = deliver(text.clone(), &cfg.out, |_| text)?;
        out.exact_ok = hash == naive;
        return Ok(out);
    }
    let a = resolve_set(
        cfg.a
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("incidence needs --points and --lines, or --A".into()))?,
        tol,
    )?;
    let b = opt_set(&cfg.b, tol)?.unwrap_or_else(|| a.clone());
    let r = line_energy_experiment(&a, &b)?;
    let text = format!(
        "|A| = {}\n|B| = {}\n|AB+A| = {}\nincidences = {}\n|A|^2|B| = {}\nlower bound: {}\nE4x(A) = {}\nrhs = {}\n",
        r.a_size,
        r.b_size,
        r.c_size,
        r.incidences,
        r.lower_bound,
        if r.lower_bound_holds() { "holds" } else { "FAILS" },
        r.e4_mult,
        crate::numeric::format_float(r.rhs.approx()),
    );
    let mut out = deliver(text.clone(), &cfg.out, |_| text)?;
    out.exact_ok = r.lower_bound_holds();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"command": "gen", "family": "ap:0:1:4"}"#).is_ok());
        let err = RunConfig::from_json(r#"{"command": "gen", "famly": "ap:0:1:4"}"#).unwrap_err();
        assert!(err.to_string().contains("famly"), "{err}");
    }

    #[test]
    fn gen_and_energy() {
        let mut cfg = RunConfig::new(Command::Gen);
        cfg.family = Some("ap:0:1:4".into());
        assert_eq!(run(&cfg).unwrap().stdout, "0\n1\n2\n3\n");
        let mut cfg = RunConfig::new(Command::Energy);
        cfg.set = Some("ap:0:1:4".into());
        let out = run(&cfg).unwrap();
        assert!(out.stdout.starts_with("E_2^diff(A, B) = 44\n"), "{}", out.stdout);
    }

    #[test]
    fn balance_command() {
        let mut cfg = RunConfig::new(Command::Check);
        cfg.claim = Some("balance".into());
        cfg.b1 = Some("13/6:-1/6".into());
        cfg.b2 = Some("-14/19:11/19".into());
        assert_eq!(run(&cfg).unwrap().stdout, "x = 331/85\nresult = 129/85\n");
    }

    #[test]
    fn bad_descriptors_explain_themselves() {
        let mut cfg = RunConfig::new(Command::Energy);
        cfg.set = Some("no-such-file.txt".into());
        let err = run(&cfg).unwrap_err().to_string();
        assert!(err.contains("neither an existing set file"), "{err}");
    }

    #[test]
    fn inline_sets() {
        let s = resolve_set("{3, 1, 2}", Tolerance::default()).unwrap();
        assert_eq!(s, FiniteSet::from_ints(&[1, 2, 3]));
    }
}

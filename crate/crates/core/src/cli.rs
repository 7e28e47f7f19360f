//! The `cocalc` command line.
//!
//! Exit status: 0 on success, 1 on a domain failure, 2 on a usage or parse
//! error. Every diagnostic is a single line starting with `error:`.

use std::ffi::OsString;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::bisim::{bisim_rational_verdict, bisim_to_depth, pretty, RationalHandle, Style};
use crate::coterm::embed;
use crate::context::Context;
use crate::eqs::{parse_equations, parse_op, EqsError};
use crate::inhabit::{enumerate_inhabitants, generate_search_forest, parse_context, parse_type, stlc_for};
use crate::laws::check_monad_laws;
use crate::random::Generator;
use crate::signature::{builtin_signature, finite_ops, parse_signature, validate_signature, Op, Signature, SignatureError};
use crate::system::{EquationSystem, SystemError};

#[derive(Parser, Debug)]
#[command(name = "cocalc", version, about = "Infinite terms with binders: unfold, compare, check laws, search for inhabitants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the depth-bounded unfolding of an unknown
    Unfold(UnfoldArgs),
    /// Compare two unknowns up to a depth, or exactly with --rational
    Bisim(BisimArgs),
    /// Run the monad law suite on random rational terms
    Laws(LawsArgs),
    /// Search forest or inhabitants of a simple type
    Inhabit(InhabitArgs),
    /// Spot-check a signature's arity function
    CheckSig(CheckSigArgs),
}

#[derive(Args, Debug)]
pub struct SigArgs {
    /// Built-in name (stlc, untyped-forests, typed-forests) or a signature file
    #[arg(long)]
    pub sig: String,
    /// Number of atoms, or a comma separated list of atom names
    #[arg(long, default_value = "1")]
    pub atoms: String,
}

#[derive(Args, Debug)]
pub struct UnfoldArgs {
    #[command(flatten)]
    pub sig: SigArgs,
    #[arg(long)]
    pub eqs: PathBuf,
    #[arg(long)]
    pub root: String,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, value_enum, default_value_t = StyleArg::Named)]
    pub style: StyleArg,
}

#[derive(Args, Debug)]
pub struct BisimArgs {
    #[command(flatten)]
    pub sig: SigArgs,
    #[arg(long)]
    pub eqs: PathBuf,
    #[arg(long)]
    pub root: String,
    /// Second equation file; defaults to --eqs
    #[arg(long)]
    pub eqs2: Option<PathBuf>,
    /// Second unknown; defaults to --root
    #[arg(long)]
    pub root2: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub depth: usize,
    /// Exit 1 when the terms differ
    #[arg(long)]
    pub expect_equal: bool,
    /// Decide exactly instead of up to --depth
    #[arg(long)]
    pub rational: bool,
}

#[derive(Args, Debug)]
pub struct LawsArgs {
    #[command(flatten)]
    pub sig: SigArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct InhabitArgs {
    #[arg(long = "type")]
    pub ty: String,
    /// Context as `x:A, y:B`
    #[arg(long, default_value = "")]
    pub context: String,
    #[arg(long, default_value_t = 8)]
    pub fuel: usize,
    #[arg(long, value_enum, default_value_t = Mode::Terms)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = StyleArg::Named)]
    pub style: StyleArg,
}

#[derive(Args, Debug)]
pub struct CheckSigArgs {
    #[command(flatten)]
    pub sig: SigArgs,
    /// Constructor indices to check, e.g. `app<0,0>`; defaults to a probe set
    #[arg(long)]
    pub probe: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Named,
    Debruijn,
}

impl From<StyleArg> for Style {
    fn from(s: StyleArg) -> Style {
        match s {
            StyleArg::Named => Style::Named,
            StyleArg::Debruijn => Style::Debruijn,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Forest,
    Terms,
}

/// A failed command: exit status and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn domain(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn color_enabled() -> bool {
    std::env::var("COCALC_COLOR").map(|v| v != "0").unwrap_or(true)
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let color = color_enabled();
    let cmd = Cli::command().color(if color { ColorChoice::Auto } else { ColorChoice::Never });
    let parsed = cmd
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{}", e.render());
            return 0;
        }
        Err(e) => {
            let text = e.render().to_string();
            let line = match text.lines().next() {
                Some(l) if l.starts_with("error:") => l,
                _ => "error: no subcommand given, see --help",
            };
            let _ = writeln!(err, "{}", styled_error(line, color && std::io::stderr().is_terminal()));
            return 2;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let msg = f.message.replace('\n', " ");
            let _ = writeln!(err, "{}", styled_error(&format!("error: {msg}"), color && std::io::stderr().is_terminal()));
            f.code
        }
    }
}

fn styled_error(line: &str, color: bool) -> String {
    match (color, line.strip_prefix("error:")) {
        (true, Some(rest)) => format!("\x1b[1;31merror:\x1b[0m{rest}"),
        _ => line.to_string(),
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<i32, Failure> {
    let text = match cmd {
        Command::Unfold(a) => unfold(a)?,
        Command::Bisim(a) => return bisim(a, out),
        Command::Laws(a) => return laws(a, out),
        Command::Inhabit(a) => inhabit(a)?,
        Command::CheckSig(a) => return check_sig(a, out),
    };
    emit(out, &text)?;
    Ok(0)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| domain(format!("cannot write output: {e}")))
}

/// `3` means the atoms `0`, `1`, `2`; anything else is a comma list of names.
pub fn parse_atoms(text: &str) -> Result<Vec<String>, Failure> {
    let text = text.trim();
    if let Ok(n) = text.parse::<usize>() {
        if n == 0 {
            return Err(usage("--atoms must be at least 1"));
        }
        return Ok((0..n).map(|i| i.to_string()).collect());
    }
    let names: Vec<String> = text.split(',').map(|s| s.trim().to_string()).collect();
    if names.iter().any(|n| n.is_empty() || !n.chars().all(crate::lexer::is_ident_char)) {
        return Err(usage(format!("bad atom list `{text}`")));
    }
    Ok(names)
}

/// Built-in names win unless the argument contains a `/`.
pub fn resolve_signature(a: &SigArgs) -> Result<Signature, Failure> {
    let atoms = parse_atoms(&a.atoms)?;
    let atoms: Vec<&str> = atoms.iter().map(String::as_str).collect();
    if !a.sig.contains('/') {
        match builtin_signature(&a.sig, &atoms) {
            Ok(s) => return Ok(s),
            Err(SignatureError::UnknownSignature(_)) if fs::metadata(&a.sig).is_ok() => {}
            Err(e) => return Err(usage(e.to_string())),
        }
    }
    let text = read(&PathBuf::from(&a.sig))?;
    parse_signature(&text).map_err(|e| usage(format!("{}: {e}", a.sig)))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn system_failure(path: &Path, e: SystemError) -> Failure {
    let msg = format!("{}: {e}", path.display());
    match e {
        SystemError::Sorting { .. } | SystemError::Renaming { .. } => domain(msg),
        _ => usage(msg),
    }
}

fn load(sig: &Signature, path: &Path) -> Result<EquationSystem, Failure> {
    let text = read(path)?;
    parse_equations(&text, sig).map_err(|e| match e {
        EqsError::System(s) => system_failure(path, s),
        e => usage(format!("{}: {e}", path.display())),
    })
}

fn handle(es: EquationSystem, root: &str, path: &Path) -> Result<RationalHandle, Failure> {
    RationalHandle::new(es, root).map_err(|e| system_failure(path, e))
}

fn unfold(a: &UnfoldArgs) -> Result<String, Failure> {
    let sig = resolve_signature(&a.sig)?;
    let h = handle(load(&sig, &a.eqs)?, &a.root, &a.eqs)?;
    Ok(format!("{}\n", pretty(h.term(), a.depth, a.style.into())))
}

fn bisim(a: &BisimArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let sig = resolve_signature(&a.sig)?;
    let first = handle(load(&sig, &a.eqs)?, &a.root, &a.eqs)?;
    let path2 = a.eqs2.as_ref().unwrap_or(&a.eqs);
    let root2 = a.root2.as_deref().unwrap_or(&a.root);
    let second = handle(load(&sig, path2)?, root2, path2)?;
    if first.term().ctx() != second.term().ctx() || first.term().sort() != second.term().sort() {
        let text = format!(
            "different: {} : {} in [{}] vs {} : {} in [{}]\n",
            a.root,
            first.term().sort(),
            first.term().ctx(),
            root2,
            second.term().sort(),
            second.term().ctx()
        );
        emit(out, &text)?;
        return Ok(if a.expect_equal { 1 } else { 0 });
    }
    let (equal, text) = if a.rational {
        let v = bisim_rational_verdict(&first, &second).map_err(|e| domain(e.to_string()))?;
        let word = if v.equal { "equal" } else { "different" };
        (v.equal, format!("{word} (exact, {} states explored)\n", v.explored))
    } else {
        let eq = bisim_to_depth(first.term(), second.term(), a.depth);
        let word = if eq { "equal" } else { "different" };
        (eq, format!("{word} (to depth {})\n", a.depth))
    };
    emit(out, &text)?;
    Ok(if a.expect_equal && !equal { 1 } else { 0 })
}

fn laws(a: &LawsArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let sig = resolve_signature(&a.sig)?;
    if sig.as_finite().is_some() {
        return Err(usage("laws needs a built-in signature"));
    }
    let report = check_monad_laws(&sig, a.seed, a.trials, a.depth);
    emit(out, &report.to_string())?;
    Ok(if report.failures() > 0 { 1 } else { 0 })
}

fn inhabit(a: &InhabitArgs) -> Result<String, Failure> {
    let ty = parse_type(&a.ty).map_err(|e| usage(format!("--type: {e}")))?;
    let gamma: Vec<_> = parse_context(&a.context)
        .map_err(|e| usage(format!("--context: {e}")))?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let style: Style = a.style.into();
    match a.mode {
        Mode::Forest => {
            let f = generate_search_forest(&gamma, &ty);
            Ok(format!("{}\n", pretty(&f, a.fuel, style)))
        }
        Mode::Terms => {
            let sig = stlc_for(&gamma, &ty);
            let ctx = Context::from_outermost(gamma.iter().cloned());
            let mut text = String::new();
            for t in enumerate_inhabitants(&gamma, &ty, a.fuel) {
                let c = embed(&sig, &ctx, &t).map_err(|e| domain(e.to_string()))?;
                text.push_str(&pretty(&c, t.height() + 1, style));
                text.push('\n');
            }
            Ok(text)
        }
    }
}

/// Default probe: the declared constructors of a file signature, or the
/// random generator's constructors for a built-in one.
pub fn default_probe(sig: &Signature) -> Vec<Op> {
    match sig.as_finite() {
        Some(f) => finite_ops(f),
        None => Generator::new(sig).probe_ops(),
    }
}

fn check_sig(a: &CheckSigArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let sig = resolve_signature(&a.sig)?;
    let probe = if a.probe.is_empty() {
        default_probe(&sig)
    } else {
        a.probe
            .iter()
            .map(|p| parse_op(p, &sig).map_err(|e| usage(format!("--probe {p}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    let report = validate_signature(&sig, &probe);
    emit(out, &format!("{report}\n"))?;
    Ok(if report.is_valid() { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("cocalc").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn atoms_flag() {
        assert_eq!(parse_atoms("1").unwrap(), vec!["0"]);
        assert_eq!(parse_atoms("3").unwrap(), vec!["0", "1", "2"]);
        assert_eq!(parse_atoms("a, b").unwrap(), vec!["a", "b"]);
        assert!(parse_atoms("0").is_err());
        assert!(parse_atoms("a,,b").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        let (code, out, err) = call(&["frobnicate"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(err.starts_with("error:"));
        assert_eq!(err.lines().count(), 1);
        let (code, _, err) = call(&["inhabit", "--type", "0 ->"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn inhabit_terms() {
        let (code, out, _) = call(&["inhabit", "--type", "(0->0)->0->0", "--fuel", "8"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 3);
        let (code, out, _) = call(&["inhabit", "--type", "0"]);
        assert_eq!(code, 0);
        assert!(out.is_empty());
    }

    #[test]
    fn check_sig_builtin_and_probe() {
        let (code, out, _) = call(&["check-sig", "--sig", "stlc"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.ends_with("valid on probe\n"));
        let (code, out, _) = call(&["check-sig", "--sig", "stlc", "--probe", "app<0,0>", "--probe", "lam<0,0>"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 3);
        let (code, _, err) = call(&["check-sig", "--sig", "stlc", "--probe", "tup<1>"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error:"));
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn cocalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocalc"))
        .args(args)
        .current_dir(root())
        .env("COCALC_COLOR", "0")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str) -> String {
    fs::read_to_string(root().join("tests/golden").join(name)).unwrap()
}

#[test]
fn unfold_matches_golden() {
    let o = cocalc(&["unfold", "--sig", "untyped-forests", "--eqs", "data/omega.eq", "--root", "S", "--depth", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("omega_depth4.named.txt"));
    let o = cocalc(&["unfold", "--sig", "stlc", "--eqs", "data/church.eq", "--root", "Inf", "--depth", "4", "--style", "debruijn"]);
    assert_eq!(stdout(&o), golden("church_inf_depth4.debruijn.txt"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["laws", "--sig", "typed-forests", "--trials", "20", "--depth", "6", "--seed", "7"];
    let a = cocalc(&args);
    let b = cocalc(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn cycles_are_equal() {
    let base = ["bisim", "--sig", "stlc", "--eqs", "data/cycle_a.eq", "--root", "A", "--eqs2", "data/cycle_b.eq", "--root2", "B"];
    let o = cocalc(&[&base[..], &["--depth", "64", "--expect-equal"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "equal (to depth 64)\n");
    let o = cocalc(&[&base[..], &["--rational", "--expect-equal"]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("equal (exact"));
}

#[test]
fn expect_equal_fails_on_different_terms() {
    let o = cocalc(&["bisim", "--sig", "stlc", "--eqs", "data/church.eq", "--root", "Inf", "--root2", "Two", "--depth", "64", "--expect-equal"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "different (to depth 64)\n");
    let o = cocalc(&["bisim", "--sig", "stlc", "--eqs", "data/church.eq", "--root", "Inf", "--root2", "Two", "--rational"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn laws_report() {
    let o = cocalc(&["laws", "--sig", "stlc", "--atoms", "1", "--trials", "30", "--depth", "8", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "LAW right-unit trials=30 failures=0\nLAW left-unit trials=30 failures=0\nLAW associativity trials=30 failures=0\n"
    );
}

#[test]
fn inhabit_terms_and_forest() {
    let o = cocalc(&["inhabit", "--type", "(0->0)->0->0", "--fuel", "8", "--mode", "terms"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("inhabit_church_fuel8.txt"));
    let o = cocalc(&["inhabit", "--type", "((0->0)->0)->0", "--fuel", "10", "--mode", "terms"]);
    assert_eq!(stdout(&o), golden("inhabit_three_fuel10.txt"));
    let o = cocalc(&["inhabit", "--type", "0", "--mode", "terms"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let o = cocalc(&["inhabit", "--type", "0", "--context", "x : 0, f : 0->0", "--fuel", "6"]);
    assert_eq!(stdout(&o), "x0\nx1 x0\nx1 (x1 x0)\n");
    let o = cocalc(&["inhabit", "--type", "(0->0)->0->0", "--mode", "forest", "--fuel", "3"]);
    assert_eq!(stdout(&o), "λx0:0->0. λx1:0. … + …\n");
}

#[test]
fn check_sig_on_file_and_builtin() {
    let o = cocalc(&["check-sig", "--sig", "data/forests.sig"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ok lam : [v]t -> t\n"));
    let o = cocalc(&["check-sig", "--sig", "typed-forests", "--atoms", "a,b", "--probe", "tup<[a,b],a>", "--probe", "sum<a,2>"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn errors_are_one_line_and_prefixed() {
    let cases: [(&[&str], i32); 7] = [
        (&[], 2),
        (&["unfold", "--sig", "stlc", "--eqs", "missing.eq", "--root", "S"], 2),
        (&["unfold", "--sig", "nonsense", "--eqs", "data/church.eq", "--root", "S"], 2),
        (&["unfold", "--sig", "stlc", "--eqs", "data/church.eq", "--root", "Nope"], 2),
        (&["unfold", "--sig", "untyped-forests", "--eqs", "data/church.eq", "--root", "Inf"], 2),
        (&["inhabit", "--type", "<0,t>"], 2),
        (&["laws", "--sig", "stlc", "--atoms", "0"], 2),
    ];
    for (args, code) in cases {
        let o = cocalc(args);
        assert_eq!(o.status.code(), Some(code), "{args:?}");
        let err = stderr(&o);
        assert!(err.starts_with("error:"), "{args:?}: {err}");
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn unknown_probe_in_file_signature_is_a_usage_error() {
    let dir = std::env::temp_dir().join(format!("cocalc-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let sig = dir.join("bad.sig");
    fs::write(&sig, "sorts { t; u; } ops { c : t -> u; }").unwrap();
    let o = cocalc(&["check-sig", "--sig", sig.to_str().unwrap(), "--probe", "d"]);
    assert_eq!(o.status.code(), Some(2));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn help_goes_to_stdout() {
    let o = cocalc(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("inhabit"));
}

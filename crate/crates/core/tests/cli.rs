use clap::Parser;

use tower::cli::{execute, Cli, CliError};

const PROGRAMS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../programs");

fn run(args: &[&str]) -> Result<String, CliError> {
    let argv: Vec<String> = std::iter::once("tower".to_string())
        .chain(args.iter().map(|a| a.replace("@", PROGRAMS)))
        .collect();
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| panic!("{e}"));
    let mut out = String::new();
    execute(&cli.command, &mut out).map(|_| out)
}

#[test]
fn check_accepts_examples() {
    for f in ["push_front", "length", "wrong_unassign", "leak"] {
        let out = run(&["check", &format!("@/{f}.twr"), "--bound", "n=3"]).unwrap();
        assert!(out.contains("ok"), "{f}: {out}");
    }
}

#[test]
fn run_forward_and_back() {
    let out = run(&["run", "@/push_front.twr", "--input", "[1,2]", "6"]).unwrap();
    assert!(out.contains("[6,1,2]"), "{out}");
    let back = run(&["run", "@/push_front.twr", "--reverse", "--input", "[6,1,2]", "6"]).unwrap();
    assert!(back.contains("[1,2]") && !back.contains("[6,1,2]"), "{back}");
}

#[test]
fn run_reports_stuck_unassign_with_location() {
    match run(&["run", "@/wrong_unassign.twr", "--input", "3"]) {
        Err(e) => {
            assert_eq!(e.exit_code(), 1);
            assert!(e.to_string().contains("Stuck-UnAssign") && e.to_string().contains("4:3"), "{e}");
        }
        Ok(out) => panic!("ran to completion: {out}"),
    }
}

#[test]
fn run_reports_leak() {
    let e = run(&["run", "@/leak.twr", "--input", "3"]).unwrap_err();
    assert!(e.to_string().contains("Leak"), "{e}");
}

#[test]
fn corpus_list_names_every_op() {
    let out = run(&["corpus", "list"]).unwrap();
    for op in tower::ground::OPS {
        assert!(out.contains(op.name), "{}", op.name);
    }
}

#[test]
fn corpus_hi_distinguishes_hash_from_lset() {
    let lset = run(&["corpus", "hi", "--op", "lset.insert"]).unwrap();
    assert!(lset.contains("equal distributions"), "{lset}");
    let hash = run(&["corpus", "hi", "--op", "hash.insert"]).unwrap();
    assert!(hash.contains("different distributions"), "{hash}");
}

#[test]
fn unknown_file_is_a_diagnostic() {
    let e = run(&["check", "@/missing.twr"]).unwrap_err();
    assert_eq!(e.exit_code(), 1);
}

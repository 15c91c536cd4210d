use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bdenum"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Files {
    _dir: TempDir,
    path_rel: String,
    k4: String,
    k3: String,
    bij: String,
}

fn files() -> Files {
    let dir = TempDir::new().unwrap();
    let p = |name: &str, text: &str| write(dir.path(), name, text).display().to_string();
    Files {
        path_rel: p("path.rel", "domain 4\nrel E 2\n0 1\n1 2\n2 3\nend\n"),
        k4: p(
            "k4.graph",
            "graph 4 undirected\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n",
        ),
        k3: p("k3.graph", "format 1\ngraph 3 undirected\n0 1\n1 2\n0 2\n"),
        bij: p("s.bij", "domain 6\npred U 0 2 4\nperm f 1 2 3 4 5 0\n"),
        _dir: dir,
    }
}

#[test]
fn check_on_path() {
    let f = files();
    let o = run(&["check", &f.path_rel, "E x. E y. E(x,y)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "true\n");

    let o = run(&["check", &f.path_rel, "E x. E(x,x)"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "false\n"));
    let o = run(&["check", "--strict-exit", &f.path_rel, "E x. E(x,x)"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "check",
        "--oracle",
        &f.path_rel,
        "A x. E y. E(x,y) | E(y,x)",
    ]);
    assert_eq!(stdout(&o), "true\n");
}

#[test]
fn enum_routes_and_formats() {
    let f = files();
    let o = run(&["enum", &f.path_rel, "E(x,y)"]);
    assert_eq!(stdout(&o), "(0, 1)\n(1, 2)\n(2, 3)\n");
    let o = run(&["enum", "--oracle", &f.path_rel, "E(y,x)"]);
    assert_eq!(stdout(&o), "(0, 1)\n(1, 2)\n(2, 3)\n");

    let o = run(&["enum", &f.k4, "--as-structure", "E(x,x)"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());

    let o = run(&["enum", &f.bij, "U(x) & f(x) = y"]);
    assert_eq!(stdout(&o), "(0, 1)\n(2, 3)\n(4, 5)\n");
    let o = run(&[
        "enum",
        "--strategy",
        "disjoint-dnf",
        &f.bij,
        "U(x) & f(x) = y",
    ]);
    assert_eq!(stdout(&o), "(0, 1)\n(2, 3)\n(4, 5)\n");
}

#[test]
fn formula_from_file() {
    let f = files();
    let dir = TempDir::new().unwrap();
    let q = write(dir.path(), "q.fo", "E y. f(y) = x & U(y)\n");
    let o = run(&["enum", &f.bij, &format!("@{}", q.display())]);
    assert_eq!(stdout(&o), "(1)\n(3)\n(5)\n");
    let o = run(&["qe", &q.display().to_string()]);
    assert_eq!(stdout(&o), "U(f^-1(x))\n");
}

#[test]
fn subgraph_modes() {
    let f = files();
    let o = run(&["subgraph", &f.k4, &f.k3, "--count-only"]);
    assert_eq!(stdout(&o), "24\n");
    let o = run(&["subgraph", &f.k4, &f.k3, "--canonical"]);
    assert_eq!(stdout(&o).lines().count(), 4);
    let o = run(&[
        "subgraph",
        &f.k4,
        &f.k3,
        "--induced",
        "--degree-constrained",
    ]);
    assert_eq!(stdout(&o).lines().count(), 0);
}

#[test]
fn bench_and_reduce() {
    let f = files();
    let o = run(&["bench-delay", &f.bij, "U(x)", "--sizes", "1024,4096"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[0],
        "n\ttuples\tprecompute_steps\tmax_gap\tmean_gap\tfinal_gap"
    );
    assert!(lines[1].starts_with("1024\t") && lines[2].starts_with("4096\t"));

    let o = run(&["reduce", &f.path_rel]);
    let text = stdout(&o);
    assert!(text.starts_with("domain 15\n"));
    assert!(text.contains("# map 4 (0,1)"));
}

#[test]
fn deterministic_output() {
    let f = files();
    for args in [
        vec!["enum", f.bij.as_str(), "f(x) != y & U(y)"],
        vec![
            "bench-delay",
            f.bij.as_str(),
            "U(x) & f(x) != y",
            "--sizes",
            "300,500",
            "--seed",
            "7",
        ],
        vec!["subgraph", f.k4.as_str(), f.k3.as_str()],
        vec!["reduce", f.path_rel.as_str()],
    ] {
        assert_eq!(run(&args).stdout, run(&args).stdout);
    }
}

#[test]
fn input_errors_exit_two() {
    let f = files();
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.bij", "domain 2\nperm f 0 0\n");
    let o = run(&["check", &bad.display().to_string(), "true"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.bij:2:"), "{err}");

    let o = run(&["check", &f.bij, "E x. U(x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("<formula>:1:"));

    assert_eq!(run(&["check", &f.bij, "U(x)"]).status.code(), Some(2));
    assert_eq!(run(&["enum", &f.k4, "E(x,y)"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["check", "/nonexistent/file", "true"]).status.code(),
        Some(2)
    );
    let o = run(&["enum", "--oracle", "--budget", "10", &f.bij, "x = y"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn version() {
    let o = run(&["--version"]);
    assert_eq!(
        stdout(&o),
        format!("bdenum {}\nformat 1\n", env!("CARGO_PKG_VERSION"))
    );
}

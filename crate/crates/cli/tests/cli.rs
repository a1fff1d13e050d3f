use std::path::PathBuf;
use std::process::{Command, Output};

fn presentation(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("presentations")
        .join(name)
}

fn gsb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsb"))
        .args(args)
        .output()
        .expect("gsb runs")
}

fn body(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with("time:"))
        .map(str::to_owned)
        .collect()
}

#[test]
fn basis_of_one_generator() {
    let file = presentation("free_a_N1.pres");
    let out = gsb(&["basis", file.to_str().unwrap(), "--bound", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = body(&out);
    let start = lines
        .iter()
        .position(|l| l.starts_with("basis words"))
        .unwrap();
    let words: Vec<&str> = lines[start + 1..].iter().map(|l| l.trim()).collect();
    assert_eq!(
        words,
        [
            "a",
            "d a",
            "L{0}[a] a",
            "d^2 a",
            "d L{0}[a] a",
            "L{0}[a] L{0}[a] a"
        ]
    );
    assert!(String::from_utf8_lossy(&out.stdout)
        .lines()
        .last()
        .unwrap()
        .starts_with("time:"));
}

#[test]
fn output_and_trace_are_deterministic() {
    let file = presentation("hv.pres");
    let dir = std::env::temp_dir();
    let t1 = dir.join(format!("gsb-trace-a-{}", std::process::id()));
    let t2 = dir.join(format!("gsb-trace-b-{}", std::process::id()));
    let a = gsb(&[
        "envelope",
        file.to_str().unwrap(),
        "--trace",
        t1.to_str().unwrap(),
    ]);
    let b = gsb(&[
        "envelope",
        file.to_str().unwrap(),
        "--trace",
        t2.to_str().unwrap(),
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(body(&a), body(&b));
    let ta = std::fs::read_to_string(&t1).unwrap();
    let tb = std::fs::read_to_string(&t2).unwrap();
    assert_eq!(ta, tb);
    assert!(!ta.is_empty());
    for line in ta.lines() {
        let parts: Vec<&str> = line.split(" | ").collect();
        assert_eq!(parts.len(), 3, "{line}");
        assert!(["intersection", "inclusion"].contains(&parts[0]), "{line}");
        assert!(
            parts[2] == "trivial" || parts[2] == "skipped" || parts[2].starts_with("new "),
            "{line}"
        );
    }
    let _ = std::fs::remove_file(t1);
    let _ = std::fs::remove_file(t2);
}

#[test]
fn envelopes_are_special() {
    let hv = gsb(&["envelope", presentation("hv.pres").to_str().unwrap()]);
    assert!(body(&hv).contains(&"speciality: special".to_string()));
    let vir = gsb(&[
        "envelope",
        presentation("virasoro_N3.pres").to_str().unwrap(),
    ]);
    let lines = body(&vir);
    assert_eq!(vir.status.code(), Some(0));
    let i = lines.iter().position(|l| l == "new rules (1):").unwrap();
    assert_eq!(lines[i + 1].trim(), "L{2}[v] L{2}[v] v");
}

#[test]
fn low_caps_are_undetermined() {
    let out = gsb(&[
        "envelope",
        presentation("virasoro_N3.pres").to_str().unwrap(),
        "--cap-index",
        "2",
        "--cap-degree",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(body(&out)
        .iter()
        .any(|l| l.starts_with("speciality: undetermined")));
}

#[test]
fn errors_exit_with_one() {
    let dir = std::env::temp_dir().join(format!("gsb-bad-{}.pres", std::process::id()));
    std::fs::write(&dir, "[generators]\nlabels = a\n[locality]\na,z = 1\n").unwrap();
    let out = gsb(&["basis", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":4:1: undeclared label `z`"), "{err}");
    let _ = std::fs::remove_file(dir);

    let out = gsb(&["nonsense", presentation("hv.pres").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = gsb(&["basis", "/nonexistent/file.pres"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn product_and_search() {
    let out = gsb(&["product", presentation("product_ab.pres").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(body(&out).contains(&"x o1 y = L{1}[a] L{0}[a] b".to_string()));
    let out = gsb(&[
        "speciality",
        presentation("virasoro_search.pres").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines = body(&out);
    assert!(lines.contains(&"v,v=1 : not special".to_string()));
    assert!(lines.contains(&"verdict: special (N: v,v=2)".to_string()));
}

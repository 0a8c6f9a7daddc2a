//! Compiles a C program against the generated header and the static
//! library, then checks what it prints.

use std::path::PathBuf;
use std::process::Command;

/// `cargo test` leaves the static library next to the test binary in
/// `deps/`; `cargo build` puts it one level up.
fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    let name = "liboce_risk_ffi.a";
    let here = deps.join(name);
    if here.exists() {
        here
    } else {
        deps.parent().unwrap().join(name)
    }
}

#[test]
fn c_program_links_and_agrees() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(header_dir.join("oce_risk.h").exists(), "header not generated");
    let lib = static_lib();
    assert!(lib.exists(), "missing {}", lib.display());
    let out = std::env::temp_dir().join(format!("oce_risk_smoke_{}", std::process::id()));
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let build = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror"])
        .arg("-I")
        .arg(&header_dir)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .output()
        .expect("C compiler not available");
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));

    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = String::from_utf8(run.stdout).unwrap();
    let field = |key: &str| -> Vec<String> {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key} in {text}"));
        line.split_whitespace().skip(1).map(str::to_owned).collect()
    };
    let num = |s: &str| s.parse::<f64>().unwrap();

    let want = ((-1.0_f64).exp() + 1.0_f64.exp()).ln() - 2.0_f64.ln();
    assert!((num(&field("exponential")[0]) - want).abs() <= 1e-12);
    assert!((num(&field("cvar")[0]) - 1.0).abs() <= 1e-12);
    let hull = field("hull");
    let (p, d) = (num(&hull[0]), num(&hull[1]));
    assert!(d <= p + 1e-12 * p.abs().max(1.0));
    assert!((p - d).abs() <= 1e-6 * p.abs().max(1.0), "{p} {d}");
    assert_eq!(field("invalid"), ["2", "null"]);
}

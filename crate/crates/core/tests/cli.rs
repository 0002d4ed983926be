use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torus-cascade"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("torus-cascade-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn verify_writes_a_summary_and_exits_zero() {
    let out = scratch("verify");
    let r = bin().args(["verify", "appendix-a", "--out"]).arg(&out).output().unwrap();
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stdout));
    let text = std::fs::read_to_string(out.join("verify-appendix-a.txt")).unwrap();
    assert!(text.lines().last().unwrap().starts_with("appendix-a.summary"));
    assert!(text.lines().all(|l| l.ends_with("PASS") || l.contains(" PASS ")));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn bad_input_exits_with_two_and_names_the_key() {
    let r = bin().args(["verify", "nope"]).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    let dir = scratch("badcfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# tweak\nsolver.alpha = 3\n").unwrap();
    let r = bin().args(["--preset", "quick", "gen-data", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("solver.alpha"));
    let r = bin().args(["--preset", "nope", "gen-data"]).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn gen_data_honours_seed_and_out() {
    let a = scratch("seed-a");
    let b = scratch("seed-b");
    for (dir, seed) in [(&a, "7"), (&b, "8")] {
        let r = bin().args(["--preset", "quick", "--seed", seed, "gen-data", "--out"]).arg(dir).output().unwrap();
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let wa = std::fs::read(a.join("omega0.pcf1")).unwrap();
    let wb = std::fs::read(b.join("omega0.pcf1")).unwrap();
    assert_eq!(&wa[..4], b"PCF1");
    assert_eq!(wa.len(), 16 + 8 * 128 * 128);
    assert_ne!(wa, wb);
    assert!(std::fs::read_to_string(b.join("config.txt")).unwrap().contains("data.seed = 8"));
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);
}

#[test]
fn evolve_then_diagnose_round_trips() {
    let dir = scratch("stages");
    let cfg = dir.join("short.cfg");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&cfg, "solver.t_end = 0.2\n").unwrap();
    let args = |cmd: &str| {
        let mut c = bin();
        c.args(["--preset", "quick", cmd, "--config"]).arg(&cfg).arg("--out").arg(dir.join("run"));
        c
    };
    assert!(args("evolve").output().unwrap().status.success());
    let r = args("diagnose").output().unwrap();
    assert!(r.status.code() == Some(0) || r.status.code() == Some(1));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("residual_slope ="));
    for f in ["pairing.csv", "verdicts.txt", "runlog.csv", "snapshots/index.csv"] {
        assert!(dir.join("run").join(f).exists(), "{f}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

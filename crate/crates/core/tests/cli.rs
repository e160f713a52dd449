use std::process::{Command, Output};

use css_linksim::signal::BasebandSignal;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_css-linksim"))
        .args(args)
        .env_remove("CSS_LINKSIM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn table_csv_has_twelve_rows() {
    let o = run(&["table", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 13);
    assert!(rows[0].starts_with("setting,"));
    assert!(rows[4].starts_with("LS-4,"));
    assert!(rows[12].starts_with("US-6,"));
}

#[test]
fn drift_sweep_is_deterministic_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = [
        "fer-drift",
        "--setting",
        "US-4",
        "--grid",
        "20:70:20",
        "--trials",
        "500",
        "--seed",
        "7",
    ];
    let mut args_a = base.to_vec();
    args_a.extend(["--threads", "1", "--out", a.to_str().unwrap()]);
    let mut args_b = base.to_vec();
    args_b.extend(["--threads", "4", "--out", b.to_str().unwrap()]);
    assert_eq!(run(&args_a).status.code(), Some(0));
    assert_eq!(run(&args_b).status.code(), Some(0));
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv, std::fs::read_to_string(&b).unwrap());
    assert!(csv.contains("# seed: 7\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 21);
}

#[test]
fn seed_comes_from_the_environment() {
    let args = [
        "fer-snr",
        "--setting",
        "US-2",
        "--grid",
        "-16:-16:1",
        "--trials",
        "50",
    ];
    let with_env = Command::new(env!("CARGO_BIN_EXE_css-linksim"))
        .args(args)
        .env("CSS_LINKSIM_SEED", "99")
        .output()
        .unwrap();
    assert!(stdout(&with_env).contains("# seed: 99\n"));
    let mut explicit = args.to_vec();
    explicit.extend(["--seed", "99"]);
    assert_eq!(stdout(&with_env), stdout(&run(&explicit)));
}

#[test]
fn loopback_dumps_iq() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ls3.iq");
    let o = run(&[
        "loopback",
        "--setting",
        "LS-3",
        "--dump-iq",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("frame_ok=true"));
    let bytes = std::fs::read(&path).unwrap();
    let sig = BasebandSignal::read_iq_f32(bytes.as_slice(), 20e3).unwrap();
    // 24 symbols of 1024 samples
    assert_eq!(sig.len(), 24 * 1024);
    assert!(sig.samples.iter().all(|x| (x.norm() - 1.0).abs() < 1e-5));
}

#[test]
fn pn_verify_reports_anchors() {
    let o = run(&[
        "pn-verify",
        "--profile",
        "pn1",
        "--n",
        "262144",
        "--realisations",
        "10",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("offset"))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![10.0, 100.0, 1000.0, 10000.0]
    );
    assert!(rows.iter().all(|r| r[3].abs() <= 3.0), "{text}");
}

#[test]
fn exit_codes() {
    let bad = [
        vec!["fer-snr", "--setting", "LS-9", "--grid", "0:1:2"],
        vec!["fer-snr", "--setting", "LS-1", "--grid", "1:0:2"],
        vec![
            "fer-drift",
            "--setting",
            "LS-1",
            "--grid",
            "0:100:3",
            "--log-grid",
        ],
        vec![
            "fer-snr",
            "--setting",
            "LS-1",
            "--grid",
            "0:1:2",
            "--out",
            "/nonexistent/dir/x.csv",
        ],
        vec!["pn-verify", "--profile", "nosuchfile"],
        vec!["loopback"],
    ];
    for args in bad {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

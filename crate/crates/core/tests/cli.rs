use std::path::Path;
use std::process::{Command, Output};

fn fdnoma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdnoma"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn smoke_preset_emits_header_and_rows() {
    let out = fdnoma(&["--preset", "smoke", "--trials", "500"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_var,sweep_value,scheme,metric,sim_value,sim_stderr,analytic_value,trials,seed"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 9));
    // No closed form exists for the QoS far-user rate.
    let qos_u2 = rows.iter().find(|r| r[2] == "qos-static" && r[3] == "rate-u2").unwrap();
    assert_eq!(qos_u2[6], "");
    assert_eq!(qos_u2[7], "500");
}

#[test]
fn fig2_preset_grid_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let status = fdnoma(&["--preset", "fig2", "--trials", "200", "--out", out.to_str().unwrap()]).status;
    assert!(status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    // 2 cases × 9 points × 4 schemes × 2 outage metrics, plus floors for max-U1 and max-U2.
    let outages = rows.iter().filter(|r| r[3].starts_with("outage")).count();
    let floors = rows.iter().filter(|r| r[3].starts_with("floor")).count();
    assert_eq!(outages, 2 * 9 * 4 * 2);
    assert_eq!(floors, 2 * 9 * 2 * 2);
    assert!(rows.iter().any(|r| r[2] == "qos-static@4-4-2"));
}

#[test]
fn fig6_is_the_antenna_sweep() {
    let out = fdnoma(&["--preset", "fig6", "--trials", "200"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let values: std::collections::BTreeSet<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values.into_iter().collect::<Vec<_>>(), ["4", "6", "8"]);
    assert!(text.lines().skip(1).all(|l| l.starts_with("m,")));
}

#[test]
fn empty_scheme_list_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "schemes = []\n[sweep]\nvar = \"rho_db\"\nvalues = [0]\n",
    );
    let out = fdnoma(&["--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scheme list is empty"));
}

#[test]
fn power_split_violation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[system]\na1 = 0.6\na2 = 0.4\n[sweep]\nvar = \"rho_db\"\nvalues = [0]\n",
    );
    let out = fdnoma(&["--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("a1 < a2 violated"));
}

#[test]
fn missing_file_and_unknown_preset_fail() {
    assert!(!fdnoma(&["--config", "/nonexistent/x.toml"]).status.success());
    let out = fdnoma(&["--preset", "fig9"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig2"));
}

#[test]
fn unwritable_output_fails() {
    let out = fdnoma(&[
        "--preset",
        "smoke",
        "--trials",
        "10",
        "--out",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_target_warns_but_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "trials = 100\nschemes = [\"max-u1\"]\n[system]\nrate_target_u2 = 3.4\n[sweep]\nvar = \"rho_db\"\nvalues = [30]\n",
    );
    let out = fdnoma(&["--config", &cfg]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let text = String::from_utf8(out.stdout).unwrap();
    let u2 = text.lines().find(|l| l.contains("outage-u2")).unwrap();
    assert_eq!(u2.split(',').nth(4), Some("1"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["--preset", "smoke", "--trials", "40000", "--seed", "3"];
    let a = fdnoma(&[&args[..], &["--workers", "1"]].concat()).stdout;
    let b = fdnoma(&[&args[..], &["--workers", "4"]].concat()).stdout;
    let c = fdnoma(&[&args[..], &["--workers", "4"]].concat()).stdout;
    assert_eq!(a, b);
    assert_eq!(b, c);
    let d = fdnoma(&["--preset", "smoke", "--trials", "40000", "--seed", "4"]).stdout;
    assert_ne!(a, d);
}

#[test]
fn every_preset_listed_and_showable() {
    let out = fdnoma(&["--list-presets"]);
    let names = String::from_utf8(out.stdout).unwrap();
    for name in [
        "fig2", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5", "fig6",
    ] {
        assert!(names.lines().any(|l| l == name), "{name}");
        assert!(fdnoma(&["--show-preset", name]).status.success());
    }
}

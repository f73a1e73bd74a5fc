use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shutterqbm"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn steady_reports_ratio_at_unit_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["steady", "--tau-wc", "1", "--r", "10", "--g", "0.1", "--nbar", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("n_s/nbar = 3.49"), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("steady.csv")).unwrap();
    assert!(csv.starts_with("tau_omega_c,n_s_exact,n_s_approx,n_s_over_nbar,t_eff_over_t,error_flag\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = format!("sweep{i}.csv");
        let o = run(dir.path(), &["sweep", "--points", "40", "--threads", threads, "--out", &out]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(fs::read(dir.path().join(out)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn figure_presets_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, header) in [
        ("1a", "t,n_shuttered,n_unshuttered,diff"),
        ("1b", "t,n_shuttered,n_unshuttered,diff"),
        ("3", "tau_omega_c,n_s_exact"),
    ] {
        let o = run(dir.path(), &["figure", preset]);
        assert_eq!(o.status.code(), Some(0), "{preset}");
        let csv = fs::read_to_string(dir.path().join(format!("figure_{preset}.csv"))).unwrap();
        assert!(csv.starts_with(header), "{preset}");
    }
    let o = run(dir.path(), &["figure", "1a", "--out", "again.csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("figure_1a.csv")).unwrap(),
        fs::read(dir.path().join("again.csv")).unwrap()
    );
    assert!(stdout(&o).contains("short-time = zeno"));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.conf"), "# fig 2\nr = 0.1\ntau_wc = 1\nout = from_file.csv\n").unwrap();
    let o = run(dir.path(), &["steady", "--config", "run.conf"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("from_file.csv").exists());
    let low = stdout(&o);
    let o = run(dir.path(), &["steady", "--config", "run.conf", "--r", "10"]);
    assert!(stdout(&o).contains("n_s/nbar = 3.49"));
    assert_ne!(low, stdout(&o));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.conf"), "alpha = 0.1\n").unwrap();
    let o = run(dir.path(), &["steady", "--config", "bad.conf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["steady", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["figure", "4"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["steady", "--g", "-1"]).status.code(), Some(4));
    assert_eq!(run(dir.path(), &["zeno", "--periods", "3", "--k", "9"]).status.code(), Some(4));
    let o = run(dir.path(), &["oracle-check", "--truncation", "5", "--tmax-wc", "2000"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncation"));
}

#[test]
fn omega0_units_scale_the_time_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["evolve", "--protocol", "unshuttered", "--tmax-wc", "2", "--samples", "3", "--units", "omega0"],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("evolve.csv")).unwrap();
    let times: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(times, ["0", "1", "2"]);
}

#[test]
fn oracle_check_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["oracle-check", "--samples", "51"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert!(csv.starts_with("t,n_analytic,n_oracle,rel_err,leakage,thermal_dev\n"));
}

use std::fs;
use std::process::{Command, Output};

fn vmac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vmac"))
        .args(args)
        .output()
        .expect("run vmac")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Lines after the provenance comments.
fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_schema() {
    let o = vmac(&[
        "simulate", "--scenario", "partition", "--k", "2", "--n", "4", "--snr-db", "10", "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# generator: vmac "));
    assert!(text.contains("# seed: 7\n"));
    assert!(text.contains("# config-hash: "));
    let lines = body(&text);
    assert_eq!(lines[0], "k,omega_k,rate_per_channel_k,phi_k");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2].starts_with("2,"));
    let last: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(last.len(), 4);
    assert_eq!(&last[..2], &["NSE", "total"]);
    assert_eq!(last[3], "");
    let nse: f64 = last[2].parse().unwrap();
    let phi_sum: f64 = lines[1..3]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((nse - phi_sum).abs() < 1e-10);
}

#[test]
fn fig2_schema() {
    let o = vmac(&["figure", "fig2", "--trials", "20", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines = body(&text);
    assert_eq!(lines[0], "N,k,sim_mean,sim_stderr,asymptotic,trials");
    let ns: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["10", "10", "25", "25", "50", "50"]);
}

#[test]
fn optimal_bl_reports_inputs() {
    let o = vmac(&["optimal-bl", "--k", "25", "--n", "50", "--snr-db", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines = body(&text);
    assert_eq!(lines[0], "K,N,snr_db,beta_star,omega,l_star,l_star_nearest");
    let cells: Vec<&str> = lines[1].split(',').collect();
    let beta: f64 = cells[3].parse().unwrap();
    let omega: f64 = cells[4].parse().unwrap();
    assert!((omega - (1.0 - (-1.0 / beta).exp())).abs() < 1e-11);
    // (N/K)(1 - Omega^K)/(1 - Omega) with Omega ~ 0.0739 is just above 2.
    assert_eq!(cells[5], "3");
}

#[test]
fn sweep_table_has_stat_columns() {
    let o = vmac(&[
        "sweep", "--scenario", "sharing", "--k", "3", "--n", "6", "--trials", "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines = body(&text);
    assert_eq!(lines[0], "scenario,snr_db,load,K,L,statistic,mean,stderr,trials");
    // caps 1..6 plus the uncapped row
    assert_eq!(lines.len(), 1 + 7);
    assert!(lines[7].starts_with("sharing,10,0.5,3,,nse,"));
}

#[test]
fn out_dir_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/run");
    let o = vmac(&[
        "sweep", "--k", "2", "--n", "4", "--trials", "3", "--out", out.to_str().unwrap(), "--plot",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.contains("statistic,mean,stderr,trials"));
    let svg = fs::read_to_string(out.join("sweep.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "scenario = \"sharing\"\nk = 4\nn = 6\nseed = 11\nsnr-db = 0.0\n").unwrap();
    let o = vmac(&["simulate", "--config", cfg.to_str().unwrap(), "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# scenario: sharing\n"));
    assert!(text.contains("# k: 2\n"));
    assert!(text.contains("# seed: 11\n"));
    assert!(text.contains("# snr_db: 0\n"));
}

#[test]
fn usage_errors_exit_1_and_name_the_flag() {
    let o = vmac(&["simulate", "--scenario", "mesh"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--scenario"));

    let o = vmac(&["simulate", "--k", "two"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--k"));

    let o = vmac(&["figure", "fig7"]);
    assert_eq!(o.status.code(), Some(1));

    let o = vmac(&["simulate", "--config", "/nonexistent/vmac.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/vmac.toml"));
}

#[test]
fn output_path_is_checked_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    // A sweep this size would take a while; the bad path must fail first.
    let o = vmac(&[
        "figure", "fig5", "--trials", "100000", "--out", file.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("occupied"));
}

#[test]
fn numerical_failure_exits_2() {
    let o = vmac(&["asymptotic", "--k", "4", "--mc-samples", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let o = vmac(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("optimal-bl"));
}

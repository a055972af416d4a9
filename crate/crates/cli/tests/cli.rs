use std::fs;
use std::process::Command as Process;

use stochtaylor::fields::ScenarioId;
use stochtaylor_cli::config::parse_number;
use stochtaylor_cli::{run, Command, Config, ConfigError, Overrides};

fn load(text: &str) -> Result<Config, ConfigError> {
    Config::from_text(text, &Overrides::default())
}

#[test]
fn minimal_file_fills_defaults() {
    let cfg = load("scenario = S1\n").unwrap();
    assert_eq!(cfg.run.scenarios, vec![ScenarioId::S1Additive]);
    assert_eq!((cfg.run.level, cfg.run.paths), (14, 100));
    assert_eq!(cfg.run.alpha, vec![0.45]);
    assert_eq!(cfg.rates.h.len(), 8);
}

#[test]
fn alpha_outside_range_is_reported() {
    let err = load("[run]\nalpha = 0.6\n").unwrap_err();
    assert!(err.violations().iter().any(|v| v.contains("alpha outside (1/3,1/2)")), "{err}");
}

#[test]
fn non_dyadic_grid_is_reported() {
    let err = load("[rates]\nh = 0.3\n").unwrap_err();
    assert!(err.violations().iter().any(|v| v.contains("h grid must be dyadic")), "{err}");
}

#[test]
fn every_violation_is_collected() {
    let text = "[run]\nalpha = 0.2, 0.45\npaths = x\n[scenario]\ng3 = 1 + (\n[viscosity]\nbogus = 1\n";
    let err = load(text).unwrap_err();
    let v = err.violations();
    assert!(v.iter().any(|m| m.contains("alpha outside")));
    assert!(v.iter().any(|m| m.starts_with("line 3: run.paths")));
    assert!(v.iter().any(|m| m.contains("scenario.g3 does not parse")));
    assert!(v.iter().any(|m| m.starts_with("line 7: viscosity.bogus")));
}

#[test]
fn syntax_errors_carry_line_numbers() {
    match load("seed = 1\n\n[rates\n").unwrap_err() {
        ConfigError::Parse { line, .. } => assert_eq!(line, 3),
        e => panic!("{e}"),
    }
    match load("[run]\njust words\n").unwrap_err() {
        ConfigError::Parse { line, .. } => assert_eq!(line, 2),
        e => panic!("{e}"),
    }
    assert!(matches!(load("[plots]\n"), Err(ConfigError::Parse { line: 1, .. })));
    assert!(matches!(load("seed = 1\nseed = 2\n"), Err(ConfigError::Parse { line: 2, .. })));
}

#[test]
fn overrides_replace_run_keys() {
    let ov = Overrides { seed: Some(9), level: Some(12), alpha: Some("0.4,0.45".into()), ..Default::default() };
    let cfg = Config::from_text("seed = 1\nlevel = 14\n", &ov).unwrap();
    assert_eq!((cfg.run.seed, cfg.run.level), (9, 12));
    assert_eq!(cfg.run.alpha, vec![0.4, 0.45]);
    assert_eq!(*cfg.taylor.h.last().unwrap(), 2f64.powi(-12));
    let explicit = Config::from_text("[taylor]\nh = 2^-6,2^-7,2^-8,2^-14\n", &ov);
    assert!(explicit.unwrap_err().violations().iter().any(|v| v.contains("below the path step")));
    let bad = Overrides { alpha: Some("0.7".into()), ..Default::default() };
    assert!(Config::from_text("", &bad).is_err());
}

#[test]
fn number_forms() {
    assert_eq!(parse_number("2^-5").unwrap(), 1.0 / 32.0);
    assert_eq!(parse_number("1/512").unwrap(), 1.0 / 512.0);
    assert_eq!(parse_number(" 0.25 ").unwrap(), 0.25);
    assert!(parse_number("two").is_err());
}

#[test]
fn hash_ignores_output_directory() {
    let a = load("out = a\n").unwrap();
    let b = load("out = b\n").unwrap();
    let c = load("seed = 3\n").unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn additive_taylor_run_reports_zero_residual() {
    let cfg = load("scenario = S1\npaths = 4\nlevel = 10\n[taylor]\nh = 2^-4,2^-5,2^-6,2^-7,2^-8\nmixed_h = 2^-4,2^-5,2^-6,2^-7\ncoefficient_points = 5\n").unwrap();
    let rep = run(Command::Taylor, &cfg);
    let zero = rep.checks.iter().find(|c| c.name == "raw_residual_zero").unwrap();
    assert!(zero.passed && zero.statistic <= 1e-12);
    assert!(rep.all_passed(), "{}", rep.summary());
    assert_eq!(rep.exit_code(), 0);
    assert!(rep.summary().lines().skip(1).all(|l| l.contains(&rep.config_hash[..16])));
}

#[test]
fn rates_csv_has_eight_rows_and_a_footer() {
    let cfg = load("[rates]\npaths = 3\nlevel = 12\norders = 2\nhermite_paths = 2\nhermite_level = 8\nchaining_triples = 1\n").unwrap();
    let rep = run(Command::Rates, &cfg);
    let csv = &rep.artifacts.iter().find(|a| a.name == "rates_unit2.csv").unwrap().body;
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,sup_value,log2_h,log2_sup");
    assert_eq!(lines.len(), 1 + 8 + 3);
    assert!(lines[9].starts_with("slope,"));
    assert!(rep.checks.iter().all(|c| c.experiment == "rates"));
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.conf");
    fs::write(&bad, "alpha = 0.6\n").unwrap();
    let st = Process::new(env!("CARGO_BIN_EXE_stochtaylor"))
        .args(["taylor", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("alpha outside"));

    let good = tmp.path().join("good.conf");
    fs::write(&good, "scenario = S1\npaths = 3\nlevel = 10\n[taylor]\nh = 2^-4,2^-5,2^-6,2^-7\nmixed_h = 2^-4,2^-5,2^-6,2^-7\n").unwrap();
    let out = tmp.path().join("out");
    let st = Process::new(env!("CARGO_BIN_EXE_stochtaylor"))
        .args(["taylor", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stdout));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.lines().last().unwrap().starts_with("overall=PASS"));
    assert!(out.join("taylor_S1_forward.csv").exists());
}

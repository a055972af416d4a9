//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command as Process, ExitCode};
use std::time::Instant;

use stochtaylor_cli::report::check_line;
use stochtaylor_cli::{run, Command, Config};

const DESCRIPTIONS: [&str; 9] = [
    "exact chaining and cancellation identities",
    "unit iterated integrals vs Hermite closed forms",
    "decay rates of iterated integrals",
    "expansion remainder on exact scenarios",
    "base-point universality",
    "backward vs forward coefficients",
    "characteristics, scheme agreement and psi",
    "viscosity inequalities on exact solutions",
    "reproducible CSV output and exit status",
];

const SMALL: &str = "\
scenario = S1, S2, S4
seed = 11
paths = 6
level = 10

[rates]
paths = 6
level = 12
hermite_paths = 4
hermite_level = 10
chaining_triples = 3

[taylor]
h = 2^-4, 2^-5, 2^-6, 2^-7, 2^-8
mixed_h = 2^-3, 2^-4, 2^-5, 2^-6, 2^-8
mixed_nodes = 1025
coefficient_points = 10
s4_paths = 2
s4_level = 9

[char]
gap_paths = 4
psi_paths = 1
psi_level = 12
psi_nodes = 33
cancellation_points = 50

[viscosity]
paths = 4
triplets = 6
level = 10
rho = 2^-5
";

fn csv_bodies(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in fs::read_dir(dir).expect("output directory") {
        let p = e.expect("entry").path();
        if p.extension().is_some_and(|x| x == "csv") {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            m.insert(name, fs::read(&p).expect("csv readable"));
        }
    }
    m
}

/// Two identical runs of `all` through the binary.
fn reproducibility() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("small.conf");
    fs::write(&cfg, SMALL).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let st = Process::new(env!("CARGO_BIN_EXE_stochtaylor"))
            .args(["all", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        let code = st.status.code().ok_or("terminated by signal")?;
        let summary = fs::read_to_string(out.join("summary.txt")).map_err(|e| e.to_string())?;
        let last = summary.lines().last().unwrap_or_default().to_string();
        let claims_pass = last.starts_with("overall=PASS");
        if (code == 0) != claims_pass || !(code == 0 || code == 1) {
            return Err(format!("exit status {code} disagrees with `{last}`"));
        }
        runs.push((csv_bodies(&out), code, last));
    }
    let (a, b) = (&runs[0], &runs[1]);
    if a.0.is_empty() {
        return Err("no CSV output".into());
    }
    if a.0 != b.0 {
        let differing: Vec<&String> = a.0.keys().filter(|k| a.0.get(*k) != b.0.get(*k)).collect();
        return Err(format!("CSV bodies differ: {differing:?}"));
    }
    if a.1 != b.1 || a.2 != b.2 {
        return Err("exit status or summary differs between runs".into());
    }
    Ok(format!("{} identical CSV files, exit status {} matches summary", a.0.len(), a.1))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cfg = Config::default();
    let report = run(Command::All, &cfg);
    let mut failed = 0;
    for n in 1..=8u8 {
        let checks = report.criterion(n);
        for c in &checks {
            println!("    {}", check_line(c, &report.config_hash));
        }
        let ok = !checks.is_empty() && checks.iter().all(|c| c.passed);
        failed += usize::from(!ok);
        println!("criterion {n}: {} ({}; {} checks)", if ok { "PASS" } else { "FAIL" }, DESCRIPTIONS[n as usize - 1], checks.len());
    }
    match reproducibility() {
        Ok(msg) => {
            println!("    {msg}");
            println!("criterion 9: PASS ({})", DESCRIPTIONS[8]);
        }
        Err(msg) => {
            failed += 1;
            println!("    {msg}");
            println!("criterion 9: FAIL ({})", DESCRIPTIONS[8]);
        }
    }
    println!("acceptance: {} of 9 criteria passed in {:.1}s", 9 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

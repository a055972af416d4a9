//! Run summaries and artifact output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::experiments::{Artifact, Check};

#[derive(Debug)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
}

impl RunReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.acceptance() && !c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// 0 iff every acceptance-tagged check passed.
    pub fn exit_code(&self) -> u8 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    /// Checks belonging to one criterion.
    pub fn criterion(&self, n: u8) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.criterion == Some(n)).collect()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={} config={}", self.command, self.config_hash);
        for c in &self.checks {
            s.push_str(&check_line(c, &self.config_hash));
            s.push('\n');
        }
        let acc = self.checks.iter().filter(|c| c.acceptance()).count();
        let _ = writeln!(
            s,
            "overall={} acceptance_checks={acc} failed={} config={}",
            if self.all_passed() { "PASS" } else { "FAIL" },
            self.failures().count(),
            self.config_hash
        );
        s
    }

    /// `summary.txt` plus one CSV per artifact under `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for a in &self.artifacts {
            fs::write(dir.join(&a.name), &a.body)?;
        }
        fs::write(dir.join("summary.txt"), self.summary())
    }
}

pub fn check_line(c: &Check, hash: &str) -> String {
    let status = match (c.acceptance(), c.passed) {
        (false, _) => "INFO",
        (true, true) => "PASS",
        (true, false) => "FAIL",
    };
    let criterion = c.criterion.map_or("-".to_string(), |n| n.to_string());
    let mut s = format!(
        "{status} criterion={criterion} experiment={} scenario={} check={} statistic={:e} threshold={} wall={:.3}s config={}",
        c.experiment,
        c.scenario,
        c.name,
        c.statistic,
        c.bound,
        c.wall,
        &hash[..16.min(hash.len())]
    );
    if let Some(e) = &c.error {
        let _ = write!(s, " error=\"{}\"", e.replace('"', "'").replace('\n', " "));
    }
    s
}

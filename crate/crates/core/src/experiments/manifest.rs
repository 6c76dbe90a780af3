use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::model::ExperimentConfig;

/// Index of every file a run emitted, written as flat `key = value` text.
///
/// Outputs appear as `output.<role>.<tag> = <path relative to the manifest>`
/// with roles `pde_field`, `flow_paths`, `density`, `report` and
/// `figure_data`; the run configuration follows under `config.*`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub kind: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<(String, String, PathBuf)>,
    pub config_hash: String,
    pub wall_time: Duration,
    pub extra_epsilons: Vec<f64>,
    pub notes: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(kind: impl Into<String>, config: &ExperimentConfig) -> Self {
        Self {
            kind: kind.into(),
            config: config.clone(),
            outputs: Vec::new(),
            config_hash: config.config_hash(),
            wall_time: Duration::ZERO,
            extra_epsilons: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn add(&mut self, role: &str, tag: &str, path: PathBuf) {
        self.outputs.push((role.to_string(), tag.to_string(), path));
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn outputs_with_role(&self, role: &str) -> Vec<&Path> {
        self.outputs
            .iter()
            .filter(|(r, _, _)| r == role)
            .map(|(_, _, p)| p.as_path())
            .collect()
    }

    pub fn to_text(&self, base: &Path) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "seed = {}", self.config.seed);
        let _ = writeln!(s, "wall_time_s = {:.3}", self.wall_time.as_secs_f64());
        let eps: Vec<String> = self.extra_epsilons.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(s, "extra_epsilons = {}", eps.join(","));
        for (k, v) in &self.notes {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (role, tag, path) in &self.outputs {
            let shown = path.strip_prefix(base).unwrap_or(path);
            let _ = writeln!(s, "output.{role}.{tag} = {}", shown.display());
        }
        for line in self.config.to_text().lines() {
            let _ = writeln!(s, "config.{line}");
        }
        s
    }

    /// Writes `manifest.txt` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.txt");
        std::fs::write(&path, self.to_text(dir)).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_lists_outputs_and_config() {
        let cfg = ExperimentConfig::desk();
        let mut m = RunManifest::new("sweep", &cfg);
        m.add("report", "sweep", PathBuf::from("/out/report.csv"));
        m.extra_epsilons = vec![0.5, 0.25];
        m.note("threads", 4);
        let text = m.to_text(Path::new("/out"));
        assert!(text.contains("output.report.sweep = report.csv\n"));
        assert!(text.contains("extra_epsilons = 0.5,0.25\n"));
        assert!(text.contains(&format!("config_hash = {}\n", cfg.config_hash())));
        assert!(text.contains("config.n_x = 301\n"));
        assert_eq!(m.outputs_with_role("report").len(), 1);
        assert!(m.outputs_with_role("density").is_empty());
    }
}

//! Command implementations shared by the binary and its tests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{parse_config, RunConfig};
use crate::execute::execute;
use crate::report::{write_outputs, Status};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "CHIST_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "chist-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REFUSED: i32 = 2;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    /// `--out`, else the environment override.
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) -> Result<(), String> {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(e) = self.epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(format!("--epsilon {e} must be positive"));
            }
            config.epsilon = e;
        }
        Ok(())
    }
}

/// Outcome of one config in a `run` invocation.
#[derive(Debug)]
pub struct RunSummary {
    pub config: PathBuf,
    pub exit_code: i32,
    pub dir: Option<PathBuf>,
    pub written: Vec<PathBuf>,
    pub message: String,
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

/// Directory for one config: `<out>/<stem>` when an override is set,
/// otherwise the config's own `output.dir`, else `chist-out/<stem>`.
pub fn output_dir(path: &Path, config: &RunConfig, overrides: &Overrides) -> PathBuf {
    match (&overrides.out, &config.output.dir) {
        (Some(base), _) => base.join(stem(path)),
        (None, Some(dir)) => dir.clone(),
        (None, None) => Path::new(DEFAULT_OUT_DIR).join(stem(path)),
    }
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn run_one(path: &Path, overrides: &Overrides) -> RunSummary {
    let fail = |message: String| RunSummary {
        config: path.to_path_buf(),
        exit_code: EXIT_ERROR,
        dir: None,
        written: Vec::new(),
        message,
    };
    let mut config = match parse_config(path) {
        Ok(c) => c,
        Err(e) => return fail(e.to_string()),
    };
    if let Err(e) = overrides.apply(&mut config) {
        return fail(e);
    }
    let outcome = match execute(&config) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    let dir = output_dir(path, &config, overrides);
    match write_outputs(&dir, &config, &outcome, timestamp()) {
        Ok(written) => RunSummary {
            config: path.to_path_buf(),
            exit_code: outcome.status.exit_code(),
            message: match outcome.status {
                Status::Ok => format!("{}: ok", config.task.name()),
                Status::Refused => format!("{}: refused, set is inconsistent", config.task.name()),
            },
            dir: Some(dir),
            written,
        },
        Err(e) => fail(e.to_string()),
    }
}

/// Runs every config, `jobs` at a time. Stems must be distinct so that
/// each run gets its own directory.
pub fn run_batch(paths: &[PathBuf], overrides: &Overrides, jobs: usize) -> Result<Vec<RunSummary>, String> {
    let mut seen = BTreeSet::new();
    for p in paths {
        if !seen.insert(stem(p)) {
            return Err(format!("two configs share the file stem \"{}\"", stem(p)));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(|| paths.par_iter().map(|p| run_one(p, overrides)).collect()))
}

/// Any error wins over a refusal.
pub fn combined_exit_code(summaries: &[RunSummary]) -> i32 {
    if summaries.iter().any(|s| s.exit_code == EXIT_ERROR) {
        EXIT_ERROR
    } else if summaries.iter().any(|s| s.exit_code == EXIT_REFUSED) {
        EXIT_REFUSED
    } else {
        EXIT_OK
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_value, CONFIG_SCHEMA};
    use serde_json::json;

    fn hourglass() -> RunConfig {
        parse_value(json!({"schema": CONFIG_SCHEMA, "scenario": "hourglass"})).unwrap()
    }

    #[test]
    fn output_dir_precedence() {
        let mut c = hourglass();
        let p = Path::new("cfg/h.json");
        assert_eq!(output_dir(p, &c, &Overrides::default()), Path::new("chist-out/h"));
        c.output.dir = Some("mine".into());
        assert_eq!(output_dir(p, &c, &Overrides::default()), Path::new("mine"));
        let o = Overrides { out: Some("o".into()), ..Default::default() };
        assert_eq!(output_dir(p, &c, &o), Path::new("o/h"));
    }

    #[test]
    fn overrides_replace_seed_and_epsilon() {
        let mut c = hourglass();
        Overrides { seed: Some(9), epsilon: Some(1e-6), out: None }.apply(&mut c).unwrap();
        assert_eq!((c.seed, c.epsilon), (9, 1e-6));
        assert!(Overrides { epsilon: Some(-1.0), ..Default::default() }.apply(&mut c).is_err());
    }

    #[test]
    fn duplicate_stems_are_rejected() {
        let paths = vec![PathBuf::from("a/x.json"), PathBuf::from("b/x.json")];
        assert!(run_batch(&paths, &Overrides::default(), 2).is_err());
    }

    #[test]
    fn errors_outrank_refusals() {
        let s = |exit_code| RunSummary {
            config: PathBuf::new(),
            exit_code,
            dir: None,
            written: vec![],
            message: String::new(),
        };
        assert_eq!(combined_exit_code(&[s(0), s(2)]), 2);
        assert_eq!(combined_exit_code(&[s(2), s(1)]), 1);
        assert_eq!(combined_exit_code(&[]), 0);
    }
}

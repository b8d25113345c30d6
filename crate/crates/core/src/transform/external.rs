use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use crate::archive::{load_page_at, store_page_at, ArchivedPage};

use super::{ParamSpec, Params, Transform, TransformError, TransformOutput};

/// A transform implemented by an external program.
///
/// The program receives the path of a stored page directory on stdin (one
/// line), writes the path of the variant page directory to stdout and exits
/// with status 0. Parameters are passed as `WASEF_PARAM_<NAME>` environment
/// variables, with the name uppercased.
pub struct ExternalTransform {
    pub name: String,
    pub description: String,
    pub program: PathBuf,
    pub args: Vec<String>,
    pub params: Vec<ParamSpec>,
}

impl ExternalTransform {
    pub fn new(name: &str, program: impl Into<PathBuf>) -> Self {
        ExternalTransform {
            name: name.to_string(),
            description: format!("external transform {name}"),
            program: program.into(),
            args: Vec::new(),
            params: Vec::new(),
        }
    }

    fn failed(&self, cause: impl ToString) -> TransformError {
        TransformError::TransformFailed {
            transform: self.name.clone(),
            cause: cause.to_string(),
        }
    }
}

impl Transform for ExternalTransform {
    fn name(&self) -> &str {
        &self.name
    }

    fn description(&self) -> &str {
        &self.description
    }

    fn params(&self) -> Vec<ParamSpec> {
        self.params.clone()
    }

    fn apply(&self, page: &ArchivedPage, params: &Params) -> Result<TransformOutput, TransformError> {
        let work = tempfile::tempdir().map_err(|e| self.failed(e))?;
        let input = work.path().join("input");
        store_page_at(page, &input).map_err(|e| self.failed(e))?;

        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .current_dir(work.path())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        for (k, v) in params {
            cmd.env(format!("WASEF_PARAM_{}", k.to_ascii_uppercase().replace('-', "_")), v);
        }
        let mut child = cmd.spawn().map_err(|e| self.failed(format!("spawn {}: {e}", self.program.display())))?;
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            writeln!(stdin, "{}", input.display()).map_err(|e| self.failed(e))?;
        }
        let output = child.wait_with_output().map_err(|e| self.failed(e))?;
        if !output.status.success() {
            return Err(self.failed(format!(
                "exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let out_path = String::from_utf8_lossy(&output.stdout).trim().to_string();
        if out_path.is_empty() {
            return Err(self.failed("printed no variant directory"));
        }
        let mut out_dir = PathBuf::from(out_path);
        if out_dir.is_relative() {
            out_dir = work.path().join(out_dir);
        }
        let mut variant = load_page_at(&out_dir).map_err(|e| self.failed(e))?;
        variant.page_id = page.page_id.clone();
        Ok(variant.into())
    }
}

//! CSV and text emission. Every file begins with a comment line carrying the
//! artifact version and the config hash; numbers are written with 17
//! significant digits so reruns are byte-comparable.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use ellq_core::continuation::Branch;
use ellq_core::harnack::InequalityReport;
use ellq_core::DiscreteField;

pub struct OutputWriter {
    dir: PathBuf,
    header: String,
}

/// Formats with 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl OutputWriter {
    pub fn new(dir: &Path, config_hash: &str) -> anyhow::Result<OutputWriter> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let header = format!("# ellq v{} config={config_hash}\n", env!("CARGO_PKG_VERSION"));
        Ok(OutputWriter { dir: dir.to_path_buf(), header })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&self, name: &str, body: &str) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        let mut f = fs::File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        f.write_all(self.header.as_bytes())?;
        f.write_all(body.as_bytes())?;
        Ok(path)
    }

    /// Solution field as `x[,y],u` rows.
    pub fn write_field(&self, name: &str, field: &DiscreteField) -> anyhow::Result<PathBuf> {
        let mesh = field.mesh();
        let mut body = String::new();
        if mesh.dim() == 1 {
            body.push_str("x,u\n");
            for i in 0..mesh.len() {
                let p = mesh.position(i);
                body.push_str(&format!("{},{}\n", num(p[0]), num(field[i])));
            }
        } else {
            body.push_str("x,y,u\n");
            for i in 0..mesh.len() {
                let p = mesh.position(i);
                body.push_str(&format!("{},{},{}\n", num(p[0]), num(p[1]), num(field[i])));
            }
        }
        self.write_text(name, &body)
    }

    /// Branch table: `arclength,lambda,sup_norm,signature,fold_flag`.
    pub fn write_branch(&self, name: &str, branch: &Branch) -> anyhow::Result<PathBuf> {
        let mut body = String::from("arclength,lambda,sup_norm,signature,fold_flag\n");
        for p in &branch.points {
            body.push_str(&format!(
                "{},{},{},{},{}\n",
                num(p.arclength),
                num(p.lambda),
                num(p.sup_norm),
                p.jacobian_signature,
                u8::from(p.fold_flag)
            ));
        }
        self.write_text(name, &body)
    }

    /// Inequality suite table: `sample,inequality,lhs,rhs,constant,params`.
    pub fn write_reports(
        &self,
        name: &str,
        rows: &[(u64, InequalityReport)],
    ) -> anyhow::Result<PathBuf> {
        let mut body = String::from("sample,inequality,lhs,rhs,constant,params\n");
        for (id, rep) in rows {
            let params = rep
                .params
                .iter()
                .map(|(k, v)| format!("{k}={}", num(*v)))
                .collect::<Vec<_>>()
                .join(";");
            body.push_str(&format!(
                "{},{},{},{},{},{}\n",
                id,
                rep.id,
                num(rep.lhs),
                num(rep.rhs),
                num(rep.empirical_constant),
                params
            ));
        }
        self.write_text(name, &body)
    }
}

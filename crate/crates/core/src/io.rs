//! Field serialization (JSON and CSV) and atomic file writes.

use crate::error::Result;
use crate::grid::{Domain, DomainKind, DomainSpec, Field};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// The documented on-disk shape: `{domain: {kind, N, r_max, n_points},
/// components: [[…], …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct FieldJson<T> {
    pub domain: DomainSpec<T>,
    pub components: Vec<Vec<T>>,
}

pub fn field_to_json<T: Scalar + Serialize>(field: &Field<T>) -> Result<String> {
    let doc = FieldJson {
        domain: DomainSpec::from(field.domain().as_ref().clone()),
        components: field.components().to_vec(),
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn field_from_json<T: Scalar + for<'de> Deserialize<'de>>(text: &str) -> Result<Field<T>> {
    let doc: FieldJson<T> = serde_json::from_str(text)?;
    let domain: Domain<T> = doc.domain.try_into()?;
    Field::new(Arc::new(domain), doc.components)
}

/// One row per node: the node coordinates followed by the component values.
pub fn field_to_csv<T: Scalar>(field: &Field<T>) -> String {
    let domain = field.domain();
    let m = field.m();
    let mut out = String::new();
    match domain.kind() {
        DomainKind::BiRadial => {
            out.push_str("r1,r2");
            for j in 1..=m {
                out.push_str(&format!(",u{j}"));
            }
            out.push('\n');
            let n = domain.n_points();
            for i in 0..n {
                for k in 0..n {
                    out.push_str(&format!(
                        "{},{}",
                        domain.axis_nodes()[i],
                        domain.axis_nodes()[k]
                    ));
                    for c in field.components() {
                        out.push_str(&format!(",{}", c[i * n + k]));
                    }
                    out.push('\n');
                }
            }
        }
        kind => {
            out.push_str(if kind == DomainKind::RadialN { "r" } else { "x" });
            for j in 1..=m {
                out.push_str(&format!(",u{j}"));
            }
            out.push('\n');
            for (i, &x) in domain.axis_nodes().iter().enumerate() {
                out.push_str(&format!("{x}"));
                for c in field.components() {
                    out.push_str(&format!(",{}", c[i]));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = path.to_path_buf();
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".into());
    tmp.set_file_name(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

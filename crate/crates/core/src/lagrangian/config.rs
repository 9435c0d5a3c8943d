use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Coercivity, FTable, LagrangianKind, LagrangianSpec, WFunction, WTable};
use crate::error::{invalid, Error, Result};

/// Flat key-value form of a [`LagrangianSpec`], read from and written to
/// TOML. `kind` selects the family:
///
/// ```toml
/// kind = "droplet_w"
/// dim = 1
/// s = 0.5
/// eps = 0.1
/// w = "builtin:power_exp"   # or: w_csv = "w.csv" (two columns u, W)
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianConfig {
    pub kind: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_table_u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_table_w: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
    /// Present only to reject direction-dependent tables explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_components: Option<toml::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coercivity: Option<Coercivity>,
}

fn need(v: Option<f64>, key: &str, kind: &str) -> Result<f64> {
    v.ok_or_else(|| invalid(format!("`{key}` is required for kind `{kind}`")))
}

impl LagrangianConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Build the spec; relative `w_csv` paths resolve against `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<LagrangianSpec> {
        let kind = self.kind.as_str();
        let lk = match kind {
            "power_sum" => LagrangianKind::PowerSum { p: need(self.p, "p", kind)?, s: need(self.s, "s", kind)? },
            "scale_invariant" => LagrangianKind::ScaleInvariant { p: need(self.p, "p", kind)? },
            "scale_invariant_perturbed" => LagrangianKind::ScaleInvariantPerturbed { p: need(self.p, "p", kind)? },
            "droplet_w" => {
                let s = need(self.s, "s", kind)?;
                let w = self.build_w(s, base_dir)?;
                LagrangianKind::DropletW { s, w, eps: need(self.eps, "eps", kind)? }
            }
            "tabulated" => {
                if self.xi_components.is_some() {
                    return Err(invalid("anisotropic tabulated Lagrangians are not supported"));
                }
                let (Some(u), Some(xi), Some(values)) = (&self.u, &self.xi, &self.values) else {
                    return Err(invalid("tabulated kind needs `u`, `xi` and `values`"));
                };
                LagrangianKind::Tabulated(FTable::new(u.clone(), xi.clone(), values.clone())?)
            }
            other => return Err(invalid(format!("unknown Lagrangian kind `{other}`"))),
        };
        let spec = LagrangianSpec::new(lk, self.dim)?;
        Ok(match self.coercivity {
            Some(c) => spec.with_coercivity(c),
            None => spec,
        })
    }

    fn build_w(&self, s: f64, base_dir: Option<&Path>) -> Result<WFunction> {
        match (&self.w, &self.w_csv, &self.w_table_u, &self.w_table_w) {
            (Some(name), None, None, None) => WFunction::builtin(name, s),
            (None, Some(path), None, None) => {
                let path = match base_dir {
                    Some(dir) if Path::new(path).is_relative() => dir.join(path),
                    _ => Path::new(path).to_path_buf(),
                };
                Ok(WFunction::Tabulated(crate::io::read_w_table(&path, s)?))
            }
            (None, None, Some(u), Some(w)) => Ok(WFunction::Tabulated(WTable::new(u.clone(), w.clone(), s)?)),
            _ => Err(invalid("droplet_w needs exactly one of `w`, `w_csv`, or `w_table_u`+`w_table_w`")),
        }
    }

    pub fn from_spec(spec: &LagrangianSpec) -> Self {
        let mut c = LagrangianConfig { dim: spec.dim, coercivity: spec.coercivity, ..Default::default() };
        match &spec.kind {
            LagrangianKind::PowerSum { p, s } => {
                c.kind = "power_sum".into();
                c.p = Some(*p);
                c.s = Some(*s);
            }
            LagrangianKind::ScaleInvariant { p } => {
                c.kind = "scale_invariant".into();
                c.p = Some(*p);
            }
            LagrangianKind::ScaleInvariantPerturbed { p } => {
                c.kind = "scale_invariant_perturbed".into();
                c.p = Some(*p);
            }
            LagrangianKind::DropletW { s, w, eps } => {
                c.kind = "droplet_w".into();
                c.s = Some(*s);
                c.eps = Some(*eps);
                match w {
                    WFunction::Power { .. } => c.w = Some("builtin:power".into()),
                    WFunction::PowerPlusLinear { .. } => c.w = Some("builtin:power_plus_linear".into()),
                    WFunction::PowerExp { .. } => c.w = Some("builtin:power_exp".into()),
                    WFunction::LinearThenPower { .. } => c.w = Some("builtin:linear_then_power".into()),
                    WFunction::Tabulated(t) => {
                        c.w_table_u = Some(t.u.clone());
                        c.w_table_w = Some(t.w.clone());
                    }
                }
            }
            LagrangianKind::Tabulated(t) => {
                c.kind = "tabulated".into();
                c.u = Some(t.u.clone());
                c.xi = Some(t.xi.clone());
                c.values = Some(t.values.clone());
            }
        }
        c
    }
}

impl LagrangianSpec {
    /// Read a TOML config file; `w_csv` paths are relative to the file.
    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        LagrangianConfig::from_toml_str(&text)?.build(path.parent())
    }

    pub fn to_config_string(&self) -> String {
        LagrangianConfig::from_spec(self).to_toml_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_power_sum() {
        let c = LagrangianConfig::from_toml_str("kind = \"power_sum\"\ndim = 1\np = 2.0\ns = 0.5\n").unwrap();
        let f = c.build(None).unwrap();
        assert_eq!(f.kind, LagrangianKind::PowerSum { p: 2.0, s: 0.5 });
    }

    #[test]
    fn round_trips_every_kind() {
        let specs = [
            LagrangianSpec::power_sum(3.0, 0.9, 2).unwrap(),
            LagrangianSpec::scale_invariant(2.0, 3).unwrap(),
            LagrangianSpec::scale_invariant_perturbed(1.5, 2).unwrap(),
            LagrangianSpec::droplet(0.5, WFunction::PowerExp { s: 0.5 }, 0.1, 2).unwrap(),
            LagrangianSpec::droplet(
                -0.5,
                WFunction::Tabulated(WTable::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.8], -0.5).unwrap()),
                0.2,
                1,
            )
            .unwrap()
            .with_coercivity(Coercivity { alpha: 0.5, beta: 0.0, p: 2.0 }),
        ];
        for spec in specs {
            let text = spec.to_config_string();
            let back = LagrangianConfig::from_toml_str(&text).unwrap().build(None).unwrap();
            assert_eq!(back, spec, "{text}");
        }
    }

    #[test]
    fn rejects_missing_and_unknown() {
        assert!(LagrangianConfig::from_toml_str("kind = \"power_sum\"\ndim = 1\np = 2.0\n")
            .unwrap()
            .build(None)
            .is_err());
        assert!(LagrangianConfig::from_toml_str("kind = \"nope\"\ndim = 1\n").unwrap().build(None).is_err());
        assert!(LagrangianConfig::from_toml_str("kind = \"power_sum\"\ndim = 1\nq = 1\n").is_err());
    }

    #[test]
    fn rejects_anisotropic_table() {
        let text = "kind = \"tabulated\"\ndim = 2\nu = [0.0, 1.0]\nxi = [0.0, 1.0]\n\
                    values = [[0.0, 1.0], [1.0, 2.0]]\nxi_components = 2\n";
        let err = LagrangianConfig::from_toml_str(text).unwrap().build(None).unwrap_err();
        assert!(err.to_string().contains("anisotropic"));
    }
}

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Declares a run's flag struct (every field optional, for clap) and its
/// resolved config (defaults filled, for serde). Fields inside `@auto`
/// stay optional in the config and are filled by the run from the model.
macro_rules! run_config {
    (
        $args:ident => $cfg:ident {
            $( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr, )*
            $( @auto { $( $(#[doc = $adoc:literal])* $afield:ident : $aty:ty, )* } )?
        }
    ) => {
        #[derive(Debug, Clone, Default, clap::Args, serde::Serialize)]
        pub struct $args {
            $(
                $(#[doc = $doc])*
                #[arg(long, allow_negative_numbers = true)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
            $($(
                $(#[doc = $adoc])*
                #[arg(long, allow_negative_numbers = true)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $afield: Option<$aty>,
            )*)?
        }

        #[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $cfg {
            $( pub $field: $ty, )*
            $($( pub $afield: Option<$aty>, )*)?
        }

        impl Default for $cfg {
            fn default() -> Self {
                Self {
                    $( $field: $default, )*
                    $($( $afield: None, )*)?
                }
            }
        }
    };
}

pub(crate) use run_config;

/// Reads a JSON config file. A top-level `subcommand` key, if present, must
/// match the run and is dropped.
pub fn load_file(path: &std::path::Path, subcommand: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Validation(format!("{}: config must be a JSON object", path.display())));
    };
    if let Some(s) = map.remove("subcommand") {
        if s.as_str() != Some(subcommand) {
            return Err(CliError::Validation(format!("config is for subcommand {s}, not `{subcommand}`")));
        }
    }
    Ok(map)
}

/// Flags override file values.
pub fn overlay(mut base: Map<String, Value>, flags: Value) -> Map<String, Value> {
    if let Value::Object(m) = flags {
        for (k, v) in m {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    base
}

pub fn resolve<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Validation(format!("config: {e}")))
}

/// `key=v1,v2,...`; values parse as JSON, falling back to strings.
pub fn parse_param(spec: &str) -> Result<(String, Vec<Value>), CliError> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("sweep parameter `{spec}` must look like key=v1,v2")))?;
    let key = key.trim().replace('-', "_");
    if key.is_empty() {
        return Err(CliError::Validation(format!("sweep parameter `{spec}` has an empty key")));
    }
    let vals: Vec<Value> = values
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())))
        .collect();
    if vals.is_empty() {
        return Err(CliError::Validation(format!("sweep parameter `{key}` has no values")));
    }
    Ok((key, vals))
}

/// Cartesian product in row-major order (last parameter varies fastest).
pub fn lattice(params: &[(String, Vec<Value>)]) -> Vec<Vec<(String, Value)>> {
    let mut out = vec![Vec::new()];
    for (k, vals) in params {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((k.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flags_override_file() {
        let base = json!({"kappa": 2.0, "phi0": 0.3}).as_object().unwrap().clone();
        let m = overlay(base, json!({"kappa": 1.0, "x0": null}));
        assert_eq!(m["kappa"], json!(1.0));
        assert_eq!(m["phi0"], json!(0.3));
        assert!(!m.contains_key("x0"));
    }

    #[test]
    fn params_and_lattice() {
        let (k, v) = parse_param("phi0=0.1,0.5").unwrap();
        assert_eq!(k, "phi0");
        assert_eq!(v, vec![json!(0.1), json!(0.5)]);
        let (_, v) = parse_param("form=exact,unsquared").unwrap();
        assert_eq!(v[1], json!("unsquared"));
        assert!(parse_param("nokey").is_err());
        let l = lattice(&[("a".into(), vec![json!(1), json!(2)]), ("b".into(), vec![json!(3), json!(4), json!(5)])]);
        assert_eq!(l.len(), 6);
        assert_eq!(l[1], vec![("a".to_string(), json!(1)), ("b".to_string(), json!(4))]);
    }
}

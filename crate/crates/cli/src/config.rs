//! Config-file merging and the resolved-config echo.
//!
//! A config file is folded into argv as `--key=value` tokens placed before the
//! user's own flags; with `args_override_self` the later (command-line)
//! occurrence wins.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{Context, Result};
use ini::Ini;
use serde::Serialize;

use crate::io::Usage;

const RESOLVED_NAME: &str = "resolved.ini";

fn config_path(argv: &[OsString]) -> Result<Option<(usize, usize, OsString)>> {
    for (i, a) in argv.iter().enumerate().skip(1) {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            let v = argv
                .get(i + 1)
                .ok_or_else(|| Usage("--config needs a file path".into()))?;
            return Ok(Some((i, 2, v.clone())));
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Ok(Some((i, 1, v.into())));
        }
    }
    Ok(None)
}

/// Folds the `--config` file (if any) into the argument list.
pub fn expand_args(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some((at, width, path)) = config_path(&argv)? else {
        return Ok(argv);
    };
    let mut rest: Vec<OsString> = argv.clone();
    rest.drain(at..at + width);
    let Some(sub_at) = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 1)
    else {
        return Ok(argv);
    };
    let sub = rest[sub_at].to_string_lossy().into_owned();
    let file = Ini::load_from_file(&path)
        .map_err(|e| Usage(format!("cannot read config file {}: {e}", Path::new(&path).display())))?;

    let mut injected = Vec::new();
    for section in [None, Some(sub.as_str())] {
        let Some(props) = file.section(section) else { continue };
        for (key, value) in props.iter() {
            if key == "config" {
                return Err(Usage("a config file cannot name another config file".into()).into());
            }
            match value {
                "true" => injected.push(OsString::from(format!("--{key}"))),
                "false" => {}
                v => injected.push(OsString::from(format!("--{key}={v}"))),
            }
        }
    }
    let mut out = rest[..=sub_at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&rest[sub_at + 1..]);
    Ok(out)
}

/// Writes `args` as `[subcommand]` key = value lines to `dir/resolved.ini`.
/// Feeding that file back via `--config` reproduces the run.
pub fn write_resolved<T: Serialize>(dir: &Path, subcommand: &str, args: &T) -> Result<()> {
    let value = serde_json::to_value(args)?;
    let map = value.as_object().context("arguments serialise to a map")?;
    let mut ini = Ini::new();
    for (key, v) in map {
        let text = match v {
            serde_json::Value::Null | serde_json::Value::Bool(false) => continue,
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        ini.with_section(Some(subcommand)).set(key.as_str(), text);
    }
    let path = dir.join(RESOLVED_NAME);
    ini.write_to_file(&path)
        .with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn no_config_is_identity() {
        let a = os(&["edgeward", "train", "--epochs", "3"]);
        assert_eq!(expand_args(a.clone()).unwrap(), a);
    }

    #[test]
    fn file_values_precede_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ini");
        std::fs::write(
            &p,
            "seed = 4\n[train]\nepochs = 9\nno-timing = true\ncount-macs = false\n[federate]\nrounds = 2\n",
        )
        .unwrap();
        let argv = os(&["edgeward", "--config", p.to_str().unwrap(), "train", "--epochs", "3"]);
        let out = expand_args(argv).unwrap();
        assert_eq!(
            out,
            os(&[
                "edgeward",
                "train",
                "--seed=4",
                "--epochs=9",
                "--no-timing",
                "--epochs",
                "3"
            ])
        );
    }

    #[test]
    fn missing_file_is_usage_error() {
        let err = expand_args(os(&["edgeward", "--config=/nonexistent/x.ini", "train"])).unwrap_err();
        assert!(err.is::<Usage>());
    }

    #[test]
    fn resolved_round_trip() {
        #[derive(Serialize)]
        #[serde(rename_all = "kebab-case")]
        struct A {
            epochs: usize,
            lr: f64,
            zones: String,
            flag: bool,
            off: bool,
            none: Option<u8>,
        }
        let dir = tempfile::tempdir().unwrap();
        let a = A {
            epochs: 5,
            lr: 0.01,
            zones: "0:a|b,1:*".into(),
            flag: true,
            off: false,
            none: None,
        };
        write_resolved(dir.path(), "train", &a).unwrap();
        let p = dir.path().join(RESOLVED_NAME);
        let out = expand_args(os(&["edgeward", "train", "--config", p.to_str().unwrap()])).unwrap();
        assert_eq!(
            out,
            os(&[
                "edgeward",
                "train",
                "--epochs=5",
                "--flag",
                "--lr=0.01",
                "--zones=0:a|b,1:*"
            ])
        );
    }
}

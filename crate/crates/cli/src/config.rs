//! `--config` files: flat `key = value` lines that stand in for flags.
//!
//! Keys are flag names without the leading dashes. A flag given on the
//! command line wins over the same key in the file. `#` starts a comment.

use std::collections::BTreeMap;

/// Parses the file contents into an ordered key map.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value, got {raw:?}", i + 1))?;
        let k = k.trim().trim_start_matches('-');
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn flag_present(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&eq))
}

/// Removes `--config <path>` from `args` and appends the file's keys that
/// are not already given as flags. Boolean values `true`/`false` become a
/// bare flag or nothing.
pub fn merge(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = if let Some(p) = args[pos].strip_prefix("--config=") {
        let p = p.to_string();
        args.remove(pos);
        p
    } else {
        if pos + 1 >= args.len() {
            return Err("--config needs a path".into());
        }
        let p = args.remove(pos + 1);
        args.remove(pos);
        p
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    for (k, v) in parse(&text)? {
        if flag_present(&args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => args.push(format!("--{k}")),
            "false" => {}
            _ => args.push(format!("--{k}={v}")),
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let m = parse("# run\n--tau = 0.2,1.3\nseed=7 # fixed\n\n").unwrap();
        assert_eq!(m["tau"], "0.2,1.3");
        assert_eq!(m["seed"], "7");
        assert!(parse("tau 0.2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("lame-geom-config-{}", std::process::id()));
        std::fs::write(&dir, "seed = 3\nvalidate = true\ntau = 0,1\n").unwrap();
        let args: Vec<String> = ["lame-geom", "phi", "solve", "--config", dir.to_str().unwrap(), "--seed", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let merged = merge(args).unwrap();
        std::fs::remove_file(&dir).ok();
        assert!(merged.contains(&"--seed".to_string()));
        assert!(!merged.iter().any(|a| a == "--seed=3"));
        assert!(merged.contains(&"--validate".to_string()));
        assert!(merged.contains(&"--tau=0,1".to_string()));
        assert!(!merged.iter().any(|a| a.starts_with("--config")));
    }
}

//! `--config FILE`: plain `key = value` lines merged into the argument list.
//!
//! Each key becomes `--key value` (or a bare `--key` for `true`, nothing for
//! `false`) appended after the subcommand. Keys already given on the command
//! line win. `#` starts a comment.

use std::fs;
use std::path::Path;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", no + 1))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", no + 1));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
}

/// Finds `--config PATH` (or `--config=PATH`) in `args` and splices the file's
/// entries onto the end.
pub fn expand(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a path".into());
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| format!("reading {path}: {e}"))?;
    let mut extra = Vec::new();
    for (k, v) in parse(&text)? {
        if given(&args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => {
                extra.push(format!("--{k}"));
                extra.push(v);
            }
        }
    }
    args.extend(extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let kv = parse("# sweep\nchi = 2\n\nn_list=500,1000  # sizes\n").unwrap();
        assert_eq!(kv, vec![("chi".into(), "2".into()), ("n-list".into(), "500,1000".into())]);
        assert!(parse("chi 2").is_err());
    }

    #[test]
    fn command_line_wins() {
        let file = tempfile::NamedTempFile::new().unwrap();
        fs::write(file.path(), "chi=3\nrho=0.4\npotential=true\nverbose=false\n").unwrap();
        let path = file.path().to_str().unwrap();
        let args: Vec<String> =
            ["twolin", "analyze", "--chi", "2", "--config", path].iter().map(|s| s.to_string()).collect();
        let out = expand(args).unwrap();
        assert_eq!(out, ["twolin", "analyze", "--chi", "2", "--rho", "0.4", "--potential"]);
    }
}

//! Sweep grids from `key = value` files.
//!
//! Lines are `key = v1, v2, ...` or `key = linspace(start, stop, count)`.
//! Blank lines and lines starting with `#` are skipped. Keys: `m`, `L`,
//! `alpha`, `alpha_frac`, `delta`, `class`, `output`, `seed`.

use crate::args::SweepArgs;
use crate::CliError;
use gdcert::{FunctionClass, ProblemSpec};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaGrid {
    Absolute(Vec<f64>),
    /// Multiples of `2/(L+m)`.
    Fraction(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m_values: Vec<f64>,
    pub l_values: Vec<f64>,
    pub alpha_values: AlphaGrid,
    pub delta_values: Vec<f64>,
    pub class: FunctionClass,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Debug, Default)]
struct Partial {
    m: Vec<f64>,
    l: Vec<f64>,
    alpha: Vec<f64>,
    alpha_frac: Vec<f64>,
    delta: Vec<f64>,
    class: Option<String>,
    output: Option<PathBuf>,
    seed: Option<u64>,
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: String| CliError::Usage(format!("`{key}`: {why}"));
    let raw = raw.trim();
    if let Some(inner) = raw.strip_prefix("linspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let [a, b, n] = parts[..] else {
            return Err(bad("linspace takes start, stop, count".into()));
        };
        let a: f64 = a.parse().map_err(|_| bad(format!("bad number `{a}`")))?;
        let b: f64 = b.parse().map_err(|_| bad(format!("bad number `{b}`")))?;
        let n: usize = n.parse().map_err(|_| bad(format!("bad count `{n}`")))?;
        return match n {
            0 => Err(bad("linspace count must be positive".into())),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`"))))
        .collect()
}

fn parse_file(text: &str) -> Result<Partial, CliError> {
    let mut p = Partial::default();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", no + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "m" => p.m = parse_list(key, value)?,
            "L" => p.l = parse_list(key, value)?,
            "alpha" => p.alpha = parse_list(key, value)?,
            "alpha_frac" => p.alpha_frac = parse_list(key, value)?,
            "delta" => p.delta = parse_list(key, value)?,
            "class" => p.class = Some(value.to_string()),
            "output" => p.output = Some(PathBuf::from(value)),
            "seed" => {
                p.seed = Some(
                    value
                        .parse()
                        .map_err(|_| CliError::Usage(format!("`seed`: bad integer `{value}`")))?,
                )
            }
            other => return Err(CliError::Usage(format!("config line {}: unknown key `{other}`", no + 1))),
        }
    }
    Ok(p)
}

fn pick(flag: Vec<f64>, file: Vec<f64>) -> Vec<f64> {
    if flag.is_empty() { file } else { flag }
}

impl SweepConfig {
    pub fn from_args(args: SweepArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
                parse_file(&text)?
            }
            None => Partial::default(),
        };
        let alpha = pick(args.alpha, file.alpha);
        let frac = pick(args.alpha_frac, file.alpha_frac);
        let alpha_values = match (alpha.is_empty(), frac.is_empty()) {
            (false, true) => AlphaGrid::Absolute(alpha),
            (true, false) => AlphaGrid::Fraction(frac),
            (true, true) => return Err(CliError::Usage("the alpha grid is empty".into())),
            (false, false) => return Err(CliError::Usage("give either alpha or alpha_frac, not both".into())),
        };
        let class = args.class.or(file.class).unwrap_or_else(|| "strongly-convex".into());
        let cfg = SweepConfig {
            m_values: pick(args.m, file.m),
            l_values: pick(args.l, file.l),
            alpha_values,
            delta_values: pick(args.delta, file.delta),
            class: class.parse().map_err(CliError::from)?,
            output: args.output.or(file.output),
            seed: args.seed.or(file.seed).unwrap_or(0),
        };
        for (name, v) in [("m", &cfg.m_values), ("L", &cfg.l_values), ("delta", &cfg.delta_values)] {
            if v.is_empty() {
                return Err(CliError::Usage(format!("the {name} grid is empty")));
            }
        }
        cfg.specs()?;
        Ok(cfg)
    }

    /// Grid points in lexicographic order of `(m, L, α, δ)` indices.
    pub fn specs(&self) -> Result<Vec<ProblemSpec>, CliError> {
        let mut out = Vec::new();
        for &m in &self.m_values {
            for &l in &self.l_values {
                let alphas: Vec<f64> = match &self.alpha_values {
                    AlphaGrid::Absolute(a) => a.clone(),
                    AlphaGrid::Fraction(f) => f.iter().map(|f| f * 2.0 / (l + m)).collect(),
                };
                for &alpha in &alphas {
                    for &delta in &self.delta_values {
                        out.push(ProblemSpec::new(m, l, alpha, delta)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_linspace() {
        assert_eq!(parse_list("x", "1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_list("x", "linspace(0, 1, 5)").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_list("x", "linspace(0, 1)").is_err());
        assert!(parse_list("x", "1, two").is_err());
    }

    #[test]
    fn file_keys() {
        let p = parse_file("# grid\nm = 1\nL = 10, 100\n\nalpha_frac = 0.5\nclass = sector\nseed = 7\n").unwrap();
        assert_eq!(p.l, vec![10.0, 100.0]);
        assert_eq!(p.alpha_frac, vec![0.5]);
        assert_eq!(p.class.as_deref(), Some("sector"));
        assert_eq!(p.seed, Some(7));
        assert!(parse_file("beta = 1").is_err());
        assert!(parse_file("m 1").is_err());
    }
}

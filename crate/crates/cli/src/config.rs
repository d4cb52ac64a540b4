//! Line-oriented `key = value` scenario files.
//!
//! `#` starts a comment, blank lines are ignored, keys are case-sensitive.
//! Unknown keys are rejected so typos surface instead of silently falling
//! back to defaults. `rho_db = -inf` encodes isolated cells.
//!
//! ```text
//! # four downlink cells
//! l_d = 4
//! l_u = 0
//! k = 4
//! n_b = 5
//! n_m = 5
//! s = 1
//! snr_db = 10
//! rho_db = -20
//! w = 0.01
//! ```

use silm_core::network::NetworkConfig;
use silm_core::solver::{PrecoderKind, SolverParams};

/// Raw file contents; everything optional so CLI flags can fill the rest.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub l_d: Option<usize>,
    pub l_u: Option<usize>,
    pub k: Option<usize>,
    pub n_b: Option<usize>,
    pub n_m: Option<usize>,
    pub s: Option<usize>,
    pub snr_db: Option<f64>,
    pub rho_db: Option<f64>,
    pub w: Option<f64>,
    pub mode: Option<String>,
    pub precoder: Option<String>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

pub fn parse_config(text: &str) -> Result<FileConfig, String> {
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.split_once('#') {
            Some((before, _)) => before,
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| format!("line {}: bad {} value '{}'", lineno + 1, what, value);

        match key {
            "l_d" => cfg.l_d = Some(value.parse().map_err(|_| bad("integer"))?),
            "l_u" => cfg.l_u = Some(value.parse().map_err(|_| bad("integer"))?),
            "k" => cfg.k = Some(value.parse().map_err(|_| bad("integer"))?),
            "n_b" => cfg.n_b = Some(value.parse().map_err(|_| bad("integer"))?),
            "n_m" => cfg.n_m = Some(value.parse().map_err(|_| bad("integer"))?),
            "s" => cfg.s = Some(value.parse().map_err(|_| bad("integer"))?),
            "snr_db" => cfg.snr_db = Some(value.parse().map_err(|_| bad("number"))?),
            "rho_db" => cfg.rho_db = Some(value.parse().map_err(|_| bad("number"))?),
            "w" => cfg.w = Some(value.parse().map_err(|_| bad("number"))?),
            "mode" => cfg.mode = Some(value.to_string()),
            "precoder" => cfg.precoder = Some(value.to_string()),
            "max_iters" => cfg.max_iters = Some(value.parse().map_err(|_| bad("integer"))?),
            "tol" => cfg.tol = Some(value.parse().map_err(|_| bad("number"))?),
            "trials" => cfg.trials = Some(value.parse().map_err(|_| bad("integer"))?),
            "seed" => cfg.seed = Some(value.parse().map_err(|_| bad("integer"))?),
            other => return Err(format!("line {}: unknown key '{}'", lineno + 1, other)),
        }
    }
    Ok(cfg)
}

/// Scenario plus run controls resolved from a file and CLI overrides.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub network: NetworkConfig,
    pub solver: SolverParams,
    pub snr_db: f64,
    pub trials: u64,
    pub seed: u64,
    /// "silm" or "ilm"; ilm pins the leakage weight to zero.
    pub mode: String,
}

/// CLI-level overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<String>,
    pub precoder: Option<String>,
    pub w: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

fn parse_mode(name: &str) -> Result<&'static str, String> {
    match name {
        "silm" => Ok("silm"),
        "ilm" => Ok("ilm"),
        other => Err(format!("unknown mode '{other}' (expected silm or ilm)")),
    }
}

fn parse_precoder(name: &str) -> Result<PrecoderKind, String> {
    match name {
        "mmse" => Ok(PrecoderKind::Mmse),
        "zf" => Ok(PrecoderKind::Zf),
        other => Err(format!("unknown precoder '{other}' (expected mmse or zf)")),
    }
}

/// Merge file values and overrides into a runnable configuration.
///
/// Precedence: CLI flag, then file, then default. `mode = ilm` forces the
/// leakage weight to zero regardless of any `w`.
pub fn resolve(file: &FileConfig, over: &Overrides) -> Result<ResolvedConfig, String> {
    let require = |v: Option<usize>, key: &str| v.ok_or(format!("config is missing '{key}'"));
    let l_d = file.l_d.unwrap_or(0);
    let l_u = file.l_u.unwrap_or(0);
    let k = require(file.k, "k")?;
    let n_b = require(file.n_b, "n_b")?;
    let n_m = require(file.n_m, "n_m")?;
    let s = require(file.s, "s")?;
    let snr_db = file.snr_db.ok_or("config is missing 'snr_db'")?;
    let rho_db = file.rho_db.ok_or("config is missing 'rho_db'")?;

    let mode =
        parse_mode(over.mode.as_deref().or(file.mode.as_deref()).unwrap_or("silm"))?.to_string();
    let precoder =
        parse_precoder(over.precoder.as_deref().or(file.precoder.as_deref()).unwrap_or("mmse"))?;
    let mut w = over.w.or(file.w).unwrap_or(0.0);
    if mode == "ilm" {
        w = 0.0;
    }

    let network = NetworkConfig {
        dl_cells: l_d,
        ul_cells: l_u,
        users_per_cell: k,
        bs_antennas: n_b,
        user_antennas: n_m,
        streams_per_user: s,
        power: 10f64.powf(snr_db / 10.0),
        rho_db,
        leakage_weight: w,
    };
    let solver = SolverParams {
        max_iters: over.max_iters.or(file.max_iters).unwrap_or(100),
        rel_tol: over.tol.or(file.tol).unwrap_or(1e-6),
        precoder_kind: precoder,
    };
    Ok(ResolvedConfig {
        network,
        solver,
        snr_db,
        trials: over.trials.or(file.trials).unwrap_or(200),
        seed: over.seed.or(file.seed).unwrap_or(0),
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sample scenario
l_d = 4
l_u = 0
k = 4
n_b = 5
n_m = 5
s = 1
snr_db = 10
rho_db = -20
w = 0.5   # overridden in ilm mode
";

    #[test]
    fn parses_keys_comments_and_blanks() {
        let file = parse_config(SAMPLE).unwrap();
        assert_eq!(file.l_d, Some(4));
        assert_eq!(file.k, Some(4));
        assert_eq!(file.w, Some(0.5));
        assert_eq!(file.rho_db, Some(-20.0));
        assert!(file.mode.is_none());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("l_d = many").is_err());
        assert!(parse_config("just a line").is_err());
    }

    #[test]
    fn negative_infinity_rho_is_accepted() {
        let file = parse_config("rho_db = -inf").unwrap();
        assert_eq!(file.rho_db, Some(f64::NEG_INFINITY));
    }

    #[test]
    fn ilm_mode_forces_zero_weight() {
        let file = parse_config(SAMPLE).unwrap();
        let over = Overrides { mode: Some("ilm".into()), ..Default::default() };
        let resolved = resolve(&file, &over).unwrap();
        assert_eq!(resolved.network.leakage_weight, 0.0);
        assert_eq!(resolved.mode, "ilm");

        let plain = resolve(&file, &Overrides::default()).unwrap();
        assert_eq!(plain.network.leakage_weight, 0.5);
        assert!((plain.network.power - 10.0).abs() < 1e-12);
    }

    #[test]
    fn cli_flags_take_precedence_over_file() {
        let file = parse_config(SAMPLE).unwrap();
        let over = Overrides { w: Some(0.125), trials: Some(7), ..Default::default() };
        let resolved = resolve(&file, &over).unwrap();
        assert_eq!(resolved.network.leakage_weight, 0.125);
        assert_eq!(resolved.trials, 7);
        assert_eq!(resolved.seed, 0);
    }

    #[test]
    fn missing_required_keys_are_reported() {
        let file = parse_config("l_d = 1\nl_u = 0\nk = 1").unwrap();
        let err = resolve(&file, &Overrides::default()).unwrap_err();
        assert!(err.contains("n_b"));
    }
}

//! Parsing of coefficient sources and qubit specifications.

use std::fs;

use klm_core::fock::QubitAmplitudes;
use klm_core::teleport::{CoefficientFile, ResourceCoefficients};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Resolves `--coeffs` into normalized coefficients.
///
/// Accepted forms: `uniform`, `random`, `inline:v0,v1,...`, `file:PATH` or a
/// bare path. Inline entries are reals or `re:im` pairs. With `squared` every
/// value is read as `|c_m|^2` and replaced by its square root.
pub fn coefficients(
    source: &str,
    n: Option<usize>,
    squared: bool,
    renormalize: bool,
    seed: u64,
) -> Result<ResourceCoefficients, String> {
    let values: Vec<Complex64> = if source == "uniform" {
        let n = n.ok_or("--coeffs uniform needs --n")?;
        return ResourceCoefficients::uniform(n).map_err(|e| e.to_string());
    } else if source == "random" {
        let n = n.ok_or("--coeffs random needs --n")?;
        if n == 0 {
            return Err("n must be at least 1".into());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..=n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        return ResourceCoefficients::normalized(c).map_err(|e| e.to_string());
    } else if let Some(list) = source.strip_prefix("inline:") {
        list.split(',').map(parse_entry).collect::<Result<_, _>>()?
    } else {
        let path = source.strip_prefix("file:").unwrap_or(source);
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read coefficient file {path}: {e}"))?;
        let file = CoefficientFile::parse(&text).map_err(|e| format!("{path}: {e}"))?;
        file.c.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
    };
    let values = if squared {
        values
            .into_iter()
            .map(|v| {
                if v.im != 0.0 || v.re < 0.0 {
                    Err(format!("--squared values must be nonnegative reals, got {v}"))
                } else {
                    Ok(Complex64::new(v.re.sqrt(), 0.0))
                }
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        values
    };
    if values.len() < 2 {
        return Err(format!("need at least 2 coefficients, got {}", values.len()));
    }
    let found = values.len() - 1;
    if let Some(n) = n {
        if n != found {
            return Err(format!(
                "--n {n} does not match {} coefficients (n = {found})",
                values.len()
            ));
        }
    }
    CoefficientFile {
        n: found,
        c: values.iter().map(|v| [v.re, v.im]).collect(),
    }
    .into_coefficients(renormalize)
    .map_err(|e| e.to_string())
}

fn parse_entry(s: &str) -> Result<Complex64, String> {
    let s = s.trim();
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad number {x:?}"))
    };
    match s.split_once(':') {
        Some((re, im)) => Ok(Complex64::new(parse(re)?, parse(im)?)),
        None => Ok(Complex64::new(parse(s)?, 0.0)),
    }
}

/// Parses `--qubit`: `re,im+re,im` for `(alpha, beta)` or `random:SEED` for a
/// Haar-random state.
pub fn qubit(spec: &str) -> Result<QubitAmplitudes, String> {
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed.parse().map_err(|_| format!("bad qubit seed {seed:?}"))?;
        return Ok(QubitAmplitudes::haar_random(&mut ChaCha8Rng::seed_from_u64(seed)));
    }
    let (a, b) = spec
        .split_once('+')
        .ok_or_else(|| format!("qubit {spec:?} is not of the form re,im+re,im"))?;
    let pair = |s: &str| -> Result<Complex64, String> {
        let (re, im) = s
            .split_once(',')
            .ok_or_else(|| format!("amplitude {s:?} is not re,im"))?;
        Ok(Complex64::new(parse_entry(re)?.re, parse_entry(im)?.re))
    };
    let (alpha, beta) = (pair(a)?, pair(b)?);
    let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-9 {
        return Err(format!("qubit squared norm is {norm_sqr}, expected 1"));
    }
    QubitAmplitudes::normalized(alpha, beta).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_squared() {
        let rc = coefficients("inline:0.5,0.3,0.2", None, true, false, 0).unwrap();
        assert_eq!(rc.n(), 2);
        assert!((rc.weight(1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn inline_complex_and_mismatch() {
        let rc = coefficients("inline:0.6:0,0:0.8", Some(1), false, false, 0).unwrap();
        assert!((rc.coeff(1) - Complex64::new(0.0, 0.8)).norm() < 1e-15);
        assert!(coefficients("inline:0.6,0.8", Some(2), false, false, 0).is_err());
        assert!(coefficients("inline:1,1", None, false, false, 0).is_err());
        assert!(coefficients("inline:1,1", None, false, true, 0).is_ok());
        assert!(coefficients("inline:-0.5,1.5", None, true, false, 0).is_err());
    }

    #[test]
    fn qubit_forms() {
        let q = qubit("0.6,0+0,0.8").unwrap();
        assert_eq!(q.beta, Complex64::new(0.0, 0.8));
        assert_eq!(qubit("random:3").unwrap(), qubit("random:3").unwrap());
        assert!(qubit("1,0").is_err());
        assert!(qubit("1,0+1,0").is_err());
    }
}

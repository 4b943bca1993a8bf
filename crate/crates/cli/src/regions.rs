//! Boundary region grammar: semicolon-separated `name:lo..hi` in chart
//! coordinates, plus the 1D endpoint labels `left` and `right`.

use kramers_core::error::CoreError;
use kramers_core::sampler::RegionSpec;

pub fn parse_regions(spec: &str, dim: usize) -> Result<Vec<RegionSpec>, CoreError> {
    let mut out = Vec::new();
    for token in spec.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        match token {
            "left" if dim == 1 => out.push(RegionSpec {
                name: "left".into(),
                lo: -1.5,
                hi: -0.5,
            }),
            "right" if dim == 1 => out.push(RegionSpec {
                name: "right".into(),
                lo: 0.5,
                hi: 1.5,
            }),
            _ => {
                let (name, range) = token.split_once(':').ok_or_else(|| {
                    CoreError::Config(format!("region `{token}` is not of the form name:lo..hi"))
                })?;
                let (lo, hi) = range.split_once("..").ok_or_else(|| {
                    CoreError::Config(format!("range `{range}` is not of the form lo..hi"))
                })?;
                let lo: f64 = lo
                    .trim()
                    .parse()
                    .map_err(|_| CoreError::Config(format!("bad number in `{token}`")))?;
                let hi: f64 = hi
                    .trim()
                    .parse()
                    .map_err(|_| CoreError::Config(format!("bad number in `{token}`")))?;
                if lo >= hi {
                    return Err(CoreError::Config(format!("empty region `{token}`")));
                }
                out.push(RegionSpec {
                    name: name.trim().to_string(),
                    lo,
                    hi,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(CoreError::Config("no regions given".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_labels_and_ranges() {
        let r = parse_regions("left;right", 1).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].contains(-1.0) && r[1].contains(1.0));

        let r = parse_regions("east:-0.6..0.6; west:2.5..3.8", 2).unwrap();
        assert_eq!(r[0].name, "east");
        assert_eq!(r[1].lo, 2.5);

        assert!(parse_regions("bad", 2).is_err());
        assert!(parse_regions("x:3..1", 2).is_err());
    }
}

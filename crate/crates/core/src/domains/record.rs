//! Plain-text domain records.
//!
//! ```text
//! isocap-domain v1
//! dimension 3
//! kind perturbed            # ball | ellipsoid | perturbed
//! scale 1
//! center 0 0 0
//! axes 1.1 1.1 0.8264       # ellipsoid only
//! lmax 2                    # perturbed only
//! coeff 2 0 0.1             # l m value, perturbed only, zeros may be omitted
//! ```
//!
//! Blank lines and `#` comments are ignored. Floats are written in shortest
//! round-trip form, so records survive a write/read cycle bit for bit.

use super::{check_amplitude, DomainError, RadialProfile, StarDomain};
use crate::sphere::HarmonicCoeffs;

pub const RECORD_HEADER: &str = "isocap-domain v1";

pub fn to_record(domain: &StarDomain) -> String {
    let mut out = String::new();
    out.push_str(RECORD_HEADER);
    out.push('\n');
    out.push_str("dimension 3\n");
    let c = domain.center();
    let kind = match domain.profile() {
        RadialProfile::Ball => "ball",
        RadialProfile::Ellipsoid { .. } => "ellipsoid",
        RadialProfile::Perturbed { .. } => "perturbed",
    };
    out.push_str(&format!("kind {kind}\n"));
    out.push_str(&format!("scale {}\n", domain.scale()));
    out.push_str(&format!("center {} {} {}\n", c[0], c[1], c[2]));
    match domain.profile() {
        RadialProfile::Ball => {}
        RadialProfile::Ellipsoid { axes } => {
            out.push_str(&format!("axes {} {} {}\n", axes[0], axes[1], axes[2]));
        }
        RadialProfile::Perturbed { phi } => {
            out.push_str(&format!("lmax {}\n", phi.lmax()));
            for (idx, v) in phi.iter() {
                if v != 0.0 {
                    out.push_str(&format!("coeff {} {} {}\n", idx.degree(), idx.order(), v));
                }
            }
        }
    }
    out
}

pub fn parse_record(text: &str) -> Result<StarDomain, DomainError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: String| DomainError::Parse { line, message };

    match lines.next() {
        Some((_, RECORD_HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("expected header `{RECORD_HEADER}`, found `{other}`"))),
        None => return Err(err(1, "empty record".into())),
    }

    let mut kind = None;
    let mut scale = 1.0;
    let mut center = [0.0; 3];
    let mut axes = None;
    let mut lmax = None;
    let mut coeffs: Vec<(usize, i32, f64)> = Vec::new();

    for (n, line) in lines {
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        let rest: Vec<&str> = parts.collect();
        let floats = |want: usize| -> Result<Vec<f64>, DomainError> {
            if rest.len() != want {
                return Err(err(n, format!("`{key}` expects {want} value(s), got {}", rest.len())));
            }
            rest.iter()
                .map(|s| s.parse::<f64>().map_err(|_| err(n, format!("`{s}` is not a number"))))
                .collect()
        };
        match key {
            "dimension" => {
                let d = floats(1)?[0];
                if d != 3.0 {
                    return Err(err(n, format!("only dimension 3 is supported, got {d}")));
                }
            }
            "kind" => {
                if rest.len() != 1 {
                    return Err(err(n, "`kind` expects one word".into()));
                }
                kind = Some((n, rest[0].to_string()));
            }
            "scale" => scale = floats(1)?[0],
            "center" => {
                let v = floats(3)?;
                center = [v[0], v[1], v[2]];
            }
            "axes" => {
                let v = floats(3)?;
                axes = Some([v[0], v[1], v[2]]);
            }
            "lmax" => {
                let v = rest
                    .first()
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|_| rest.len() == 1)
                    .ok_or_else(|| err(n, "`lmax` expects a non-negative integer".into()))?;
                lmax = Some(v);
            }
            "coeff" => {
                if rest.len() != 3 {
                    return Err(err(n, "`coeff` expects `l m value`".into()));
                }
                let l = rest[0].parse::<usize>().map_err(|_| err(n, format!("bad degree `{}`", rest[0])))?;
                let m = rest[1].parse::<i32>().map_err(|_| err(n, format!("bad order `{}`", rest[1])))?;
                let v = rest[2].parse::<f64>().map_err(|_| err(n, format!("`{}` is not a number", rest[2])))?;
                if m.unsigned_abs() as usize > l {
                    return Err(err(n, format!("order {m} exceeds degree {l}")));
                }
                coeffs.push((l, m, v));
            }
            other => return Err(err(n, format!("unknown key `{other}`"))),
        }
    }

    let (kline, kind) = kind.ok_or_else(|| err(1, "missing `kind` line".into()))?;
    let profile = match kind.as_str() {
        "ball" => RadialProfile::Ball,
        "ellipsoid" => RadialProfile::Ellipsoid {
            axes: axes.ok_or_else(|| err(kline, "ellipsoid record without `axes`".into()))?,
        },
        "perturbed" => {
            let lmax = lmax.ok_or_else(|| err(kline, "perturbed record without `lmax`".into()))?;
            let mut phi = HarmonicCoeffs::zeros(lmax);
            for (l, m, v) in coeffs {
                if l > lmax {
                    return Err(err(kline, format!("coefficient degree {l} exceeds lmax {lmax}")));
                }
                phi.set(l, m, v);
            }
            if !phi.is_finite() {
                return Err(err(kline, "non-finite coefficient".into()));
            }
            check_amplitude(&phi)?;
            RadialProfile::Perturbed { phi }
        }
        other => return Err(err(kline, format!("unknown kind `{other}`"))),
    };
    StarDomain::from_profile(profile, scale, center)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut phi = HarmonicCoeffs::zeros(3);
        phi.set(2, 0, 0.1);
        phi.set(3, -2, -0.0371);
        phi.set(1, 1, 1.0 / 3.0);
        let d = StarDomain::nearly_spherical_from_phi(&phi, true)
            .unwrap()
            .translated([0.1, -0.2, 0.3]);
        let text = to_record(&d);
        let back = parse_record(&text).unwrap();
        assert_eq!(back.rho_at_nodes(), d.rho_at_nodes());
        assert_eq!(back.center(), d.center());
        assert_eq!(to_record(&back), text);

        let e = StarDomain::ellipsoid(0.25).unwrap();
        assert_eq!(parse_record(&to_record(&e)).unwrap().rho_at_nodes(), e.rho_at_nodes());
        let b = StarDomain::ball(2.5, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(parse_record(&to_record(&b)).unwrap().volume(), b.volume());
    }

    #[test]
    fn malformed_records_report_lines() {
        assert!(matches!(
            parse_record("isocap-domain v2\nkind ball\n"),
            Err(DomainError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_record("isocap-domain v1\nkind ball\nscale abc\n"),
            Err(DomainError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_record("isocap-domain v1\n\n# c\nkind ellipsoid\n"),
            Err(DomainError::Parse { line: 4, .. })
        ));
        assert!(parse_record("isocap-domain v1\nkind ball\nscale -1\n").is_err());
        assert!(parse_record("").is_err());
    }
}

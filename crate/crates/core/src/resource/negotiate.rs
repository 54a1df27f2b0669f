//! `Accept` header parsing and server-driven media type selection.
//!
//! Simplified q-value handling: exact ranges and `*/*` only; `type/*` ranges
//! and accept-extensions are ignored.

/// A parsed media range with its quality weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaType {
    pub essence: String,
    pub quality: f64,
}

pub fn parse_accept(header: &str) -> Vec<MediaType> {
    header
        .split(',')
        .filter_map(|range| {
            let mut parts = range.split(';');
            let essence = parts.next()?.trim().to_ascii_lowercase();
            if essence.is_empty() {
                return None;
            }
            let mut quality = 1.0;
            for param in parts {
                if let Some((k, v)) = param.split_once('=') {
                    if k.trim().eq_ignore_ascii_case("q") {
                        quality = v.trim().parse::<f64>().ok().filter(|q| (0.0..=1.0).contains(q))?;
                    }
                }
            }
            Some(MediaType { essence, quality })
        })
        .collect()
}

/// Picks the supported type with the highest quality. Ties go to the
/// earlier entry of `supported` (server preference). An absent or empty
/// header selects the first supported type; `None` means 406.
pub fn negotiate<'a, S: AsRef<str>>(accept: Option<&str>, supported: &'a [S]) -> Option<&'a S> {
    let header = match accept {
        Some(h) if !h.trim().is_empty() => h,
        _ => return supported.first(),
    };
    let ranges = parse_accept(header);
    let mut best: Option<(&S, f64)> = None;
    for candidate in supported {
        let essence = candidate.as_ref().to_ascii_lowercase();
        let exact = ranges.iter().find(|r| r.essence == essence);
        let any = ranges.iter().find(|r| r.essence == "*/*");
        let Some(q) = exact.or(any).map(|r| r.quality) else {
            continue;
        };
        if q > 0.0 && best.is_none_or(|(_, bq)| q > bq) {
            best = Some((candidate, q));
        }
    }
    best.map(|(s, _)| s)
}

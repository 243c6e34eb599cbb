//! Size-schedule syntax: comma lists and `start:stop:x2` geometric or
//! `start:stop:+d` arithmetic progressions.

use anyhow::{bail, Context, Result};

/// Parses "8,16,32", "8:256:x2", or "10:50:+10" into an ascending list.
pub fn parse_schedule(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let items: Vec<usize> = if let Some((range, step)) = split_progression(text) {
        let (start, stop) = range;
        if start == 0 {
            bail!("schedule must start above 0");
        }
        let mut out = Vec::new();
        let mut current = start;
        while current <= stop {
            out.push(current);
            current = match step {
                Step::Times(f) => {
                    let next = current.saturating_mul(f);
                    if next == current {
                        bail!("geometric factor must exceed 1");
                    }
                    next
                }
                Step::Plus(d) => current + d,
            };
        }
        out
    } else {
        text.split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .with_context(|| format!("bad schedule entry {part:?}"))
            })
            .collect::<Result<_>>()?
    };
    if items.is_empty() {
        bail!("schedule {text:?} is empty");
    }
    if items.windows(2).any(|w| w[0] >= w[1]) {
        bail!("schedule {text:?} must be strictly ascending");
    }
    Ok(items)
}

enum Step {
    Times(usize),
    Plus(usize),
}

fn split_progression(text: &str) -> Option<((usize, usize), Step)> {
    let mut parts = text.split(':');
    let start = parts.next()?.trim().parse().ok()?;
    let stop = parts.next()?.trim().parse().ok()?;
    let step_text = parts.next()?.trim();
    if parts.next().is_some() {
        return None;
    }
    let step = if let Some(f) = step_text.strip_prefix('x') {
        Step::Times(f.parse().ok()?)
    } else if let Some(d) = step_text.strip_prefix('+') {
        Step::Plus(d.parse().ok()?)
    } else {
        return None;
    };
    Some(((start, stop), step))
}

/// Parses a comma list of positive reals.
pub fn parse_eps_list(text: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .with_context(|| format!("bad epsilon entry {part:?}"))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() || values.iter().any(|&e| !(e > 0.0)) {
        bail!("epsilon list must be nonempty and positive");
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comma_lists_and_progressions() {
        assert_eq!(parse_schedule("8,16,32").unwrap(), vec![8, 16, 32]);
        assert_eq!(parse_schedule("8:64:x2").unwrap(), vec![8, 16, 32, 64]);
        assert_eq!(parse_schedule("10:40:+10").unwrap(), vec![10, 20, 30, 40]);
        assert_eq!(parse_schedule("8:9:x2").unwrap(), vec![8]);
    }

    #[test]
    fn rejects_malformed_schedules() {
        assert!(parse_schedule("32,16").is_err());
        assert!(parse_schedule("8:64:x1").is_err());
        assert!(parse_schedule("").is_err());
        assert!(parse_schedule("0:8:+2").is_err());
        assert!(parse_schedule("a,b").is_err());
    }

    #[test]
    fn eps_lists() {
        assert_eq!(parse_eps_list("0.3,0.1").unwrap(), vec![0.3, 0.1]);
        assert!(parse_eps_list("0.3,-1").is_err());
        assert!(parse_eps_list("x").is_err());
    }
}

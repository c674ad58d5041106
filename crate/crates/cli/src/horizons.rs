//! `--horizons` parsing. Items are step counts unless suffixed with `s`.

fn to_steps(item: &str, dt: f64) -> Result<f64, String> {
    let item = item.trim();
    match item.strip_suffix('s') {
        Some(secs) => {
            let t: f64 = secs.trim().parse().map_err(|_| format!("bad duration `{item}`"))?;
            Ok(t / dt)
        }
        None => item
            .parse::<usize>()
            .map(|n| n as f64)
            .map_err(|_| format!("bad step count `{item}`")),
    }
}

fn whole(steps: f64, item: &str) -> Result<usize, String> {
    let n = steps.round();
    if !(n >= 1.0) || (steps - n).abs() > 1e-6 * n.max(1.0) {
        return Err(format!("`{item}` is not a positive whole number of steps"));
    }
    Ok(n as usize)
}

/// Parses e.g. `120:480:3,500` or `0.6s:2.4s:0.015s` into sorted,
/// deduplicated step counts.
pub fn parse(spec: &str, dt: f64) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(whole(to_steps(one, dt)?, one)?),
            [lo, hi, step] => {
                let lo = whole(to_steps(lo, dt)?, lo)?;
                let hi = whole(to_steps(hi, dt)?, hi)?;
                let step = whole(to_steps(step, dt)?, step)?;
                if hi < lo {
                    return Err(format!("empty range `{item}`"));
                }
                out.extend((lo..=hi).step_by(step));
            }
            _ => return Err(format!("expected `n` or `lo:hi:step`, got `{item}`")),
        }
    }
    if out.is_empty() {
        return Err("no horizons given".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

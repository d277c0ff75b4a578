//! On-disk exchange formats: trajectory dumps, symbol CSV, field samples
//! and chaos-measure cells.

use std::fmt::Write as _;
use std::path::Path;

use ubm_core::chaos::ChaosMeasure;
use ubm_core::dyson::PhaseTrajectory;
use ubm_core::field::FieldSample;
use ubm_core::symbols::CircleSymbol;
use ubm_core::Complex64;

/// Trajectory dump: header lines
/// `# n=<n> dt=<dt> beta=<beta> seed_path=<...>` then rows
/// `time,phase_1,...,phase_n` (radians, lifted).
pub fn trajectory_to_csv(traj: &PhaseTrajectory, dt: f64, seed_path: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# n={} dt={} beta={} seed_path={}",
        traj.n(),
        dt,
        traj.beta(),
        seed_path
    );
    for i in 0..traj.num_slices() {
        let mut line = format!("{:.16e}", traj.times()[i]);
        for p in traj.slice(i) {
            let _ = write!(line, ",{p:.16e}");
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

pub fn trajectory_from_csv(s: &str) -> Result<(PhaseTrajectory, f64, String), String> {
    let mut n = None;
    let mut dt = None;
    let mut beta = None;
    let mut seed_path = String::new();
    let mut times = Vec::new();
    let mut phases = Vec::new();
    for line in s.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            for token in rest.split_whitespace() {
                if let Some((k, v)) = token.split_once('=') {
                    match k {
                        "n" => n = v.parse::<usize>().ok(),
                        "dt" => dt = v.parse::<f64>().ok(),
                        "beta" => beta = v.parse::<f64>().ok(),
                        "seed_path" => seed_path = v.to_string(),
                        _ => {}
                    }
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t: f64 = fields
            .next()
            .ok_or("empty row")?
            .parse()
            .map_err(|e| format!("bad time: {e}"))?;
        times.push(t);
        for f in fields {
            phases.push(f.parse::<f64>().map_err(|e| format!("bad phase: {e}"))?);
        }
    }
    let n = n.ok_or("missing n= header")?;
    let beta = beta.ok_or("missing beta= header")?;
    let dt = dt.ok_or("missing dt= header")?;
    if phases.len() != times.len() * n {
        return Err(format!(
            "row width mismatch: {} phases for {} times at n = {n}",
            phases.len(),
            times.len()
        ));
    }
    Ok((
        PhaseTrajectory::new(n, beta, times, phases),
        dt,
        seed_path,
    ))
}

/// Symbol exchange: `# kind=<...>` header then `k,re,im` rows.
pub fn symbol_to_csv(sym: &CircleSymbol, kind: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# kind={kind}");
    for (k, c) in sym.iter() {
        let _ = writeln!(out, "{k},{:.16e},{:.16e}", c.re, c.im);
    }
    out
}

pub fn symbol_from_csv(s: &str) -> Result<CircleSymbol, String> {
    let mut entries: Vec<(i64, Complex64)> = Vec::new();
    for line in s.lines() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(format!("expected k,re,im row, got {line:?}"));
        }
        let k: i64 = fields[0].parse().map_err(|e| format!("bad k: {e}"))?;
        let re: f64 = fields[1].parse().map_err(|e| format!("bad re: {e}"))?;
        let im: f64 = fields[2].parse().map_err(|e| format!("bad im: {e}"))?;
        entries.push((k, Complex64::new(re, im)));
    }
    let k_max = entries.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0) as usize;
    let mut sym = CircleSymbol::zero(k_max);
    for (k, c) in entries {
        sym.set_coeff(k, c);
    }
    Ok(sym)
}

/// Field export: `t,theta,value,clipped` rows.
pub fn field_to_csv(field: &FieldSample) -> String {
    let mut out = String::from("t,theta,value,clipped\n");
    let na = field.angles.len();
    for (ti, &t) in field.times.iter().enumerate() {
        for (ai, &theta) in field.angles.iter().enumerate() {
            let _ = writeln!(
                out,
                "{t:.16e},{theta:.16e},{:.16e},{}",
                field.values[ti * na + ai],
                u8::from(field.clipped[ti * na + ai])
            );
        }
    }
    out
}

/// Measure export: `t_lo,t_hi,theta_lo,theta_hi,mass` rows.
pub fn measure_to_csv(mu: &ChaosMeasure) -> String {
    let mut out = String::from("t_lo,t_hi,theta_lo,theta_hi,mass\n");
    for c in &mu.cells {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            c.t_lo, c.t_hi, c.theta_lo, c.theta_hi, c.mass
        );
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| format!("creating {parent:?}: {e}"))?;
    }
    std::fs::write(path, text).map_err(|e| format!("writing {path:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ubm_core::rng::SeedTree;

    #[test]
    fn trajectory_round_trip() {
        let start = [0.3, 2.0, 4.5];
        let traj =
            ubm_core::dyson::evolve_eigenphases(&start, 1e-3, 10, 2.0, &SeedTree::new(5)).unwrap();
        let csv = trajectory_to_csv(&traj, 1e-3, "0x05/evolve[0]");
        let (back, dt, seed) = trajectory_from_csv(&csv).unwrap();
        assert_eq!(dt, 1e-3);
        assert_eq!(seed, "0x05/evolve[0]");
        assert_eq!(back.n(), 3);
        assert_eq!(back.num_slices(), traj.num_slices());
        for i in 0..traj.num_slices() {
            assert_eq!(back.slice(i), traj.slice(i));
            assert_eq!(back.times()[i].to_bits(), traj.times()[i].to_bits());
        }
    }

    #[test]
    fn symbol_round_trip() {
        let sym = CircleSymbol::harmonic(3, 0.25, -1.5);
        let csv = symbol_to_csv(&sym, "trig");
        let back = symbol_from_csv(&csv).unwrap();
        for k in -3i64..=3 {
            assert_eq!(back.coeff(k), sym.coeff(k));
        }
    }
}

//! Output emission: atomic file writes and the CSV/JSON encoders.
//!
//! Nothing here writes a partial file: content is rendered fully in memory,
//! written to a temporary file in the destination directory, and renamed
//! into place.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use specshift::linalg::Complex64;
use specshift::ssf_unitary::{SpectralShift, WindingProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

pub fn emit(out: Option<&Path>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => atomic_write(path, content.as_bytes()),
        None => {
            print!("{content}");
            std::io::stdout().flush().map_err(|e| e.to_string())
        }
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| format!("cannot create temporary file: {e}"))?;
    tmp.write_all(bytes)
        .map_err(|e| format!("cannot write output: {e}"))?;
    tmp.persist(path)
        .map_err(|e| format!("cannot finalize output file: {e}"))?;
    Ok(())
}

/// `theta_start,theta_end,value` rows covering `(-pi, pi]` once; the arc
/// wrapping across the cut is split so every row stays inside the interval.
pub fn spectral_shift_csv(xi: &SpectralShift) -> String {
    let mut head: Vec<(f64, f64, f64)> = Vec::new();
    let mut tail: Vec<(f64, f64, f64)> = Vec::new();
    for (start, end, value) in xi.arcs() {
        if end <= PI {
            head.push((start, end, value));
        } else {
            if start < PI {
                head.push((start, PI, value));
            }
            tail.push((-PI, end - std::f64::consts::TAU, value));
        }
    }
    let mut text = String::from("theta_start,theta_end,value\n");
    for (start, end, value) in tail.into_iter().chain(head) {
        text.push_str(&format!("{start},{end},{value}\n"));
    }
    text
}

pub fn spectral_shift_json(xi: &SpectralShift) -> String {
    let arcs: Vec<serde_json::Value> = xi
        .arcs()
        .iter()
        .map(|&(start, end, value)| serde_json::json!({"start": start, "end": end, "value": value}))
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({ "arcs": arcs })).unwrap() + "\n"
}

/// `{"n": [re, im], ...}` with decimal-integer string keys.
pub fn coefficients_json(coeffs: &BTreeMap<i64, Complex64>) -> String {
    let mut map = serde_json::Map::new();
    for (n, c) in coeffs {
        map.insert(n.to_string(), serde_json::json!([c.re, c.im]));
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).unwrap() + "\n"
}

pub fn coefficients_csv(coeffs: &BTreeMap<i64, Complex64>) -> String {
    let mut text = String::from("n,re,im\n");
    for (n, c) in coeffs {
        text.push_str(&format!("{n},{},{}\n", c.re, c.im));
    }
    text
}

pub fn lipnorm_csv(rows: &[(usize, f64, Option<f64>)]) -> String {
    let mut text = String::from("dim,lower_bound,upper_bound\n");
    for &(dim, lower, upper) in rows {
        match upper {
            Some(u) => text.push_str(&format!("{dim},{lower},{u}\n")),
            None => text.push_str(&format!("{dim},{lower},inf\n")),
        }
    }
    text
}

pub fn lipnorm_json(rows: &[(usize, f64, Option<f64>)]) -> String {
    let items: Vec<serde_json::Value> = rows
        .iter()
        .map(|&(dim, lower, upper)| {
            serde_json::json!({
                "dim": dim,
                "lower_bound": lower,
                "upper_bound": match upper {
                    Some(u) => serde_json::json!(u),
                    None => serde_json::json!("inf"),
                },
            })
        })
        .collect();
    serde_json::to_string_pretty(&items).unwrap() + "\n"
}

pub fn profile_csv(profile: &WindingProfile) -> String {
    let mut text = String::from("angle,re_g,im_g,residual\n");
    for p in &profile.points {
        let residual = (p.direct - p.via_xi).norm();
        text.push_str(&format!(
            "{},{},{},{residual}\n",
            p.angle, p.direct.re, p.direct.im
        ));
    }
    text.push_str(&format!(
        "# max_residual={} max_adjacent_jump={}\n",
        profile.max_residual, profile.max_adjacent_jump
    ));
    text
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::run::{ExperimentTrace, GeneratedData};
use crate::datagen::to_game_scale;
use crate::error::{Error, Result};
use crate::tensor::io;

/// Means over `r` contiguous blocks; the first `T mod r` blocks hold one
/// extra step.
pub fn round_average(losses: &[f64], r: usize) -> Result<Vec<f64>> {
    let t = losses.len();
    if r > t || (r == 0 && t > 0) {
        return Err(Error::Config(format!(
            "cannot split {t} steps into {r} rounds"
        )));
    }
    let mut out = Vec::with_capacity(r);
    let mut start = 0;
    for b in 0..r {
        let len = t / r + usize::from(b < t % r);
        let block = &losses[start..start + len];
        out.push(block.iter().sum::<f64>() / len as f64);
        start += len;
    }
    Ok(out)
}

/// Mean of the last `window` losses at each step (fewer at the start).
pub fn moving_average(losses: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut sum = 0.0;
    losses
        .iter()
        .enumerate()
        .map(|(t, &l)| {
            sum += l;
            if t >= window {
                sum -= losses[t - window];
            }
            sum / (t + 1).min(window) as f64
        })
        .collect()
}

fn write(path: PathBuf, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the per-algorithm CSVs, `compare.csv`, `manifest.txt` and
/// `losses.svg`. Wall-clock times are left out so reruns are byte-identical.
pub fn emit_outputs(traces: &[ExperimentTrace], outdir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(outdir)?;
    let mut written = Vec::new();
    for tr in traces {
        let mut loss = String::from("round,avg_loss\n");
        for (r, v) in tr.rounds.iter().enumerate() {
            writeln!(loss, "{},{v}", r + 1).unwrap();
        }
        write(
            outdir.join(format!("loss_{}.csv", tr.algorithm)),
            &loss,
            &mut written,
        )?;

        let mut steps = String::from("t,i,j,k,y,p,loss\n");
        for r in &tr.records {
            writeln!(
                steps,
                "{},{},{},{},{},{},{}",
                r.t, r.i, r.j, r.k, r.y, r.p, r.loss
            )
            .unwrap();
        }
        write(
            outdir.join(format!("steps_{}.csv", tr.algorithm)),
            &steps,
            &mut written,
        )?;

        if let Some(ma) = &tr.moving {
            let mut body = String::from("t,avg_loss\n");
            for (t, v) in ma.iter().enumerate() {
                writeln!(body, "{},{v}", t + 1).unwrap();
            }
            write(
                outdir.join(format!("moving_{}.csv", tr.algorithm)),
                &body,
                &mut written,
            )?;
        }
    }

    let mut compare = String::from("round");
    for tr in traces {
        write!(compare, ",{}", tr.algorithm).unwrap();
    }
    compare.push('\n');
    let rounds = traces.iter().map(|t| t.rounds.len()).max().unwrap_or(0);
    for r in 0..rounds {
        write!(compare, "{}", r + 1).unwrap();
        for tr in traces {
            match tr.rounds.get(r) {
                Some(v) => write!(compare, ",{v}").unwrap(),
                None => compare.push(','),
            }
        }
        compare.push('\n');
    }
    write(outdir.join("compare.csv"), &compare, &mut written)?;

    let mut manifest = String::new();
    if let Some(first) = traces.first() {
        for (k, v) in first.config.iter().filter(|(k, _)| !k.contains('.')) {
            writeln!(manifest, "{k}={v}").unwrap();
        }
        writeln!(manifest, "steps={}", first.records.len()).unwrap();
    }
    writeln!(
        manifest,
        "comparator=truth tensor; its loss is 0, so regret equals cumulative loss"
    )
    .unwrap();
    for tr in traces {
        let a = &tr.algorithm;
        for (k, v) in tr.config.iter().filter(|(k, _)| k.contains('.')) {
            writeln!(manifest, "{k}={v}").unwrap();
        }
        writeln!(manifest, "{a}.cumulative_loss={}", tr.cumulative_loss).unwrap();
        writeln!(manifest, "{a}.regret={}", tr.regret).unwrap();
    }
    write(outdir.join("manifest.txt"), &manifest, &mut written)?;

    write(outdir.join("losses.svg"), &loss_plot(traces), &mut written)?;
    Ok(written)
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Line plot of round-averaged losses.
pub fn loss_plot(traces: &[ExperimentTrace]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 150.0, 20.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let rounds = traces.iter().map(|t| t.rounds.len()).max().unwrap_or(0);
    let ymax = traces
        .iter()
        .flat_map(|t| t.rounds.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };
    let x = |r: usize| {
        left + if rounds > 1 {
            pw * r as f64 / (rounds - 1) as f64
        } else {
            pw / 2.0
        }
    };
    let y = |v: f64| top + ph * (1.0 - v.clamp(0.0, ymax) / ymax);

    let mut s = String::new();
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<rect width="{w}" height="{h}" fill="white"/>
<line x1="{left}" y1="{yb}" x2="{xr}" y2="{yb}" stroke="black"/>
<line x1="{left}" y1="{top}" x2="{left}" y2="{yb}" stroke="black"/>
<text x="{xm}" y="{xl}" text-anchor="middle">round</text>
<text x="16" y="{ym}" text-anchor="middle" transform="rotate(-90 16 {ym})">average loss</text>"#,
        yb = top + ph,
        xr = left + pw,
        xm = left + pw / 2.0,
        xl = h - 12.0,
        ym = top + ph / 2.0,
    )
    .unwrap();
    for i in 0..=4 {
        let v = ymax * i as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{tx}" y="{ty:.1}" text-anchor="end">{v:.3}</text>"#,
            tx = left - 6.0,
            ty = y(v) + 4.0
        )
        .unwrap();
    }
    if rounds > 0 {
        for r in [0, (rounds - 1) / 2, rounds - 1] {
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x(r),
                top + ph + 18.0,
                r + 1
            )
            .unwrap();
        }
    }
    for (n, tr) in traces.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let points: Vec<String> = tr
            .rounds
            .iter()
            .enumerate()
            .map(|(r, &v)| format!("{:.2},{:.2}", x(r), y(v)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        let ly = top + 16.0 + 20.0 * n as f64;
        writeln!(
            s,
            r#"<line x1="{x1}" y1="{ly}" x2="{x2}" y2="{ly}" stroke="{color}" stroke-width="2"/>
<text x="{tx}" y="{ty}">{}</text>"#,
            xml_escape(&tr.algorithm),
            x1 = left + pw + 12.0,
            x2 = left + pw + 36.0,
            tx = left + pw + 42.0,
            ty = ly + 4.0,
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes a generated dataset: raw and game-scale tensors in T3D, the game
/// tensor as CSV, the influence graph as an edge list, and a manifest.
pub fn write_dataset(cfg: &RunConfig, data: &GeneratedData, outdir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(outdir)?;
    let mut written = Vec::new();
    let game = to_game_scale(&data.ratings)?;
    let raw_path = outdir.join("ratings.t3d");
    io::write_t3d(&raw_path, &data.ratings.tensor)?;
    written.push(raw_path);
    let game_path = outdir.join("game.t3d");
    io::write_t3d(&game_path, &game)?;
    written.push(game_path);
    let csv_path = outdir.join("game.csv");
    io::write_csv(&csv_path, &game)?;
    written.push(csv_path);

    let mut edges = String::new();
    for (u, v) in data.graph.edges() {
        writeln!(edges, "{u} {v}").unwrap();
    }
    write(outdir.join("graph.txt"), &edges, &mut written)?;

    let mut manifest = String::new();
    for (k, v) in cfg.entries() {
        writeln!(manifest, "{k}={v}").unwrap();
    }
    writeln!(manifest, "edges={}", data.graph.edge_count()).unwrap();
    writeln!(
        manifest,
        "clustering={}",
        data.graph.clustering_coefficient()
    )
    .unwrap();
    writeln!(manifest, "scale=ratings.t3d in [1,5]; game.t3d = (r - 3)/2").unwrap();
    write(outdir.join("manifest.txt"), &manifest, &mut written)?;
    Ok(written)
}

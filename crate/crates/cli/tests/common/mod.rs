#![allow(dead_code)]

use std::fmt::Write;
use std::path::Path;
use std::process::{Command, Output};
use tailindex::model_fit::garch::{simulate_garch11, GarchParams};
use tailindex::special::normal_quantile;
use tailindex::{CopulaSpec, CorrelationMatrix};

pub fn tailindex(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailindex"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .env_remove("TAILINDEX_OUT_DIR")
        .output()
        .expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn panel_rho() -> CorrelationMatrix {
    CorrelationMatrix::from_rows(&[
        vec![1.0, 0.6, 0.5, 0.45],
        vec![0.6, 1.0, 0.55, 0.5],
        vec![0.5, 0.55, 1.0, 0.6],
        vec![0.45, 0.5, 0.6, 1.0],
    ])
    .unwrap()
}

const GARCH: [GarchParams; 4] = [
    GarchParams {
        mu: 0.05,
        alpha0: 0.05,
        alpha1: 0.08,
        beta1: 0.9,
    },
    GarchParams {
        mu: 0.03,
        alpha0: 0.1,
        alpha1: 0.1,
        beta1: 0.85,
    },
    GarchParams {
        mu: 0.04,
        alpha0: 0.02,
        alpha1: 0.06,
        beta1: 0.92,
    },
    GarchParams {
        mu: 0.0,
        alpha0: 0.08,
        alpha1: 0.12,
        beta1: 0.8,
    },
];

/// Dated price panel with `returns + 1` rows: copula shocks mapped to normal
/// margins, GARCH(1,1) returns in percent, prices starting at 100.
pub fn price_panel(spec: &CopulaSpec, returns: usize, seed: u64) -> String {
    let batch = spec.sample(returns, seed).unwrap();
    let u = batch.to_pseudo_sample(false).unwrap();
    let dim = spec.dim();
    let mut prices = Vec::new();
    for k in 0..dim {
        let shocks: Vec<f64> = (0..returns).map(|i| normal_quantile(u.values().get(i, k))).collect();
        let r = simulate_garch11(&GARCH[k % GARCH.len()], &shocks);
        let mut p = vec![100.0];
        for x in r {
            p.push(p.last().unwrap() * (x / 100.0).exp());
        }
        prices.push(p);
    }
    let mut out = String::from("date");
    for k in 0..dim {
        write!(out, ",P{}", k + 1).unwrap();
    }
    out.push('\n');
    for i in 0..=returns {
        write!(out, "d{i:05}").unwrap();
        for p in &prices {
            write!(out, ",{}", p[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    (
        header,
        lines.map(|l| l.split(',').map(str::to_string).collect()).collect(),
    )
}

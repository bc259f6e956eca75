//! SDPA sparse-format export of the embedded real problem, for
//! cross-checking with external solvers.
//!
//! The problem `min Σ⟨C,X⟩ s.t. ⟨A_i,X⟩ relop b_i` is written as an SDPA
//! dual-form instance: `c = b`, `F₀ = −C`, `F_i = A_i`, with inequality
//! slacks placed in a trailing diagonal block (a negative block size).

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::embed::{embed_real, RealSdp};
use super::{normalize, HermitianSdp, Relop, SdpError, Sense};

/// Render the SDPA text for an already-embedded problem.
pub fn to_sdpa(p: &RealSdp) -> String {
    let mut s = String::new();
    let sign = if p.sense == Sense::Maximize {
        -1.0
    } else {
        1.0
    };
    let lp_rows: Vec<usize> = p
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.relop != Relop::Eq)
        .map(|(i, _)| i)
        .collect();
    let nblocks = p.block_dims.len() + usize::from(!lp_rows.is_empty());
    let _ = writeln!(s, "\"ris-isac embedded SDP, minimization form\"");
    let _ = writeln!(s, "{}", p.constraints.len());
    let _ = writeln!(s, "{nblocks}");
    let mut sizes: Vec<String> = p.block_dims.iter().map(|d| d.to_string()).collect();
    if !lp_rows.is_empty() {
        sizes.push(format!("-{}", lp_rows.len()));
    }
    let _ = writeln!(s, "{}", sizes.join(" "));
    let rhs: Vec<String> = p
        .constraints
        .iter()
        .map(|c| format!("{:.17e}", c.rhs))
        .collect();
    let _ = writeln!(s, "{}", rhs.join(" "));

    let mut entry = |mat: usize, blk: usize, m: &nalgebra::DMatrix<f64>, scale: f64| {
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                let v = m[(i, j)] * scale;
                if v != 0.0 {
                    let _ = writeln!(s, "{mat} {} {} {} {v:.17e}", blk + 1, i + 1, j + 1);
                }
            }
        }
    };
    for (blk, c) in &p.objective {
        entry(0, *blk, c, -sign);
    }
    for (i, c) in p.constraints.iter().enumerate() {
        for (blk, a) in &c.terms {
            entry(i + 1, *blk, a, 1.0);
        }
    }
    let lp_block = p.block_dims.len() + 1;
    for (pos, &i) in lp_rows.iter().enumerate() {
        let coef = if p.constraints[i].relop == Relop::Ge {
            -1.0
        } else {
            1.0
        };
        let _ = writeln!(s, "{} {lp_block} {} {} {coef:.1}", i + 1, pos + 1, pos + 1);
    }
    s
}

/// Row-normalize, embed and write a complex problem in SDPA format.
pub fn write_sdpa(p: &HermitianSdp, path: &Path) -> Result<(), SdpError> {
    let norm = normalize(&p.symmetrized()?);
    let real = embed_real(&norm.sdp)?;
    std::fs::write(path, to_sdpa(&real))
        .map_err(|e: io::Error| SdpError::Dimension(format!("writing dump: {e}")))
}

//! SDPA sparse-format export.
//!
//! The emitted problem is
//!
//! ```text
//!   min  sum_j c_j x_j   s.t.   sum_j x_j F_j - F0 ⪰ 0 (blockwise)
//! ```
//!
//! so each modeled constraint `K0 + sum x_j C_j ⪰ 0` contributes a block with
//! `F0 = -K0` and `F_j = C_j`. Affine equalities are emitted as paired
//! one-dimensional diagonal blocks (`e(x) >= 0` and `-e(x) >= 0`).
//!
//! Field order (bit-exact): a comment line, the counts `m` and `nblocks`, the
//! block-size line (diagonal blocks negative per SDPA convention), the
//! objective line, then one entry line `k blk i j value` per nonzero with
//! 1-based indices, upper triangle only, sorted by (k, blk, i, j). Values are
//! printed with 17 significant digits.

use super::SdpProblem;

pub(super) fn to_sdpa_sparse(p: &SdpProblem) -> String {
    let q = p.num_components;
    let e = p.equalities.len();
    let nblocks = p.psd.len() + if e > 0 { 1 } else { 0 };

    let mut out = String::new();
    out.push_str("\"exported block-LMI problem\"\n");
    out.push_str(&format!("{q}\n"));
    out.push_str(&format!("{nblocks}\n"));
    let mut sizes: Vec<String> = p.psd.iter().map(|c| c.expr.rows().to_string()).collect();
    if e > 0 {
        sizes.push(format!("-{}", 2 * e));
    }
    out.push_str(&sizes.join(" "));
    out.push('\n');

    let mut cvec = vec![0.0; q];
    for (&i, &v) in &p.objective.coeffs {
        cvec[i] = v;
    }
    out.push_str(
        &cvec
            .iter()
            .map(|v| format!("{v:.17e}"))
            .collect::<Vec<_>>()
            .join(" "),
    );
    out.push('\n');

    // Entries: (k, blk, i, j, value), k = 0 for F0, 1..=q for variables.
    let mut entries: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (bi, cons) in p.psd.iter().enumerate() {
        let blk = bi + 1;
        let d = cons.expr.rows();
        for i in 0..d {
            for j in i..d {
                let v = -cons.expr.k0[(i, j)];
                if v != 0.0 {
                    entries.push((0, blk, i + 1, j + 1, v));
                }
            }
        }
        for (&comp, coeff) in &cons.expr.terms {
            for i in 0..d {
                for j in i..d {
                    let v = coeff[(i, j)];
                    if v != 0.0 {
                        entries.push((comp + 1, blk, i + 1, j + 1, v));
                    }
                }
            }
        }
    }
    if e > 0 {
        let blk = p.psd.len() + 1;
        for (r, lin) in p.equalities.iter().enumerate() {
            let pos = r + 1;
            let neg = e + r + 1;
            if lin.k0 != 0.0 {
                entries.push((0, blk, pos, pos, lin.k0));
                entries.push((0, blk, neg, neg, -lin.k0));
            }
            for (&comp, &v) in &lin.coeffs {
                if v != 0.0 {
                    entries.push((comp + 1, blk, pos, pos, v));
                    entries.push((comp + 1, blk, neg, neg, -v));
                }
            }
        }
    }
    entries.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    for (k, blk, i, j, v) in entries {
        out.push_str(&format!("{k} {blk} {i} {j} {v:.17e}\n"));
    }
    out
}

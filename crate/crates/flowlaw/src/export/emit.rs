//! Emission of a trained two-hidden-layer sigmoid network as a flat Fortran
//! subroutine in the VUHARD calling convention: yield stress plus its three
//! derivatives, fully unrolled, every constant embedded at 17 significant
//! digits. The body is the staged scheme of [`super::staged`].

use std::fmt::Write as _;

use crate::error::Result;
use crate::mlp::MlpModel;

use super::staged::require_two_layer_sigmoid;

/// Emitted lines never exceed this many columns.
pub const MAX_LINE_WIDTH: usize = 132;

/// Wrap target well under the hard limit.
const WRAP_AT: usize = 100;

fn fortran_f64(v: f64) -> String {
    // 17 significant digits, d-exponent form: 8.0600000000000000d2
    format!("{v:.16e}").replace('e', "d")
}

fn pad_width(n: usize) -> usize {
    n.to_string().len().max(2)
}

/// Join `chunks` with `sep`, starting from `head` and ending with `tail`,
/// breaking into continuation lines at the wrap column.
fn wrap_expression(out: &mut String, indent: &str, head: &str, chunks: &[String], sep: &str, tail: &str) {
    let mut line = format!("{indent}{head}");
    for (k, chunk) in chunks.iter().enumerate() {
        let piece = if k == 0 {
            chunk.clone()
        } else {
            format!("{sep}{chunk}")
        };
        if line.len() + piece.len() + 2 > WRAP_AT {
            let _ = writeln!(out, "{line} &");
            line = format!("{indent}    {}", piece.trim_start());
        } else {
            line.push_str(&piece);
        }
    }
    line.push_str(tail);
    let _ = writeln!(out, "{line}");
}

/// Generate the subroutine source. Same model in, byte-identical text out.
pub fn emit_subroutine(model: &MlpModel) -> Result<String> {
    require_two_layer_sigmoid(model)?;
    let l1 = &model.hidden[0];
    let l2 = &model.hidden[1];
    let m = l1.out_width();
    let n = l2.out_width();
    let p = pad_width(m.max(n));
    let r = &model.ranges;

    let w1 = |i: usize, j: usize| format!("w1_{:0p$}_{}", i + 1, j + 1, p = p);
    let b1 = |i: usize| format!("b1_{:0p$}", i + 1, p = p);
    let w2 = |i: usize, j: usize| format!("w2_{:0p$}_{:0p$}", i + 1, j + 1, p = p);
    let b2 = |i: usize| format!("b2_{:0p$}", i + 1, p = p);
    let wo = |i: usize| format!("wo_{:0p$}", i + 1, p = p);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "! Hardening law generated from the trained {} network.",
        model.name()
    );
    let _ = writeln!(
        out,
        "! Outputs the yield stress and its derivatives with respect to the"
    );
    let _ = writeln!(
        out,
        "! equivalent plastic strain, the plastic strain rate and the temperature."
    );
    let _ = writeln!(
        out,
        "! Self-contained: weights and normalization ranges are embedded below."
    );
    let _ = writeln!(out, "subroutine vuhard(nblock, nstatev, nfieldv, nprops, lanneal, stepTime, &");
    let _ = writeln!(out, "    totalTime, dt, cmname, coordMp, charLength, props, tempOld, tempNew, &");
    let _ = writeln!(out, "    fieldOld, fieldNew, stateOld, eqps, eqpsRate, yield, dyieldDtemp, &");
    let _ = writeln!(out, "    dyieldDeqps, stateNew)");
    let _ = writeln!(out, "  implicit none");
    let _ = writeln!(out, "  integer :: nblock, nstatev, nfieldv, nprops, lanneal");
    let _ = writeln!(out, "  double precision :: stepTime, totalTime, dt");
    let _ = writeln!(out, "  character(len=80) :: cmname");
    let _ = writeln!(out, "  double precision :: coordMp(nblock,*), charLength(nblock), props(nprops)");
    let _ = writeln!(out, "  double precision :: tempOld(nblock), tempNew(nblock)");
    let _ = writeln!(out, "  double precision :: fieldOld(nblock,nfieldv), fieldNew(nblock,nfieldv)");
    let _ = writeln!(out, "  double precision :: stateOld(nblock,nstatev), stateNew(nblock,nstatev)");
    let _ = writeln!(out, "  double precision :: eqps(nblock), eqpsRate(nblock)");
    let _ = writeln!(out, "  double precision :: yield(nblock), dyieldDtemp(nblock)");
    let _ = writeln!(out, "  double precision :: dyieldDeqps(nblock,2)");

    let constant = |name: String, value: f64| {
        format!(
            "  double precision, parameter :: {name} = {}",
            fortran_f64(value)
        )
    };
    let mut const_lines: Vec<String> = Vec::new();
    for i in 0..m {
        for j in 0..3 {
            const_lines.push(constant(w1(i, j), l1.weight(i, j)));
        }
    }
    for i in 0..m {
        const_lines.push(constant(b1(i), l1.bias[i]));
    }
    for i in 0..n {
        for j in 0..m {
            const_lines.push(constant(w2(i, j), l2.weight(i, j)));
        }
    }
    for i in 0..n {
        const_lines.push(constant(b2(i), l2.bias[i]));
    }
    for i in 0..n {
        const_lines.push(constant(wo(i), model.out_weights[i]));
    }
    const_lines.push(constant("bo".to_string(), model.out_bias));
    const_lines.push(constant("eps_min".to_string(), r.eps_p_min));
    const_lines.push(constant("eps_max".to_string(), r.eps_p_max));
    const_lines.push(constant("lnr_min".to_string(), r.log_rate_min));
    const_lines.push(constant("lnr_max".to_string(), r.log_rate_max));
    const_lines.push(constant("t_min".to_string(), r.t_min));
    const_lines.push(constant("t_max".to_string(), r.t_max));
    const_lines.push(constant("sig_min".to_string(), r.sigma_min));
    const_lines.push(constant("sig_max".to_string(), r.sigma_max));
    const_lines.push(constant("rate_ref".to_string(), r.eps_dot_ref));
    for line in &const_lines {
        let _ = writeln!(out, "{line}");
    }

    let _ = writeln!(out, "  double precision :: za({m}), zb({m}), zc({n}), zd({n}), ze({m}), zf({m})");
    let _ = writeln!(out, "  double precision :: x1, x2, x3, rate, s, sp1, sp2, sp3, sspan");
    let _ = writeln!(out, "  integer :: k");
    let _ = writeln!(out, "  do k = 1, nblock");

    let ind = "    ";
    let _ = writeln!(out, "{ind}x1 = (eqps(k) - eps_min)/(eps_max - eps_min)");
    let _ = writeln!(out, "{ind}rate = eqpsRate(k)");
    let _ = writeln!(out, "{ind}if (rate < rate_ref) rate = rate_ref");
    let _ = writeln!(out, "{ind}x2 = (log(rate/rate_ref) - lnr_min)/(lnr_max - lnr_min)");
    let _ = writeln!(out, "{ind}x3 = (tempNew(k) - t_min)/(t_max - t_min)");

    for i in 0..m {
        let chunks: Vec<String> = (0..3).map(|j| format!("{}*x{}", w1(i, j), j + 1)).collect();
        wrap_expression(
            &mut out,
            ind,
            &format!("za({}) = exp(-(", i + 1),
            &chunks,
            " + ",
            &format!(") - {})", b1(i)),
        );
    }
    for i in 0..m {
        let _ = writeln!(out, "{ind}zb({}) = 1.0d0 + za({})", i + 1, i + 1);
    }
    for i in 0..n {
        let chunks: Vec<String> = (0..m).map(|j| format!("{}/zb({})", w2(i, j), j + 1)).collect();
        wrap_expression(
            &mut out,
            ind,
            &format!("zc({}) = exp(-(", i + 1),
            &chunks,
            " + ",
            &format!(") - {})", b2(i)),
        );
    }
    for i in 0..n {
        let _ = writeln!(
            out,
            "{ind}zd({i1}) = {}*zc({i1})/(1.0d0 + zc({i1}))**2",
            wo(i),
            i1 = i + 1
        );
    }
    for i in 0..m {
        let _ = writeln!(
            out,
            "{ind}ze({i1}) = za({i1})/(zb({i1})*zb({i1}))",
            i1 = i + 1
        );
    }
    for i in 0..m {
        let chunks: Vec<String> = (0..n).map(|j| format!("{}*zd({})", w2(j, i), j + 1)).collect();
        wrap_expression(
            &mut out,
            ind,
            &format!("zf({}) = (", i + 1),
            &chunks,
            " + ",
            &format!(")*ze({})", i + 1),
        );
    }

    let mut chunks: Vec<String> = (0..n).map(|i| format!("{}/(1.0d0 + zc({}))", wo(i), i + 1)).collect();
    chunks.push("bo".to_string());
    wrap_expression(&mut out, ind, "s = ", &chunks, " + ", "");
    for k in 0..3 {
        let chunks: Vec<String> = (0..m).map(|j| format!("{}*zf({})", w1(j, k), j + 1)).collect();
        wrap_expression(&mut out, ind, &format!("sp{} = ", k + 1), &chunks, " + ", "");
    }

    let _ = writeln!(out, "{ind}sspan = sig_max - sig_min");
    let _ = writeln!(out, "{ind}yield(k) = sspan*s + sig_min");
    let _ = writeln!(out, "{ind}dyieldDeqps(k,1) = sp1*sspan/(eps_max - eps_min)");
    let _ = writeln!(out, "{ind}dyieldDeqps(k,2) = sp2*sspan/((lnr_max - lnr_min)*rate)");
    let _ = writeln!(out, "{ind}dyieldDtemp(k) = sp3*sspan/(t_max - t_min)");
    let _ = writeln!(out, "  end do");
    let _ = writeln!(out, "end subroutine vuhard");

    debug_assert!(out.is_ascii());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, NormalizationRanges};
    use crate::rng::SeededRng;

    fn ranges() -> NormalizationRanges {
        NormalizationRanges {
            eps_p_min: 0.0,
            eps_p_max: 1.0,
            log_rate_min: 0.0,
            log_rate_max: 50_000f64.ln(),
            t_min: 20.0,
            t_max: 500.0,
            sigma_min: 579.18464291541482,
            sigma_max: 1556.7403579583772,
            eps_dot_ref: 1.0,
        }
    }

    fn model() -> MlpModel {
        let mut model =
            MlpModel::glorot(&[3, 15, 7, 1], Activation::Sigmoid, ranges(), 31).unwrap();
        let mut rng = SeededRng::new(32);
        for layer in &mut model.hidden {
            for b in &mut layer.bias {
                *b = rng.uniform_in(-0.8, 0.8);
            }
        }
        model.out_bias = rng.uniform_in(-0.5, 0.5);
        model
    }

    #[test]
    fn emission_is_deterministic() {
        let m = model();
        assert_eq!(emit_subroutine(&m).unwrap(), emit_subroutine(&m).unwrap());
    }

    #[test]
    fn ascii_and_line_width() {
        let text = emit_subroutine(&model()).unwrap();
        assert!(text.is_ascii());
        for line in text.lines() {
            assert!(line.len() <= MAX_LINE_WIDTH, "line too long: {line}");
        }
    }

    #[test]
    fn one_assignment_per_staged_component() {
        let text = emit_subroutine(&model()).unwrap();
        let count = |stage: &str| {
            text.lines()
                .filter(|l| {
                    let t = l.trim_start();
                    t.starts_with(&format!("{stage}(")) && t.contains(" = ")
                })
                .count()
        };
        // m + m + n + n + m + m staged assignments for widths (m, n)
        assert_eq!(count("za"), 15);
        assert_eq!(count("zb"), 15);
        assert_eq!(count("zc"), 7);
        assert_eq!(count("zd"), 7);
        assert_eq!(count("ze"), 15);
        assert_eq!(count("zf"), 15);
    }

    #[test]
    fn declared_constant_count_is_params_plus_ranges() {
        let text = emit_subroutine(&model()).unwrap();
        let constants = text.matches("parameter ::").count();
        assert_eq!(constants, 180 + 9);
    }

    #[test]
    fn only_exp_and_log_are_referenced() {
        let text = emit_subroutine(&model()).unwrap();
        // Identifiers immediately followed by `(` are either declared arrays
        // or intrinsic calls; nothing else may be called.
        let arrays = [
            "za", "zb", "zc", "zd", "ze", "zf", "eqps", "eqpsRate", "tempOld", "tempNew",
            "yield", "dyieldDtemp", "dyieldDeqps", "stateOld", "stateNew", "fieldOld",
            "fieldNew", "coordMp", "charLength", "props", "vuhard", "len",
        ];
        let intrinsics = ["exp", "log"];
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i].is_ascii_alphabetic() || bytes[i] == b'_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                if i < bytes.len() && bytes[i] == b'(' {
                    assert!(
                        arrays.contains(&word) || intrinsics.contains(&word),
                        "unexpected function reference `{word}`"
                    );
                }
            } else {
                i += 1;
            }
        }
        assert!(text.contains("exp(-("));
        assert!(text.contains("log(rate/rate_ref)"));
    }

    #[test]
    fn rejects_unsupported_architectures() {
        let tanh = MlpModel::glorot(&[3, 7, 4, 1], Activation::Tanh, ranges(), 1).unwrap();
        assert!(emit_subroutine(&tanh).is_err());
        let shallow = MlpModel::glorot(&[3, 7, 1], Activation::Sigmoid, ranges(), 1).unwrap();
        assert!(emit_subroutine(&shallow).is_err());
    }

    #[test]
    fn constants_carry_17_significant_digits() {
        let text = emit_subroutine(&model()).unwrap();
        let line = text
            .lines()
            .find(|l| l.contains("parameter :: w1_01_1"))
            .unwrap();
        let value = line.split('=').nth(1).unwrap().trim();
        let mantissa = value.split('d').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "value `{value}`");
    }
}

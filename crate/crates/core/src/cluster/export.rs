//! LP-format text of the full mixed-integer model, for cross-checking with an
//! external solver. The trainers never use it.

use std::fmt::Write;

use super::{ClusterNorm, ClusterSvmSpec};
use crate::data::Dataset;

/// `M = 1 + 2·max_i ‖x_i‖₁·W + W`, where `W` bounds every coefficient of `w`,
/// the intercept and the reference points.
pub fn big_m(d: &Dataset, coefficient_box: f64) -> f64 {
    let max_l1 = d.rows().map(|x| x.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    1.0 + 2.0 * max_l1 * coefficient_box + coefficient_box
}

fn num(v: f64) -> String {
    // Shortest round-trip form; LP readers accept plain exponents.
    format!("{v:?}")
}

fn term(out: &mut String, coef: f64, var: &str) {
    if coef == 0.0 {
        return;
    }
    let sign = if coef < 0.0 { '-' } else { '+' };
    let _ = write!(out, " {sign} {} {var}", num(coef.abs()));
}

/// Writes the model with big-M constants materialised. Variables: `w_j`, `b`,
/// `e_i`, `d_i`, binaries `xi_i` and `th_i`, reference points `kp_j`, `km_j`,
/// plus the auxiliaries that linearise the norms (l1) or carry the cones (l2).
pub fn export_lp(d: &Dataset, spec: &ClusterSvmSpec, coefficient_box: f64) -> String {
    let (n, p) = (d.n(), d.p());
    let m = big_m(d, coefficient_box);
    let wbox = coefficient_box;
    let mut s = String::new();
    let _ = writeln!(s, "\\ two-cluster SVM ({:?}), n = {n}, p = {p}", spec.norm);
    let _ = writeln!(s, "\\ big-M = {} (coefficient box W = {})", num(m), num(wbox));

    let _ = writeln!(s, "Minimize");
    let mut obj = String::from(" obj:");
    match spec.norm {
        ClusterNorm::L1 => (0..p).for_each(|j| term(&mut obj, 0.5, &format!("u_{j}"))),
        ClusterNorm::L2 if spec.squared_margin => {
            obj.push_str(" + [");
            for j in 0..p {
                let _ = write!(obj, "{} w_{j} ^ 2", if j == 0 { "" } else { " +" });
            }
            obj.push_str(" ] / 2");
        }
        ClusterNorm::L2 => term(&mut obj, 0.5, "t"),
    }
    for i in 0..n {
        term(&mut obj, spec.c1, &format!("e_{i}"));
        term(&mut obj, spec.c2, &format!("xi_{i}"));
        term(&mut obj, spec.c3, &format!("d_{i}"));
    }
    let _ = writeln!(s, "{obj}");

    let _ = writeln!(s, "Subject To");
    let affine = |x: &[f64], scale: f64| {
        let mut t = String::new();
        for (j, v) in x.iter().enumerate() {
            term(&mut t, scale * v, &format!("w_{j}"));
        }
        term(&mut t, scale, "b");
        t
    };
    for (i, (x, y)) in d.rows().zip(d.labels()).enumerate() {
        let ys = y.sign();
        let _ = writeln!(s, " sign_{i}:{} + {} xi_{i} >= 0", affine(x, ys), num(m));
        let _ = writeln!(s, " pos_{i}:{} + e_{i} - {} th_{i} >= {}", affine(x, 1.0), num(m), num(1.0 - m));
        let _ = writeln!(s, " neg_{i}:{} - e_{i} - {} th_{i} <= -1", affine(x, 1.0), num(m));
        for (k, tag) in [("kp", "dp"), ("km", "dm")] {
            match spec.norm {
                ClusterNorm::L1 => {
                    for (j, v) in x.iter().enumerate() {
                        let _ = writeln!(s, " {tag}a_{i}_{j}: {tag}_{i}_{j} + {k}_{j} >= {}", num(*v));
                        let _ = writeln!(s, " {tag}b_{i}_{j}: {tag}_{i}_{j} - {k}_{j} >= {}", num(-v));
                    }
                }
                ClusterNorm::L2 => {
                    for (j, v) in x.iter().enumerate() {
                        let _ = writeln!(s, " {tag}z_{i}_{j}: {tag}_{i}_{j} + {k}_{j} = {}", num(*v));
                    }
                    let mut q = String::new();
                    for j in 0..p {
                        let _ = write!(q, " + {tag}_{i}_{j} ^ 2");
                    }
                    let _ = writeln!(s, " {tag}q_{i}: [{q} - r{tag}_{i} ^ 2 ] <= 0");
                }
            }
        }
        let sum = |tag: &str| -> String {
            match spec.norm {
                ClusterNorm::L1 => (0..p).map(|j| format!(" - {tag}_{i}_{j}")).collect(),
                ClusterNorm::L2 => format!(" - r{tag}_{i}"),
            }
        };
        let _ = writeln!(s, " near_plus_{i}: d_{i}{} - {} th_{i} >= {}", sum("dp"), num(m), num(-m));
        let _ = writeln!(s, " near_minus_{i}: d_{i}{} + {} th_{i} >= 0", sum("dm"), num(m));
    }
    match spec.norm {
        ClusterNorm::L1 => {
            for j in 0..p {
                let _ = writeln!(s, " abs_pos_{j}: u_{j} - w_{j} >= 0");
                let _ = writeln!(s, " abs_neg_{j}: u_{j} + w_{j} >= 0");
            }
        }
        ClusterNorm::L2 if !spec.squared_margin => {
            let mut q = String::new();
            for j in 0..p {
                let _ = write!(q, " + w_{j} ^ 2");
            }
            let _ = writeln!(s, " norm: [{q} - t ^ 2 ] <= 0");
        }
        ClusterNorm::L2 => {}
    }

    let _ = writeln!(s, "Bounds");
    for j in 0..p {
        let _ = writeln!(s, " -{w} <= w_{j} <= {w}", w = num(wbox));
        let _ = writeln!(s, " -{w} <= kp_{j} <= {w}", w = num(wbox));
        let _ = writeln!(s, " -{w} <= km_{j} <= {w}", w = num(wbox));
    }
    let _ = writeln!(s, " -{w} <= b <= {w}", w = num(wbox));
    for i in 0..n {
        for j in 0..p {
            for tag in ["dp", "dm"] {
                if spec.norm == ClusterNorm::L2 {
                    let _ = writeln!(s, " {tag}_{i}_{j} free");
                }
            }
        }
    }
    let _ = writeln!(s, "Binaries");
    let bins: Vec<String> = (0..n).flat_map(|i| [format!("xi_{i}"), format!("th_{i}")]).collect();
    let _ = writeln!(s, " {}", bins.join(" "));
    let _ = writeln!(s, "End");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn tiny() -> Dataset {
        Dataset::from_rows("t", &[vec![1.0, -2.0], vec![0.5, 0.5]], vec![Label::Positive, Label::Negative]).unwrap()
    }

    #[test]
    fn big_m_formula() {
        assert_eq!(big_m(&tiny(), 10.0), 1.0 + 2.0 * 3.0 * 10.0 + 10.0);
    }

    #[test]
    fn l1_export_structure() {
        let spec = ClusterSvmSpec::new(1.0, 2.0, 0.5, ClusterNorm::L1);
        let lp = export_lp(&tiny(), &spec, 10.0);
        for section in ["Minimize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(lp.lines().any(|l| l == section), "missing {section}");
        }
        assert!(lp.contains(" sign_0: + 1.0 w_0 - 2.0 w_1 + 1.0 b + 71.0 xi_0 >= 0"));
        assert!(lp.contains(" sign_1: - 0.5 w_0 - 0.5 w_1 - 1.0 b + 71.0 xi_1 >= 0"));
        assert!(lp.contains("xi_0 th_0 xi_1 th_1"));
        assert!(!lp.contains('['));
    }

    #[test]
    fn l2_export_has_cones() {
        let spec = ClusterSvmSpec::new(1.0, 2.0, 0.5, ClusterNorm::L2);
        let lp = export_lp(&tiny(), &spec, 10.0);
        assert!(lp.contains(" norm: [ + w_0 ^ 2 + w_1 ^ 2 - t ^ 2 ] <= 0"));
        assert_eq!(lp.matches("- rdp_").count(), 2 + 2);
    }
}

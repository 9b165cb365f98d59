//! Text formats for fields, trajectories, scaling results and samples.
//!
//! Every number is written with `{:.16e}` so files round-trip exactly and
//! identical results produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::approx::ScalingResult;
use crate::evolution::Trajectory;
use crate::grid::Field;
use crate::montecarlo::SampleSet;

/// `x,value,time`, one row per node.
pub fn field_csv(f: &Field) -> String {
    let mut s = String::from("x,value,time\n");
    for (x, v) in f.grid().nodes().iter().zip(f.values()) {
        writeln!(s, "{x:.16e},{v:.16e},{:.16e}", f.time()).unwrap();
    }
    s
}

/// `t,x,value`, snapshots in time order.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,x,value\n");
    let nodes = traj.grid().nodes();
    for snap in traj.snapshots() {
        for (x, v) in nodes.iter().zip(snap.values()) {
            writeln!(s, "{:.16e},{x:.16e},{v:.16e}", snap.time()).unwrap();
        }
    }
    s
}

/// One `snapshot_%06d.csv` per snapshot, in field format.
pub fn write_snapshots(dir: &Path, traj: &Trajectory) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (k, snap) in traj.snapshots().iter().enumerate() {
        fs::write(dir.join(format!("snapshot_{k:06}.csv")), field_csv(snap))?;
    }
    Ok(())
}

/// Max-norm errors per epsilon, then `# slopes: s1,s2,s3`.
pub fn scaling_csv(r: &ScalingResult) -> String {
    let mut s = String::from("epsilon,linf_p_ptilde,linf_ptilde_phat,linf_p_phat\n");
    for (e, n) in r.epsilons.iter().zip(&r.errors) {
        writeln!(
            s,
            "{e:.16e},{:.16e},{:.16e},{:.16e}",
            n.p_ptilde.linf, n.ptilde_phat.linf, n.p_phat.linf
        )
        .unwrap();
    }
    writeln!(
        s,
        "# slopes: {:.16e},{:.16e},{:.16e}",
        r.slopes.p_ptilde, r.slopes.ptilde_phat, r.slopes.p_phat
    )
    .unwrap();
    s
}

/// `path,position`.
pub fn samples_csv(samples: &SampleSet) -> String {
    let mut s = String::from("path,position\n");
    for (i, x) in samples.positions.iter().enumerate() {
        writeln!(s, "{i},{x:.16e}").unwrap();
    }
    s
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Ready-to-run gnuplot script for a CSV written by this module.
pub fn gnuplot_script(csv: &Path, kind: PlotKind) -> String {
    let file = csv.display();
    let body = match kind {
        PlotKind::Field => format!("plot '{file}' using 1:2 with lines title 'value'\n"),
        PlotKind::Trajectory => format!(
            "set xlabel 'x'\nset ylabel 't'\nsplot '{file}' using 2:1:3 with points pointsize 0.3 title 'value'\n"
        ),
        PlotKind::Scaling => format!(
            "set logscale xy\nset xlabel 'epsilon'\nset key left top\n\
             plot '{file}' using 1:2 with linespoints title '|p - p~|', \\\n\
             \x20    '{file}' using 1:3 with linespoints title '|p~ - p^|', \\\n\
             \x20    '{file}' using 1:4 with linespoints title '|p - p^|'\n"
        ),
        PlotKind::Samples => format!(
            "binwidth = 0.05\nbin(x) = binwidth * floor(x / binwidth)\n\
             plot '{file}' using (bin($2)):(1.0) smooth frequency with boxes title 'samples'\n"
        ),
    };
    format!("set datafile separator ','\nset key autotitle columnhead\n{body}pause -1\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Field,
    Trajectory,
    Scaling,
    Samples,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{ErrorNorms, Slopes};
    use crate::evolution::{Advection, PdeKind};
    use crate::grid::{Grid1D, Norms};

    #[test]
    fn field_csv_round_trips() {
        let g = Grid1D::new(-1.0, 1.0, 7).unwrap();
        let f = Field::from_fn(g, 0.25, |x| (3.0 * x).sin() / 7.0).unwrap();
        let text = field_csv(&f);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,value,time"));
        for (i, line) in lines.enumerate() {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cols, vec![g.x(i), f.values()[i], 0.25]);
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let a = Field::constant(g, 1.0, 0.0).unwrap();
        let b = Field::constant(g, 2.0, 0.5).unwrap();
        let t = Trajectory::new(vec![a, b], PdeKind::Fpe, Advection::Central).unwrap();
        let text = trajectory_csv(&t);
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().nth(4).unwrap().starts_with("5.0000000000000000e-1,0.0000000000000000e0,"));

        let dir = tempfile::tempdir().unwrap();
        write_snapshots(dir.path(), &t).unwrap();
        let second = fs::read_to_string(dir.path().join("snapshot_000001.csv")).unwrap();
        assert_eq!(second, field_csv(&t.snapshots()[1]));
    }

    #[test]
    fn scaling_csv_has_slopes_line() {
        let n = Norms {
            l1: 1.0,
            l2: 1.0,
            linf: 0.5,
        };
        let r = ScalingResult {
            epsilons: vec![0.2, 0.1, 0.05],
            errors: vec![
                ErrorNorms {
                    p_ptilde: n,
                    ptilde_phat: n,
                    p_phat: n
                };
                3
            ],
            slopes: Slopes {
                p_ptilde: 2.0,
                ptilde_phat: 1.0,
                p_phat: 1.0,
            },
            eval_time: 20.0,
        };
        let text = scaling_csv(&r);
        assert!(text.starts_with("epsilon,linf_p_ptilde,linf_ptilde_phat,linf_p_phat\n"));
        assert_eq!(
            text.lines().last().unwrap(),
            "# slopes: 2.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0"
        );
        let v: serde_json::Value = serde_json::from_str(&json(&r)).unwrap();
        assert_eq!(v["slopes"]["p_ptilde"], 2.0);
    }

    #[test]
    fn samples_csv_layout() {
        let s = SampleSet {
            time: 1.0,
            positions: vec![0.5, -2.0],
        };
        assert_eq!(
            samples_csv(&s),
            "path,position\n0,5.0000000000000000e-1\n1,-2.0000000000000000e0\n"
        );
    }

    #[test]
    fn gnuplot_mentions_the_file() {
        let s = gnuplot_script(Path::new("out/scaling.csv"), PlotKind::Scaling);
        assert!(s.contains("set logscale xy"));
        assert_eq!(s.matches("out/scaling.csv").count(), 3);
    }
}

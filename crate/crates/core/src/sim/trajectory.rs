use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

/// Sampled states with the zero-order-hold control that was active on each
/// interval. `controls[i]` is held over `[times[i], times[i + 1])`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    controls: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            controls: Vec::with_capacity(n.saturating_sub(1)),
        }
    }

    pub(crate) fn push_sample(&mut self, t: f64, x: Vec<f64>) {
        debug_assert!(self.times.last().is_none_or(|last| t > *last));
        self.times.push(t);
        self.states.push(x);
    }

    pub(crate) fn push_interval(&mut self, u: Vec<f64>, t: f64, x: Vec<f64>) {
        self.controls.push(u);
        self.push_sample(t, x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn control_dim(&self) -> usize {
        self.controls.first().map_or(0, Vec::len)
    }

    /// Writes `t,x1,...,xn,u1,...,um`, one row per sample. The last row
    /// repeats the final held control.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let (n, m) = (self.state_dim(), self.control_dim());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=m).map(|i| format!("u{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (i, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let mut row = vec![fmt_num(*t)];
            row.extend(x.iter().map(|v| fmt_num(*v)));
            if m > 0 {
                let u = &self.controls[i.min(self.controls.len() - 1)];
                row.extend(u.iter().map(|v| fmt_num(*v)));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> io::Result<Self> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty trajectory file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"t") {
            return Err(bad(format!("expected leading `t` column, got `{header}`")));
        }
        let n = cols.iter().filter(|c| c.starts_with('x')).count();
        let m = cols.iter().filter(|c| c.starts_with('u')).count();
        if n + m + 1 != cols.len() {
            return Err(bad(format!("unrecognized columns in `{header}`")));
        }
        let mut traj = Trajectory::default();
        let mut last_u: Option<Vec<f64>> = None;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
            if vals.len() != cols.len() {
                return Err(bad(format!("line {}: expected {} fields", lineno + 2, cols.len())));
            }
            let x = vals[1..=n].to_vec();
            if let Some(u) = last_u.take() {
                traj.push_interval(u, vals[0], x);
            } else {
                traj.push_sample(vals[0], x);
            }
            if m > 0 {
                last_u = Some(vals[n + 1..].to_vec());
            }
        }
        Ok(traj)
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec(prop::array::uniform3(-1e6f64..1e6), 1..20)) {
            let mut traj = Trajectory::default();
            traj.push_sample(0.0, rows[0][..2].to_vec());
            for (i, r) in rows.iter().enumerate().skip(1) {
                traj.push_interval(vec![r[2]], i as f64 * 0.01, r[..2].to_vec());
            }
            let mut buf = Vec::new();
            traj.write_csv(&mut buf).unwrap();
            let back = Trajectory::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, traj);
        }
    }

    #[test]
    fn header_layout() {
        let mut traj = Trajectory::default();
        traj.push_sample(0.0, vec![1.0, 2.0]);
        traj.push_interval(vec![0.5], 0.1, vec![1.5, 2.5]);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,u1");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].ends_with("5.0000000000000000e-1"));
    }
}

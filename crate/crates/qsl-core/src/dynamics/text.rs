//! Trajectory text format.
//!
//! Header line `M N tau` (M intervals, N the state dimension), followed by
//! M+1 blocks, each a time value on its own line and then the state in the
//! matrix text format. Parsed trajectories get finite-difference
//! derivatives via [`from_samples`].

use crate::dynamics::{from_samples, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::text::{parse_matrix_at, write_matrix};
use crate::linalg::DensityMatrix;

pub fn write_trajectory(traj: &Trajectory) -> String {
    let m = traj.intervals();
    let n = traj.dim();
    let mut out = format!("{m} {n} {:.16e}\n", traj.duration());
    for k in 0..traj.points() {
        out.push_str(&format!("{:.16e}\n", traj.time(k)));
        out.push_str(&write_matrix(traj.state(k).matrix()));
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_trajectory(src: &str) -> Result<Trajectory> {
    let lines: Vec<&str> = src.lines().collect();
    let header = lines
        .first()
        .ok_or_else(|| parse_err(1, "empty trajectory file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(parse_err(
            1,
            format!("expected header `M N tau`, got `{header}`"),
        ));
    }
    let m: usize = toks[0]
        .parse()
        .map_err(|_| parse_err(1, format!("bad interval count `{}`", toks[0])))?;
    let n: usize = toks[1]
        .parse()
        .map_err(|_| parse_err(1, format!("bad dimension `{}`", toks[1])))?;
    let tau: f64 = toks[2]
        .parse()
        .map_err(|_| parse_err(1, format!("bad duration `{}`", toks[2])))?;
    if m < 2 {
        return Err(parse_err(1, "trajectory needs at least 2 intervals"));
    }
    if !tau.is_finite() || tau <= 0.0 {
        return Err(parse_err(
            1,
            format!("duration must be positive, got {tau}"),
        ));
    }

    let mut cursor = 1usize; // index into `lines`; line number is cursor + 1
    let mut times = Vec::with_capacity(m + 1);
    let mut states = Vec::with_capacity(m + 1);
    for block in 0..=m {
        let lineno = cursor + 1;
        let tline = lines
            .get(cursor)
            .ok_or_else(|| parse_err(lineno, format!("missing time for block {block}")))?;
        let t: f64 = tline
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad time value `{tline}`")))?;
        cursor += 1;
        let (mat, used) = parse_matrix_at(&lines, cursor, cursor + 1)?;
        if mat.dim() != n {
            return Err(parse_err(
                cursor + 1,
                format!(
                    "block {} has dimension {}, header says {}",
                    block,
                    mat.dim(),
                    n
                ),
            ));
        }
        let rho = DensityMatrix::from_matrix(mat)
            .map_err(|e| Error::InvalidTrajectory(format!("state in block {block}: {e}")))?;
        cursor += used;
        times.push(t);
        states.push(rho);
    }
    if lines[cursor..].iter().any(|l| !l.trim().is_empty()) {
        return Err(parse_err(cursor + 1, "unexpected trailing content"));
    }
    let t_end = *times.last().unwrap();
    if (t_end - tau).abs() > 1e-9 * tau.max(1.0) {
        return Err(Error::InvalidTrajectory(format!(
            "final time {t_end} disagrees with header duration {tau}"
        )));
    }
    from_samples(times, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{depolarize, Schedule};
    use crate::linalg::{random_density, RngStream};

    #[test]
    fn roundtrip_preserves_times_and_states_exactly() {
        let rho0 = random_density(2, &RngStream::new(31, 0));
        let traj = depolarize(&rho0, Schedule::linear(1.0, 0.2, 1.0), 1.0, 16).unwrap();
        let text = write_trajectory(&traj);
        let back = parse_trajectory(&text).unwrap();
        assert_eq!(back.points(), traj.points());
        for k in 0..traj.points() {
            assert_eq!(back.time(k), traj.time(k));
            assert_eq!(back.state(k).matrix(), traj.state(k).matrix());
        }
    }

    #[test]
    fn malformed_header_cites_line_one() {
        match parse_trajectory("not a header\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_block_is_reported() {
        let rho0 = random_density(2, &RngStream::new(31, 1));
        let traj = depolarize(&rho0, Schedule::linear(1.0, 0.0, 1.0), 1.0, 4).unwrap();
        let text = write_trajectory(&traj);
        let truncated: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_trajectory(&truncated),
            Err(Error::Parse { .. })
        ));
    }
}

//! Headered CSV files (comma separated, LF line endings, floats printed with
//! the shortest representation that parses back to the same value) and
//! all-or-nothing output directories.

use std::fs;
use std::path::{Path, PathBuf};

use enkf_etpf::models::{ObservationPath, Trajectory};
use nalgebra::DMatrix;

use crate::error::CliError;
use crate::metrics::MetricsReport;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory CSV writer cannot fail")
}

fn write_row(w: &mut csv::Writer<Vec<u8>>, row: Vec<String>) {
    w.write_record(&row).expect("in-memory CSV writer cannot fail");
}

/// One row per time level: `t` followed by the state components.
pub fn trajectory_csv(traj: &Trajectory, labels: &[String]) -> Vec<u8> {
    let mut w = writer();
    write_row(&mut w, std::iter::once("t".to_string()).chain(labels.iter().cloned()).collect());
    for (t, x) in traj.times().zip(&traj.states) {
        write_row(&mut w, std::iter::once(t).chain(x.iter().copied()).map(fmt_f64).collect());
    }
    finish(w)
}

/// Column labels `u_0 … u_{n−1}, v_0 … v_{n−1}` for a wave state, `x_k` otherwise.
pub fn state_labels(state_dim: usize, wave: bool) -> Vec<String> {
    if wave {
        let n = state_dim / 2;
        (0..n).map(|i| format!("u_{i}")).chain((0..n).map(|i| format!("v_{i}"))).collect()
    } else {
        (0..state_dim).map(|i| format!("x_{i}")).collect()
    }
}

/// One row per interval: its start time `t_n` and the increment `Δy_n`.
pub fn observations_csv(obs: &ObservationPath) -> Vec<u8> {
    let mut w = writer();
    let header = std::iter::once("t".to_string()).chain((0..obs.obs_dim()).map(|k| format!("dy_{k}")));
    write_row(&mut w, header.collect());
    for (n, dy) in obs.increments().iter().enumerate() {
        let t = n as f64 * obs.dt();
        write_row(&mut w, std::iter::once(t).chain(dy.iter().copied()).map(fmt_f64).collect());
    }
    finish(w)
}

fn parse(path: &Path, line: usize, field: &str) -> Result<f64, CliError> {
    field
        .trim()
        .parse()
        .map_err(|_| CliError::input(path, format!("line {line}: '{field}' is not a number")))
}

/// Reads an observation file written by [`observations_csv`], checking the
/// column count against `obs_dim` and the time column against `dt`.
pub fn read_observations(path: &Path, obs_dim: usize, dt: f64) -> Result<ObservationPath, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader.headers().map_err(|e| CliError::input(path, e.to_string()))?.clone();
    if headers.len() != obs_dim + 1 {
        return Err(CliError::input(
            path,
            format!("expected {} columns (t and {obs_dim} increments), found {}", obs_dim + 1, headers.len()),
        ));
    }
    let mut increments = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| CliError::input(path, e.to_string()))?;
        if rec.len() != obs_dim + 1 {
            return Err(CliError::input(path, format!("line {line}: expected {} columns, found {}", obs_dim + 1, rec.len())));
        }
        let t = parse(path, line, &rec[0])?;
        if (t - n as f64 * dt).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(CliError::input(path, format!("line {line}: time {t} does not match step {n} with dt {dt}")));
        }
        let dy = rec.iter().skip(1).map(|f| parse(path, line, f)).collect::<Result<Vec<_>, _>>()?;
        if dy.iter().any(|v| !v.is_finite()) {
            return Err(CliError::input(path, format!("line {line}: non-finite increment")));
        }
        increments.push(dy);
    }
    if increments.is_empty() {
        return Err(CliError::input(path, "no observation rows"));
    }
    ObservationPath::new(increments, dt).map_err(|e| CliError::input(path, e.to_string()))
}

/// Reads a trajectory written by [`trajectory_csv`].
pub fn read_trajectory(path: &Path, state_dim: usize, dt: f64) -> Result<Trajectory, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let width = reader.headers().map_err(|e| CliError::input(path, e.to_string()))?.len();
    if width != state_dim + 1 {
        return Err(CliError::input(path, format!("expected {} columns, found {width}", state_dim + 1)));
    }
    let mut states = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::input(path, e.to_string()))?;
        if rec.len() != width {
            return Err(CliError::input(path, format!("line {}: expected {width} columns, found {}", n + 2, rec.len())));
        }
        states.push(rec.iter().skip(1).map(|f| parse(path, n + 2, f)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(Trajectory { states, dt })
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Per-step run table. Parameter columns are `lambda_mean`/`c_mean` for a
/// scalar parameter and indexed otherwise; error columns are empty when no
/// reference is available.
pub fn run_csv(report: &MetricsReport) -> Vec<u8> {
    let np = report.steps.first().map_or(0, |s| s.parameter_mean.len());
    let names = |base: &str| -> Vec<String> {
        if np == 1 {
            vec![base.to_string()]
        } else {
            (0..np).map(|k| format!("{base}_{k}")).collect()
        }
    };
    let mut header = vec!["step".to_string(), "time".to_string()];
    header.extend(names("lambda_mean"));
    header.extend(names("c_mean"));
    header.extend(["ess", "resampled", "rmse", "abs_error", "rel_error"].map(String::from));
    let mut w = writer();
    write_row(&mut w, header);
    for s in &report.steps {
        let mut row = vec![s.step.to_string(), fmt_f64(s.time)];
        row.extend(s.parameter_mean.iter().copied().map(fmt_f64));
        row.extend(s.velocity_mean.iter().copied().map(fmt_f64));
        row.push(fmt_f64(s.ess));
        row.push(u8::from(s.resampled).to_string());
        row.push(opt(s.rmse));
        row.push(opt(s.abs_error));
        row.push(opt(s.rel_error));
        write_row(&mut w, row);
    }
    finish(w)
}

/// Long-format dump of resampling couplings: `step, row, col, value`.
pub fn couplings_csv(couplings: &[(usize, DMatrix<f64>)]) -> Vec<u8> {
    let mut w = writer();
    write_row(&mut w, ["step", "row", "col", "value"].map(String::from).to_vec());
    for (step, t) in couplings {
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                write_row(&mut w, vec![step.to_string(), i.to_string(), j.to_string(), fmt_f64(t[(i, j)])]);
            }
        }
    }
    finish(w)
}

/// Files staged in memory and written together. Each file goes to a
/// temporary name first and is renamed into place once all are written.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn commit(self) -> Result<(), CliError> {
        let mut staged = Vec::with_capacity(self.files.len());
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                if let Err(e) = fs::create_dir_all(dir) {
                    cleanup(&staged);
                    return Err(CliError::io(dir, e));
                }
            }
            let mut tmp = path.clone().into_os_string();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            if let Err(e) = fs::write(&tmp, bytes) {
                cleanup(&staged);
                return Err(CliError::io(&tmp, e));
            }
            staged.push((tmp, path.clone()));
        }
        for (tmp, path) in &staged {
            fs::rename(tmp, path).map_err(|e| CliError::io(path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, 123456789.12345679, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn observation_file_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let obs = ObservationPath::new(vec![vec![0.1, -1.0 / 3.0], vec![2e-7, 0.0]], 0.01).unwrap();
        let path = dir.path().join("obs.csv");
        fs::write(&path, observations_csv(&obs)).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,dy_0,dy_1\n") && !text.contains('\r'));
        let back = read_observations(&path, 2, 0.01).unwrap();
        assert_eq!(back.increments(), obs.increments());

        assert!(matches!(read_observations(&path, 3, 0.01), Err(CliError::Input { .. })));
        assert!(matches!(read_observations(&path, 2, 0.02), Err(CliError::Input { .. })));
        fs::write(&path, "t,dy_0,dy_1\n0.0,1.0\n").unwrap();
        assert!(matches!(read_observations(&path, 2, 0.01), Err(CliError::Input { .. })));
        fs::write(&path, "t,dy_0,dy_1\n0.0,1.0,abc\n").unwrap();
        assert!(matches!(read_observations(&path, 2, 0.01), Err(CliError::Input { .. })));
    }

    #[test]
    fn trajectory_round_trip() {
        let traj = Trajectory {
            states: vec![vec![1.0, 2.0], vec![0.1 + 0.2, -0.0]],
            dt: 0.5,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        fs::write(&path, trajectory_csv(&traj, &state_labels(2, true))).unwrap();
        assert!(fs::read_to_string(&path).unwrap().starts_with("t,u_0,v_0\n"));
        assert_eq!(read_trajectory(&path, 2, 0.5).unwrap().states, traj.states);
    }

    #[test]
    fn output_set_writes_everything_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new();
        out.add(dir.path().join("a/x.csv"), b"1\n".to_vec());
        out.add(dir.path().join("b.csv"), b"2\n".to_vec());
        out.commit().unwrap();
        assert_eq!(fs::read(dir.path().join("a/x.csv")).unwrap(), b"1\n");

        let blocker = dir.path().join("file");
        fs::write(&blocker, "").unwrap();
        let mut out = OutputSet::new();
        out.add(dir.path().join("c.csv"), b"3\n".to_vec());
        out.add(blocker.join("d.csv"), b"4\n".to_vec());
        assert!(out.commit().is_err());
        assert!(!dir.path().join("c.csv").exists());
        assert!(!dir.path().join("c.csv.partial").exists());
    }
}

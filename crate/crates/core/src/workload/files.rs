//! Two-file CSV exchange format.
//!
//! `tasks.csv`: `task_id,job_id,arrival_s,duration_s,cpu_req,mem_req`
//! `usage.csv`: `task_id,offset_s,cpu_use,mem_use`
//!
//! Both files need the header row. Usage rows for one task must appear in
//! increasing offset order starting at 0; rows of different tasks may
//! interleave.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use crate::domain::{DemandSeries, JobId, ResourceVector, TaskId, TaskSpec};
use crate::error::{Error, Result};
use crate::workload::Workload;

pub const TASKS_HEADER: [&str; 6] = [
    "task_id",
    "job_id",
    "arrival_s",
    "duration_s",
    "cpu_req",
    "mem_req",
];
pub const USAGE_HEADER: [&str; 4] = ["task_id", "offset_s", "cpu_use", "mem_use"];

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        file: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn check_header(reader: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            path,
            1,
            format!("missing header: expected '{}'", expected.join(",")),
        ));
    }
    Ok(())
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    record: csv::StringRecord,
}

impl Row<'_> {
    fn field(&self, idx: usize, name: &str) -> Result<&str> {
        self.record
            .get(idx)
            .ok_or_else(|| Error::parse(self.path, self.line, format!("missing field {name}")))
    }

    fn u64(&self, idx: usize, name: &str) -> Result<u64> {
        let raw = self.field(idx, name)?;
        raw.parse().map_err(|_| {
            Error::parse(
                self.path,
                self.line,
                format!("{name}: '{raw}' is not an integer"),
            )
        })
    }

    fn f64(&self, idx: usize, name: &str) -> Result<f64> {
        let raw = self.field(idx, name)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(
                self.path,
                self.line,
                format!("{name}: '{raw}' is not a finite number"),
            )),
        }
    }
}

fn rows<'a>(
    reader: &'a mut csv::Reader<File>,
    path: &'a Path,
) -> impl Iterator<Item = Result<Row<'a>>> + 'a {
    reader.records().map(move |rec| {
        let record = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        Ok(Row { path, line, record })
    })
}

/// Reads and validates a workload from the two CSV files.
pub fn load_workload(tasks_path: &Path, usage_path: &Path) -> Result<Workload> {
    let mut reader = open(tasks_path)?;
    check_header(&mut reader, tasks_path, &TASKS_HEADER)?;
    let mut tasks = Vec::new();
    let mut lines: BTreeMap<TaskId, u64> = BTreeMap::new();
    for row in rows(&mut reader, tasks_path) {
        let row = row?;
        let task_id = TaskId(row.u64(0, "task_id")?);
        let job_id = JobId(row.u64(1, "job_id")?);
        let arrival = row.f64(2, "arrival_s")?;
        let duration = row.f64(3, "duration_s")?;
        let request = ResourceVector::new(row.f64(4, "cpu_req")?, row.f64(5, "mem_req")?);
        if lines.insert(task_id, row.line).is_some() {
            return Err(Error::parse(
                tasks_path,
                row.line,
                format!("duplicate task {task_id}"),
            ));
        }
        let task = TaskSpec::new(task_id, job_id, arrival, duration, request)
            .map_err(|e| Error::parse(tasks_path, row.line, e.to_string()))?;
        tasks.push(task);
    }

    let durations: BTreeMap<TaskId, f64> = tasks.iter().map(|t| (t.task_id, t.duration)).collect();
    let mut reader = open(usage_path)?;
    check_header(&mut reader, usage_path, &USAGE_HEADER)?;
    let mut samples: BTreeMap<TaskId, Vec<(f64, ResourceVector)>> = BTreeMap::new();
    for row in rows(&mut reader, usage_path) {
        let row = row?;
        let task_id = TaskId(row.u64(0, "task_id")?);
        let offset = row.f64(1, "offset_s")?;
        let usage = ResourceVector::new(row.f64(2, "cpu_use")?, row.f64(3, "mem_use")?);
        let Some(&duration) = durations.get(&task_id) else {
            return Err(Error::parse(
                usage_path,
                row.line,
                format!("usage for unknown task {task_id}"),
            ));
        };
        if !usage.is_valid() {
            return Err(Error::parse(
                usage_path,
                row.line,
                "usage must be non-negative",
            ));
        }
        let series = samples.entry(task_id).or_default();
        match series.last() {
            None if offset != 0.0 => {
                return Err(Error::parse(
                    usage_path,
                    row.line,
                    format!("first usage offset of task {task_id} must be 0"),
                ))
            }
            Some((prev, _)) if offset <= *prev => {
                return Err(Error::parse(
                    usage_path,
                    row.line,
                    format!("usage offsets of task {task_id} must increase"),
                ))
            }
            _ => {}
        }
        if offset >= duration {
            return Err(Error::parse(
                usage_path,
                row.line,
                format!("offset {offset} beyond duration {duration} of task {task_id}"),
            ));
        }
        series.push((offset, usage));
    }

    if let Some(task) = tasks.iter().find(|t| !samples.contains_key(&t.task_id)) {
        return Err(Error::parse(
            tasks_path,
            lines[&task.task_id],
            format!(
                "task {} has no usage rows in {}",
                task.task_id,
                usage_path.display()
            ),
        ));
    }
    let mut demands = BTreeMap::new();
    for (id, series) in samples {
        demands.insert(id, DemandSeries::new(id, series)?);
    }
    Workload::new(tasks, demands)
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        file: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes a workload in the format read by [`load_workload`]. Numbers use
/// the shortest representation that parses back to the same value.
pub fn write_workload(workload: &Workload, tasks_path: &Path, usage_path: &Path) -> Result<()> {
    let mut w = create(tasks_path)?;
    w.write_record(TASKS_HEADER)?;
    for t in workload.tasks() {
        w.write_record([
            t.task_id.to_string(),
            t.job_id.to_string(),
            t.arrival_time.to_string(),
            t.duration.to_string(),
            t.request.cpu.to_string(),
            t.request.mem.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        file: tasks_path.to_path_buf(),
        source,
    })?;

    let mut w = create(usage_path)?;
    w.write_record(USAGE_HEADER)?;
    for t in workload.tasks() {
        for (offset, v) in workload.demands()[&t.task_id].samples() {
            w.write_record([
                t.task_id.to_string(),
                offset.to_string(),
                v.cpu.to_string(),
                v.mem.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        file: usage_path.to_path_buf(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    const TASKS: &str =
        "task_id,job_id,arrival_s,duration_s,cpu_req,mem_req\n1,10,0,600,2,4\n2,10,5.5,300,1,8\n";

    #[test]
    fn loads_two_tasks() {
        let dir = tempfile::tempdir().unwrap();
        let t = write(dir.path(), "tasks.csv", TASKS);
        let u = write(
            dir.path(),
            "usage.csv",
            "task_id,offset_s,cpu_use,mem_use\n1,0,1,2\n2,0,0.5,3\n1,300,1.5,2.5\n",
        );
        let w = load_workload(&t, &u).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(
            w.demand(TaskId(1)).unwrap().at(400.0),
            ResourceVector::new(1.5, 2.5)
        );
        assert_eq!(w.tasks()[1].arrival_time, 5.5);
    }

    #[test]
    fn orphan_usage_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let t = write(dir.path(), "tasks.csv", TASKS);
        let u = write(
            dir.path(),
            "usage.csv",
            "task_id,offset_s,cpu_use,mem_use\n1,0,1,2\n2,0,1,1\n9,0,1,1\n",
        );
        let err = load_workload(&t, &u).unwrap_err().to_string();
        assert!(err.contains("usage.csv:4"), "{err}");
        assert!(err.contains("unknown task 9"), "{err}");
    }

    #[test]
    fn duplicate_task_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = write(
            dir.path(),
            "tasks.csv",
            "task_id,job_id,arrival_s,duration_s,cpu_req,mem_req\n1,1,0,60,1,1\n1,1,0,60,1,1\n",
        );
        let u = write(
            dir.path(),
            "usage.csv",
            "task_id,offset_s,cpu_use,mem_use\n1,0,1,1\n",
        );
        let err = load_workload(&t, &u).unwrap_err().to_string();
        assert!(err.contains("duplicate task"), "{err}");
        assert!(err.contains("tasks.csv:3"), "{err}");
    }

    #[test]
    fn missing_header_and_bad_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let t = write(dir.path(), "tasks.csv", "1,1,0,60,1,1\n");
        let u = write(
            dir.path(),
            "usage.csv",
            "task_id,offset_s,cpu_use,mem_use\n1,0,1,1\n",
        );
        let err = load_workload(&t, &u).unwrap_err().to_string();
        assert!(err.contains("missing header"), "{err}");

        let t = write(
            dir.path(),
            "tasks.csv",
            "task_id,job_id,arrival_s,duration_s,cpu_req,mem_req\n1,1,zero,60,1,1\n",
        );
        let err = load_workload(&t, &u).unwrap_err().to_string();
        assert!(
            err.contains("tasks.csv:2") && err.contains("arrival_s"),
            "{err}"
        );
    }

    #[test]
    fn task_without_usage() {
        let dir = tempfile::tempdir().unwrap();
        let t = write(dir.path(), "tasks.csv", TASKS);
        let u = write(
            dir.path(),
            "usage.csv",
            "task_id,offset_s,cpu_use,mem_use\n1,0,1,2\n",
        );
        let err = load_workload(&t, &u).unwrap_err().to_string();
        assert!(err.contains("task 2 has no usage"), "{err}");
        assert!(err.contains("tasks.csv:3"), "{err}");
    }

    #[test]
    fn out_of_order_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let t = write(dir.path(), "tasks.csv", TASKS);
        let u = write(
            dir.path(),
            "usage.csv",
            "task_id,offset_s,cpu_use,mem_use\n1,0,1,2\n1,300,1,2\n1,200,1,2\n2,0,1,1\n",
        );
        let err = load_workload(&t, &u).unwrap_err().to_string();
        assert!(err.contains("usage.csv:4"), "{err}");
    }
}

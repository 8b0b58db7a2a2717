//! CSV traces. The schema is frozen; see [`HEADER`].

use std::io::{self, Write};
use std::path::Path;

use cbggp_core::TraceRecord;

pub const HEADER: &str = "k,block,inner,f,residual,lambda,sigma,elapsed_ms,feval,geval,proj,backtracks";

/// 17 significant digits, enough to round-trip any `f64`.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_records<W: Write>(mut w: W, records: &[TraceRecord]) -> io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in records {
        let c = &r.counters;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.block,
            r.inner,
            float(r.f),
            float(r.residual),
            float(r.lambda),
            float(r.sigma),
            float(r.elapsed_ms),
            c.objective_evals,
            c.gradient_evals,
            c.projections,
            c.backtracks
        )?;
    }
    w.flush()
}

/// Writes the trace to a temporary file next to `path`, then renames it into place, so
/// readers never see a partial file.
pub fn emit_trace(records: &[TraceRecord], path: &Path) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_records(io::BufWriter::new(tmp.as_file_mut()), records)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cbggp_core::Counters;

    fn record(k: usize, f: f64) -> TraceRecord {
        TraceRecord {
            k,
            block: -1,
            inner: -1,
            f,
            residual: 0.25,
            lambda: f64::NAN,
            sigma: f64::NAN,
            elapsed_ms: 0.0,
            counters: Counters { objective_evals: 3, gradient_evals: 2, projections: 1, backtracks: 0 },
        }
    }

    fn render(records: &[TraceRecord]) -> String {
        let mut buf = Vec::new();
        write_records(&mut buf, records).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(render(&[]), format!("{HEADER}\n"));
    }

    #[test]
    fn three_records_four_lines() {
        let text = render(&[record(0, 1.0), record(1, 0.5), record(2, 0.25)]);
        assert_eq!(text.lines().count(), 4);
        assert!(text.ends_with('\n'));
        assert!(text.lines().all(|l| l == l.trim_end()));
        assert_eq!(text.lines().nth(1).unwrap(), "0,-1,-1,1.0000000000000000e0,2.5000000000000000e-1,NaN,NaN,0.0000000000000000e0,3,2,1,0");
    }

    #[test]
    fn floats_round_trip() {
        let values = [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, f64::MAX, f64::MIN_POSITIVE, -7.25e17, 5e-324];
        let records: Vec<_> = values.iter().enumerate().map(|(k, &f)| record(k, f)).collect();
        let text = render(&records);
        for (line, &f) in text.lines().skip(1).zip(&values) {
            let parsed: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
            assert_eq!(parsed.to_bits(), f.to_bits());
        }
    }

    #[test]
    fn emit_replaces_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_trace(&[record(0, 1.0)], &path).unwrap();
        emit_trace(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{HEADER}\n"));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(emit_trace(&[], &dir.path().join("missing/t.csv")).is_err());
    }
}

//! Parameter sweeps fanned out over worker threads.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::commands::run_command;
use crate::config::{RunConfig, SweepParam, MIN_GRID};
use crate::report::Report;
use crate::LabError;

fn configure(base: &RunConfig, param: SweepParam, value: f64) -> Result<RunConfig, LabError> {
    let mut cfg = base.clone();
    cfg.sweep = None;
    match param {
        SweepParam::R => cfg.r = value,
        SweepParam::Beta => cfg.beta = value,
        SweepParam::C => cfg.c = Some(value),
        SweepParam::Grid => {
            if value.fract() != 0.0 || value < MIN_GRID as f64 {
                return Err(LabError::Invalid(format!("grid value {value} is not an integer >= {MIN_GRID}")));
            }
            cfg.n_t = value as usize;
            cfg.n_theta = value as usize;
        }
    }
    cfg.case = format!("{} {}={}", base.case, param.name(), value);
    Ok(cfg)
}

/// Applies `f` to every item on up to `threads` workers; results keep the
/// item order.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, items.len().max(1));
    let done: Vec<Vec<(usize, R)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break out;
                        }
                        out.push((i, f(&items[i])));
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    for (i, r) in done.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Runs `base` once per value, sorted ascending, on up to `threads`
/// workers. Every run uses the same seed; rows come back in value order.
pub fn sweep(base: &RunConfig, param: SweepParam, values: &[f64], threads: usize) -> Result<Report, LabError> {
    if values.is_empty() {
        return Err(LabError::EmptySweep);
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let configs: Vec<RunConfig> = values.iter().map(|v| configure(base, param, *v)).collect::<Result<_, _>>()?;
    let results = par_map(&configs, threads, run_command);
    let mut report = Report::default();
    for r in results {
        report.extend(r?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_values_are_rejected() {
        let cfg: RunConfig = "command = \"fact1\"\n".parse().unwrap();
        let e = sweep(&cfg, SweepParam::Beta, &[], 2).unwrap_err();
        assert_eq!(e.to_string(), "empty sweep");
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn rows_follow_value_order_for_any_thread_count() {
        let cfg: RunConfig = "command = \"model-spectrum\"\nk = 0\n".parse().unwrap();
        let one = sweep(&cfg, SweepParam::R, &[2.0, 0.5, 1.0], 1).unwrap();
        let three = sweep(&cfg, SweepParam::R, &[1.0, 2.0, 0.5], 3).unwrap();
        assert_eq!(one.rows_csv(), three.rows_csv());
        let cases: Vec<&str> = one.rows.iter().map(|r| r.case.as_str()).collect();
        assert_eq!(cases.first(), Some(&"model-spectrum r=0.5"));
        assert_eq!(cases.last(), Some(&"model-spectrum r=2"));
        assert!(one.passed());
    }

    #[test]
    fn bad_grid_value() {
        let cfg: RunConfig = "command = \"fact1\"\n".parse().unwrap();
        assert!(sweep(&cfg, SweepParam::Grid, &[8.0], 1).is_err());
    }
}

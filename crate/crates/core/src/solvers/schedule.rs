use super::config::{CardinalityProfile, Schedule};
use super::report::{RunReport, Termination};
use crate::error::{Error, Result};

/// Levels `{8k_i, 4k_i, 2k_i, k_i}` clamped to `p`, consecutive duplicates removed.
pub fn warm_start_schedule(k: &CardinalityProfile, p: usize) -> Vec<CardinalityProfile> {
    let mut levels: Vec<CardinalityProfile> = Vec::with_capacity(4);
    for mult in [8usize, 4, 2, 1] {
        let level = CardinalityProfile::new(
            k.as_slice()
                .iter()
                .map(|&ki| (ki.saturating_mul(mult)).min(p))
                .collect(),
            p,
        )
        .expect("clamped levels stay in range");
        if levels.last() != Some(&level) {
            levels.push(level);
        }
    }
    levels
}

/// Next halving level `⌈k_i/2⌉`, floored per column; `None` once the floor is
/// reached.
pub fn halve(current: &CardinalityProfile, floor: &CardinalityProfile) -> Option<CardinalityProfile> {
    let next: Vec<usize> = current
        .as_slice()
        .iter()
        .zip(floor.as_slice())
        .map(|(&k, &f)| k.div_ceil(2).max(f).min(k))
        .collect();
    if next == current.as_slice() {
        None
    } else {
        Some(CardinalityProfile::new(next, usize::MAX).expect("halving keeps k >= 1"))
    }
}

/// Next level after the run so far, or `None` when the last level did not
/// converge or the floor is reached.
pub fn adaptive_halving(report: &RunReport, floor: &CardinalityProfile) -> Option<CardinalityProfile> {
    let last = report.levels.last()?;
    if last.termination != Termination::Converged {
        return None;
    }
    halve(&last.profile, floor)
}

/// The full list of levels a schedule walks through for target `k`.
pub fn resolve_levels(schedule: &Schedule, k: &CardinalityProfile, p: usize) -> Result<Vec<CardinalityProfile>> {
    let levels = match schedule {
        Schedule::Single => vec![k.clone()],
        Schedule::WarmStart => warm_start_schedule(k, p),
        Schedule::Explicit(levels) => {
            if levels.is_empty() {
                return Err(Error::InvalidArgument("explicit schedule has no levels".into()));
            }
            levels.clone()
        }
        Schedule::Halving { start, floor } => {
            let mut levels = vec![start.clone()];
            while let Some(next) = halve(levels.last().expect("non-empty"), floor) {
                levels.push(next);
            }
            levels
        }
    };
    for w in levels.windows(2) {
        if w[0].m() != w[1].m() || w[0].as_slice().iter().zip(w[1].as_slice()).any(|(a, b)| b > a) {
            return Err(Error::InvalidArgument(format!(
                "schedule levels must be non-increasing per column: {} then {}",
                w[0], w[1]
            )));
        }
    }
    for level in &levels {
        level.check_dims(p, k.m())?;
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(k: &[usize]) -> CardinalityProfile {
        CardinalityProfile::new(k.to_vec(), 10_000).unwrap()
    }

    fn flat(levels: &[CardinalityProfile]) -> Vec<Vec<usize>> {
        levels.iter().map(|l| l.as_slice().to_vec()).collect()
    }

    #[test]
    fn warm_start_examples() {
        assert_eq!(
            flat(&warm_start_schedule(&prof(&[10]), 1000)),
            vec![vec![80], vec![40], vec![20], vec![10]]
        );
        assert_eq!(
            flat(&warm_start_schedule(&prof(&[400]), 1000)),
            vec![vec![1000], vec![800], vec![400]]
        );
        assert_eq!(flat(&warm_start_schedule(&prof(&[1000]), 1000)), vec![vec![1000]]);
    }

    #[test]
    fn warm_start_per_column() {
        let levels = warm_start_schedule(&prof(&[7, 2]), 13);
        assert_eq!(flat(&levels), vec![vec![13, 13], vec![13, 8], vec![13, 4], vec![7, 2]]);
    }

    #[test]
    fn halving_sequence() {
        let floor = prof(&[1]);
        let mut k = prof(&[100]);
        let mut seen = vec![100];
        while let Some(next) = halve(&k, &floor) {
            seen.push(next.as_slice()[0]);
            k = next;
        }
        assert_eq!(seen, vec![100, 50, 25, 13, 7, 4, 2, 1]);
    }

    #[test]
    fn halving_stops_at_floor() {
        let levels = resolve_levels(
            &Schedule::Halving {
                start: prof(&[100]),
                floor: prof(&[10]),
            },
            &prof(&[10]),
            100,
        )
        .unwrap();
        assert_eq!(flat(&levels), vec![vec![100], vec![50], vec![25], vec![13], vec![10]]);
    }

    #[test]
    fn increasing_explicit_schedule_is_rejected() {
        let s = Schedule::Explicit(vec![prof(&[5]), prof(&[10])]);
        assert!(resolve_levels(&s, &prof(&[10]), 20).is_err());
    }
}

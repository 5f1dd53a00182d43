//! Bale feeding patterns and their expansion into period-indexed schedules.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scenario::{MoistureLevels, Scenario};
use crate::Error;

/// Order in which bales of different moisture are fed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeedingPattern {
    /// Contiguous blocks of `(level, bales)` repeated `repetitions` times,
    /// e.g. `6L,10M,4H*10`.
    Blocked {
        blocks: Vec<(usize, usize)>,
        repetitions: usize,
    },
    /// Bales in uniformly shuffled order.
    Random { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("pattern `{spec}`: {message}")]
pub struct PatternError {
    pub spec: String,
    pub message: String,
}

impl FeedingPattern {
    /// Parses `6L,10M,4H*10`, `6Lx10Mx4H*10`, `6L,10M,4H X10`, `60L,100M,40H`,
    /// `random` or `random:seed=7`. Level codes are the upper-cased first
    /// letters of the level names.
    pub fn parse(spec: &str, levels: &MoistureLevels) -> Result<Self, PatternError> {
        let err = |message: String| PatternError {
            spec: spec.to_string(),
            message,
        };
        let text = spec.trim();
        if let Some(rest) = text.strip_prefix("random") {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(FeedingPattern::Random { seed: 0 });
            }
            let value = rest
                .strip_prefix(':')
                .map(str::trim)
                .map(|r| r.strip_prefix("seed=").unwrap_or(r))
                .ok_or_else(|| err("expected `random:seed=<n>`".into()))?;
            let seed = value
                .trim()
                .parse::<u64>()
                .map_err(|_| err(format!("seed `{value}` is not a non-negative integer")))?;
            return Ok(FeedingPattern::Random { seed });
        }

        let chars: Vec<char> = text.chars().collect();
        let mut blocks = Vec::new();
        let mut repetitions = None;
        let mut k = 0;
        while k < chars.len() {
            if chars[k].is_ascii_digit() {
                let start = k;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                let number: String = chars[start..k].iter().collect();
                let count = number
                    .parse::<usize>()
                    .map_err(|_| err(format!("count `{number}` too large")))?;
                match chars.get(k) {
                    Some(c) if c.is_alphabetic() && !is_separator(*c, chars.get(k + 1)) => {
                        let level = levels
                            .by_code(*c)
                            .ok_or_else(|| err(format!("unknown moisture code `{c}`")))?;
                        if count == 0 {
                            return Err(err("block sizes must be positive".into()));
                        }
                        if repetitions.is_some() {
                            return Err(err("repetition count must come last".into()));
                        }
                        blocks.push((level, count));
                        k += 1;
                    }
                    _ => {
                        if blocks.is_empty() || repetitions.is_some() {
                            return Err(err(format!("unexpected number `{number}`")));
                        }
                        if count == 0 {
                            return Err(err("repetitions must be positive".into()));
                        }
                        repetitions = Some(count);
                    }
                }
            } else if is_separator(chars[k], chars.get(k + 1)) {
                k += 1;
            } else {
                return Err(err(format!("unexpected `{}`", chars[k])));
            }
        }
        if blocks.is_empty() {
            return Err(err("no blocks".into()));
        }
        Ok(FeedingPattern::Blocked {
            blocks,
            repetitions: repetitions.unwrap_or(1),
        })
    }

    pub fn is_random(&self) -> bool {
        matches!(self, FeedingPattern::Random { .. })
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            FeedingPattern::Random { seed } => Some(*seed),
            FeedingPattern::Blocked { .. } => None,
        }
    }

    /// Bales of each level the pattern feeds.
    pub fn bales_per_level(&self, num_levels: usize) -> Option<Vec<usize>> {
        match self {
            FeedingPattern::Random { .. } => None,
            FeedingPattern::Blocked {
                blocks,
                repetitions,
            } => {
                let mut n = vec![0; num_levels];
                for &(s, c) in blocks {
                    n[s] += c * repetitions;
                }
                Some(n)
            }
        }
    }

    /// Checks that a blocked pattern feeds exactly `n_s` bales of each level.
    pub fn check_counts(&self, scenario: &Scenario) -> Result<(), Error> {
        let Some(n) = self.bales_per_level(scenario.levels.len()) else {
            return Ok(());
        };
        for (s, (&got, &want)) in n.iter().zip(&scenario.bale.count).enumerate() {
            if got != want {
                return Err(Error::invalid(
                    "pattern",
                    format!(
                        "bales per moisture x repetitions = n_s ({} bales of `{}` in the pattern, {} in the scenario)",
                        got,
                        scenario.levels.name(s),
                        want
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn display(&self, levels: &MoistureLevels) -> String {
        match self {
            FeedingPattern::Random { seed } => format!("random:seed={seed}"),
            FeedingPattern::Blocked {
                blocks,
                repetitions,
            } => {
                let body: Vec<String> = blocks
                    .iter()
                    .map(|&(s, c)| format!("{c}{}", levels.code(s)))
                    .collect();
                if *repetitions == 1 {
                    body.join(",")
                } else {
                    format!("{}*{repetitions}", body.join(","))
                }
            }
        }
    }
}

/// Block separators: comma, whitespace, `*`, and `x` when it is not a level
/// code (i.e. followed by a digit, as in `6Lx10M` or `X10`).
fn is_separator(c: char, next: Option<&char>) -> bool {
    match c {
        ',' | '*' | ';' => true,
        c if c.is_whitespace() => true,
        'x' | 'X' => next.is_some_and(|n| n.is_ascii_digit() || n.is_whitespace()),
        _ => false,
    }
}

/// Contiguous run of periods fed from one block (or one bale).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub level: usize,
    pub start: usize,
    pub len: usize,
    pub bales: usize,
}

/// Moisture level active in every period, the indicator `j_st`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// Period length Δ, minutes.
    pub period_min: f64,
    pub num_levels: usize,
    /// Active level of each period.
    pub active: Vec<usize>,
    pub segments: Vec<Segment>,
    /// Seed of a random pattern.
    pub seed: Option<u64>,
}

impl Schedule {
    /// Schedule with the given active level per period; segments are the
    /// maximal runs of equal levels.
    pub fn from_levels(period_min: f64, num_levels: usize, active: Vec<usize>) -> Self {
        let mut segments: Vec<Segment> = Vec::new();
        for (t, &s) in active.iter().enumerate() {
            match segments.last_mut() {
                Some(seg) if seg.level == s => seg.len += 1,
                _ => segments.push(Segment {
                    level: s,
                    start: t,
                    len: 1,
                    bales: 0,
                }),
            }
        }
        Schedule {
            period_min,
            num_levels,
            active,
            segments,
            seed: None,
        }
    }

    pub fn horizon(&self) -> usize {
        self.active.len()
    }

    pub fn level_at(&self, t: usize) -> usize {
        self.active[t]
    }

    /// Indicator `j_st`.
    pub fn j(&self, s: usize, t: usize) -> f64 {
        if self.active[t] == s {
            1.0
        } else {
            0.0
        }
    }

    pub fn periods_per_level(&self) -> Vec<usize> {
        let mut n = vec![0; self.num_levels];
        for &s in &self.active {
            n[s] += 1;
        }
        n
    }

    pub fn hours(&self) -> f64 {
        self.horizon() as f64 * self.period_min / 60.0
    }

    /// One code letter per period.
    pub fn codes(&self, levels: &MoistureLevels) -> String {
        self.active.iter().map(|&s| levels.code(s)).collect()
    }
}

/// Whole periods covering `hours`, rounded up.
pub fn periods_for(hours: f64, period_min: f64) -> usize {
    let p = hours * 60.0 / period_min;
    // Guards against 4.9999999 from unit conversions turning into 5 + 1.
    (p - 1e-9).ceil().max(0.0) as usize
}

/// Expands a pattern given per-level time budgets in hours.
pub fn expand_pattern(
    scenario: &Scenario,
    pattern: &FeedingPattern,
    budget_hours: &[f64],
) -> Result<Schedule, Error> {
    let n = scenario.levels.len();
    if budget_hours.len() != n {
        return Err(Error::invalid("budget", "one budget per moisture level"));
    }
    let mut periods = vec![0; n];
    for s in 0..n {
        if scenario.bale.count[s] == 0 {
            continue;
        }
        let b = budget_hours[s];
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::invalid(
                format!("budget.{}", scenario.levels.name(s)),
                "budget > 0 for every moisture with bales",
            ));
        }
        periods[s] = periods_for(b, scenario.period_min);
    }
    expand_pattern_periods(scenario, pattern, &periods)
}

/// Expands a pattern given the number of periods for each level.
pub fn expand_pattern_periods(
    scenario: &Scenario,
    pattern: &FeedingPattern,
    periods: &[usize],
) -> Result<Schedule, Error> {
    let n = scenario.levels.len();
    let counts = &scenario.bale.count;
    for s in 0..n {
        if counts[s] > 0 && periods[s] == 0 {
            return Err(Error::invalid(
                format!("budget.{}", scenario.levels.name(s)),
                "budget > 0 for every moisture with bales",
            ));
        }
    }
    pattern.check_counts(scenario)?;

    // Each level's periods are shared among its units (blocks or bales) in
    // feeding order by cumulative flooring, so unit k of level s ends at
    // floor(P_s * bales before and including k / n_s).
    let units: Vec<(usize, usize)> = match pattern {
        FeedingPattern::Blocked {
            blocks,
            repetitions,
        } => (0..*repetitions).flat_map(|_| blocks.iter().copied()).collect(),
        FeedingPattern::Random { seed } => {
            let mut bales: Vec<usize> = (0..n).flat_map(|s| std::iter::repeat_n(s, counts[s])).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            bales.shuffle(&mut rng);
            bales.into_iter().map(|s| (s, 1)).collect()
        }
    };

    let mut fed = vec![0usize; n];
    let mut active = Vec::with_capacity(periods.iter().sum());
    let mut segments = Vec::with_capacity(units.len());
    for (s, bales) in units {
        let before = periods[s] * fed[s] / counts[s];
        fed[s] += bales;
        let after = periods[s] * fed[s] / counts[s];
        let len = after - before;
        if len > 0 {
            segments.push(Segment {
                level: s,
                start: active.len(),
                len,
                bales,
            });
            active.extend(std::iter::repeat_n(s, len));
        }
    }
    Ok(Schedule {
        period_min: scenario.period_min,
        num_levels: n,
        active,
        segments,
        seed: pattern.seed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels() -> MoistureLevels {
        MoistureLevels::new(["low", "medium", "high"]).unwrap()
    }

    #[test]
    fn parses_every_notation() {
        let lv = levels();
        let want = FeedingPattern::Blocked {
            blocks: vec![(0, 6), (1, 10), (2, 4)],
            repetitions: 10,
        };
        for spec in ["6Lx10Mx4H*10", "6L,10M,4H*10", "6L,10M,4H X10", "6L, 10M, 4H x10", " 6L,10M,4H*10 "] {
            assert_eq!(FeedingPattern::parse(spec, &lv).unwrap(), want, "{spec}");
        }
        assert_eq!(
            FeedingPattern::parse("60L,100M,40H", &lv).unwrap(),
            FeedingPattern::Blocked {
                blocks: vec![(0, 60), (1, 100), (2, 40)],
                repetitions: 1
            }
        );
        assert_eq!(
            FeedingPattern::parse("random:seed=7", &lv).unwrap(),
            FeedingPattern::Random { seed: 7 }
        );
        assert_eq!(FeedingPattern::parse("random", &lv).unwrap(), FeedingPattern::Random { seed: 0 });
    }

    #[test]
    fn rejects_malformed_patterns() {
        let lv = levels();
        for spec in ["", "6Q", "6L,10M*2*3", "L6", "0L", "6L*0", "random:seed=x", "10"] {
            assert!(FeedingPattern::parse(spec, &lv).is_err(), "{spec}");
        }
    }

    #[test]
    fn display_round_trips() {
        let lv = levels();
        for spec in ["6L,10M,4H*10", "60L,100M,40H", "random:seed=7"] {
            let p = FeedingPattern::parse(spec, &lv).unwrap();
            assert_eq!(p.display(&lv), spec);
        }
    }

    #[test]
    fn periods_round_up() {
        assert_eq!(periods_for(4.94, 1.0), 297);
        assert_eq!(periods_for(1.0, 5.0), 12);
        assert_eq!(periods_for(1.0 + 1e-13, 5.0), 12);
        assert_eq!(periods_for(0.0, 5.0), 0);
    }
}

use std::collections::BTreeMap;

use serde::Serialize;

use super::weights::{incoherent_moment, odd_moment};
use crate::measure::{DetectionRecord, Outcome};
use crate::scene::IntensityGrid;
use crate::{Error, Result};

/// One estimated moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub m: usize,
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Which parities of the object the moments constrain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityCoverage {
    /// HG photon fractions only; odd moments along x are unknown.
    EvenOnly,
    /// Interleaved measurements supplied odd cross-moments as well.
    Interleaved,
}

/// Estimated HG moments of an incoherent object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    /// `P_mn` estimates.
    pub even: Vec<MomentEstimate>,
    /// `O_mn` estimates (see [`odd_moment`]).
    pub odd: Vec<MomentEstimate>,
    pub coverage: ParityCoverage,
    /// Photons of the HG record.
    pub photons: u64,
    pub two_dimensional: bool,
}

impl MomentSet {
    /// Noise-free moments of a known object up to index order `m + n ≤ max_order`.
    pub fn exact(grid: &IntensityGrid, delta_k: f64, max_order: usize, with_odd: bool) -> Self {
        let two_d = grid.height() > 1;
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for m in 0..=max_order {
            for n in 0..=(if two_d { max_order - m } else { 0 }) {
                even.push(MomentEstimate { m, n, value: incoherent_moment(grid, m, n, delta_k), stderr: 0.0 });
                if with_odd {
                    odd.push(MomentEstimate { m, n, value: odd_moment(grid, m, n, delta_k), stderr: 0.0 });
                }
            }
        }
        let coverage = if with_odd { ParityCoverage::Interleaved } else { ParityCoverage::EvenOnly };
        Self { even, odd, coverage, photons: 0, two_dimensional: two_d }
    }

    pub fn get(&self, m: usize, n: usize) -> Option<&MomentEstimate> {
        self.even.iter().find(|e| e.m == m && e.n == n)
    }

    pub fn get_odd(&self, m: usize, n: usize) -> Option<&MomentEstimate> {
        self.odd.iter().find(|e| e.m == m && e.n == n)
    }

    /// Columns `kind,m,n,value,stderr` with `kind` `even` or `odd`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if self.photons > 0 {
            s.push_str(&format!("# photons: {}\n", self.photons));
        }
        s.push_str("kind,m,n,value,stderr\n");
        for (kind, list) in [("even", &self.even), ("odd", &self.odd)] {
            for e in list {
                s.push_str(&format!("{kind},{},{},{:.12e},{:.12e}\n", e.m, e.n, e.value, e.stderr));
            }
        }
        s
    }

    /// Reads the layout written by [`MomentSet::to_csv`]. Other `#` lines
    /// are skipped; without a `# photons:` line the moments count as exact.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut set = MomentSet {
            even: vec![],
            odd: vec![],
            coverage: ParityCoverage::EvenOnly,
            photons: 0,
            two_dimensional: false,
        };
        for l in text.lines().filter_map(|l| l.strip_prefix("# photons:")) {
            set.photons = l.trim().parse().map_err(|_| Error::parse(format!("bad photon count {l:?}")))?;
        }
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some(h) if h.trim() == "kind,m,n,value,stderr" => {}
            _ => return Err(Error::parse("moment table must start with 'kind,m,n,value,stderr'")),
        }
        for line in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(Error::parse(format!("moment row needs 5 fields: {line:?}")));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(format!("bad index {s:?}")));
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(format!("bad number {s:?}")));
            let e = MomentEstimate { m: int(f[1])?, n: int(f[2])?, value: num(f[3])?, stderr: num(f[4])? };
            if !(e.stderr >= 0.0) {
                return Err(Error::parse("standard errors must be non-negative"));
            }
            set.two_dimensional |= e.n > 0;
            match f[0] {
                "even" => set.even.push(e),
                "odd" => set.odd.push(e),
                other => return Err(Error::parse(format!("unknown moment kind {other:?}"))),
            }
        }
        if !set.odd.is_empty() {
            set.coverage = ParityCoverage::Interleaved;
        }
        Ok(set)
    }
}

/// Photon-fraction estimates `P̂_mn = count_mn/N` with binomial standard
/// errors from an HG sorter record, plus odd cross-moments from the count
/// differences of any interleaved records.
pub fn estimate_moments(record: &DetectionRecord, interleaved: &[DetectionRecord]) -> Result<MomentSet> {
    if record.photons == 0 || record.counts.is_empty() {
        return Err(Error::domain("moment estimation needs a counting record with photons"));
    }
    let n_tot = record.photons as f64;
    let mut even = Vec::new();
    let mut two_d = false;
    for (o, &c) in record.outcomes.iter().zip(&record.counts) {
        let (m, n) = match *o {
            Outcome::Mode(m) => (m, 0),
            Outcome::Mode2(m, n) => {
                two_d = true;
                (m, n)
            }
            Outcome::Bucket => continue,
            other => return Err(Error::domain(format!("outcome {other} is not an HG mode"))),
        };
        let p = c as f64 / n_tot;
        even.push(MomentEstimate { m, n, value: p, stderr: (p * (1.0 - p) / n_tot).max(0.0).sqrt() });
    }
    let mut pairs: BTreeMap<(usize, usize), (u64, u64, u64)> = BTreeMap::new();
    for rec in interleaved {
        if rec.photons == 0 {
            return Err(Error::domain("interleaved record has no photons"));
        }
        let mut seen: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
        for (o, &c) in rec.outcomes.iter().zip(&rec.counts) {
            if let Outcome::Pair { lo, plus, n } = *o {
                let e = seen.entry((lo, n)).or_default();
                if plus {
                    e.0 += c;
                } else {
                    e.1 += c;
                }
            }
        }
        for (k, (p, m)) in seen {
            pairs.entry(k).or_insert((p, m, rec.photons));
        }
    }
    let odd: Vec<MomentEstimate> = pairs
        .into_iter()
        .map(|((m, n), (cp, cm, np))| {
            let npf = np as f64;
            let (fp, fm) = (cp as f64 / npf, cm as f64 / npf);
            let var = ((fp + fm) - (fp - fm).powi(2)).max(0.0) / npf;
            MomentEstimate { m, n, value: 0.5 * (fp - fm), stderr: 0.5 * var.sqrt() }
        })
        .collect();
    let coverage = if odd.is_empty() { ParityCoverage::EvenOnly } else { ParityCoverage::Interleaved };
    Ok(MomentSet { even, odd, coverage, photons: record.photons, two_dimensional: two_d })
}

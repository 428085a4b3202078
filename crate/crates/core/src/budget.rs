/// Resource caps shared by the construction and verification routines.
/// Exceeding any of them is an explicit refusal, never a silent fallback.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Rows an orthogonal array or design may materialize in memory.
    pub max_rows: u128,
    /// Column subsets examined by a strength certification.
    pub max_subsets: u128,
    /// Cells of a per-subset tuple histogram (`q^t`).
    pub max_histogram: u128,
    /// Monomials checked exhaustively before sampling is required.
    pub max_monomials: u128,
    /// Elements produced by a permutation-group closure.
    pub max_group_order: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_rows: 1 << 24,
            max_subsets: 10_000_000,
            max_histogram: 10_000_000,
            max_monomials: 100_000,
            max_group_order: 1_000_000,
        }
    }
}

impl Budget {
    /// Environment variables that override the defaults.
    pub const ENV_VARS: [&'static str; 5] = [
        "OADESIGN_MAX_ROWS",
        "OADESIGN_MAX_SUBSETS",
        "OADESIGN_MAX_HISTOGRAM",
        "OADESIGN_MAX_MONOMIALS",
        "OADESIGN_MAX_GROUP_ORDER",
    ];

    /// Defaults with any `OADESIGN_MAX_*` overrides applied. Unparsable values
    /// are ignored.
    pub fn from_env() -> Self {
        let mut b = Budget::default();
        let read = |name: &str| {
            std::env::var(name)
                .ok()
                .and_then(|v| v.trim().parse::<u128>().ok())
        };
        if let Some(v) = read(Self::ENV_VARS[0]) {
            b.max_rows = v;
        }
        if let Some(v) = read(Self::ENV_VARS[1]) {
            b.max_subsets = v;
        }
        if let Some(v) = read(Self::ENV_VARS[2]) {
            b.max_histogram = v;
        }
        if let Some(v) = read(Self::ENV_VARS[3]) {
            b.max_monomials = v;
        }
        if let Some(v) = read(Self::ENV_VARS[4]) {
            b.max_group_order = v.min(usize::MAX as u128) as usize;
        }
        b
    }
}

/// Binomial coefficient, saturating.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic k-subsets of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            cur: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let k = self.cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.cur[i] < self.n - k + i {
                self.cur[i] += 1;
                for j in i + 1..k {
                    self.cur[j] = self.cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

//! SFO/PO oracle accounting.
//!
//! Two gradient counters are kept side by side. `sfo` counts every component
//! gradient the implementation actually evaluates (a variance-reduced inner
//! step touches `2b` of them). `sfo_paper` charges `b` per inner iteration and
//! `B` per anchor, so that after a complete run of `S` epochs of length `m` it
//! equals `S*B + S*m*b` exactly. Function-value evaluations are free in this
//! oracle model; drivers log them in `fn_evals` for visibility only.

/// Running oracle-call counts for one run (single writer).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleCounters {
    /// Raw count: one unit per component gradient evaluated.
    pub sfo: u64,
    /// Paper-convention count: `b` per inner iteration, `B` per anchor.
    pub sfo_paper: u64,
    /// Proximal-oracle applications.
    pub po: u64,
    /// Function-value evaluations (not an oracle cost; diagnostics only).
    pub fn_evals: u64,
}

impl OracleCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge_sfo(&mut self, raw: u64, paper: u64) {
        self.sfo += raw;
        self.sfo_paper += paper;
    }

    pub fn charge_po(&mut self) {
        self.po += 1;
    }

    pub fn charge_fn_eval(&mut self) {
        self.fn_evals += 1;
    }
}

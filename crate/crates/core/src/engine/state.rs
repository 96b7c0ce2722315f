//! Domain state: simulation parameters, firms, workers and the bank.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{quantize, Money};

/// Stable identifier of a firm; ids are assigned monotonically and never reused.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct FirmId(pub u64);

impl std::fmt::Display for FirmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid parameter `{key}`: {reason}")]
pub struct ParamsError {
    pub key: &'static str,
    pub reason: String,
}

impl ParamsError {
    fn new(key: &'static str, reason: impl Into<String>) -> Self {
        Self {
            key,
            reason: reason.into(),
        }
    }
}

/// All exogenous constants of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Number of workers in the economy.
    pub n_workers: usize,
    /// Number of firms created at initialization.
    pub n_firms_init: usize,
    /// Wage per worker per iteration.
    pub wage: Money,
    /// Price of one unit of the commodity good.
    pub price: Money,
    /// Interest rate per iteration, charged on the whole outstanding debt.
    pub interest_rate: f64,
    /// Bankruptcy threshold: a firm dies when equity < -gamma * wage * workforce.
    pub gamma: f64,
    /// Number of new firms entering per iteration.
    pub nu: usize,
    /// Lower bound of the margin range firms draw from.
    pub mu_min: f64,
    /// Upper bound of the margin range firms draw from.
    pub mu_max: f64,
    /// Fraction of workers left unemployed at initialization.
    pub init_unemployment: f64,
    /// Initial firm debts are drawn uniformly from [0, init_debt_max].
    pub init_debt_max: Money,
    /// Number of iterations a scenario run executes.
    pub iterations: usize,
    /// Seed of the deterministic random stream.
    pub seed: u64,
    /// Smallest initial workforce plan of an entrant.
    pub entry_size_min: u64,
    /// Largest initial workforce plan of an entrant.
    pub entry_size_max: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_workers: 10_000,
            n_firms_init: 450,
            wage: 30.0,
            price: 1.0,
            interest_rate: 0.011,
            gamma: 2.0,
            nu: 8,
            mu_min: 0.0,
            mu_max: 0.1,
            init_unemployment: 0.1,
            init_debt_max: 30.0,
            iterations: 2000,
            seed: 42,
            entry_size_min: 1,
            entry_size_max: 3,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.n_workers == 0 {
            return Err(ParamsError::new("n_workers", "must be at least 1"));
        }
        if self.n_firms_init == 0 {
            return Err(ParamsError::new("n_firms_init", "must be at least 1"));
        }
        for (key, value) in [
            ("wage", self.wage),
            ("price", self.price),
            ("interest_rate", self.interest_rate),
            ("gamma", self.gamma),
            ("mu_min", self.mu_min),
            ("mu_max", self.mu_max),
            ("init_unemployment", self.init_unemployment),
            ("init_debt_max", self.init_debt_max),
        ] {
            if !value.is_finite() {
                return Err(ParamsError::new(key, format!("must be finite, got {value}")));
            }
        }
        if self.wage <= 0.0 {
            return Err(ParamsError::new("wage", "must be positive"));
        }
        if self.price <= 0.0 {
            return Err(ParamsError::new("price", "must be positive"));
        }
        if self.interest_rate < 0.0 {
            return Err(ParamsError::new("interest_rate", "must be non-negative"));
        }
        if self.gamma < 0.0 {
            return Err(ParamsError::new("gamma", "must be non-negative"));
        }
        if self.mu_min < 0.0 {
            return Err(ParamsError::new("mu_min", "must be non-negative"));
        }
        if self.mu_min >= self.mu_max {
            return Err(ParamsError::new(
                "mu_min",
                format!(
                    "margin range must satisfy mu_min < mu_max, got [{}, {}]",
                    self.mu_min, self.mu_max
                ),
            ));
        }
        if self.mu_max >= 1.0 {
            return Err(ParamsError::new("mu_max", "must be below 1"));
        }
        if !(0.0..=1.0).contains(&self.init_unemployment) {
            return Err(ParamsError::new("init_unemployment", "must lie in [0, 1]"));
        }
        if self.init_debt_max < 0.0 {
            return Err(ParamsError::new("init_debt_max", "must be non-negative"));
        }
        if self.entry_size_min == 0 {
            return Err(ParamsError::new("entry_size_min", "must be at least 1"));
        }
        if self.entry_size_min > self.entry_size_max {
            return Err(ParamsError::new(
                "entry_size_min",
                "must not exceed entry_size_max",
            ));
        }
        Ok(())
    }

    /// Returns a copy with all money-valued parameters snapped to the dyadic
    /// money grid, so that every derived flow adds exactly (see `ledger`).
    pub fn quantized(&self) -> Self {
        let mut p = self.clone();
        p.wage = quantize(p.wage);
        p.price = quantize(p.price);
        p.init_debt_max = quantize(p.init_debt_max);
        p
    }
}

/// One enterprise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmState {
    pub id: FirmId,
    /// Intrinsic expected gross margin; recentered downward over the firm's life.
    pub mu: f64,
    /// Workers hired this iteration.
    pub n_workers: u64,
    /// Workforce plan entering the job market.
    pub planned_workers: u64,
    /// Goods produced this iteration.
    pub q_produced: u64,
    /// Goods sold this iteration.
    pub q_sold: u64,
    pub cash: Money,
    /// Outstanding loans, including overdrafts.
    pub debt: Money,
    /// Gross realized profit of this iteration.
    pub profit_gross: Money,
    /// Net realized profit of this iteration (gross minus interest).
    pub profit_net: Money,
    /// Index of the first iteration in which the firm participates.
    pub birth_t: u64,
    /// Previous iteration's sales, feeding the production plan.
    pub last_sales: u64,
    /// Previous iteration's net profit, feeding the production plan.
    pub last_profit_net: Money,
    /// Entrants carry a pre-drawn workforce plan into their first job market.
    pub preplanned: bool,
}

impl FirmState {
    pub fn equity(&self) -> Money {
        self.cash - self.debt
    }

    /// Gross realized margin of this iteration; `None` when nothing was sold.
    pub fn mu_gross_realized(&self, price: Money) -> Option<f64> {
        if self.q_sold == 0 {
            None
        } else {
            Some(self.profit_gross / (self.q_sold as f64 * price))
        }
    }

    /// Net realized margin of this iteration; `None` when nothing was sold.
    pub fn mu_net_realized(&self, price: Money) -> Option<f64> {
        if self.q_sold == 0 {
            None
        } else {
            Some(self.profit_net / (self.q_sold as f64 * price))
        }
    }
}

/// One worker: an employment flag and any savings left from unfilled demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerState {
    pub employed: bool,
    pub savings: Money,
}

/// The bank: mirrors the loan book and accumulates interest and write-offs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankState {
    /// Sum of all firm debts; updated with every loan, repayment and write-off.
    pub loans_outstanding: Money,
    /// Cumulative interest received.
    pub interest_income_cum: Money,
    /// Cumulative loan write-offs. Starts at minus the initial loan book, so
    /// the initial debts count as a pre-existing claim and the system-wide sum
    /// of net positions starts at exactly zero.
    pub write_offs_cum: Money,
}

impl BankState {
    pub fn equity(&self) -> Money {
        self.interest_income_cum - self.write_offs_cum
    }
}

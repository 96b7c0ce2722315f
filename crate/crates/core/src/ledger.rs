//! Double-entry recording of every money flow and the conservation audit.
//!
//! Money is real-valued, but all flow amounts are snapped to a dyadic grid of
//! [`MONEY_GRID`]. Sums of grid values are exact in `f64` up to magnitudes far
//! beyond anything the model produces, so the system-wide sum of net positions
//! (firm equity + worker savings + bank equity) stays at exactly zero instead
//! of accumulating rounding drift. Integer-quantity flows (wages, purchases)
//! are exact already; only interest-bearing amounts need the snap.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Economy, FirmId};

pub type Money = f64;

/// Resolution of the money grid: 2^-20 currency units.
pub const MONEY_GRID: f64 = 1.0 / ((1u64 << 20) as f64);

/// Snaps an amount to the money grid (nearest multiple of [`MONEY_GRID`]).
#[inline]
pub fn quantize(x: Money) -> Money {
    (x * (1u64 << 20) as f64).round() * MONEY_GRID
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferKind {
    Wage,
    LoanIssue,
    Purchase,
    Interest,
    Repayment,
    WriteOff,
    Overdraft,
}

/// Accounts money can move between. `Market` is the goods-market clearing
/// account; it must return to zero before the end-of-iteration audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccountId {
    Firm(FirmId),
    Worker(usize),
    Bank,
    Market,
}

/// One money movement. Loan-like kinds pair the cash leg with a matching
/// debt-stock movement, so every transfer leaves the conservation sum intact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub t: u64,
    pub kind: TransferKind,
    pub from: AccountId,
    pub to: AccountId,
    pub amount: Money,
}

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("unknown account {0:?}")]
    UnknownAccount(AccountId),
    #[error("transfer amount must be non-negative and finite, got {0}")]
    BadAmount(Money),
    #[error("transfer kind {kind:?} does not move money from {from:?} to {to:?}")]
    BadRoute {
        kind: TransferKind,
        from: AccountId,
        to: AccountId,
    },
}

/// Per-run journal and flow accumulators. Owned by one `Economy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Book {
    /// Retain individual transfers? Off by default; balances are always kept.
    pub journal_enabled: bool,
    pub journal: Vec<Transfer>,
    /// Sum of |amount| over all transfers ever posted.
    pub gross_flow_cum: Money,
    /// Sum of |amount| over this iteration's transfers.
    pub gross_flow_iter: Money,
    /// This iteration's interest transfers.
    pub interest_iter: Money,
    /// This iteration's write-off transfers.
    pub write_off_iter: Money,
    /// Goods-market clearing balance; zero at every iteration boundary.
    pub clearing: Money,
    /// Audit passes when |residual| <= max(floor, rel_tol * gross_flow_cum).
    pub tolerance_abs_floor: Money,
    pub tolerance_rel: f64,
}

impl Default for Book {
    fn default() -> Self {
        Self {
            journal_enabled: false,
            journal: Vec::new(),
            gross_flow_cum: 0.0,
            gross_flow_iter: 0.0,
            interest_iter: 0.0,
            write_off_iter: 0.0,
            clearing: 0.0,
            tolerance_abs_floor: 1e-6,
            tolerance_rel: 1e-12,
        }
    }
}

impl Book {
    pub fn begin_iteration(&mut self) {
        self.gross_flow_iter = 0.0;
        self.interest_iter = 0.0;
        self.write_off_iter = 0.0;
        if self.journal_enabled {
            self.journal.clear();
        }
    }
}

/// Outcome of the end-of-iteration stock-flow audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub t: u64,
    /// Sum of firm equities, worker savings and bank equity.
    pub residual: Money,
    /// Gross flow of the audited iteration.
    pub gross_flow: Money,
    pub ok: bool,
}

/// Aggregates exported into the time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub aggregate_debt: Money,
    pub bank_equity: Money,
    pub interest_flow: Money,
    pub write_off_flow: Money,
}

/// Applies one transfer to the economy's balances and records it.
///
/// Every kind debits one account and credits another for the same amount;
/// loan-like kinds move the matching debt stock alongside the cash leg.
pub fn post(economy: &mut Economy, transfer: Transfer) -> Result<(), LedgerError> {
    let amount = transfer.amount;
    if !(amount >= 0.0 && amount.is_finite()) {
        return Err(LedgerError::BadAmount(amount));
    }
    match (transfer.kind, transfer.from, transfer.to) {
        (TransferKind::Wage, AccountId::Firm(f), AccountId::Worker(w)) => {
            economy.firm_mut(f)?.cash -= amount;
            economy.worker_mut(w)?.savings += amount;
        }
        (TransferKind::LoanIssue, AccountId::Bank, AccountId::Firm(f)) => {
            let firm = economy.firm_mut(f)?;
            firm.cash += amount;
            firm.debt += amount;
            economy.bank.loans_outstanding += amount;
        }
        // An overdraft is a loan at face value, created when settlement or
        // interest would push cash below zero.
        (TransferKind::Overdraft, AccountId::Bank, AccountId::Firm(f)) => {
            let firm = economy.firm_mut(f)?;
            firm.cash += amount;
            firm.debt += amount;
            economy.bank.loans_outstanding += amount;
        }
        (TransferKind::Purchase, from, AccountId::Market) => {
            match from {
                AccountId::Worker(w) => economy.worker_mut(w)?.savings -= amount,
                AccountId::Firm(f) => economy.firm_mut(f)?.cash -= amount,
                other => {
                    return Err(LedgerError::BadRoute {
                        kind: transfer.kind,
                        from: other,
                        to: transfer.to,
                    })
                }
            }
            economy.book.clearing += amount;
        }
        (TransferKind::Purchase, AccountId::Market, AccountId::Firm(f)) => {
            economy.firm_mut(f)?.cash += amount;
            economy.book.clearing -= amount;
        }
        (TransferKind::Interest, AccountId::Firm(f), AccountId::Bank) => {
            economy.firm_mut(f)?.cash -= amount;
            economy.bank.interest_income_cum += amount;
        }
        (TransferKind::Repayment, AccountId::Firm(f), AccountId::Bank) => {
            let firm = economy.firm_mut(f)?;
            firm.cash -= amount;
            firm.debt -= amount;
            economy.bank.loans_outstanding -= amount;
        }
        (TransferKind::WriteOff, AccountId::Firm(f), AccountId::Bank) => {
            economy.firm_mut(f)?.debt -= amount;
            economy.bank.loans_outstanding -= amount;
            economy.bank.write_offs_cum += amount;
        }
        (kind, from, to) => return Err(LedgerError::BadRoute { kind, from, to }),
    }
    let book = &mut economy.book;
    book.gross_flow_cum += amount;
    book.gross_flow_iter += amount;
    match transfer.kind {
        TransferKind::Interest => book.interest_iter += amount,
        TransferKind::WriteOff => book.write_off_iter += amount,
        _ => {}
    }
    if book.journal_enabled {
        book.journal.push(transfer);
    }
    Ok(())
}

/// Computes the conservation residual and checks it against the tolerance.
///
/// The residual is the sum of firm net positions, worker savings, bank equity
/// and the (normally zero) market clearing balance; with the money grid it is
/// exactly zero for any sequence of posted transfers.
pub fn audit(economy: &Economy) -> AuditReport {
    let firms: Money = economy.firms.iter().map(|f| f.cash - f.debt).sum();
    let workers: Money = economy.workers.iter().map(|w| w.savings).sum();
    let residual = firms + workers + economy.bank.equity() + economy.book.clearing;
    let book = &economy.book;
    let tolerance = book
        .tolerance_abs_floor
        .max(book.tolerance_rel * book.gross_flow_cum);
    AuditReport {
        t: economy.t,
        residual,
        gross_flow: book.gross_flow_iter,
        ok: residual.abs() <= tolerance,
    }
}

/// Debt, bank equity and this iteration's interest/write-off flows.
pub fn aggregates(economy: &Economy) -> Aggregates {
    let aggregate_debt: Money = economy.firms.iter().map(|f| f.debt).sum();
    Aggregates {
        aggregate_debt,
        bank_equity: economy.bank.equity(),
        interest_flow: economy.book.interest_iter,
        write_off_flow: economy.book.write_off_iter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimParams;

    fn toy_economy() -> Economy {
        let params = SimParams {
            n_workers: 4,
            n_firms_init: 2,
            init_unemployment: 0.0,
            init_debt_max: 0.0,
            nu: 0,
            ..SimParams::default()
        };
        Economy::new(params).unwrap()
    }

    fn residual(economy: &Economy) -> Money {
        audit(economy).residual
    }

    #[test]
    fn every_transfer_kind_preserves_the_residual() {
        let mut economy = toy_economy();
        let f = economy.firms[0].id;
        let cases = [
            (TransferKind::LoanIssue, AccountId::Bank, AccountId::Firm(f)),
            (TransferKind::Wage, AccountId::Firm(f), AccountId::Worker(0)),
            (TransferKind::Purchase, AccountId::Worker(0), AccountId::Market),
            (TransferKind::Purchase, AccountId::Market, AccountId::Firm(f)),
            (TransferKind::Interest, AccountId::Firm(f), AccountId::Bank),
            (TransferKind::Repayment, AccountId::Firm(f), AccountId::Bank),
            (TransferKind::Overdraft, AccountId::Bank, AccountId::Firm(f)),
            (TransferKind::WriteOff, AccountId::Firm(f), AccountId::Bank),
        ];
        for (kind, from, to) in cases {
            let before = residual(&economy);
            post(
                &mut economy,
                Transfer {
                    t: 0,
                    kind,
                    from,
                    to,
                    amount: 12.25,
                },
            )
            .unwrap();
            let after = residual(&economy);
            assert_eq!(before, after, "residual moved under {kind:?}");
        }
    }

    #[test]
    fn wage_transfer_moves_cash_to_savings() {
        let mut economy = toy_economy();
        let f = economy.firms[0].id;
        economy.firms[0].cash = 100.0;
        post(
            &mut economy,
            Transfer {
                t: 0,
                kind: TransferKind::Wage,
                from: AccountId::Firm(f),
                to: AccountId::Worker(1),
                amount: 30.0,
            },
        )
        .unwrap();
        assert_eq!(economy.firms[0].cash, 70.0);
        assert_eq!(economy.workers[1].savings, 30.0);
    }

    #[test]
    fn loan_issue_creates_matching_cash_and_debt() {
        let mut economy = toy_economy();
        let f = economy.firms[0].id;
        let before = residual(&economy);
        post(
            &mut economy,
            Transfer {
                t: 0,
                kind: TransferKind::LoanIssue,
                from: AccountId::Bank,
                to: AccountId::Firm(f),
                amount: 40.44,
            },
        )
        .unwrap();
        assert_eq!(economy.firms[0].cash, 40.44);
        assert_eq!(economy.firms[0].debt, 40.44);
        assert_eq!(economy.bank.loans_outstanding, 40.44);
        assert_eq!(residual(&economy), before);
    }

    #[test]
    fn write_off_reduces_bank_equity() {
        let mut economy = toy_economy();
        let f = economy.firms[0].id;
        economy.firms[0].debt = 200.0;
        economy.bank.loans_outstanding = 200.0;
        let equity_before = economy.bank.equity();
        post(
            &mut economy,
            Transfer {
                t: 0,
                kind: TransferKind::WriteOff,
                from: AccountId::Firm(f),
                to: AccountId::Bank,
                amount: 200.0,
            },
        )
        .unwrap();
        assert_eq!(economy.firms[0].debt, 0.0);
        assert_eq!(economy.bank.loans_outstanding, 0.0);
        assert_eq!(economy.bank.write_offs_cum, 200.0);
        assert_eq!(economy.bank.equity(), equity_before - 200.0);
    }

    #[test]
    fn rejects_unknown_accounts_and_bad_amounts() {
        let mut economy = toy_economy();
        let err = post(
            &mut economy,
            Transfer {
                t: 0,
                kind: TransferKind::Wage,
                from: AccountId::Firm(FirmId(999)),
                to: AccountId::Worker(0),
                amount: 1.0,
            },
        )
        .unwrap_err();
        assert_eq!(err, LedgerError::UnknownAccount(AccountId::Firm(FirmId(999))));

        let f0 = economy.firms[0].id;
        let err = post(
            &mut economy,
            Transfer {
                t: 0,
                kind: TransferKind::Wage,
                from: AccountId::Firm(f0),
                to: AccountId::Worker(42),
                amount: 1.0,
            },
        )
        .unwrap_err();
        assert_eq!(err, LedgerError::UnknownAccount(AccountId::Worker(42)));

        let f = economy.firms[0].id;
        let err = post(
            &mut economy,
            Transfer {
                t: 0,
                kind: TransferKind::Wage,
                from: AccountId::Firm(f),
                to: AccountId::Worker(0),
                amount: -3.0,
            },
        )
        .unwrap_err();
        assert_eq!(err, LedgerError::BadAmount(-3.0));

        let err = post(
            &mut economy,
            Transfer {
                t: 0,
                kind: TransferKind::Wage,
                from: AccountId::Bank,
                to: AccountId::Worker(0),
                amount: 3.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, LedgerError::BadRoute { .. }));
    }

    #[test]
    fn fresh_zero_debt_economy_has_zero_residual() {
        let economy = toy_economy();
        let report = audit(&economy);
        assert_eq!(report.residual, 0.0);
        assert!(report.ok);
    }

    #[test]
    fn corrupting_one_balance_fails_the_audit() {
        let mut economy = toy_economy();
        economy.workers[0].savings += 1.0;
        let report = audit(&economy);
        assert!(!report.ok);
        assert_eq!(report.residual, 1.0);
    }

    #[test]
    fn aggregates_mirror_debt_and_flows() {
        let mut economy = toy_economy();
        assert_eq!(aggregates(&economy).aggregate_debt, 0.0);

        let f = economy.firms[0].id;
        post(
            &mut economy,
            Transfer {
                t: 0,
                kind: TransferKind::LoanIssue,
                from: AccountId::Bank,
                to: AccountId::Firm(f),
                amount: 80.66,
            },
        )
        .unwrap();
        let agg = aggregates(&economy);
        assert_eq!(agg.aggregate_debt, 80.66);
        assert_eq!(agg.aggregate_debt, economy.bank.loans_outstanding);
        assert_eq!(agg.interest_flow, 0.0);
    }

    #[test]
    fn journal_retains_transfers_when_enabled() {
        let mut economy = toy_economy();
        economy.book.journal_enabled = true;
        let f = economy.firms[0].id;
        let transfer = Transfer {
            t: 0,
            kind: TransferKind::LoanIssue,
            from: AccountId::Bank,
            to: AccountId::Firm(f),
            amount: 5.0,
        };
        post(&mut economy, transfer).unwrap();
        assert_eq!(economy.book.journal, vec![transfer]);
        economy.book.begin_iteration();
        assert!(economy.book.journal.is_empty());
    }

    #[test]
    fn quantize_snaps_to_the_grid() {
        let q = quantize(40.0 * 1.011);
        assert!((q - 40.44).abs() <= MONEY_GRID / 2.0);
        assert_eq!(quantize(30.0), 30.0);
        assert_eq!(quantize(0.0), 0.0);
        // grid values are exactly representable and survive a round trip
        assert_eq!(quantize(q), q);
    }
}

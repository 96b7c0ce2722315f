//! The economy state and the fixed-order iteration protocol.
//!
//! One iteration runs: production planning, the job market, the credit step,
//! wage payment, production, consumption decisions, the goods market,
//! balance-sheet settlement, bankruptcies, margin recentering, firm entry and
//! the conservation audit. All randomness comes from a single seeded stream,
//! and all sequential per-firm draws run in ascending firm id, so a run is
//! fully reproducible from its parameters.

mod state;

pub use state::{BankState, FirmId, FirmState, ParamsError, SimParams, WorkerState};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use thiserror::Error;

use crate::ledger::{self, quantize, AccountId, AuditReport, Book, Money, Transfer, TransferKind};
use crate::markets::{
    allocate_without_replacement, draw_uniform, draw_uniform_int, stochastic_round, SimRng,
};
use crate::stats::{self, TimeSeriesRow};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("conservation audit failed at iteration {}: residual {:e}", .0.t, .0.residual)]
    AuditFailure(AuditReport),
}

/// Bankruptcy bookkeeping of the most recent iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationEvents {
    pub n_bankruptcies: usize,
    /// Jobs held by firms removed this iteration.
    pub job_losses: u64,
    /// Number of active iterations each removed firm lived through.
    pub bankruptcy_ages: Vec<u64>,
}

/// The full simulation state.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    /// Number of completed iterations.
    pub t: u64,
    pub params: SimParams,
    /// Alive firms, ordered by ascending id.
    pub firms: Vec<FirmState>,
    pub workers: Vec<WorkerState>,
    pub bank: BankState,
    /// Effective margin of the previous iteration; `None` before the first.
    pub mu_eff_prev: Option<f64>,
    pub book: Book,
    pub events: IterationEvents,
    next_firm_id: u64,
    rng: SimRng,
    // scratch buffers reused across iterations
    worker_order: Vec<u32>,
    worker_demand: Vec<u64>,
    firm_demand: Vec<u64>,
}

/// Goods produced by `n` workers at margin `mu`: `(wage/price) * n / (1 - mu)`.
pub fn full_production(n_workers: u64, mu: f64, wage: Money, price: Money) -> f64 {
    assert!(mu < 1.0, "production requires mu < 1, got {mu}");
    (wage / price) * n_workers as f64 / (1.0 - mu)
}

/// Planned output: previous sales adjusted by the net profit per sold unit,
/// clamped at zero. Returns a real-valued target; quantization happens when
/// the workforce plan is drawn.
pub fn plan_production(firm: &FirmState, price: Money) -> f64 {
    (firm.last_sales as f64 + firm.last_profit_net / price).max(0.0)
}

/// Workforce needed for a planned output, stochastically rounded.
pub fn plan_workforce<R: rand::Rng + ?Sized>(
    q_hat: f64,
    mu: f64,
    price: Money,
    wage: Money,
    rng: &mut R,
) -> u64 {
    assert!(mu < 1.0, "workforce plan requires mu < 1, got {mu}");
    stochastic_round(q_hat * (1.0 - mu) * price / wage, rng)
}

impl Economy {
    /// Builds the initial economy: equal-sized firms with margins drawn
    /// uniformly, zero cash, small random debts, and no worker savings.
    ///
    /// The initial loan book is carried by the bank as a pre-existing claim
    /// (negative cumulative write-off), so the system-wide sum of net
    /// positions starts at exactly zero.
    pub fn new(params: SimParams) -> Result<Self, SimError> {
        params.validate()?;
        let params = params.quantized();
        let mut rng = SimRng::seed_from_u64(params.seed);

        let workers_employed =
            (params.n_workers as f64 * (1.0 - params.init_unemployment)).floor() as u64;
        let size_init = workers_employed / params.n_firms_init as u64;

        let mut firms = Vec::with_capacity(params.n_firms_init);
        let mut total_debt = 0.0;
        for i in 0..params.n_firms_init {
            let mu = draw_uniform(params.mu_min, params.mu_max, &mut rng);
            let debt = quantize(draw_uniform(0.0, params.init_debt_max, &mut rng));
            // Seed the planning inputs with the firm's own full production, so
            // the first plan reproduces the initial workforce.
            let last_sales = if size_init == 0 {
                0
            } else {
                stochastic_round(
                    full_production(size_init, mu, params.wage, params.price),
                    &mut rng,
                )
            };
            total_debt += debt;
            firms.push(FirmState {
                id: FirmId(i as u64),
                mu,
                n_workers: size_init,
                planned_workers: 0,
                q_produced: 0,
                q_sold: 0,
                cash: 0.0,
                debt,
                profit_gross: 0.0,
                profit_net: 0.0,
                birth_t: 0,
                last_sales,
                last_profit_net: 0.0,
                preplanned: false,
            });
        }

        let employed_total = size_init * params.n_firms_init as u64;
        let workers = (0..params.n_workers)
            .map(|j| WorkerState {
                employed: (j as u64) < employed_total,
                savings: 0.0,
            })
            .collect();

        let bank = BankState {
            loans_outstanding: total_debt,
            interest_income_cum: 0.0,
            write_offs_cum: -total_debt,
        };

        let worker_order = (0..params.n_workers as u32).collect();
        let next_firm_id = params.n_firms_init as u64;
        Ok(Self {
            t: 0,
            params,
            firms,
            workers,
            bank,
            mu_eff_prev: None,
            book: Book::default(),
            events: IterationEvents::default(),
            next_firm_id,
            rng,
            worker_order,
            worker_demand: Vec::new(),
            firm_demand: Vec::new(),
        })
    }

    /// Runs one full iteration and returns its aggregate row.
    ///
    /// A failed conservation audit is fatal and returned as an error; the
    /// economy state remains inspectable.
    pub fn advance(&mut self) -> Result<TimeSeriesRow, SimError> {
        let t = self.t;
        self.book.begin_iteration();
        self.events = IterationEvents::default();

        self.plan_all();
        let employed = self.job_market();
        self.credit_all();
        self.pay_wages();
        let total_output = self.produce_all();
        let total_demand = self.compute_demands();
        self.goods_market(total_output, total_demand);
        self.settle_all();
        self.apply_bankruptcies();

        let mu_eff = stats::mu_eff(self);
        self.recenter_margins(mu_eff);
        self.spawn_entrants();

        let report = ledger::audit(self);
        let agg = ledger::aggregates(self);
        let row = TimeSeriesRow {
            t,
            unemployment_rate: 1.0 - employed as f64 / self.params.n_workers as f64,
            n_active_firms: self.firms.len(),
            n_bankruptcies: self.events.n_bankruptcies,
            job_losses_bankruptcy: self.events.job_losses,
            aggregate_debt: agg.aggregate_debt,
            mu_eff,
            total_output,
            total_demand,
            total_sold: total_output.min(total_demand),
            bank_equity: agg.bank_equity,
            conservation_residual: report.residual,
        };
        self.t = t + 1;
        if !report.ok {
            return Err(SimError::AuditFailure(report));
        }
        Ok(row)
    }

    pub(crate) fn firm_mut(&mut self, id: FirmId) -> Result<&mut FirmState, ledger::LedgerError> {
        match self.firms.binary_search_by_key(&id, |f| f.id) {
            Ok(idx) => Ok(&mut self.firms[idx]),
            Err(_) => Err(ledger::LedgerError::UnknownAccount(AccountId::Firm(id))),
        }
    }

    pub(crate) fn worker_mut(
        &mut self,
        idx: usize,
    ) -> Result<&mut WorkerState, ledger::LedgerError> {
        self.workers
            .get_mut(idx)
            .ok_or(ledger::LedgerError::UnknownAccount(AccountId::Worker(idx)))
    }

    fn transfer(&mut self, kind: TransferKind, from: AccountId, to: AccountId, amount: Money) {
        let t = self.t;
        ledger::post(self, Transfer { t, kind, from, to, amount })
            .expect("internal transfer must reference live accounts");
    }

    /// Step 1: every firm sets its workforce plan. Fresh entrants carry the
    /// plan drawn at entry and skip the profit-based rule once.
    fn plan_all(&mut self) {
        let price = self.params.price;
        let wage = self.params.wage;
        for i in 0..self.firms.len() {
            if self.firms[i].preplanned {
                self.firms[i].preplanned = false;
                continue;
            }
            let q_hat = plan_production(&self.firms[i], price);
            let mu = self.firms[i].mu;
            self.firms[i].planned_workers = plan_workforce(q_hat, mu, price, wage, &mut self.rng);
        }
    }

    /// Step 2: matches job openings and workers. When openings exceed the
    /// workforce, each opening has the same chance of being filled; hires are
    /// drawn without replacement so total employment is exact. Jobs are then
    /// assigned to individual workers in random order.
    ///
    /// Returns the number of employed workers.
    fn job_market(&mut self) -> u64 {
        let n_w = self.params.n_workers as u64;
        let total_planned: u64 = self.firms.iter().map(|f| f.planned_workers).sum();
        if total_planned <= n_w {
            for f in &mut self.firms {
                f.n_workers = f.planned_workers;
            }
        } else {
            let weights: Vec<u64> = self.firms.iter().map(|f| f.planned_workers).collect();
            let hires = allocate_without_replacement(&weights, n_w, &mut self.rng)
                .expect("worker count does not exceed total openings");
            for (f, h) in self.firms.iter_mut().zip(hires) {
                f.n_workers = h;
            }
        }
        let employed: u64 = self.firms.iter().map(|f| f.n_workers).sum();

        self.worker_order.partial_shuffle(&mut self.rng, employed as usize);
        for w in &mut self.workers {
            w.employed = false;
        }
        for &idx in &self.worker_order[..employed as usize] {
            self.workers[idx as usize].employed = true;
        }
        employed
    }

    /// Step 3: firms short of their wage bill borrow the shortfall with the
    /// interest markup included. The bank never rations credit.
    fn credit_all(&mut self) {
        let wage = self.params.wage;
        let rate = self.params.interest_rate;
        for i in 0..self.firms.len() {
            let f = &self.firms[i];
            let shortfall = (f.n_workers as f64 * wage - f.cash).max(0.0);
            if shortfall > 0.0 {
                let id = f.id;
                let loan = quantize(shortfall * (1.0 + rate));
                self.transfer(TransferKind::LoanIssue, AccountId::Bank, AccountId::Firm(id), loan);
            }
        }
    }

    /// Step 4: wages flow from firms to the workers holding their jobs.
    fn pay_wages(&mut self) {
        let wage = self.params.wage;
        let mut cursor = 0usize;
        for i in 0..self.firms.len() {
            let id = self.firms[i].id;
            let n = self.firms[i].n_workers;
            for _ in 0..n {
                let widx = self.worker_order[cursor] as usize;
                cursor += 1;
                self.transfer(TransferKind::Wage, AccountId::Firm(id), AccountId::Worker(widx), wage);
            }
            debug_assert!(
                self.firms[i].cash >= 0.0,
                "credit step must cover the wage bill"
            );
        }
    }

    /// Step 5 (production): output is fixed by workforce and margin; goods are
    /// perishable, so no inventory carries over.
    fn produce_all(&mut self) -> u64 {
        let wage = self.params.wage;
        let price = self.params.price;
        let mut total = 0u64;
        for i in 0..self.firms.len() {
            let n = self.firms[i].n_workers;
            let mu = self.firms[i].mu;
            let q = if n == 0 {
                0
            } else {
                stochastic_round(full_production(n, mu, wage, price), &mut self.rng)
            };
            self.firms[i].q_produced = q;
            self.firms[i].q_sold = 0;
            total += q;
        }
        total
    }

    /// Step 6 (consumption decisions): workers intend to spend their savings,
    /// firms their expected net profit under full sale. Returns aggregate
    /// demand in goods units.
    fn compute_demands(&mut self) -> u64 {
        let price = self.params.price;
        let rate = self.params.interest_rate;
        let mut total = 0u64;

        self.worker_demand.clear();
        for w in &self.workers {
            let d = if w.savings > 0.0 {
                let mut d = stochastic_round(w.savings / price, &mut self.rng);
                // The rounded intention may exceed what the savings can pay
                // for when savings are not a multiple of the price; demand is
                // capped at affordability so savings never go negative.
                if d as f64 * price > w.savings {
                    d -= 1;
                }
                d
            } else {
                0
            };
            self.worker_demand.push(d);
            total += d;
        }

        self.firm_demand.clear();
        for f in &self.firms {
            let expected_net = f.mu * price * f.q_produced as f64 - rate * f.debt;
            let d = if expected_net > 0.0 {
                stochastic_round(expected_net / price, &mut self.rng)
            } else {
                0
            };
            self.firm_demand.push(d);
            total += d;
        }
        total
    }

    /// Step 6 (market clearing): the short side of the market is served in
    /// full; the long side is rationed one unit at a time, every unit with the
    /// same chance. Buyers pay for what they receive, sellers collect for what
    /// they sell, and any firm cash pushed below zero becomes an overdraft.
    fn goods_market(&mut self, total_output: u64, total_demand: u64) {
        let price = self.params.price;

        let (filled_workers, filled_firms) = if total_output >= total_demand {
            // all demand served; goods ration only on the seller side
            if total_output > total_demand {
                let weights: Vec<u64> = self.firms.iter().map(|f| f.q_produced).collect();
                let sold = allocate_without_replacement(&weights, total_demand, &mut self.rng)
                    .expect("demand does not exceed output");
                for (f, s) in self.firms.iter_mut().zip(sold) {
                    f.q_sold = s;
                }
            } else {
                for f in &mut self.firms {
                    f.q_sold = f.q_produced;
                }
            }
            (self.worker_demand.clone(), self.firm_demand.clone())
        } else {
            // all output sold; unit demands ration on the buyer side
            for f in &mut self.firms {
                f.q_sold = f.q_produced;
            }
            let mut weights =
                Vec::with_capacity(self.worker_demand.len() + self.firm_demand.len());
            weights.extend_from_slice(&self.worker_demand);
            weights.extend_from_slice(&self.firm_demand);
            let filled = allocate_without_replacement(&weights, total_output, &mut self.rng)
                .expect("output does not exceed demand");
            let (w, f) = filled.split_at(self.worker_demand.len());
            (w.to_vec(), f.to_vec())
        };

        for (j, &got) in filled_workers.iter().enumerate() {
            if got > 0 {
                self.transfer(
                    TransferKind::Purchase,
                    AccountId::Worker(j),
                    AccountId::Market,
                    got as f64 * price,
                );
            }
        }
        for i in 0..self.firms.len() {
            let got = filled_firms[i];
            if got > 0 {
                let id = self.firms[i].id;
                self.transfer(
                    TransferKind::Purchase,
                    AccountId::Firm(id),
                    AccountId::Market,
                    got as f64 * price,
                );
            }
        }
        for i in 0..self.firms.len() {
            let sold = self.firms[i].q_sold;
            if sold > 0 {
                let id = self.firms[i].id;
                self.transfer(
                    TransferKind::Purchase,
                    AccountId::Market,
                    AccountId::Firm(id),
                    sold as f64 * price,
                );
            }
        }
        debug_assert_eq!(self.book.clearing, 0.0, "goods market must clear exactly");

        for i in 0..self.firms.len() {
            if self.firms[i].cash < 0.0 {
                let id = self.firms[i].id;
                let deficit = -self.firms[i].cash;
                self.transfer(TransferKind::Overdraft, AccountId::Bank, AccountId::Firm(id), deficit);
            }
        }
    }

    /// Step 7: realized profits, interest on the whole outstanding debt, and
    /// repayment of whatever the remaining cash covers.
    fn settle_all(&mut self) {
        let price = self.params.price;
        let wage = self.params.wage;
        let rate = self.params.interest_rate;
        for i in 0..self.firms.len() {
            let f = &self.firms[i];
            let id = f.id;
            let profit_gross = f.q_sold as f64 * price - f.n_workers as f64 * wage;
            let interest = quantize(rate * f.debt);
            let profit_net = profit_gross - interest;

            if interest > 0.0 {
                self.transfer(TransferKind::Interest, AccountId::Firm(id), AccountId::Bank, interest);
                let cash = self.firms[i].cash;
                if cash < 0.0 {
                    self.transfer(TransferKind::Overdraft, AccountId::Bank, AccountId::Firm(id), -cash);
                }
            }

            let repay = self.firms[i].cash.min(self.firms[i].debt);
            if repay > 0.0 {
                self.transfer(TransferKind::Repayment, AccountId::Firm(id), AccountId::Bank, repay);
            }

            let f = &mut self.firms[i];
            f.profit_gross = profit_gross;
            f.profit_net = profit_net;
            f.last_sales = f.q_sold;
            f.last_profit_net = profit_net;
        }
    }

    /// Step 8 (exit): firms whose equity fell below `-gamma * wage * workforce`
    /// surrender their cash and have the residual debt written off.
    fn apply_bankruptcies(&mut self) {
        let gamma = self.params.gamma;
        let wage = self.params.wage;
        let t = self.t;
        let mut removed: Vec<FirmId> = Vec::new();
        for i in 0..self.firms.len() {
            let f = &self.firms[i];
            let threshold = -(gamma * wage * f.n_workers as f64);
            if f.equity() >= threshold {
                continue;
            }
            let id = f.id;
            let surrender = f.cash.min(f.debt).max(0.0);
            if surrender > 0.0 {
                self.transfer(TransferKind::Repayment, AccountId::Firm(id), AccountId::Bank, surrender);
            }
            let residual_debt = self.firms[i].debt;
            if residual_debt > 0.0 {
                self.transfer(TransferKind::WriteOff, AccountId::Firm(id), AccountId::Bank, residual_debt);
            }
            let f = &self.firms[i];
            self.events.n_bankruptcies += 1;
            self.events.job_losses += f.n_workers;
            self.events.bankruptcy_ages.push(t + 1 - f.birth_t);
            removed.push(id);
        }
        if !removed.is_empty() {
            self.firms.retain(|f| removed.binary_search(&f.id).is_err());
        }
    }

    /// Step 8 (ageing): every survivor's margin shifts by the change of the
    /// effective margin, so entrants face the same effective margin throughout
    /// the run. Skipped on the first iteration, which has no previous value.
    fn recenter_margins(&mut self, mu_eff: f64) {
        if let Some(prev) = self.mu_eff_prev {
            let delta = mu_eff - prev;
            if delta != 0.0 {
                for f in &mut self.firms {
                    f.mu -= delta;
                }
            }
        }
        self.mu_eff_prev = Some(mu_eff);
    }

    /// Step 8 (entry): a constant number of new firms join with fresh margins
    /// and a pre-drawn first workforce plan.
    fn spawn_entrants(&mut self) {
        let t = self.t;
        for _ in 0..self.params.nu {
            let mu = draw_uniform(self.params.mu_min, self.params.mu_max, &mut self.rng);
            let plan = draw_uniform_int(
                self.params.entry_size_min,
                self.params.entry_size_max,
                &mut self.rng,
            );
            let id = FirmId(self.next_firm_id);
            self.next_firm_id += 1;
            self.firms.push(FirmState {
                id,
                mu,
                n_workers: 0,
                planned_workers: plan,
                q_produced: 0,
                q_sold: 0,
                cash: 0.0,
                debt: 0.0,
                profit_gross: 0.0,
                profit_net: 0.0,
                birth_t: t + 1,
                last_sales: 0,
                last_profit_net: 0.0,
                preplanned: true,
            });
        }
    }
}

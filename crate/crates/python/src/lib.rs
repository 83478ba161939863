//! Python bindings: inequality and equitability metrics, state and schedule
//! helpers, a standalone order book, Q-tables and single-episode runs.

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use eqmm::exchange::{self, Order, OrderId, Side};
use eqmm::harness::{self, ScenarioConfig};
use eqmm::kernel::AgentId;
use eqmm::metrics::{self, BinSpec};
use eqmm::rl::{self, DiscreteState, StateBins, TrainingSchedule};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

pub fn parse_side(side: &str) -> PyResult<Side> {
    match side.to_ascii_lowercase().as_str() {
        "buy" | "bid" => Ok(Side::Bid),
        "sell" | "ask" => Ok(Side::Ask),
        other => Err(PyValueError::new_err(format!("unknown side `{other}`"))),
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Bid => "buy",
        Side::Ask => "sell",
    }
}

/// Normalized Shannon entropy of bin counts.
#[pyfunction]
fn entropy_equitability(counts: Vec<u64>) -> PyResult<f64> {
    metrics::entropy_equitability(&counts).map_err(value_err)
}

#[pyfunction]
fn gini(values: Vec<f64>) -> PyResult<f64> {
    metrics::gini(&values).map_err(value_err)
}

#[pyfunction]
fn theil(values: Vec<f64>) -> PyResult<f64> {
    metrics::theil(&values).map_err(value_err)
}

#[pyfunction]
fn generalized_entropy(values: Vec<f64>, alpha: f64) -> PyResult<f64> {
    metrics::generalized_entropy(&values, alpha).map_err(value_err)
}

/// Bin of a return in cents; `edges` defaults to the twelve decade bins.
#[pyfunction]
#[pyo3(signature = (r_cents, edges=None))]
fn bin_index(r_cents: i64, edges: Option<Vec<i64>>) -> PyResult<usize> {
    let spec = match edges {
        Some(e) => BinSpec::new(e).map_err(value_err)?,
        None => BinSpec::default(),
    };
    Ok(spec.bin_index(r_cents))
}

/// State index in `0..96`; `mid_half_cents` is twice the mid in cents.
#[pyfunction]
#[pyo3(signature = (inventory, imbalance, spread, mid_half_cents, inventory_unit=500, reference_price=100_000))]
fn discretize_state(inventory: i64, imbalance: f64, spread: i64, mid_half_cents: i64, inventory_unit: i64, reference_price: i64) -> usize {
    let bins = StateBins { inventory_unit, reference_price };
    rl::discretize_state(inventory, imbalance, spread, exchange::MidPrice(mid_half_cents), bins).index()
}

/// `(inventory, imbalance, spread, midprice)` bins of a state index.
#[pyfunction]
fn state_components(index: usize) -> PyResult<(u8, u8, u8, u8)> {
    if index >= DiscreteState::COUNT {
        return Err(PyIndexError::new_err(format!("state index {index} out of range")));
    }
    let s = DiscreteState::from_index(index);
    Ok((s.inventory, s.imbalance, s.spread, s.midprice))
}

/// `(alpha, epsilon)` for an episode; `total` rescales the default schedule.
#[pyfunction]
#[pyo3(signature = (episode, total=None))]
fn schedule_value(episode: usize, total: Option<usize>) -> (f64, f64) {
    let schedule = total.map_or_else(TrainingSchedule::default, TrainingSchedule::scaled);
    schedule.value(episode)
}

#[pyclass(frozen, get_all)]
#[derive(Clone)]
struct Trade {
    buy_agent: u32,
    sell_agent: u32,
    buy_order: u64,
    sell_order: u64,
    price: i64,
    size: u64,
    aggressor: &'static str,
}

#[pymethods]
impl Trade {
    fn __repr__(&self) -> String {
        format!("Trade(price={}, size={}, buy_order={}, sell_order={}, aggressor='{}')", self.price, self.size, self.buy_order, self.sell_order, self.aggressor)
    }
}

impl From<&exchange::Trade> for Trade {
    fn from(t: &exchange::Trade) -> Self {
        Trade {
            buy_agent: t.buy_agent.0,
            sell_agent: t.sell_agent.0,
            buy_order: t.buy_order.0,
            sell_order: t.sell_order.0,
            price: t.price,
            size: t.size,
            aggressor: side_name(t.aggressor),
        }
    }
}

/// Price-time priority limit order book. Prices in integer cents.
#[pyclass]
#[derive(Default)]
struct OrderBook {
    inner: exchange::OrderBook,
}

#[pymethods]
impl OrderBook {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Returns the trades executed by the order.
    fn submit_limit(&mut self, order_id: u64, agent: u32, side: &str, price: i64, size: u64) -> PyResult<Vec<Trade>> {
        let order = Order::limit(OrderId(order_id), AgentId(agent), parse_side(side)?, price, size);
        let out = self.inner.submit_limit(order).map_err(value_err)?;
        Ok(out.trades.iter().map(Trade::from).collect())
    }

    /// Returns `(trades, unfilled)`.
    fn submit_market(&mut self, order_id: u64, agent: u32, side: &str, size: u64) -> PyResult<(Vec<Trade>, u64)> {
        let order = Order::market(OrderId(order_id), AgentId(agent), parse_side(side)?, size);
        let out = self.inner.submit_market(order).map_err(value_err)?;
        Ok((out.trades.iter().map(Trade::from).collect(), out.unfilled))
    }

    fn cancel(&mut self, order_id: u64) -> bool {
        self.inner.cancel(OrderId(order_id))
    }

    #[getter]
    fn best_bid(&self) -> Option<i64> {
        self.inner.best_bid()
    }

    #[getter]
    fn best_ask(&self) -> Option<i64> {
        self.inner.best_ask()
    }

    /// Mid in cents, possibly fractional.
    #[getter]
    fn mid(&self) -> Option<f64> {
        self.inner.mid().map(|m| m.as_cents())
    }

    #[getter]
    fn spread(&self) -> Option<i64> {
        self.inner.spread()
    }

    fn volume(&self, side: &str) -> PyResult<u64> {
        Ok(self.inner.volume(parse_side(side)?))
    }

    fn resting_size(&self, order_id: u64) -> Option<u64> {
        self.inner.resting_size(OrderId(order_id))
    }

    fn __len__(&self) -> usize {
        self.inner.resting_orders()
    }
}

/// Tabular action values with Q-learning updates.
#[pyclass]
#[derive(Clone)]
struct QTable {
    inner: rl::QTable,
}

impl QTable {
    fn check(&self, s: usize, a: usize) -> PyResult<()> {
        if s >= self.inner.states() || a >= self.inner.actions() {
            return Err(PyIndexError::new_err(format!("({s}, {a}) outside {}x{}", self.inner.states(), self.inner.actions())));
        }
        Ok(())
    }
}

#[pymethods]
impl QTable {
    #[new]
    #[pyo3(signature = (states=DiscreteState::COUNT, actions=rl::DiscreteAction::COUNT))]
    fn new(states: usize, actions: usize) -> PyResult<Self> {
        if states == 0 || actions == 0 {
            return Err(PyValueError::new_err("empty table"));
        }
        Ok(QTable { inner: rl::QTable::new(states, actions) })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.states(), self.inner.actions())
    }

    fn get(&self, s: usize, a: usize) -> PyResult<f64> {
        self.check(s, a)?;
        Ok(self.inner.get(s, a))
    }

    fn set(&mut self, s: usize, a: usize, v: f64) -> PyResult<()> {
        self.check(s, a)?;
        self.inner.set(s, a, v);
        Ok(())
    }

    /// One Q-learning step; `next=None` marks a terminal transition.
    #[pyo3(signature = (s, a, reward, next, alpha, gamma))]
    fn update(&mut self, s: usize, a: usize, reward: f64, next: Option<usize>, alpha: f64, gamma: f64) -> PyResult<()> {
        self.check(s, a)?;
        if let Some(n) = next {
            self.check(n, 0)?;
        }
        self.inner.update(s, a, reward, next, alpha, gamma);
        Ok(())
    }

    fn argmax(&self, s: usize) -> PyResult<usize> {
        self.check(s, 0)?;
        Ok(self.inner.argmax(s))
    }

    fn values(&self) -> Vec<Vec<f64>> {
        (0..self.inner.states()).map(|s| self.inner.row(s).to_vec()).collect()
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(QTable { inner: rl::QTable::read_csv(text.as_bytes()).map_err(value_err)? })
    }
}

/// Run one fixed-MM episode. `config` is TOML text; `None` uses the defaults.
#[pyfunction]
#[pyo3(signature = (seed, config=None))]
fn run_episode<'py>(py: Python<'py>, seed: u64, config: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = match config {
        Some(text) => ScenarioConfig::from_toml(text).map_err(value_err)?,
        None => ScenarioConfig::default(),
    };
    let res = py.allow_threads(|| harness::run_episode(&cfg, seed)).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("seed", res.seed)?;
    d.set_item("config_hash", &res.config_hash)?;
    d.set_item("profit_cents", res.profit)?;
    d.set_item("equitability", res.equitability)?;
    d.set_item("bin_counts", &res.bin_counts)?;
    d.set_item("returns_cents", res.samples.iter().map(|s| s.return_cents()).collect::<Vec<_>>())?;
    d.set_item("trades", res.trades)?;
    d.set_item("final_inventory", res.final_inventory)?;
    d.set_item("mean_half_spread", res.row().mean_half_spread)?;
    Ok(d)
}

#[pymodule]
pub fn eqmm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(entropy_equitability, m)?)?;
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(theil, m)?)?;
    m.add_function(wrap_pyfunction!(generalized_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(bin_index, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_state, m)?)?;
    m.add_function(wrap_pyfunction!(state_components, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_value, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_class::<OrderBook>()?;
    m.add_class::<QTable>()?;
    m.add_class::<Trade>()?;
    m.add("STATES", DiscreteState::COUNT)?;
    m.add("ACTIONS", rl::DiscreteAction::COUNT)?;
    Ok(())
}

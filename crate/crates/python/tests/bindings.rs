use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    pyo3::prepare_freethreaded_python();
    Python::with_gil(|py| {
        let m = PyModule::new(py, "eqmm_py").unwrap();
        eqmm_py::eqmm_py(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("eq", m).unwrap();
        f(py, &globals);
    });
}

fn run(py: Python<'_>, globals: &Bound<'_, PyDict>, code: &str) {
    let code = CString::new(code).unwrap();
    if let Err(e) = py.run(&code, Some(globals), None) {
        e.print(py);
        panic!("python snippet failed");
    }
}

#[test]
fn side_names() {
    use eqmm::exchange::Side;
    assert_eq!(eqmm_py::parse_side("BUY").unwrap(), Side::Bid);
    assert_eq!(eqmm_py::parse_side("ask").unwrap(), Side::Ask);
}

#[test]
fn metrics_and_errors() {
    with_module(|py, g| {
        run(py, g, r#"
import math
assert eq.entropy_equitability([0] * 11 + [3]) == 1.0
assert abs(eq.entropy_equitability([2] * 12)) < 1e-12
assert abs(eq.theil([1.0, 1.0])) < 1e-12
for bad in ([0] * 12,):
    try:
        eq.entropy_equitability(bad)
        raise AssertionError
    except ValueError:
        pass
try:
    eq.state_components(96)
    raise AssertionError
except IndexError:
    pass
"#);
    });
}

#[test]
fn book_matches_core() {
    with_module(|py, g| {
        run(py, g, r#"
b = eq.OrderBook()
b.submit_limit(1, 0, "buy", 100, 3)
b.submit_limit(2, 0, "buy", 100, 3)
t = b.submit_limit(3, 1, "sell", 99, 4)
assert [(x.buy_order, x.size, x.price, x.aggressor) for x in t] == [(1, 3, 100, "sell"), (2, 1, 100, "sell")]
assert b.resting_size(2) == 2 and b.volume("bid") == 2
try:
    b.submit_limit(1, 0, "buy", 100, 1)
    raise AssertionError
except ValueError:
    pass
"#);
    });
}

#[test]
fn qtable_roundtrip() {
    with_module(|py, g| {
        run(py, g, r#"
q = eq.QTable(2, 2)
q.update(0, 1, 2.0, 1, 1.0, 0.5)
q.set(1, 0, 4.0)
q.update(0, 0, 0.0, 1, 1.0, 0.5)
assert q.get(0, 0) == 2.0 and q.get(0, 1) == 2.0
assert eq.QTable.from_csv(q.to_csv()).values() == q.values()
"#);
    });
}

use pyo3::prelude::*;
use pyo3::types::PyDict;
use stable_deconv::stable_deconv;

fn run(code: &str) -> PyResult<()> {
    pyo3::append_to_inittab!(stable_deconv);
    Python::attach(|py| {
        let locals = PyDict::new(py);
        py.run(&std::ffi::CString::new(code).unwrap(), None, Some(&locals))
    })
}

#[test]
fn module_round_trip() {
    run(r#"
import math
import stable_deconv as sd
p = sd.StableParams(1.0, 1.0)
assert p.regime == "Cauchy"
m, ls = sd.Estimator(0.5, p).estimate_at([0.0], 0.0)
assert ls == 2.0 and abs(m - 0.2752313) < 1e-7
assert abs(sd.w1(0.3, p) ** 2 + sd.w2(0.3, p) ** 2 - sd.w1(0.3, p)) < 1e-15
assert p.sample(5, seed=2) == p.sample(5, seed=2)
try:
    sd.StableParams(1.0, -1.0)
    raise AssertionError("mu < 0 accepted")
except ValueError:
    pass
try:
    sd.Estimator(1e-300, p)
    raise AssertionError("h = 1e-300 accepted")
except ArithmeticError:
    pass
"#)
    .unwrap();
}

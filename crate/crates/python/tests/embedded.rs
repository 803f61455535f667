use pyo3::ffi::c_str;
use pyo3::prelude::*;
use tautgen::tautgen as module;

fn run(code: &std::ffi::CStr) {
    pyo3::append_to_inittab!(module);
    Python::initialize();
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn module_round_trip() {
    run(c_str!(
        r#"
import tautgen
p1 = tautgen.Fan(1, [[1], [-1]])
sys = p1.gkz_system()
ser = p1.period_series(8)
assert sys.annihilates(ser)
assert tautgen.System.from_json(sys.to_json()).failures(ser) == []
assert ser.coefficient([2, -5, 2]) == "6"
assert tautgen.weyl_dimension(3, [1, 1]) == 8
w = tautgen.flag_system(2, [1], target="w")
assert [op for _, op in w.polynomial_ops] == ["1 * d0*d2 + -1 * d1^2"]
try:
    tautgen.flag_system(4, [2], bundle=[1], target="w")
    raise SystemExit(1)
except ValueError as e:
    assert "n_beta >= 2" in str(e)
"#
    ));
}

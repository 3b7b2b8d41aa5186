use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(pyholonomic::pyholonomic)(py);
        let globals = PyDict::new(py);
        globals.set_item("ph", module).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn table_and_decompose_agree() {
    run(
        "import math\n\
         s = ph.table1('S')\n\
         d = ph.decompose(s.target())\n\
         assert 0 <= d.gamma_plus <= math.pi / 3 + 1e-12\n\
         assert s.qubits == 1 and s.label == 'S'\n\
         assert len(ph.holonomy_gate(d.theta0, d.phi0, d.gamma_plus)) == 2\n",
    );
}

#[test]
fn errors_surface_as_value_error() {
    run(
        "for bad in (lambda: ph.table1('T'), lambda: ph.decompose([[1, 0]]), lambda: ph.Schedule.from_text('nonsense')):\n\
         \x20   try:\n\
         \x20       bad()\n\
         \x20   except ValueError:\n\
         \x20       pass\n\
         \x20   else:\n\
         \x20       raise AssertionError('accepted')\n",
    );
}

#[test]
fn planned_schedule_audits_clean() {
    run(
        "import math\n\
         s = ph.Schedule.plan_single_qubit(math.pi / 4, 0.3, 1.0)\n\
         r = s.audit()\n\
         assert r['clean'] and r['violations'] == []\n\
         assert abs(r['gamma_plus'] - 1.0) < 1e-9\n\
         assert len(ph.gatecheck()) == 7\n",
    );
}

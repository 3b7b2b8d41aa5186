"""Smoke test for the pyholonomic extension.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/pyholonomic-*.whl
"""

import cmath
import math

import pyholonomic as ph


def close(a, b, tol):
    return all(abs(x - y) <= tol for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def phase_aligned(m, target):
    overlap = sum(target[i][j].conjugate() * m[i][j] for i in range(len(m)) for j in range(len(m)))
    w = cmath.exp(-1j * cmath.phase(overlap))
    return [[w * x for x in row] for row in m]


def main():
    x = ph.table1("X")
    assert close(phase_aligned(x.realized(), x.target()), x.target(), 1e-12), x

    h = ph.table1("H")
    spec = ph.decompose(h.target())
    gate = ph.holonomy_gate(spec.theta0, spec.phi0, spec.gamma_plus)
    assert close(phase_aligned(gate, h.target()), h.target(), 1e-10)

    rows = ph.gatecheck()
    assert len(rows) == 7 and all(r["pass"] for r in rows)

    anchor = ph.phase_integral_max(8 * math.pi)
    assert abs(anchor - 0.0796) <= 3e-3, anchor

    sched = ph.Schedule.plan_single_qubit(math.pi / 2, 0.0, math.pi)
    report = sched.audit()
    assert report["clean"] and abs(report["area_mod_2pi"]) < 1e-9, report
    again = ph.Schedule.from_text(sched.to_text())
    assert again.to_text() == sched.to_text() and len(again) == len(sched)

    u = sched.unitary(sched.duration / 20000)
    block = [row[1:] for row in u[1:]]
    err, leak = ph.gate_error(block, x.target(), [0, 1])
    assert err < 1e-3, err

    out = ph.simulate(
        "[experiment]\nmode = single-qubit\ngate = X\ntrace_rows = 16\n",
        overrides=["drive.ramp_ns=25"],
    )
    s = out["summary"]
    assert s["fidelity"] >= 0.999, s
    assert out["trace_csv"].startswith("t,e,0,1,fidelity")

    try:
        ph.simulate("[experiment]\nmode = warp\n")
    except ValueError as e:
        assert "experiment.mode" in str(e)
    else:
        raise AssertionError("bad mode accepted")

    print(f"pyholonomic smoke test ok: X fidelity {s['fidelity']:.9f}, gate error {err:.2e}")


if __name__ == "__main__":
    main()

"""Smoke test for the vstar extension module. Run after installing it."""

import json
import os
import tempfile

import vstar


def main():
    panel = vstar.simulate(family="vlstar", regimes=2, t=400, seed=1)
    assert len(panel) == 400
    assert panel.labels == ["y1", "y2", "y3"]

    lin = vstar.linearity(panel, lags=1)
    assert [o.variant for o in lin] == ["lm", "lm-tr2", "lm-rescaled", "wilks"]
    assert lin[0].rejects(0.05), lin[0]

    report = vstar.sequential(panel, lags=1, alpha=0.05)
    assert report.selected_m == 2, report
    assert json.loads(report.to_json())["selected_m"] == 2

    extra = vstar.additive(panel, regimes=2, lags=1)
    assert all(o.null_regimes == 2 for o in extra)

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "panel.csv")
        with open(path, "w") as f:
            f.write("y1,y2,y3,s\n")
            for row, s in zip(panel.y, panel.s):
                f.write(",".join(repr(v) for v in row + [s]) + "\n")
        back = vstar.Panel.from_csv(path)
        assert back.y == panel.y and back.s == panel.s
        assert back.select_lags("bic", max_lags=4) == 1

    flat = vstar.Panel([[float(i % 7), float(i % 5)] for i in range(80)], [1.0] * 80)
    try:
        vstar.linearity(flat, lags=1)
    except vstar.StatisticalError:
        pass
    else:
        raise AssertionError("constant transition should be rejected")

    mc = vstar.montecarlo(kind="size", t=150, reps=6, seed=3, threads=2)
    assert mc.successes + mc.failures == 6
    assert 0.0 <= mc.rate("lm", 0.05) <= 100.0
    serial = vstar.montecarlo(kind="size", t=150, reps=6, seed=3, threads=1)
    assert mc.to_csv() == serial.to_csv()

    print("python smoke test passed")


if __name__ == "__main__":
    main()

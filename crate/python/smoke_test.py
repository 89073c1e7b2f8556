"""Smoke test for the pyvqoco extension: run a tiny config end to end."""

import math
import sys

import pyvqoco

CONFIG = """
[environment]
type = "orr"
drift = "log"

[run]
algorithms = ["vqb_case1", "slater", "doubling_vqb_case1", "chen2019"]
horizons = [60]
seeds = [1, 2]
"""


def main() -> int:
    assert "vqb_case1" in pyvqoco.ALGORITHMS
    pyvqoco.validate_config(CONFIG)
    try:
        pyvqoco.validate_config(CONFIG.replace("[60]", "[0]"))
    except ValueError as e:
        assert "line 8: horizons" in str(e), e
    else:
        raise AssertionError("zero horizon accepted")

    rows = pyvqoco.run_config(CONFIG, jobs=2)
    assert len(rows) == 8, len(rows)
    assert [r["algorithm"] for r in rows[::2]] == ["vqb_case1", "slater", "doubling_vqb_case1", "chen2019"]
    for r in rows:
        assert r["ok"], r["message"]
        traj = r["trajectory"]
        assert traj["t"] == list(range(1, 61))
        assert math.isclose(traj["regret_cum"][-1], r["regret"], rel_tol=0, abs_tol=0)
        assert all(v >= 0 for v in traj["lambda_norm"])

    # same config, same numbers
    again = pyvqoco.run_config(CONFIG, jobs=1)
    assert [r["regret"] for r in again] == [r["regret"] for r in rows]

    assert pyvqoco.vqb_dual_update([1.0, 0.0], 0.5, [2.0, -1.0]) == [2.0, 0.5]
    alpha, gamma = pyvqoco.slater_params(0.5, 100, 1.0)
    assert math.isclose(alpha, 10.0) and math.isclose(gamma, math.sqrt(5.0))
    assert pyvqoco.epoch_schedule(10) == [2, 4, 4]

    for r in rows[:2]:
        print(f"{r['algorithm']} T={r['horizon']} seed={r['seed']}: regret/T={r['regret_avg']:.4e}")
    print("pyvqoco smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Smoke test for the xrlat_py extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/xrlat-*.whl
"""

import json
import sys
import tempfile
from pathlib import Path

import xrlat_py as x


def main() -> int:
    assert x.compute_boxr_periods(60_000, 16_000) == (4, 15_000, False)
    assert x.boxr_releases(100_000, 60_000, 16_000) == [100_000, 115_000, 130_000, 145_000]
    try:
        x.compute_boxr_periods(10_000, 8_000, 12_000)
    except x.InfeasibleScheduleError:
        pass
    else:
        raise AssertionError("expected InfeasibleScheduleError")
    assert x.centroid([]) == (0.5, 0.5)

    cfg = x.Config()
    cfg.duration_ms = 5_000
    prof = x.profile(cfg)
    s, p, l = prof.mvio_decide(0.0, 0.0)
    # With no motion the controller keeps the full image at the finest level.
    assert p == 1.0 and l == json.loads(prof.to_json())["l_max"], (s, p, l)
    gamma, alpha, unmet = prof.sfr_optimize(prof.n_b)
    assert (gamma, alpha, unmet) == (1.0, 1.0, False)

    boxr = x.run(cfg)
    again = x.run(x.Config.from_toml(boxr.config.to_toml()))
    assert boxr.frames_csv() == again.frames_csv()
    assert boxr.summary.to_json() == again.summary.to_json()
    assert boxr.summary.dropped_imu_pct == 0.0

    cfg.policy = "illixr"
    illixr = x.run(cfg).summary
    assert illixr.m2d_mean_ms > boxr.summary.m2d_mean_ms
    print(boxr.summary)
    print(illixr)

    with tempfile.TemporaryDirectory() as tmp:
        paths = boxr.write(Path(tmp) / "run")
        assert any(str(p).endswith("summary.json") for p in paths)
        summary = json.loads((Path(tmp) / "run" / "summary.json").read_text())
        assert summary["frames"] == boxr.summary.frames
        print(x.report([str(Path(tmp) / "run")]), end="")
        try:
            x.report([str(Path(tmp) / "missing")])
        except x.ArtifactError:
            pass
        else:
            raise AssertionError("expected ArtifactError")

    try:
        x.Config("no-such-preset")
    except x.ConfigError:
        pass
    else:
        raise AssertionError("expected ConfigError")

    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Smoke test for the Python bindings.

Build and install the wheel first:

    cd crates/py && maturin build --release -o dist && pip install dist/*.whl

then run `python python/smoke_test.py` from the repository root.
"""

import math
import tempfile
from pathlib import Path

import pideeponet as pd


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok  {msg}")


def main():
    cfg = pd.TrainConfig.desk("antiderivative")
    cfg.n_train, cfg.n_test, cfg.iterations, cfg.batch_size = 20, 4, 200, 128
    cfg.set("train", "wall_clock", "false")
    check(pd.TrainConfig.parse(cfg.to_text()).to_text() == cfg.to_text(), "config text round trip")

    try:
        cfg.set("model", "no_such_key", "1")
        check(False, "unknown config key rejected")
    except ValueError:
        check(True, "unknown config key rejected")

    data = pd.generate(cfg)
    check((data.n_train, data.n_test) == (20, 4), "data sizes")
    u, y, s = data.test_sample(0)
    check(len(u) == 100 and len(y) == len(s) == 100, "test sample layout")

    model = pd.train(cfg, data)
    hist = model.metrics()
    check(hist[-1]["iteration"] == 200, "metrics reach the last iteration")
    check(hist[-1]["total"] < hist[0]["total"], "loss decreases")
    mean, std, errs = model.evaluate(data)
    check(len(errs) == 4 and math.isfinite(mean) and std >= 0.0, f"evaluation (mean {mean:.3e})")

    pts = [[0.1 * k] for k in range(11)]
    g, d1, d2 = model.derivatives(u, pts, 0)
    check(max(abs(a - b) for a, b in zip(g, model.predict(u, pts))) < 1e-12, "derivatives carry the value")
    h = 1e-5
    fd = [(model.predict(u, [[p[0] + h]])[0] - model.predict(u, [[p[0] - h]])[0]) / (2 * h) for p in pts]
    check(max(abs(a - b) for a, b in zip(d1, fd)) < 1e-6, "first derivative matches finite differences")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.ckpt"
        model.save(path)
        back = pd.DeepONet.load(path)
        check(back.predict(u, pts) == model.predict(u, pts), "checkpoint round trip")

    f = pd.grf_sample(0.2, 50, seed=3)
    check(f == pd.grf_sample(0.2, 50, seed=3), "seeded field draws repeat")
    xs = [i / 100 for i in range(101)]
    anti = pd.solve_antiderivative([math.cos(2 * math.pi * x) for x in xs])
    check(max(abs(a - math.sin(2 * math.pi * x) / (2 * math.pi)) for a, x in zip(anti, xs)) < 1e-3, "antiderivative solver")
    dr = pd.solve_diffusion_reaction(f, nx=30, nt=20)
    check(len(dr) == 30 and len(dr[0]) == 20, "diffusion-reaction grid shape")
    bu = pd.solve_burgers(pd.periodic_grf_sample(64, seed=1), snapshot_every=0.1)
    check(len(bu) == 64 and len(bu[0]) == 11, "Burgers snapshot shape")
    check(pd.sdf_circle(1.0, 2.0, 0.0) == 1.0, "circle distance")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()

"""Smoke test for the `camlp` Python module.

Build and install first, e.g.  pip install maturin && maturin develop -m crates/py/Cargo.toml
"""

import math
import tempfile

import camlp


def main():
    ok, groups = camlp.grad_check()
    assert ok, groups
    print(f"gradcheck: {len(groups)} groups, worst {max(g[2] for g in groups):.2e}")

    rows = [[float(c * 1000 + t) for t in range(800)] for c in range(2)]
    slices = camlp.segment(rows, 150, 10)
    assert [off for off, _ in slices] == [0, 140, 280, 420, 560]
    z = slices[0][1][0]
    assert abs(sum(z) / len(z)) < 1e-9

    m = camlp.compute_metrics([0, 1, 1, 2], [0, 1, 2, 2], 3)
    assert m["accuracy"] == 0.75 and m["confusion"][2] == [0, 1, 1]

    ds = camlp.synth(classes=3, trials_per_class=5, channels=6, raw_len=300, seed=1)
    assert len(ds) == 15 and ds.channels == 6

    cfg = camlp.ModelConfig(6, 3, filters=2, blocks=1, channel_hidden=8, time_hidden=8)
    net = camlp.CamlpNet(cfg, seed=0)
    losses = net.fit(ds, epochs=2, batch_size=16)
    assert len(losses) == 2 and all(math.isfinite(v) for v in losses)
    net.set_mode("eval")
    _, _, trial_rows = ds.trial(0)
    cls, probs = net.predict_trial(trial_rows)
    assert 0 <= cls < 3 and abs(sum(probs) - 1) < 1e-9

    with tempfile.TemporaryDirectory() as d:
        path = f"{d}/model.ckpt"
        net.save(path)
        back = camlp.CamlpNet.load(path)
        back.set_mode("eval")
        assert back.predict_trial(trial_rows) == (cls, probs)

    cv = camlp.cross_validate(ds, cfg, folds=5, epochs=1, batch_size=16)
    assert cv["leak_free"] and len(cv["folds"]) == 5
    print(f"cv trial accuracy {100 * cv['trial_accuracy_mean']:.1f} ± {100 * cv['trial_accuracy_std']:.1f}")
    print("ok")


if __name__ == "__main__":
    main()

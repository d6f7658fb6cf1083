"""Smoke test for the riskscore_py extension module."""

import math
import random

import riskscore_py as rs


def make_data(n=120, seed=4):
    rng = random.Random(seed)
    x, y = [], []
    for _ in range(n):
        row = [rng.randint(0, 2), rng.randint(0, 1), rng.randint(0, 2)]
        p = 1.0 / (1.0 + math.exp(-(row[0] + row[1] - 1.5)))
        x.append([float(v) for v in row])
        y.append(int(rng.random() < p))
    return x, y


def main():
    grid = rs.ThresholdGrid([0.2, 0.4, 0.6, 0.8])
    assert grid.points == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert abs(sum(grid.weights) - 1.0) < 1e-12

    x, y = make_data()
    model, loss = rs.train(x, y, grid, method="exact", lambda_min=-2, lambda_max=2,
                           feature_names=["a", "b", "c"])
    preds = model.predict(x)
    report = rs.evaluate(preds, y, grid, c0=1e-3, num_nonzero=model.num_nonzero())
    assert abs(report["objective"] - loss) < 1e-12, (report["objective"], loss)
    assert 0.0 <= report["auroc"] <= 1.0

    again = rs.ScoreModel.from_json(model.to_json())
    assert again.coefficients == model.coefficients
    assert again.predict(x) == preds
    assert "Total possible score" in model.scorecard()

    sa_model, sa_loss = rs.train(x, y, grid, lambda_min=-2, lambda_max=2, seed=1, sa_cooling_rate=1e-5)
    assert sa_loss >= loss - 1e-12

    lo, hi = rs.aunbc_bounds(0.8, 0.3, grid)
    assert lo <= hi
    assert rs.auroc_lower(hi, 0.3, grid) <= 0.8 + 1e-9

    s = rs.synth_correlated(y, 0.5, seed=2)
    assert s == rs.synth_correlated(y, 0.5, seed=2)
    repaired, rep = rs.improve_aunbc(s, y, grid)
    assert rep["aunbc_after"] >= rep["aunbc_before"]
    assert len(repaired) == len(y)

    b = rs.synth_boundary(y, 0.75, grid)
    assert all(0.0 <= v <= 1.0 for v in b)

    cv = rs.cross_validate(x, y, grid, folds=3, lambda_min=-2, lambda_max=2, sa_cooling_rate=1e-4)
    assert len(cv["folds"]) == 3

    try:
        rs.ThresholdGrid([0.5, 0.2])
    except ValueError:
        pass
    else:
        raise AssertionError("unsorted grid accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()

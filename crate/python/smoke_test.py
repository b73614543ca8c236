"""Quick check that the extension module loads and agrees with hand values."""
import json
import math

import dvs

values = [3.0, 1.0, 2.0, 0.5, 4.0, 1.5]

edges = dvs.visibility_edges(values)
assert (0, 1) in edges and (1, 2) in edges
assert all(i < j for i, j in edges)

deg = dvs.degrees(values)
assert sum(deg) == 2 * len(edges)

zip_ = dvs.dvs_transform(values)
b = dvs.enhanced_matrix(values)
for z, row in zip(zip_, b):
    assert math.isclose(z, sum(row), rel_tol=1e-12)

report = json.loads(dvs.evaluate_metrics([1.0, 2.0], [1.0, 2.0]))
assert report["rmse"] == 0.0 and report["mad"] == 0.0

series = dvs.synth_series(length=80, noise_sigma=0.0, seed=3)
assert series == dvs.synth_series(length=80, noise_sigma=0.0, seed=3)
inputs, targets = dvs.make_windows(series, 30)
assert len(inputs) == len(targets) == 50

assert dvs.sma_forecast([1.0, 2.0, 3.0], 3) == 2.0
assert dvs.ses_forecast([1.0, 2.0, 7.0], 1.0) == 7.0

model = dvs.Model.train(series, window_len=30, config=json.dumps({"iterations": 5}), seed=1)
assert len(model.loss_curve) == 5
again = dvs.Model.from_json(model.to_json())
assert again.predict(inputs[-1]) == model.predict(inputs[-1])

try:
    dvs.Model.train(series, method="arima")
except ValueError as e:
    assert "unknown method" in str(e)
else:
    raise AssertionError("arima should be rejected")

print("python smoke test: ok")

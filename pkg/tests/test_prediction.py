import json
import sys

import numpy as np
import pytest

from maneuver_planner.collision import Footprint
from maneuver_planner.errors import EmptyHistory, EmptySet
from maneuver_planner.geometry import CartesianState
from maneuver_planner.prediction import (
    CA_PROBABILITY, CV_PROBABILITY, ExternalPredictor, ObstacleHistory, PredictedTrajectory, PredictionSet,
    predict, request_json, select_top2, speed_profile,
)
from maneuver_planner.world import Lane, LaneMap


def history(v0, v1, x=0.0, y=0.0, theta=0.0):
    return ObstacleHistory("o", Footprint(), np.array([0.0, 0.2]),
                           (CartesianState(x - 0.2 * v0, y, theta, v0), CartesianState(x, y, theta, v1)))


def test_history_validation():
    with pytest.raises(EmptyHistory):
        ObstacleHistory("o", Footprint(), np.array([]), ())
    with pytest.raises(ValueError):
        ObstacleHistory("o", Footprint(), np.array([0.2, 0.0]),
                        (CartesianState(0, 0, 0, 1), CartesianState(0, 0, 0, 1)))


def test_two_hypotheses_sorted_by_probability():
    ps = predict(history(10, 9))
    assert [t.probability for t in ps.trajectories] == [CV_PROBABILITY, CA_PROBABILITY]
    cv, ca = ps.trajectories
    assert len(cv) == 26
    assert np.allclose(cv.x, 9 * cv.t)
    assert ca.a[0] == pytest.approx(-4.0)  # -5 clamped
    assert np.all(ca.v >= 0)


def test_speed_profile_stops_without_reversing():
    t = np.arange(26) * 0.2
    s, v, a = speed_profile(3.0, -3.0, t)
    assert s.max() == pytest.approx(1.5)
    assert np.all(np.diff(s) >= -1e-12)
    assert v[-1] == 0.0 and a[-1] == 0.0


def test_lane_snapping_follows_curve():
    a = np.linspace(0, np.pi / 2, 200)
    curve = np.column_stack([50 * np.sin(a), 50 - 50 * np.cos(a)])
    m = LaneMap([Lane("c", curve)])
    ps = predict(history(5, 5, x=0.0, y=0.0), m)
    cv = ps.trajectories[0]
    r = np.hypot(cv.x, cv.y - 50)
    assert np.allclose(r, 50, atol=1e-3)


def test_prediction_set_invariants():
    t = np.arange(3) * 0.2
    tr = lambda p: PredictedTrajectory(t, t, t, t, t, t, p)
    with pytest.raises(EmptySet):
        PredictionSet("o", ())
    with pytest.raises(ValueError):
        PredictionSet("o", (tr(0.3), tr(0.6)))
    ps = PredictionSet.sorted("o", (tr(0.1), tr(0.5), tr(0.3)))
    assert [x.probability for x in select_top2(ps)] == [0.5, 0.3]
    single = PredictionSet("o", (tr(1.0),))
    assert select_top2(single)[0] is select_top2(single)[1]


ECHO = r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    n = int(round(req["horizon"] / req["dt"])) + 1
    preds = []
    for o in req["obstacles"]:
        t, x, y, th, v, a = o["states"][-1]
        rows = [[k * req["dt"], x + v * k * req["dt"], y, th, v, 0.0] for k in range(n)]
        preds.append({"id": o["id"], "trajectories": [{"probability": 1.0, "states": rows}]})
    print(json.dumps({"predictions": preds}), flush=True)
"""


def test_external_predictor_roundtrip():
    h = history(8, 8)
    req = request_json([h], 5.0, 0.2, time=1.0)
    assert json.loads(json.dumps(req))["obstacles"][0]["id"] == "o"
    p = ExternalPredictor([sys.executable, "-c", ECHO])
    try:
        out = p([h], None)
    finally:
        p.close()
    assert out[0].trajectories[0].x[-1] == pytest.approx(40.0)

import copy
import json

import numpy as np
import pytest

from maneuver_planner.errors import SchemaError, ValidationError
from maneuver_planner.maps import FIXTURES, FamilyKind, ScenarioFamily, generate_scenario, load_fixture, scenario_dict
from maneuver_planner.world import (
    Lane, LaneMap, is_convex, load_scenario, point_in_convex_polygon, scenario_from_dict, scenario_to_json,
)


@pytest.fixture
def data():
    return FIXTURES["empty_road"]()


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixtures_load_and_match_shipped_json(name):
    sc = load_fixture(name)
    assert sc.name == name
    assert json.loads(scenario_to_json(sc)) == json.loads(json.dumps(FIXTURES[name]()))


def test_schema_error_has_path(data):
    bad = copy.deepcopy(data)
    del bad["ego"]["route"]
    with pytest.raises(SchemaError):
        scenario_from_dict(bad)
    bad = copy.deepcopy(data)
    bad["map"]["lanes"][0]["width"] = "wide"
    with pytest.raises(SchemaError) as e:
        scenario_from_dict(bad)
    assert "/map/lanes/0/width" in str(e.value)


def test_invalid_json(tmp_path):
    f = tmp_path / "x.json"
    f.write_text("{not json")
    with pytest.raises(SchemaError):
        load_scenario(f)


def test_unknown_route_lane(data):
    bad = copy.deepcopy(data)
    bad["ego"]["route"] = ["nowhere"]
    with pytest.raises(ValidationError) as e:
        scenario_from_dict(bad)
    assert e.value.invariant == "route"


def test_lane_map_invariants():
    line = np.array([[0.0, 0.0], [10.0, 0.0]])
    with pytest.raises(ValidationError):
        LaneMap([Lane("a", line, left="b"), Lane("b", line + [0, 3.5])])
    with pytest.raises(ValidationError):
        LaneMap([Lane("a", line, successors=("zz",))])
    with pytest.raises(ValidationError):
        LaneMap([Lane("a", line, width=0.0)])


def test_goal_region_must_be_convex(data):
    bad = copy.deepcopy(data)
    bad["goal_region"] = [[0, 0], [10, 0], [5, 2], [10, 10], [0, 10]]
    with pytest.raises(ValidationError):
        scenario_from_dict(bad)


def test_polygon_helpers():
    sq = [[0, 0], [1, 0], [1, 1], [0, 1]]
    assert is_convex(sq)
    assert point_in_convex_polygon(sq, 0.5, 0.5)
    assert not point_in_convex_polygon(sq, 1.5, 0.5)


def test_locate_and_chain():
    sc = load_fixture("left_turn")
    m = sc.map
    chain = m.route_chain(sc.ego.route)
    assert len(chain) == 3 and "->" in chain[1]
    e = sc.ego.state
    hit = m.locate(e.x, e.y, e.theta)
    assert hit[0] == sc.ego.route[0] and abs(hit[2]) < 1e-6
    k = sc.ego_route_path.interpolate(np.linspace(0, sc.ego_route_path.length, 400)).kappa
    assert np.max(np.abs(k)) < 0.2


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_generator_is_deterministic(kind):
    fam = ScenarioFamily(kind)
    assert scenario_dict(fam, 42) == scenario_dict(fam, 42)
    assert scenario_dict(fam, 42) != scenario_dict(fam, 43)
    assert generate_scenario(fam, 42).seed == 42


def test_family_range_validation():
    with pytest.raises(ValueError):
        ScenarioFamily(FamilyKind.LEFT_TURN, {"ego_speed": (5.0, 1.0)})

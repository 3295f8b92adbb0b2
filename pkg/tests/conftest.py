import shlex
import sys
from pathlib import Path

import pytest

from dataset_io.trace import TraceHeader
from perception.observation import PerceptionConfig
from pipeline.run_loop import RunConfig, simulate
from policy_harness.binding import BuiltinPolicy
from scenario_dsl.catalog import load_catalog
from scenario_dsl.parser import parse_scenario
from world_engine.engine import ENGINE_VERSION

ROOT = Path(__file__).resolve().parent.parent
CATALOG_DIR = ROOT / "catalog"
AGENTS_DIR = Path(__file__).resolve().parent / "agents"

MINIMAL_SCENARIO = """\
schema_version: 1
scenario:
  id: straight-road
  name: Straight road
  category: BehaviorAnomaly
  description: An empty road with a parked car far ahead.
  map: {template: urban-two-lane, length: 200, speed_limit: 10}
  ego_spawn: {pose: {x: 0.0, y: -1.75, heading: 0.0}, speed: 10.0}
  goal_region: {x_min: 150.0, y_min: -3.5, x_max: 170.0, y_max: 0.0}
  actors:
    - id: parked-car
      true_class: car
      spawn: {x: 60.0, y: 1.75, heading: 3.14159}
      dimensions: {length: 4.5, width: 1.9}
  triggers:
    - id: wake-up
      conditions: [{type: time_at_least, t: 1.0}]
      action:
        type: set_behavior
        actor_id: parked-car
        behavior:
          kind: waypoint_follow
          waypoints: [{x: 60.0, y: 1.75, speed: 5.0}, {x: -10.0, y: 1.75, speed: 5.0}]
  tn: 30.0
  default_seed: 7
"""

# Small perception grid so runs stay quick
FAST_PERCEPTION = PerceptionConfig(lidar_rays=36, lidar_max_range=50.0, raster_cells=32, raster_resolution=1.0)


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(CATALOG_DIR)


@pytest.fixture
def minimal_text():
    return MINIMAL_SCENARIO


@pytest.fixture
def minimal_spec():
    return parse_scenario(MINIMAL_SCENARIO)


@pytest.fixture
def fast_config():
    return RunConfig(perception=FAST_PERCEPTION, channels=("lidar", "detections"))


@pytest.fixture
def raster_config():
    return RunConfig(perception=FAST_PERCEPTION)


@pytest.fixture
def short_run(minimal_spec, raster_config):
    """emergency_brake over the minimal scenario, all channels recorded"""
    header = TraceHeader(
        engine_version=ENGINE_VERSION,
        scenario_id=minimal_spec.id,
        seed=7,
        policy="builtin:emergency_brake",
        dt=raster_config.dt,
        channels=list(raster_config.channels),
        perception=raster_config.perception_dict(),
    )
    return simulate(minimal_spec, 7, BuiltinPolicy("emergency_brake"), header, raster_config)


@pytest.fixture
def agent_policy():
    """exec: selector running one of the agents under tests/agents with this interpreter"""
    def build(script, *args):
        return "exec:" + shlex.join([sys.executable, str(AGENTS_DIR / script)] + list(args))
    return build

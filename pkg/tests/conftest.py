"""Shared fixtures: standard experiment files in a temp workspace."""

import json

import pytest

from sonarsim.datagen import build_pool, build_scenario, synthesize_tasks
from sonarsim.servers import write_pool, write_tasks


@pytest.fixture
def workspace(tmp_path):
    """Standard 15-server pool, 40 tasks, and a short hybrid scenario."""
    pool_path = tmp_path / "pool.json"
    tasks_path = tmp_path / "tasks.jsonl"
    scenario_path = tmp_path / "hybrid.json"
    write_pool(build_pool(5, 10, seed=0), pool_path)
    write_tasks(synthesize_tasks(40, seed=0), tasks_path)
    scenario = build_scenario("hybrid", 5, 10)
    scenario["last_time"] = "4h"
    scenario_path.write_text(json.dumps(scenario, indent=2))
    return {
        "dir": tmp_path,
        "pool": pool_path,
        "tasks": tasks_path,
        "scenario": scenario_path,
    }

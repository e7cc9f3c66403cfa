"""Desk-scale scenario over five master seeds; run with ``pytest -m slow``."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from fedecl.config import parse_config
from fedecl.services.experiment_service import ExperimentService

SCENARIO = Path(__file__).resolve().parents[1] / "scenarios" / "desk_scale.toml"
SEEDS = (0, 1, 2, 3, 4)

pytestmark = pytest.mark.slow


def _service(tmp_path: Path, seed: int) -> ExperimentService:
    overrides = [f"seed={seed}", f"output_dir={tmp_path / f'seed{seed}'}"]
    return ExperimentService(parse_config(SCENARIO, overrides))


@pytest.fixture(scope="module")
def desk_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    runs = {}
    for seed in SEEDS:
        records = _service(root, seed).run()
        runs[seed] = {r.method: r for r in records if r.client == "mean"}
    return runs


def test_desk_partition_has_client_missing_a_class(tmp_path):
    scenario = _service(tmp_path, 0).build_scenario()
    assert any(np.any(client.class_counts == 0) for client in scenario.clients)
    assert scenario.global_counts.tolist()[-1] == 5


def test_method_ordering(desk_runs):
    def mean_overall(method: str) -> float:
        return float(np.mean([desk_runs[seed][method].overall for seed in SEEDS]))

    ecl, tuned, local = mean_overall("ecl"), mean_overall("fedavg_ft"), mean_overall("local")
    assert ecl > tuned > local
    assert ecl - tuned >= 0.03


def test_tail_improvement(desk_runs):
    wins = sum(desk_runs[seed]["ecl"].tail > desk_runs[seed]["fedavg_ft"].tail for seed in SEEDS)
    assert wins >= 4


def test_both_scaling_schemes_reported(desk_runs):
    for seed in SEEDS:
        assert {"ecl", "ecl[no_scaling]", "ecl[lambda=0.5]"} <= set(desk_runs[seed])

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from ..data.datasets import ClientDataset, LabeledDataset
from ..data.grouping import GLOBAL_ONLY
from ..ecl.aggregation import component_logits, predict_batch
from ..ecl.state import PersonalizedState
from ..eval.metrics import Predictor, macro_mean, score
from ..nncore.model import ArchSpec, ModelParams, forward, init_model
from ..nncore.optim import OptState, SGDHyper
from ..nncore.training import train_epochs
from ..schemas.experiment import ExperimentConfig
from ..schemas.records import MetricsRecord
from ..utils.logging import get_logger
from ..utils.seeding import derive_seed

logger = get_logger("eval")

BALANCED_SUFFIX = ":balanced"


def model_predictor(model: ModelParams) -> Predictor:
    return lambda inputs: np.argmax(forward(model, inputs), axis=1)


def state_predictor(state: PersonalizedState) -> Predictor:
    return lambda inputs: predict_batch(inputs, state)


def experts_only_predictor(state: PersonalizedState) -> Predictor:
    """Owned classes read the scaled expert logit alone; the rest read the global logit."""

    def _predict(inputs: np.ndarray) -> np.ndarray:
        scaled, global_logits, owners = component_logits(inputs, state)
        return np.argmax(np.where(owners != GLOBAL_ONLY, scaled, global_logits), axis=1)

    return _predict


def global_retrained_predictor(state: PersonalizedState) -> Predictor:
    return model_predictor(state.retrained_global)


def sweep_method(lam: float) -> str:
    return f"ecl[lambda={lam!r}]"


class EvalService:
    """Scores every method on each client's matched test set and, optionally, the balanced pool.

    ``testsets[k]`` is ``None`` for clients without training data; they are
    left out of every record.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        testsets: Sequence[Optional[LabeledDataset]],
        pool: LabeledDataset,
        reference_counts: Sequence[int],
    ):
        self._config = config
        self._testsets = testsets
        self._pool = pool
        self._reference = reference_counts

    @property
    def seed(self) -> int:
        return self._config.seed

    def _client_ids(self) -> List[int]:
        return [k for k, testset in enumerate(self._testsets) if testset is not None]

    def _score_all(
        self,
        method: str,
        predictors: Sequence[Optional[Predictor]],
        testsets: Sequence[Optional[LabeledDataset]],
    ) -> List[MetricsRecord]:
        records, predictions, labels = [], [], []
        for client_id in self._client_ids():
            testset, predictor = testsets[client_id], predictors[client_id]
            predicted = predictor(testset.features)
            records.append(
                score(
                    predicted,
                    testset.labels,
                    testset.num_classes,
                    method,
                    self.seed,
                    str(client_id),
                    self._reference,
                )
            )
            predictions.append(predicted)
            labels.append(testset.labels)
        if not records:
            logger.warning(f"No client to evaluate for method {method}")
            return []
        weighted = score(
            np.concatenate(predictions),
            np.concatenate(labels),
            self._pool.num_classes,
            method,
            self.seed,
            "weighted",
            self._reference,
        )
        mean = macro_mean(records)
        logger.info(f"{method}: client-macro top-1 {mean.overall:.4f}, tail {mean.tail:.4f}")
        return records + [mean, weighted]

    def evaluate_method(
        self, method: str, predictors: Sequence[Optional[Predictor]]
    ) -> List[MetricsRecord]:
        """Per-client rows plus ``mean`` and ``weighted`` rows, then the ``:balanced`` set."""
        records = self._score_all(method, predictors, self._testsets)
        if self._config.eval.balanced:
            pool_sets = [self._pool if testset is not None else None for testset in self._testsets]
            records += self._score_all(method + BALANCED_SUFFIX, predictors, pool_sets)
        return records

    def evaluate_fedavg(self, global_model: ModelParams) -> List[MetricsRecord]:
        predictor = model_predictor(global_model)
        return self.evaluate_method("fedavg", [predictor] * len(self._testsets))

    def evaluate_ecl(
        self, states: Sequence[PersonalizedState], lambda_sweep: Optional[Sequence[float]] = None
    ) -> List[MetricsRecord]:
        """The configured ensemble, its two endpoints, the other scheme and a lambda sweep."""
        phase2 = self._config.phase2
        sweep = self._config.eval.lambda_sweep if lambda_sweep is None else lambda_sweep
        configured = [state.with_aggregation(phase2.lam, phase2.scaling_scheme) for state in states]

        records = self.evaluate_method("ecl", [state_predictor(state) for state in configured])
        records += self.evaluate_method(
            "global_retrained", [global_retrained_predictor(state) for state in configured]
        )
        records += self.evaluate_method(
            "experts_only", [experts_only_predictor(state) for state in configured]
        )
        if self._config.eval.compare_schemes:
            other = "no_scaling" if phase2.scaling_scheme == "ecl_scaling" else "ecl_scaling"
            records += self.evaluate_method(
                f"ecl[{other}]",
                [state_predictor(state.with_aggregation(scaling_scheme=other)) for state in configured],
            )
        for lam in sweep:
            records += self.evaluate_method(
                sweep_method(lam), [state_predictor(state.with_aggregation(lam=lam)) for state in configured]
            )
        return records

    def run_baseline_local(self, clients: Sequence[ClientDataset], arch: ArchSpec) -> List[MetricsRecord]:
        """Train one model per client from scratch on its own data, then evaluate it."""
        baselines, phase1 = self._config.baselines, self._config.phase1
        hyper = SGDHyper(
            learning_rate=baselines.local_lr, momentum=phase1.momentum, weight_decay=phase1.weight_decay
        )
        predictors: List[Optional[Predictor]] = [None] * len(clients)
        for client in clients:
            if len(client) == 0:
                continue
            init_seed = derive_seed(self.seed, "local.init", client.client_id)
            model = init_model(arch.model_copy(update={"init_seed": init_seed}))
            train_epochs(
                model,
                client,
                epochs=baselines.local_epochs,
                loss_kind="ce",
                batch_size=phase1.batch_size,
                opt=OptState.create(model, hyper),
                shuffle_seed=derive_seed(self.seed, "local", client.client_id),
            )
            predictors[client.client_id] = model_predictor(model)
            logger.debug(f"Local baseline trained for client {client.client_id}")
        return self.evaluate_method("local", predictors)

    def run_baseline_fedavg_ft(
        self, global_model: ModelParams, clients: Sequence[ClientDataset]
    ) -> List[MetricsRecord]:
        """Fine-tune every parameter of the Phase I model per client with CE."""
        phase2 = self._config.phase2
        hyper = SGDHyper(learning_rate=phase2.lr, momentum=phase2.momentum, weight_decay=phase2.weight_decay)
        predictors: List[Optional[Predictor]] = [None] * len(clients)
        for client in clients:
            if len(client) == 0:
                continue
            model = global_model.copy()
            model.unfreeze_all()
            train_epochs(
                model,
                client,
                epochs=phase2.expert_epochs,
                loss_kind="ce",
                batch_size=phase2.batch_size,
                opt=OptState.create(model, hyper),
                shuffle_seed=derive_seed(self.seed, "fedavg_ft", client.client_id),
            )
            predictors[client.client_id] = model_predictor(model)
        return self.evaluate_method("fedavg_ft", predictors)


from __future__ import annotations

import math
from typing import Dict, List

from pydantic import BaseModel, Field


class RoundLog(BaseModel):
    round: int = Field(description="통신 라운드 t")
    lr: float = Field(description="해당 라운드에 사용된 학습률")
    clients: List[int] = Field(description="선택된 클라이언트 S_t (오름차순)")
    losses: Dict[int, float] = Field(
        default_factory=dict, description="클라이언트별 마지막 epoch 평균 손실"
    )


class MetricsRecord(BaseModel):
    method: str
    seed: int
    client: str = Field(description='클라이언트 번호 또는 "mean" / "weighted"')
    overall: float
    head: float
    mid: float
    tail: float
    per_class: List[float] = Field(description="클래스별 정확도 (테스트 표본이 없으면 NaN)")

    def same_values(self, other: "MetricsRecord") -> bool:
        """Compare two records treating NaN entries as equal."""

        def _eq(a: float, b: float) -> bool:
            return (math.isnan(a) and math.isnan(b)) or a == b

        scalars = ("overall", "head", "mid", "tail")
        return (
            self.method == other.method
            and self.seed == other.seed
            and self.client == other.client
            and all(_eq(getattr(self, name), getattr(other, name)) for name in scalars)
            and len(self.per_class) == len(other.per_class)
            and all(_eq(a, b) for a, b in zip(self.per_class, other.per_class))
        )

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Tuple

# int64 products of two residues must stay exact after summing a row
MAX_FIELD_CHAR = 1 << 24


def get_env(name: str, default: str) -> str:
    v = os.getenv(name)
    return v if v else default


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class FieldConfig:
    # characteristic of the prime field F_p used for every matrix
    p: int = 101

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"Field characteristic must be prime, got {self.p}")
        if self.p >= MAX_FIELD_CHAR:
            raise ValueError(f"Field characteristic {self.p} too large (limit {MAX_FIELD_CHAR})")


@dataclass(frozen=True)
class SuiteConfig:
    counit_cases: int = 200
    ff_cases: int = 200
    pipeline_cases: int = 50
    closure_cases: int = 200
    component_cases: int = 100
    interval_cases: int = 100
    # size caps for random data
    max_source_size: int = 10
    max_target_size: int = 8
    max_dim: int = 4
    max_breakpoints: int = 4
    max_staircase_dim: int = 3
    dimensions: Tuple[int, ...] = (1, 2, 3)
    antidiagonal_range: Tuple[int, ...] = field(default_factory=lambda: tuple(range(2, 11)))


DEFAULT_FIELD_CHAR = int(get_env("PERSENC_FIELD_CHAR", "101"))
DEFAULT_SEED = int(get_env("PERSENC_SEED", "0"))
DEFAULT_FIELD = FieldConfig(DEFAULT_FIELD_CHAR)

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any

from .errors import ParameterError

__all__ = [ 'Tolerances', 'DEFAULT_TOLERANCES' ]


@dataclass(frozen=True)
class Tolerances:
    # Eigensolver
    qr_deflation: float = 1e-12
    qr_max_iter: int = 60

    # One-sided Jacobi SVD
    jacobi_max_sweeps: int = 80

    unit_norm: float = 1e-12
    weak_l2: float = 1e-10
    certificate_slack: float = 1e-9
    split_reconstruction: float = 1e-12
    chain_reconstruction: float = 1e-10

    # Singular values / eigenvalue moduli below rank_rtol * scale count as zero
    rank_rtol: float = 1e-10

    # Weak-l2 enumeration on l_1 targets
    phase_grid: int = 8
    max_real_vertex_dim: int = 20
    max_complex_vertex_dim: int = 6

    def __post_init__(self):
        if self.phase_grid < 3:
            raise ParameterError(f'Phase grid needs at least 3 points, got {self.phase_grid}')

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None) -> Tolerances:
        if not d:
            return cls()

        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ParameterError(f'Unknown tolerance keys: {sorted(unknown)}')

        return cls(**d)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


DEFAULT_TOLERANCES = Tolerances()

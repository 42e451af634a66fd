"""
Degradation Registry - Maps each DegradationKind to its operator
"""

import logging
from typing import Any, Dict, List, Optional, Type

import numpy as np

from resshift.core.errors import DegradationError
from resshift.degrade.base import BaseDegradation, DegradedPair
from resshift.degrade.spec import DegradationKind, DegradationSpec

logger = logging.getLogger(__name__)


class DegradationRegistry:
    """Registry of degradation operators"""

    def __init__(self, load_builtin: bool = True):
        self.operators: Dict[DegradationKind, BaseDegradation] = {}
        if load_builtin:
            self._load_builtin_operators()

    def _load_builtin_operators(self):
        """Register the operators shipped with the package"""
        from resshift.degrade.operators import (
            IdentityDegradation,
            InpaintDegradation,
            SuperResDegradation,
        )

        for op_class in (SuperResDegradation, InpaintDegradation, IdentityDegradation):
            self.register_operator(op_class)

    def register_operator(self, op_class: Type[BaseDegradation]):
        """Register an operator class; a later registration replaces an earlier one"""
        if not isinstance(op_class, type) or not issubclass(op_class, BaseDegradation):
            raise ValueError(f"{op_class} is not a subclass of BaseDegradation")
        op = op_class()
        if not op.name or op.kind is None:
            raise ValueError(f"Operator {op_class} must define a name and a kind")
        if op.kind in self.operators:
            logger.debug(f"Replacing degradation operator for '{op.kind.value}'")
        self.operators[op.kind] = op

    def get_operator(self, kind: DegradationKind) -> BaseDegradation:
        op = self.operators.get(DegradationKind(kind))
        if op is None:
            raise DegradationError(f"No operator registered for degradation '{kind}'")
        return op

    def apply(
        self, x0: np.ndarray, spec: DegradationSpec, rng: np.random.Generator
    ) -> DegradedPair:
        return self.get_operator(spec.kind).apply(x0, spec, rng)

    def list_operators(self) -> List[Dict[str, Any]]:
        return [
            {"kind": kind.value, "name": op.name, "description": op.description}
            for kind, op in sorted(self.operators.items(), key=lambda item: item[0].value)
        ]


_default_registry: Optional[DegradationRegistry] = None


def get_registry() -> DegradationRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = DegradationRegistry()
    return _default_registry


def apply_degradation(
    x0: np.ndarray, spec: DegradationSpec, rng: np.random.Generator
) -> DegradedPair:
    """D(x0): dispatch on spec.kind through the default registry"""
    return get_registry().apply(x0, spec, rng)

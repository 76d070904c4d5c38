"""Named fixture tensors used by the CLI generators and the test-suite."""
from __future__ import annotations

import numpy as np

from .models import DiscreteNLocalModel, product_model
from .tensor import CorrelationTensor, Scenario, from_tripartite, mix, product_ct, single_party_ct


def _const(out: int, o: int = 2, m: int = 2) -> np.ndarray:
    t = np.zeros((o, m))
    t[out - 1] = 1.0
    return t


def mixture_components() -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Party tables ``[a, x]`` (order A, C, hub B) of the two products.

    First: A always answers 1, C copies its input.  Second: A always
    answers 2, C flips its input.  B is uniform in both.
    """
    pb = np.full((2, 2), 0.5)
    first = [_const(1), np.eye(2), pb]
    second = [_const(2), np.eye(2)[::-1], pb]
    return first, second


def mixture_component_models() -> tuple[DiscreteNLocalModel, DiscreteNLocalModel]:
    first, second = mixture_components()
    return product_model(first), product_model(second)


def bell_local_nonbilocal() -> CorrelationTensor:
    """Equal mixture of the two products of :func:`mixture_components`.

    Bell local by construction, yet its A-C marginal does not factorize, so
    it lies outside the bilocal set.
    """
    first, second = mixture_components()
    t1 = product_ct([single_party_ct(f) for f in first])
    t2 = product_ct([single_party_ct(f) for f in second])
    return mix([(0.5, t1), (0.5, t2)])


def perfectly_correlated_pt() -> CorrelationTensor:
    """Probability tensor with ``P(1,1,1) = P(2,2,2) = 1/2``."""
    v = np.zeros((2, 2, 2, 1, 1, 1))
    v[0, 0, 0] = v[1, 1, 1] = 0.5
    return from_tripartite(v)


def hub_copies_input() -> CorrelationTensor:
    """Signaling 2/2/2 tensor: edges answer 1, the hub outputs ``x_1``."""
    s = Scenario.tripartite(2, 2, 2, 2, 2, 2)
    v = np.zeros(s.shape)
    for x1 in range(2):
        v[0, 0, x1, x1, :, :] = 1.0
    return CorrelationTensor(s, v)


__all__ = ["bell_local_nonbilocal", "hub_copies_input", "mixture_component_models",
           "mixture_components", "perfectly_correlated_pt"]

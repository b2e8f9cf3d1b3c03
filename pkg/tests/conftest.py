import numpy as np
import pytest

from gpclab.codespec import GpcSpec, validate
from gpclab.poisson import CapabilityDistribution

# reference mixtures with mean capability ~7: the unconstrained LP optimum
# near its threshold and the variant constrained to capabilities >= 4
MIX_TBAR7 = CapabilityDistribution.from_dict(
    {1: 0.070, 2: 0.103, 4: 0.115, 5: 0.179, 10: 0.496, 11: 0.037}
)
MIX_TBAR7_MIN4 = CapabilityDistribution.from_dict({4: 0.495, 9: 0.029, 10: 0.476})


def random_connected_eta(rng: np.random.Generator, L: int) -> np.ndarray:
    """Random symmetric 0/1 coupling matrix whose position graph is connected."""
    eta = np.zeros((L, L), dtype=np.int64)
    order = rng.permutation(L)
    for a, b in zip(order[:-1], order[1:]):  # random spanning tree
        eta[a, b] = eta[b, a] = 1
    for i in range(L):
        for j in range(i, L):
            if rng.random() < 0.3:
                eta[i, j] = eta[j, i] = 1
    if L == 1:
        eta[0, 0] = 1
    return eta


def random_mixture(rng: np.random.Generator, t_max: int) -> CapabilityDistribution:
    k = int(rng.integers(1, min(4, t_max) + 1))
    ts = sorted(rng.choice(np.arange(1, t_max + 1), size=k, replace=False).tolist())
    raw = rng.integers(1, 6, size=k)
    total = int(raw.sum())
    return CapabilityDistribution.from_dict(
        {int(t): int(w) / total for t, w in zip(ts, raw)}
    )


def random_spec(rng: np.random.Generator, L_max: int = 5, t_max: int = 8,
                n_scale: int = 12) -> GpcSpec:
    """Random valid family with random capability assignment."""
    L = int(rng.integers(1, L_max + 1))
    eta = random_connected_eta(rng, L)
    raw = rng.integers(1, 6, size=L)
    gamma = raw / raw.sum()
    tau = tuple(random_mixture(rng, t_max) for _ in range(L))
    spec = GpcSpec(eta=eta, gamma=gamma, tau=tau, n=int(raw.sum()) * n_scale,
                   tau_assignment="random")
    assert validate(spec).ok
    return spec


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)

"""Samplers for the scaling-limit objects.

Brownian bridges and first-passage bridges on [0, m], the Brownian
snake's head (contour, spatial contour), and the limit law of the
decomposition data (dominant scheme, forest masses on the simplex, chain
lengths, node labels, root offset).  On each dominant scheme the limit
density is proportional to

    1{u < m_root} * prod_half-edges (sigma_e/m_e) gauss_{m_e}(sigma_e)
                  * prod_edges gauss_{sigma_e}(l_e),

sampled exactly by per-scheme rejection: masses from a dominating
Dirichlet, each chain length from its exact two-sided kernel, labels as
Gaussians along a spanning tree, and an acceptance factor in (0, 1] that
collects the co-tree label terms and the Dirichlet domination ratios.
The normalization constant is a by-product: closed-form proposal mass
times the mean acceptance, with a Monte Carlo standard error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .scheme import Scheme, enumerate_schemes

# per-edge kernel constants: integral x^2 e^{-x^2/2} dx = sqrt(pi/2) and
# integral x^(3/2) e^{-x^2/2} dx = 2^(1/4) Gamma(5/4)
_C_TREE = (2 * math.pi) ** -1.0 * math.sqrt(math.pi / 2)
_C_COT = (2 * math.pi) ** -1.5 * 2 ** 0.25 * math.gamma(1.25)


@dataclass(frozen=True)
class PathSample:
    """Real-valued function sampled on a uniform grid over [0, lifetime]."""

    lifetime: float
    values: np.ndarray

    def __init__(self, lifetime: float, values):
        object.__setattr__(self, "lifetime", float(lifetime))
        object.__setattr__(self, "values", np.asarray(values, dtype=float))
        assert self.lifetime > 0 and self.values.ndim == 1

    @property
    def grid_size(self) -> int:
        return len(self.values) - 1

    def at(self, t: float) -> float:
        """Linear interpolation, clamped to [0, lifetime]."""
        t = min(max(t, 0.0), self.lifetime)
        x = t / self.lifetime * self.grid_size
        i = int(math.floor(x))
        if i >= self.grid_size:
            return float(self.values[-1])
        frac = x - i
        return float((1 - frac) * self.values[i] + frac * self.values[i + 1])

    def to_csv(self) -> str:
        lines = ["t,value"]
        for i, v in enumerate(self.values):
            lines.append(f"{i * self.lifetime / self.grid_size},{v}")
        return "\n".join(lines) + "\n"


def d_K(f: PathSample, g: PathSample) -> float:
    """|sigma(f) - sigma(g)| + sup_y |f(y ^ sigma_f) - g(y ^ sigma_g)|,
    the sup taken over a common refined grid."""
    span = max(f.lifetime, g.lifetime)
    N = 4 * max(f.grid_size, g.grid_size)
    ts = np.linspace(0.0, span, N + 1)
    gap = max(abs(f.at(t) - g.at(t)) for t in ts)
    return abs(f.lifetime - g.lifetime) + gap


def sample_brownian_bridge(m: float, l0: float, l1: float, N: int, rng) -> PathSample:
    """Exact finite-dimensional Brownian bridge from l0 to l1 on [0, m]."""
    assert m > 0 and N >= 1
    dt = m / N
    w = np.concatenate([[0.0], np.cumsum(rng.normal(0.0, math.sqrt(dt), size=N))])
    ts = np.linspace(0.0, m, N + 1)
    vals = w - ts / m * w[-1] + l0 + (l1 - l0) * ts / m
    return PathSample(m, vals)


def _conditioned_walk(K: int, D: int, rng) -> np.ndarray:
    """Uniform +-1 walk of length K from 0 that first hits -D at step K."""
    from collections import deque

    down = (K + D) // 2
    steps = np.concatenate(
        [np.ones(K - down, dtype=np.int64), -np.ones(down, dtype=np.int64)]
    )
    rng.shuffle(steps)
    pref = np.concatenate([[0], np.cumsum(steps)])
    ext = np.concatenate([pref[:-1] + D, pref[:-1]])
    good = []
    window: deque[int] = deque()
    for p in range(1, 2 * K):
        while window and window[0] < p - K + 1:
            window.popleft()
        if p >= K:
            if not window or ext[window[0]] > ext[p]:
                good.append(p - K)
        while window and ext[window[-1]] >= ext[p]:
            window.pop()
        window.append(p)
    assert len(good) == D
    r = good[int(rng.integers(0, D))]
    return np.concatenate([[0], np.cumsum(np.concatenate([steps[r:], steps[:r]]))])


def sample_fp_bridge(
    m: float, sigma: float, N: int, rng, walk_steps: int | None = None
) -> PathSample:
    """First-passage bridge from 0 to -sigma on [0, m]: strictly above
    -sigma before the endpoint, exactly -sigma at time m.

    Realized as a rescaled +-1 walk conditioned to first hit its depth at
    the last step (cycle-lemma rotation), subsampled to the grid.
    """
    assert m > 0 and sigma > 0 and N >= 1
    K = walk_steps or max(N * N, 10_000)
    D = max(1, round(sigma * math.sqrt(K / m)))
    if (K + D) % 2:
        K += 1
    walk = _conditioned_walk(K, D, rng)
    idx = np.linspace(0, K, N + 1).round().astype(int)
    vals = walk[idx] * (sigma / D)
    vals[0], vals[-1] = 0.0, -sigma
    return PathSample(m, vals)


def sample_snake_head(
    m: float, sigma: float, N: int, rng, exact_gaussian_limit: int = 2000
) -> tuple[PathSample, PathSample]:
    """The pair (F, Z): F a first-passage bridge from sigma to 0 on [0, m]
    and Z zero-mean Gaussian given F with covariance
    inf over [s^s', s v s'] of (F - running-min F).

    N <= exact_gaussian_limit: Cholesky of the exact covariance (with
    jitter retries when rounding makes it non-PSD).  Beyond: a discrete
    snake on the conditioned walk's forest, uniformly labeled and rescaled,
    which has the same limit law.
    """
    fp = sample_fp_bridge(m, sigma, N, rng)
    F = PathSample(m, fp.values + sigma)  # from sigma down to 0
    if N <= exact_gaussian_limit:
        excess = F.values - np.minimum.accumulate(F.values)
        cov = np.empty((N + 1, N + 1))
        for i in range(N + 1):
            row = np.minimum.accumulate(excess[i:])
            cov[i, i:] = row
            cov[i:, i] = row
        jitter = 1e-12 * max(1.0, float(excess.max()))
        for _ in range(7):
            try:
                chol = np.linalg.cholesky(cov + jitter * np.eye(N + 1))
                break
            except np.linalg.LinAlgError:
                jitter *= 100
        else:
            raise np.linalg.LinAlgError("snake covariance not PSD after jitter")
        return F, PathSample(m, chol @ rng.normal(size=N + 1))
    # discrete-snake mode: labels with uniform {-1,0,1} increments on the
    # walk's forest; floor points keep label 0
    K = max(N * N, 10_000)
    D = max(1, round(sigma * math.sqrt(K / m)))
    if (K + D) % 2:
        K += 1
    walk = _conditioned_walk(K, D, rng)
    lab = np.zeros(K + 1)
    stack = [0.0]
    incs = rng.integers(-1, 2, size=K + 1)
    run = 0
    for i in range(1, K + 1):
        if walk[i] > walk[i - 1]:
            stack.append(stack[-1] + incs[i])
        elif walk[i] < run:
            run = walk[i]
            stack = [0.0]
        else:
            stack.pop()
        lab[i] = stack[-1]
    zscale = math.sqrt(1.5 * math.sqrt(m / K))
    idx = np.linspace(0, K, N + 1).round().astype(int)
    return F, PathSample(m, lab[idx] * zscale)


@dataclass(frozen=True)
class SchemeLimitSample:
    """Limit decomposition data: dominant scheme, forest masses per
    half-edge summing to 1, chain length per edge (half-edges 2k and 2k+1
    share entry k), node labels with 0 at the root origin, and the root
    offset u < m_root."""

    scheme: Scheme
    m: tuple[float, ...]
    sigma: tuple[float, ...]
    node_labels: tuple[float, ...]
    u: float

    def validate(self) -> None:
        assert abs(sum(self.m) - 1.0) < 1e-9
        assert all(x > 0 for x in self.sigma)
        assert 0 <= self.u < self.m[self.scheme.map.root]
        vo = self.scheme.map.vertex_of()
        assert self.node_labels[vo[self.scheme.map.root]] == 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "scheme_word": self.scheme.gluing_word(),
                "m": list(self.m),
                "sigma": list(self.sigma),
                "node_labels": list(self.node_labels),
                "u": self.u,
            }
        )


def _mu_setup(g: int) -> list:
    """Per dominant scheme: spanning-tree split and the closed-form log
    proposal mass, in the (edge mass w, split beta) parameterization.

    Writing each edge's two half-edge masses as (w beta, w (1-beta)), the
    limit density over masses becomes an exact Dirichlet(1/2 tree, 1/4
    co-tree, +1 on the root edge) over the w simplex times independent
    Betas for the splits, so only the co-tree label Gaussians are left for
    the accept step.
    """
    from .sampling import _scheme_edges

    out = []
    for s in enumerate_schemes(g):
        if not s.dominant:
            continue
        edges, tree_edges, cotree = _scheme_edges(s)
        tree_set = {h // 2 for h in tree_edges}
        E = s.edge_count
        root_edge = s.map.root // 2
        alpha_w = np.array(
            [0.5 if k in tree_set else 0.25 for k in range(E)]
        )
        alpha_w[root_edge] += 1.0
        n_tree = len(tree_set)
        n_cot = E - n_tree
        # beta normalizers: Uniform for tree, Beta(3/4,3/4) for co-tree;
        # the root edge carries the extra factor gamma from integrating u
        def _lbeta(a, b):
            return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

        log_mass = (
            sum(math.lgamma(a) for a in alpha_w)
            - math.lgamma(float(alpha_w.sum()))
            + n_tree * math.log(_C_TREE)
            + n_cot * math.log(_C_COT)
            + (n_cot - (0 if root_edge in tree_set else 1)) * _lbeta(0.75, 0.75)
            + (
                math.log(0.5)
                if root_edge in tree_set
                else _lbeta(1.75, 0.75)
            )
        )
        out.append(
            {
                "scheme": s,
                "tree_edges": tree_edges,
                "cotree": cotree,
                "tree_set": tree_set,
                "alpha_w": alpha_w,
                "root_edge": root_edge,
                "log_mass": log_mass,
            }
        )
    return out


_MU_CACHE: dict[int, tuple] = {}


def _mu_tables(g: int):
    if g not in _MU_CACHE:
        setups = _mu_setup(g)
        logs = np.array([x["log_mass"] for x in setups])
        w = np.exp(logs - logs.max())
        _MU_CACHE[g] = (setups, w / w.sum(), float(np.exp(logs).sum()))
    return _MU_CACHE[g]


def _mu_propose(g: int, rng):
    """One proposal draw; returns (sample, log acceptance probability)."""
    setups, probs, _ = _mu_tables(g)
    su = setups[int(rng.choice(len(setups), p=probs))]
    s: Scheme = su["scheme"]
    m_map = s.map
    vo = m_map.vertex_of()
    E = s.edge_count
    root_edge = su["root_edge"]
    root_is_even = m_map.root % 2 == 0

    w = rng.dirichlet(su["alpha_w"])
    mvec = np.empty(2 * E)
    for k in range(E):
        if k == root_edge:
            gamma_r = rng.beta(2.0, 1.0) if k in su["tree_set"] else rng.beta(1.75, 0.75)
            beta = gamma_r if root_is_even else 1.0 - gamma_r
        elif k in su["tree_set"]:
            beta = rng.random()
        else:
            beta = rng.beta(0.75, 0.75)
        mvec[2 * k] = w[k] * beta
        mvec[2 * k + 1] = w[k] * (1.0 - beta)

    sigma = np.empty(E)
    for k in range(E):
        ma, mb = mvec[2 * k], mvec[2 * k + 1]
        h = ma * mb / (ma + mb)
        if k in su["tree_set"]:
            x = math.sqrt(rng.gamma(1.5, 2.0))  # chi(3): density ~ x^2 e^(-x^2/2)
        else:
            x = math.sqrt(rng.gamma(1.25, 2.0))  # density ~ x^(3/2) e^(-x^2/2)
        sigma[k] = math.sqrt(h) * x

    labels = [0.0] * m_map.vertex_count()
    for h_e in su["tree_edges"]:
        labels[vo[h_e ^ 1]] = labels[vo[h_e]] + rng.normal(
            0.0, math.sqrt(sigma[h_e // 2])
        )
    log_acc = 0.0
    for h_e in su["cotree"]:
        le = labels[vo[h_e ^ 1]] - labels[vo[h_e]]
        log_acc += -(le * le) / (2 * sigma[h_e // 2])
    u = rng.random() * mvec[m_map.root]
    sample = SchemeLimitSample(s, tuple(mvec), tuple(sigma), tuple(labels), float(u))
    return sample, log_acc


def sample_scheme_limit(g: int, rng) -> SchemeLimitSample:
    """Exact draw from the limit law of the decomposition data."""
    while True:
        sample, log_acc = _mu_propose(g, rng)
        if math.log(max(rng.random(), 5e-324)) < log_acc:
            sample.validate()
            return sample


def sample_mu(g: int, rng) -> SchemeLimitSample:
    """Alias matching the measure's name in the glossary."""
    return sample_scheme_limit(g, rng)


def estimate_upsilon(g: int, rng, proposals: int = 4000) -> tuple[float, float]:
    """Normalization constant of the limit law with its standard error.

    The proposal mass is closed-form, so the constant equals mass times the
    mean acceptance probability; the acceptance probabilities themselves
    (not Bernoulli outcomes) are averaged for a lower-variance estimate.
    """
    _, _, total_mass = _mu_tables(g)
    acc = np.empty(proposals)
    for i in range(proposals):
        _, log_acc = _mu_propose(g, rng)
        acc[i] = math.exp(log_acc)
    return (
        total_mass * float(acc.mean()),
        total_mass * float(acc.std(ddof=1)) / math.sqrt(proposals),
    )

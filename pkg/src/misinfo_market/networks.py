"""Social network construction and agent category placement.

Three topologies are supported: a rewired ring lattice (small world), a
two-block community graph, and a directed preferential-attachment graph
with heavy-tailed out-degrees.  Edges are stored directed with the
convention that an edge ``src -> dst`` means ``dst`` observes ``src``'s
prior mean; undirected topologies are stored symmetrically.

Graphs are generated through networkx behind this module's interface,
then frozen into plain integer arrays so downstream code never touches
graph objects.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import networkx as nx
import numpy as np

from .params import AgentCategory

__all__ = [
    "NetworkError",
    "Placement",
    "ScaleFree",
    "SmallWorld",
    "SocialNetwork",
    "StochasticBlock",
    "TopologyConfig",
    "assign_categories",
    "build_network",
    "network_from_text",
    "network_to_text",
    "scale_free_directed",
    "small_world",
    "stochastic_block",
]


class NetworkError(ValueError):
    """Invalid topology parameters or an impossible placement request."""


class Placement(enum.Enum):
    """How the informed and misinformed agents are positioned."""

    RANDOM = "random"
    HUBS_INFORMED = "hubs_informed"
    HUBS_MISINFORMED = "hubs_misinformed"
    BLOCK_SPLIT = "block_split"


@dataclass(frozen=True)
class SmallWorld:
    density: float = 0.1      # expected edge density; sets the lattice degree
    p_rewire: float = 0.01    # per-edge rewiring probability

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_rewire <= 1.0:
            raise NetworkError(f"p_rewire must be in [0, 1], got {self.p_rewire}")
        if not 0.0 < self.density <= 1.0:
            raise NetworkError(f"density must be in (0, 1], got {self.density}")


@dataclass(frozen=True)
class StochasticBlock:
    partitions: int = 2
    p_intra: float = 0.1      # edge probability within a block
    p_inter: float = 0.001    # edge probability across blocks

    def __post_init__(self) -> None:
        if self.partitions != 2:
            raise NetworkError(
                f"only two partitions are supported, got {self.partitions}"
            )
        for name in ("p_intra", "p_inter"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise NetworkError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class ScaleFree:
    alpha: float = 0.41   # new node -> existing node chosen by in-degree
    beta: float = 0.54    # new edge between existing nodes
    gamma: float = 0.05   # existing node chosen by out-degree -> new node

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise NetworkError(f"{name} must be in [0, 1], got {v}")
        total = self.alpha + self.beta + self.gamma
        if abs(total - 1.0) > 1e-9:
            raise NetworkError(f"alpha + beta + gamma must be 1, got {total}")
        if self.alpha == 0.0 and self.gamma == 0.0:
            raise NetworkError("alpha and gamma cannot both be zero (no growth)")


Variant = Union[SmallWorld, StochasticBlock, ScaleFree]


@dataclass(frozen=True)
class TopologyConfig:
    variant: Variant
    placement: Placement = Placement.RANDOM

    def __post_init__(self) -> None:
        if self.placement is Placement.BLOCK_SPLIT and not isinstance(
            self.variant, StochasticBlock
        ):
            raise NetworkError("block_split placement needs a block topology")


@dataclass(frozen=True)
class SocialNetwork:
    """Immutable directed graph plus one category label per node.

    ``edges[k] = (src, dst)`` means ``dst`` observes ``src``.  Edges are
    unique, self-loop free, and stored in sorted order so equal graphs
    serialize to identical bytes.
    """

    n: int
    edges: np.ndarray                 # (E, 2) int32, lexicographically sorted
    categories: np.ndarray            # (n,) int8 of AgentCategory values
    topology_tag: str = "custom"
    blocks: np.ndarray | None = None  # (n,) block ids for block topologies

    def __post_init__(self) -> None:
        if self.edges.size and (self.edges[:, 0] == self.edges[:, 1]).any():
            raise NetworkError("self-edges are not stored")
        if len(self.categories) != self.n:
            raise NetworkError("one category per node is required")

    # Derived views -------------------------------------------------------

    def in_adjacency(self) -> np.ndarray:
        """Dense (n, n) matrix with A[i, j] = 1 iff i observes j."""
        a = np.zeros((self.n, self.n))
        if self.edges.size:
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def out_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if self.edges.size:
            np.add.at(deg, self.edges[:, 0], 1)
        return deg

    def in_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if self.edges.size:
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def category_counts(self) -> dict[AgentCategory, int]:
        return {
            cat: int((self.categories == cat).sum()) for cat in AgentCategory
        }

    def nodes_of(self, category: AgentCategory) -> np.ndarray:
        return np.flatnonzero(self.categories == category)

    def is_symmetric(self) -> bool:
        fwd = {(int(s), int(d)) for s, d in self.edges}
        return all((d, s) in fwd for s, d in fwd)

    def with_categories(self, categories: np.ndarray) -> "SocialNetwork":
        return SocialNetwork(
            n=self.n,
            edges=self.edges,
            categories=np.asarray(categories, dtype=np.int8),
            topology_tag=self.topology_tag,
            blocks=self.blocks,
        )


def _canonical_edges(pairs) -> np.ndarray:
    """Deduplicated, self-loop-free, lexicographically sorted edge array."""
    uniq = sorted({(int(s), int(d)) for s, d in pairs if int(s) != int(d)})
    if not uniq:
        return np.empty((0, 2), dtype=np.int32)
    return np.array(uniq, dtype=np.int32)


def _symmetric(pairs) -> np.ndarray:
    both = [(s, d) for s, d in pairs] + [(d, s) for s, d in pairs]
    return _canonical_edges(both)


def _unlabeled(n: int) -> np.ndarray:
    return np.full(n, AgentCategory.UNINFORMED, dtype=np.int8)


def small_world(
    n: int, density: float, p_rewire: float, rng: np.random.Generator
) -> SocialNetwork:
    """Rewired ring lattice stored as a symmetric directed graph.

    The lattice degree is the nearest even integer to ``density*(n-1)``;
    each lattice edge is rewired with probability ``p_rewire`` avoiding
    self-loops and duplicate edges.
    """
    k = 2 * int(np.rint(density * (n - 1) / 2.0))
    if k < 2:
        raise NetworkError(
            f"density {density} gives lattice degree {k} < 2 for n={n}"
        )
    if k >= n:
        raise NetworkError(f"lattice degree {k} must be below n={n}")
    graph = nx.watts_strogatz_graph(n, k, p_rewire, seed=rng)
    return SocialNetwork(
        n=n,
        edges=_symmetric(graph.edges()),
        categories=_unlabeled(n),
        topology_tag=f"small_world(density={density},p_rewire={p_rewire})",
    )


def stochastic_block(
    n: int, p_intra: float, p_inter: float, rng: np.random.Generator
) -> SocialNetwork:
    """Two-community Bernoulli graph, blocks of size ceil/floor(n/2)."""
    sizes = [(n + 1) // 2, n // 2]
    probs = [[p_intra, p_inter], [p_inter, p_intra]]
    graph = nx.stochastic_block_model(sizes, probs, seed=rng)
    blocks = np.repeat([0, 1], sizes)
    return SocialNetwork(
        n=n,
        edges=_symmetric(graph.edges()),
        categories=_unlabeled(n),
        topology_tag=f"stochastic_block(p_intra={p_intra},p_inter={p_inter})",
        blocks=blocks,
    )


def scale_free_directed(
    n: int, alpha: float, beta: float, gamma: float, rng: np.random.Generator
) -> SocialNetwork:
    """Directed preferential-attachment graph with exactly ``n`` nodes.

    Growth events: with probability ``alpha`` a new node attaches to an
    existing node chosen by in-degree; with ``beta`` an edge is added
    between existing nodes; with ``gamma`` a new node is attached from an
    existing node chosen by out-degree.  Attachment uses degree + 1
    smoothing, the seed graph is a directed triangle, and parallel edges
    are collapsed.
    """
    ScaleFree(alpha, beta, gamma)  # reuse the range/normalization checks
    if n < 3:
        raise NetworkError(f"scale-free graphs need n >= 3, got {n}")
    graph = nx.scale_free_graph(
        n, alpha=alpha, beta=beta, gamma=gamma,
        delta_in=1.0, delta_out=1.0, seed=rng,
    )
    return SocialNetwork(
        n=n,
        edges=_canonical_edges(graph.edges()),
        categories=_unlabeled(n),
        topology_tag=f"scale_free(alpha={alpha},beta={beta},gamma={gamma})",
    )


def assign_categories(
    net: SocialNetwork,
    frac_informed: float,
    frac_misinformed: float,
    placement: Placement,
    rng: np.random.Generator,
) -> SocialNetwork:
    """Label round(frac*n) nodes per special category under a placement policy.

    RANDOM draws both categories uniformly without replacement.  The hub
    policies give the chosen category the highest out-degree nodes and
    scatter the other special category over random non-hub nodes.
    BLOCK_SPLIT confines informed agents to block 0 and misinformed
    agents to block 1.
    """
    n = net.n
    n_inf = round(frac_informed * n)
    n_mis = round(frac_misinformed * n)
    if n_inf + n_mis > n:
        raise NetworkError(
            f"category counts {n_inf}+{n_mis} exceed population {n}"
        )
    cats = np.full(n, AgentCategory.UNINFORMED, dtype=np.int8)

    if placement is Placement.RANDOM:
        order = rng.permutation(n)
        cats[order[:n_inf]] = AgentCategory.INFORMED
        cats[order[n_inf:n_inf + n_mis]] = AgentCategory.MISINFORMED
    elif placement in (Placement.HUBS_INFORMED, Placement.HUBS_MISINFORMED):
        # Stable sort on negative out-degree: ties broken by node id.
        hubs_first = np.argsort(-net.out_degrees(), kind="stable")
        if placement is Placement.HUBS_INFORMED:
            hub_cat, other_cat, n_hub, n_other = (
                AgentCategory.INFORMED, AgentCategory.MISINFORMED, n_inf, n_mis
            )
        else:
            hub_cat, other_cat, n_hub, n_other = (
                AgentCategory.MISINFORMED, AgentCategory.INFORMED, n_mis, n_inf
            )
        hubs = hubs_first[:n_hub]
        cats[hubs] = hub_cat
        rest = hubs_first[n_hub:]
        picked = rng.choice(len(rest), size=n_other, replace=False)
        cats[rest[picked]] = other_cat
    elif placement is Placement.BLOCK_SPLIT:
        if net.blocks is None:
            raise NetworkError("block_split placement needs a block topology")
        block0 = np.flatnonzero(net.blocks == 0)
        block1 = np.flatnonzero(net.blocks == 1)
        if n_inf > len(block0) or n_mis > len(block1):
            raise NetworkError("special categories do not fit their blocks")
        cats[rng.choice(block0, size=n_inf, replace=False)] = AgentCategory.INFORMED
        cats[rng.choice(block1, size=n_mis, replace=False)] = AgentCategory.MISINFORMED
    else:  # pragma: no cover - enum is exhaustive
        raise NetworkError(f"unknown placement {placement}")

    return net.with_categories(cats)


def build_network(
    n: int,
    topology: TopologyConfig,
    frac_informed: float,
    frac_misinformed: float,
    net_rng: np.random.Generator,
    placement_rng: np.random.Generator,
) -> SocialNetwork:
    """Generate a topology and place agent categories on it."""
    v = topology.variant
    if isinstance(v, SmallWorld):
        net = small_world(n, v.density, v.p_rewire, net_rng)
    elif isinstance(v, StochasticBlock):
        net = stochastic_block(n, v.p_intra, v.p_inter, net_rng)
    elif isinstance(v, ScaleFree):
        net = scale_free_directed(n, v.alpha, v.beta, v.gamma, net_rng)
    else:
        raise NetworkError(f"unknown topology variant {v!r}")
    return assign_categories(
        net, frac_informed, frac_misinformed, topology.placement, placement_rng
    )


# Plain-text serialization ------------------------------------------------


def network_to_text(net: SocialNetwork) -> str:
    """Edge-list text form: 'n <N>', '<src> <dst>' lines, then
    'category <node> <I|M|U>' lines."""
    lines = [f"n {net.n}"]
    lines.extend(f"{int(s)} {int(d)}" for s, d in net.edges)
    lines.extend(
        f"category {i} {AgentCategory(int(c)).letter}"
        for i, c in enumerate(net.categories)
    )
    return "\n".join(lines) + "\n"


def network_from_text(text: str) -> SocialNetwork:
    """Parse the :func:`network_to_text` format."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n "):
        raise NetworkError("network text must start with a 'n <count>' header")
    n = int(lines[0].split()[1])
    edges: list[tuple[int, int]] = []
    categories = np.full(n, AgentCategory.UNINFORMED, dtype=np.int8)
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "category":
            if len(parts) != 3:
                raise NetworkError(f"bad category line: {ln!r}")
            categories[int(parts[1])] = AgentCategory.from_letter(parts[2])
        else:
            if len(parts) != 2:
                raise NetworkError(f"bad edge line: {ln!r}")
            src, dst = int(parts[0]), int(parts[1])
            if not (0 <= src < n and 0 <= dst < n):
                raise NetworkError(f"edge {src}->{dst} outside 0..{n - 1}")
            edges.append((src, dst))
    return SocialNetwork(
        n=n,
        edges=_canonical_edges(edges),
        categories=categories,
        topology_tag="from_text",
    )

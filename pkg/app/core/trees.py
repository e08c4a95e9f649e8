"""
Full Binary Trees
Enumeration, leaf expansion, last simple branching points, exact masses of the
recursive T-partition measures, and the combinatorial identities built on them
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import networkx as nx
from scipy import special

from .errors import BadArgs, CapExceeded, NegativeTime, NotALeaf

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# A shape is () for a leaf and (left, right) for an interior vertex
Shape = Tuple
LEAF: Shape = ()
CHERRY: Shape = (LEAF, LEAF)
MAX_LEAVES = 10
MAX_DECOMPOSITION = 8

Vertex = Union[int, float]
Number = Union[float, Fraction, int]


@lru_cache(maxsize=None)
def leaf_count(shape: Shape) -> int:
    if shape == LEAF:
        return 1
    return leaf_count(shape[0]) + leaf_count(shape[1])


def _root_position(shape: Shape) -> int:
    """In-order position of the root: the size of the left subtree"""
    return 0 if shape == LEAF else 2 * leaf_count(shape[0]) - 1


class FullBinaryTree:
    """
    Rooted full binary tree stored as a networkx DiGraph.

    Vertices are labelled by their in-order position shifted so the root is 0,
    which is the order-preserving embedding into the integers. Edges point from
    parent to child and carry ``side`` = "left" or "right"; nodes carry ``type``
    = "leaf" or "internal".
    """

    def __init__(self, shape: Shape = LEAF):
        self.shape = shape
        self.root_position = _root_position(shape)
        self.graph = nx.DiGraph()
        counter = [0]

        def visit(node: Shape) -> int:
            if node == LEAF:
                label = counter[0] - self.root_position
                counter[0] += 1
                self.graph.add_node(label, type="leaf")
                return label
            left = visit(node[0])
            label = counter[0] - self.root_position
            counter[0] += 1
            right = visit(node[1])
            self.graph.add_node(label, type="internal")
            self.graph.add_edge(label, left, side="left")
            self.graph.add_edge(label, right, side="right")
            return label

        visit(shape)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FullBinaryTree) and self.shape == other.shape

    def __hash__(self) -> int:
        return hash(self.shape)

    def __repr__(self) -> str:
        return f"FullBinaryTree({self.bracket()})"

    def bracket(self) -> str:
        """Bracket notation: '.' for a leaf, '[L R]' for an interior vertex"""

        def render(node: Shape) -> str:
            return "." if node == LEAF else f"[{render(node[0])} {render(node[1])}]"

        return render(self.shape)

    @property
    def root(self) -> int:
        return 0

    @property
    def n_leaves(self) -> int:
        return leaf_count(self.shape)

    @property
    def vertices(self) -> List[int]:
        return sorted(self.graph.nodes)

    @property
    def leaves(self) -> List[int]:
        return sorted(v for v, kind in self.graph.nodes(data="type") if kind == "leaf")

    @property
    def interior(self) -> List[int]:
        return sorted(v for v, kind in self.graph.nodes(data="type") if kind == "internal")

    def is_leaf(self, v: Vertex) -> bool:
        return v in self.graph and self.graph.nodes[v]["type"] == "leaf"

    def children(self, v: int) -> Optional[Tuple[int, int]]:
        if self.is_leaf(v):
            return None
        sides = {self.graph.edges[v, w]["side"]: w for w in self.graph.successors(v)}
        return sides["left"], sides["right"]

    def parent(self, v: int) -> Optional[int]:
        parents = list(self.graph.predecessors(v))
        return parents[0] if parents else None

    def z_embedding(self) -> Dict[int, int]:
        """ι_Z as a map from in-order rank to label"""
        return {rank: label for rank, label in enumerate(self.vertices)}

    def left_subtree(self) -> "FullBinaryTree":
        if self.shape == LEAF:
            raise BadArgs("A single vertex has no subtrees")
        return FullBinaryTree(self.shape[0])

    def right_subtree(self) -> "FullBinaryTree":
        if self.shape == LEAF:
            raise BadArgs("A single vertex has no subtrees")
        return FullBinaryTree(self.shape[1])

    def left_offset(self) -> int:
        """ι_L(v) = v + left_offset() maps T_L's labels into T"""
        return _root_position(self.shape[0]) - self.root_position

    def right_offset(self) -> int:
        """ι_R(v) = v + right_offset() maps T_R's labels into T"""
        return 1 + _root_position(self.shape[1])


@lru_cache(maxsize=None)
def _shapes(n: int) -> Tuple[Shape, ...]:
    if n == 1:
        return (LEAF,)
    result = []
    for left_size in range(1, n):
        for left in _shapes(left_size):
            for right in _shapes(n - left_size):
                result.append((left, right))
    return tuple(result)


def enumerate_trees(n: int) -> List[FullBinaryTree]:
    """
    All full binary trees with n leaves, ordered by (left size, left, right).

    Raises:
        BadArgs: If n < 1
        CapExceeded: If n > 10
    """
    if n < 1:
        raise BadArgs(f"Trees need at least one leaf, got n={n}")
    if n > MAX_LEAVES:
        raise CapExceeded(f"Tree enumeration is capped at {MAX_LEAVES} leaves, got n={n}")
    return [FullBinaryTree(shape) for shape in _shapes(n)]


def _replace_leaf(shape: Shape, index: int) -> Shape:
    if shape == LEAF:
        return CHERRY
    left_leaves = leaf_count(shape[0])
    if index < left_leaves:
        return (_replace_leaf(shape[0], index), shape[1])
    return (shape[0], _replace_leaf(shape[1], index - left_leaves))


def _collapse_cherry(shape: Shape, index: int) -> Shape:
    if shape == CHERRY and index == 0:
        return LEAF
    left_leaves = leaf_count(shape[0])
    if index < left_leaves:
        return (_collapse_cherry(shape[0], index), shape[1])
    return (shape[0], _collapse_cherry(shape[1], index - left_leaves))


def expand_tree(T: FullBinaryTree, v: Vertex) -> FullBinaryTree:
    """
    T′_v: append two leaves to the leaf v.

    Raises:
        NotALeaf: If v is not a leaf of T
    """
    if not T.is_leaf(v):
        raise NotALeaf(f"Vertex {v} is not a leaf of {T.bracket()}")
    index = (int(v) + T.root_position) // 2
    return FullBinaryTree(_replace_leaf(T.shape, index))


def expanded_vertex(T: FullBinaryTree, v: Vertex) -> int:
    """Label in T′_v of the vertex that replaced the leaf v"""
    expanded = expand_tree(T, v)
    return int(v) + T.root_position + 1 - expanded.root_position


def last_simple_branch(T: FullBinaryTree) -> Vertex:
    """B(T): the largest interior vertex whose two children are leaves, −∞ if none"""
    simple = [v for v in T.interior if all(T.is_leaf(w) for w in T.children(v))]
    return max(simple) if simple else -math.inf


def leaves_before(T: FullBinaryTree, v: Vertex) -> int:
    """#v₋ = |{w ∈ ∂T : w < v}|"""
    return sum(1 for w in T.leaves if w < v)


def contract_tree(T: FullBinaryTree) -> FullBinaryTree:
    """T*: remove the two children of B(T)"""
    branch = last_simple_branch(T)
    if branch == -math.inf:
        raise BadArgs("The single-vertex tree cannot be contracted")
    index = (int(branch) - 1 + T.root_position) // 2
    return FullBinaryTree(_collapse_cherry(T.shape, index))


def double_factorial(k: int) -> int:
    """k!! with (−1)!! = 0!! = 1"""
    result = 1
    while k > 1:
        result *= k
        k -= 2
    return result


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


@lru_cache(maxsize=None)
def mass_polynomial(shape: Shape) -> Tuple[Fraction, ...]:
    """
    Coefficients (by degree) of t ↦ mass of m_{T,t}.

    mass(leaf) = 1 and mass(T, t) = t ∫₀ᵗ mass(T_L, s) mass(T_R, t − s) ds, using
    ∫₀ᵗ s^i (t − s)^j ds = i! j! / (i + j + 1)! · t^{i+j+1}.
    """
    if shape == LEAF:
        return (Fraction(1),)
    left, right = mass_polynomial(shape[0]), mass_polynomial(shape[1])
    coefficients = [Fraction(0)] * (len(left) + len(right) + 1)
    for i, a in enumerate(left):
        if a == 0:
            continue
        for j, b in enumerate(right):
            if b == 0:
                continue
            beta = Fraction(math.factorial(i) * math.factorial(j), math.factorial(i + j + 1))
            coefficients[i + j + 2] += a * b * beta
    while len(coefficients) > 1 and coefficients[-1] == 0:
        coefficients.pop()
    return tuple(coefficients)


def _evaluate(coefficients: Tuple[Fraction, ...], t: Number) -> Number:
    exact = isinstance(t, (Fraction, int))
    x = Fraction(t)
    value = sum((c * x ** k for k, c in enumerate(coefficients)), Fraction(0))
    return value if exact else float(value)


def tree_mass(T: FullBinaryTree, t: Number) -> Number:
    """
    Total mass of m_{T,t}.

    Exact (Fraction) for int or Fraction t, otherwise evaluated exactly at the
    binary value of t and rounded once to float.
    """
    if t < 0:
        raise NegativeTime(f"Tree mass needs t >= 0, got {t}")
    return _evaluate(mass_polynomial(T.shape), t)


def mass_bound(n: int, t: Number) -> Number:
    """t^{2n−2}/(2n−3)!!"""
    exact = isinstance(t, (Fraction, int))
    value = Fraction(t) ** (2 * n - 2) / double_factorial(2 * n - 3)
    return value if exact else float(value)


@dataclass
class MassBoundReport:
    n: int
    passed: bool
    equality_trees: List[str]
    max_ratio: Fraction


def mass_bound_check(n: int) -> MassBoundReport:
    """Compare every mass polynomial in 𝒯_n with t^{2n−2}/(2n−3)!! coefficient-wise"""
    bound = Fraction(1, double_factorial(2 * n - 3))
    passed, equality, worst = True, [], Fraction(0)
    for tree in enumerate_trees(n):
        coefficients = mass_polynomial(tree.shape)
        if any(c != 0 for k, c in enumerate(coefficients) if k != 2 * n - 2):
            passed = False
        leading = coefficients[2 * n - 2] if len(coefficients) > 2 * n - 2 else Fraction(0)
        ratio = leading / bound
        worst = max(worst, ratio)
        if ratio > 1:
            passed = False
        elif ratio == 1:
            equality.append(tree.bracket())
    return MassBoundReport(n=n, passed=passed, equality_trees=equality, max_ratio=worst)


def comb_tree(n: int, side: str = "left") -> FullBinaryTree:
    """Caterpillar with n leaves; every interior vertex has a leaf child on the other side"""
    shape = LEAF
    for _ in range(n - 1):
        shape = (shape, LEAF) if side == "left" else (LEAF, shape)
    return FullBinaryTree(shape)


@dataclass
class DecompositionReport:
    n: int
    ok: bool
    produced: int
    expected: int
    duplicates: List[str] = field(default_factory=list)
    missing: List[str] = field(default_factory=list)
    max_multiplicity: int = 0


def check_decomposition(n: int) -> DecompositionReport:
    """
    Verify that 𝒯_{n+1} is the disjoint union over T ∈ 𝒯_n of
    {T′_v : v ∈ ∂T, v ≥ B(T) − 1}.
    """
    if not 1 <= n <= MAX_DECOMPOSITION:
        raise BadArgs(f"Decomposition check supports 1 <= n <= {MAX_DECOMPOSITION}, got {n}")
    produced: Counter = Counter()
    for tree in enumerate_trees(n):
        threshold = last_simple_branch(tree) - 1
        for v in tree.leaves:
            if v >= threshold:
                produced[expand_tree(tree, v).shape] += 1
    expected = set(_shapes(n + 1))
    duplicates = [FullBinaryTree(s).bracket() for s, count in produced.items() if count > 1]
    missing = [FullBinaryTree(s).bracket() for s in expected if s not in produced]
    extra = [s for s in produced if s not in expected]
    ok = not duplicates and not missing and not extra
    if not ok:
        logger.warning(f"Decomposition of T_{n + 1} failed: {len(duplicates)} duplicates, {len(missing)} missing")
    return DecompositionReport(
        n=n,
        ok=ok,
        produced=sum(produced.values()),
        expected=len(expected),
        duplicates=duplicates,
        missing=missing,
        max_multiplicity=max(produced.values(), default=0),
    )


def catalan_identity_check(n: int) -> bool:
    """|𝒯_{n+1}| / (2n − 1)!! = 2ⁿ / (n + 1)! in exact rationals"""
    count = len(_shapes(n + 1)) if n + 1 <= MAX_LEAVES else catalan(n)
    return Fraction(count, double_factorial(2 * n - 1)) == Fraction(2 ** n, math.factorial(n + 1))


def series_bound_check(x: float, terms: int) -> bool:
    """2 Σ_{k=0}^{N} x^k/(k+1)! ≤ 2e^x, evaluated in log space"""
    if x < 0:
        raise BadArgs(f"Series bound needs x >= 0, got {x}")
    if x == 0:
        return True
    k = [i for i in range(terms + 1)]
    logs = [i * math.log(x) - math.lgamma(i + 2) for i in k]
    return float(special.logsumexp(logs)) <= x + 1e-12


def power_series_terms(nbhd_size: int, t: Number, count: int) -> List[Dict[str, Any]]:
    """
    Terms 2·18^{n−1}(2|N|²(1+|N|)²)^{n−1}·|𝒯_n|/(2n−3)!!·t^{2n−2}, n = 1..count,
    next to the closed form 2(λt²)^{n−1}/n!.
    """
    x = Fraction(t)
    lam = 72 * nbhd_size ** 2 * (1 + nbhd_size) ** 2
    rows = []
    for n in range(1, count + 1):
        trees = len(_shapes(n)) if n <= MAX_LEAVES else catalan(n - 1)
        term = (2 * Fraction(18) ** (n - 1) * Fraction(2 * nbhd_size ** 2 * (1 + nbhd_size) ** 2) ** (n - 1)
                * Fraction(trees, double_factorial(2 * n - 3)) * x ** (2 * n - 2))
        closed = 2 * (lam * x ** 2) ** (n - 1) / Fraction(math.factorial(n))
        rows.append({"n": n, "term": term, "closed_form": closed, "equal": term == closed})
    return rows


@dataclass
class TPartition:
    """
    Map S: vertices → [0, ∞) with S(0) = t and S(l(v)) + S(r(v)) = S(v).

    Args:
        tree: The indexing tree
        durations: S, keyed by vertex label
        horizon: t
    """

    tree: FullBinaryTree
    durations: Mapping[int, float]
    horizon: float
    tol: float = 1e-12

    def __post_init__(self):
        durations = dict(self.durations)
        missing = set(self.tree.vertices) - set(durations)
        if missing:
            raise BadArgs(f"T-partition misses vertices {sorted(missing)}")
        if any(value < 0 for value in durations.values()):
            raise BadArgs("T-partition durations must be nonnegative")
        scale = max(1.0, abs(self.horizon))
        if abs(durations[0] - self.horizon) > self.tol * scale:
            raise BadArgs(f"S(0) = {durations[0]} differs from t = {self.horizon}")
        for v in self.tree.interior:
            left, right = self.tree.children(v)
            if abs(durations[left] + durations[right] - durations[v]) > self.tol * scale:
                raise BadArgs(f"S is not additive at vertex {v}")
        self.durations = durations

    def lower(self, v: Vertex) -> float:
        """S̲(v) = Σ_{w ∈ ∂T, w < v} S(w)"""
        return float(sum(self.durations[w] for w in self.tree.leaves if w < v))

    def upper(self, v: Vertex) -> float:
        """S̄(v) = Σ_{w ∈ ∂T, w ≤ v} S(w)"""
        return float(sum(self.durations[w] for w in self.tree.leaves if w <= v))

    def breakpoints(self) -> List[float]:
        """0 = S̲(v_*) ≤ … ≤ S̲(v^*) ≤ t"""
        return [self.lower(v) for v in self.tree.leaves] + [self.lower(math.inf)]


def uniform_partition(tree: FullBinaryTree, t: float) -> TPartition:
    """Split every interval in proportion to the leaf counts of the two subtrees"""
    durations: Dict[int, float] = {0: float(t)}
    for v in sorted(tree.vertices, key=lambda w: nx.shortest_path_length(tree.graph, 0, w)):
        children = tree.children(v)
        if children is None:
            continue
        left, right = children
        left_leaves = sum(1 for w in nx.descendants(tree.graph, left) | {left} if tree.is_leaf(w))
        right_leaves = sum(1 for w in nx.descendants(tree.graph, right) | {right} if tree.is_leaf(w))
        share = durations[v] * left_leaves / (left_leaves + right_leaves)
        durations[left], durations[right] = share, durations[v] - share
    return TPartition(tree, durations, float(t))


def glue_partitions(tree: FullBinaryTree, left: TPartition, t: float, right: TPartition) -> TPartition:
    """(S_L, t, S_R): the T-partition of [0, t] with S_L on T_L and S_R on T_R"""
    if tree.shape == LEAF:
        raise BadArgs("Gluing needs a tree with two subtrees")
    if left.tree.shape != tree.shape[0] or right.tree.shape != tree.shape[1]:
        raise BadArgs("Partitions do not match the subtrees of the tree")
    durations = {0: float(t)}
    durations.update({v + tree.left_offset(): s for v, s in left.durations.items()})
    durations.update({v + tree.right_offset(): s for v, s in right.durations.items()})
    return TPartition(tree, durations, float(t))

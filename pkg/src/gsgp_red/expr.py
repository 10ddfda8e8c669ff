"""Expression trees over ``{add, sub, mul, aq}`` with variable and constant leaves.

Trees are immutable and may share subtrees. Node count and depth are computed
once at construction, so they stay O(1) even for heavily shared trees. All
traversals are iterative: left-deep sums produced by the reduced engine can be
far deeper than the interpreter's recursion limit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

OPS = ("add", "sub", "mul", "aq")
_INFIX = {"add": "+", "sub": "-", "mul": "*"}
# larger subtrees recompute their key on demand; caching them costs O(size * depth) memory
_KEY_CACHE_MAX_NODES = 4096


class EvaluationError(ArithmeticError):
    """An expression produced a non-finite value."""

    def __init__(self, message: str, path: tuple[int, ...] = (), row: int | None = None):
        super().__init__(message)
        self.path = path
        self.row = row


class InputShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Var:
    index: int
    size: int = field(default=1, init=False, repr=False, compare=False)
    depth: int = field(default=1, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"variable index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class Const:
    value: float
    size: int = field(default=1, init=False, repr=False, compare=False)
    depth: int = field(default=1, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"constant must be finite, got {self.value!r}")
        # -0.0 and 0.0 behave identically under add/sub/mul/aq; keep one key for both
        object.__setattr__(self, "value", float(self.value) + 0.0)


@dataclass(frozen=True)
class Func:
    op: str
    left: "Expr"
    right: "Expr"
    size: int = field(init=False, repr=False, compare=False)
    depth: int = field(init=False, repr=False, compare=False)
    _key: str | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown function symbol {self.op!r}")
        object.__setattr__(self, "size", 1 + self.left.size + self.right.size)
        object.__setattr__(self, "depth", 1 + max(self.left.depth, self.right.depth))


Expr = Union[Func, Var, Const]


def add(a: Expr, b: Expr) -> Func:
    return Func("add", a, b)


def sub(a: Expr, b: Expr) -> Func:
    return Func("sub", a, b)


def mul(a: Expr, b: Expr) -> Func:
    return Func("mul", a, b)


def aq(a: Expr, b: Expr) -> Func:
    return Func("aq", a, b)


def node_count(expr: Expr) -> int:
    return expr.size


def depth(expr: Expr) -> int:
    return expr.depth


def postorder(expr: Expr) -> Iterator[Expr]:
    stack: list[tuple[Expr, bool]] = [(expr, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Func) and not expanded:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))
        else:
            yield node


def preorder(expr: Expr) -> Iterator[Expr]:
    stack: list[Expr] = [expr]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Func):
            stack.append(node.right)
            stack.append(node.left)


def max_variable_index(expr: Expr) -> int:
    """Largest variable index used by ``expr``, or -1 when it has none."""
    return max((n.index for n in preorder(expr) if isinstance(n, Var)), default=-1)


def _path_to(expr: Expr, target: Expr) -> tuple[int, ...]:
    stack: list[tuple[Expr, tuple[int, ...]]] = [(expr, ())]
    while stack:
        node, path = stack.pop()
        if node is target:
            return path
        if isinstance(node, Func):
            stack.append((node.right, path + (1,)))
            stack.append((node.left, path + (0,)))
    return ()


def _apply_scalar(op: str, a: float, b: float) -> float:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    return a / math.sqrt(1.0 + b * b)


def _apply_vector(op: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    return a / np.sqrt(1.0 + b * b)


def evaluate(expr: Expr, row: Sequence[float]) -> float:
    """Value of ``expr`` at a single input row.

    Raises:
        InputShapeError: a variable index is out of range for ``row``.
        EvaluationError: some node evaluates to a non-finite value; ``path``
            holds the child indices (0 = left, 1 = right) from the root.
    """
    d = len(row)
    values: list[float] = []
    for node in postorder(expr):
        if isinstance(node, Var):
            if node.index >= d:
                raise InputShapeError(f"variable x{node.index} but row has {d} entries")
            v = float(row[node.index])
        elif isinstance(node, Const):
            v = node.value
        else:
            b = values.pop()
            a = values.pop()
            v = _apply_scalar(node.op, a, b)
        if not math.isfinite(v):
            path = _path_to(expr, node)
            raise EvaluationError(f"non-finite value {v} at node path {path}", path=path)
        values.append(v)
    return values[0]


def semantics(expr: Expr, X: np.ndarray, *, check: bool = True) -> np.ndarray:
    """Output vector of ``expr`` over every row of ``X`` (shape ``(n, d)``).

    With ``check=False`` non-finite values are returned as-is; engines use
    this and map the individual to the worst fitness instead of raising.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputShapeError(f"expected a 2-D feature matrix, got shape {X.shape}")
    n, d = X.shape
    values: list[np.ndarray] = []
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for node in postorder(expr):
            if isinstance(node, Var):
                if node.index >= d:
                    raise InputShapeError(f"variable x{node.index} but inputs have {d} columns")
                v = X[:, node.index]
            elif isinstance(node, Const):
                v = np.full(n, node.value)
            else:
                b = values.pop()
                a = values.pop()
                v = _apply_vector(node.op, a, b)
            if check:
                bad = ~np.isfinite(v)
                if bad.any():
                    row = int(np.flatnonzero(bad)[0])
                    path = _path_to(expr, node)
                    raise EvaluationError(
                        f"non-finite value at node path {path}, row {row}", path=path, row=row
                    )
            values.append(v)
    out = values[0]
    # leaves return views into X; callers may mutate the result
    return np.array(out, dtype=float, copy=True)


def canonical_key(expr: Expr) -> str:
    """Prefix serialization; equal keys iff the trees are identical node for node.

    Constants are written with ``float.hex`` so the key is exact to the bit.
    """
    if isinstance(expr, Func) and expr._key is not None:
        return expr._key
    parts: list[str] = []
    stack: list[tuple[Expr, bool]] = [(expr, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Var):
            parts.append(f"x{node.index}")
        elif isinstance(node, Const):
            parts.append(node.value.hex())
        elif node._key is not None:
            parts.append(node._key)
        elif not expanded:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))
        else:
            b = parts.pop()
            a = parts.pop()
            key = f"({node.op} {a} {b})"
            if node.size <= _KEY_CACHE_MAX_NODES:
                object.__setattr__(node, "_key", key)
            parts.append(key)
    return parts[0]


def to_prefix(expr: Expr) -> str:
    return canonical_key(expr)


def to_infix(expr: Expr) -> str:
    parts: list[str] = []
    for node in postorder(expr):
        if isinstance(node, Var):
            parts.append(f"x{node.index}")
        elif isinstance(node, Const):
            parts.append(repr(node.value))
        else:
            b = parts.pop()
            a = parts.pop()
            if node.op == "aq":
                parts.append(f"aq({a}, {b})")
            else:
                parts.append(f"({a} {_INFIX[node.op]} {b})")
    return parts[0]


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_prefix(text: str) -> Expr:
    """Inverse of :func:`canonical_key`. Accepts hex or decimal constants."""
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ValueError("empty expression")
    # each frame: [op, children]
    frames: list[list] = []
    result: Expr | None = None
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "(":
            if i + 1 >= len(tokens) or tokens[i + 1] not in OPS:
                raise ValueError(f"expected function symbol after '(' at token {i}")
            frames.append([tokens[i + 1], []])
            i += 2
            continue
        if tok == ")":
            if not frames:
                raise ValueError("unbalanced ')'")
            op, children = frames.pop()
            if len(children) != 2:
                raise ValueError(f"{op} expects 2 arguments, got {len(children)}")
            node: Expr = Func(op, children[0], children[1])
        elif tok.startswith("x") and tok[1:].isdigit():
            node = Var(int(tok[1:]))
        else:
            try:
                value = float.fromhex(tok) if "0x" in tok.lower() else float(tok)
            except ValueError:
                raise ValueError(f"bad token {tok!r}") from None
            node = Const(value)
        if frames:
            frames[-1][1].append(node)
        elif result is None:
            result = node
        else:
            raise ValueError("trailing tokens after expression")
        i += 1
    if frames or result is None:
        raise ValueError("unbalanced '('")
    return result


def subtree_at(expr: Expr, index: int) -> Expr:
    """Node at preorder position ``index`` (root is 0)."""
    node = expr
    while index:
        if not isinstance(node, Func):
            raise IndexError(index)
        if index <= node.left.size:
            node, index = node.left, index - 1
        else:
            node, index = node.right, index - 1 - node.left.size
    return node


def replace_at(expr: Expr, index: int, new: Expr) -> Expr:
    """Copy of ``expr`` with the preorder-``index`` subtree swapped for ``new``."""
    if not 0 <= index < expr.size:
        raise IndexError(index)
    spine: list[tuple[Func, bool]] = []
    node = expr
    while index:
        assert isinstance(node, Func)
        if index <= node.left.size:
            spine.append((node, False))
            node, index = node.left, index - 1
        else:
            spine.append((node, True))
            node, index = node.right, index - 1 - node.left.size
    out = new
    for parent, went_right in reversed(spine):
        out = Func(parent.op, parent.left, out) if went_right else Func(parent.op, out, parent.right)
    return out


# --- random generation -----------------------------------------------------


def _terminal(n_features: int, erc_range: tuple[float, float], rng: np.random.Generator) -> Expr:
    # d variable slots plus one ERC slot
    slot = int(rng.integers(n_features + 1))
    if slot < n_features:
        return Var(slot)
    lo, hi = erc_range
    return Const(float(rng.uniform(lo, hi)))


def _random_tree(
    max_depth: int,
    n_features: int,
    erc_range: tuple[float, float],
    rng: np.random.Generator,
    full: bool,
) -> Expr:
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if n_features < 1:
        raise ValueError("need at least one feature")
    p_func = len(OPS) / (len(OPS) + n_features + 1)

    def build(level: int) -> Expr:
        if level < max_depth and (full or rng.random() < p_func):
            op = OPS[int(rng.integers(len(OPS)))]
            left = build(level + 1)
            right = build(level + 1)
            return Func(op, left, right)
        return _terminal(n_features, erc_range, rng)

    return build(1)


def grow(
    max_depth: int,
    n_features: int,
    erc_range: tuple[float, float] = (-1.0, 1.0),
    rng: np.random.Generator | None = None,
) -> Expr:
    """Grow-method random tree of depth at most ``max_depth``.

    Interior levels pick a function with probability ``4 / (4 + d + 1)``;
    terminals are one of the ``d`` variables or an ERC, uniformly.
    """
    rng = np.random.default_rng() if rng is None else rng
    return _random_tree(max_depth, n_features, erc_range, rng, full=False)


def full(
    max_depth: int,
    n_features: int,
    erc_range: tuple[float, float] = (-1.0, 1.0),
    rng: np.random.Generator | None = None,
) -> Expr:
    rng = np.random.default_rng() if rng is None else rng
    return _random_tree(max_depth, n_features, erc_range, rng, full=True)


def ramped_half_and_half(
    pop_size: int,
    max_depth: int,
    n_features: int,
    erc_range: tuple[float, float] = (-1.0, 1.0),
    rng: np.random.Generator | None = None,
) -> list[Expr]:
    """Initial population ramped over depths ``2..max_depth``.

    Individual ``i`` uses depth ``ramp[(i // 2) % len(ramp)]`` and alternates
    grow (even ``i``) and full (odd ``i``).
    """
    if pop_size < 2:
        raise ValueError("pop_size must be >= 2")
    rng = np.random.default_rng() if rng is None else rng
    ramp = list(range(2, max_depth + 1)) if max_depth >= 2 else [1]
    pop = []
    for i in range(pop_size):
        d = ramp[(i // 2) % len(ramp)]
        pop.append(_random_tree(d, n_features, erc_range, rng, full=bool(i % 2)))
    return pop

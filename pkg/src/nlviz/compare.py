"""Vector normalization and exact-match comparison of plotted data.

Both sides of a comparison are normalized the same way before an
element-wise equality check: calendar labels are canonicalized, vectors are
sorted by ascending y unless the query itself asked for an ordering, and
numbers are cast to float and rounded to five decimal places. Two opt-in
relaxations exist: zero-fill (missing zero-valued categories are inserted)
and multiset ties (tied-y runs compare as multisets).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources
from pathlib import Path

XValue = str | int | float

_SORT_KEYWORDS = ("sort", "order")
_FIVE_DP = Decimal("0.00001")


@dataclass(frozen=True)
class VectorPair:
    x: tuple[XValue, ...]
    y: tuple[float | int, ...]

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ValueError(f"|x| = {len(self.x)} but |y| = {len(self.y)}")


@dataclass(frozen=True)
class Divergence:
    index: int
    left: object
    right: object


@dataclass(frozen=True)
class CompareVerdict:
    result: str  # Match | Mismatch
    diff: Divergence | None = None

    @property
    def matched(self) -> bool:
        return self.result == "Match"


def _default_alias_path() -> Path:
    return Path(str(resources.files("nlviz").joinpath("data/calendar_aliases.txt")))


def load_alias_table(path: str | Path | None = None) -> dict[str, str]:
    """Parse the alias file: canonical form first, aliases after, per line."""
    text = Path(path or _default_alias_path()).read_text(encoding="utf-8")
    table: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        canonical = tokens[0]
        table[canonical.lower()] = canonical
        for alias in tokens[1:]:
            table[alias.lower()] = canonical
    return table


_DEFAULT_ALIASES: dict[str, str] | None = None


def default_aliases() -> dict[str, str]:
    global _DEFAULT_ALIASES
    if _DEFAULT_ALIASES is None:
        _DEFAULT_ALIASES = load_alias_table()
    return _DEFAULT_ALIASES


def canonicalize_label(value: XValue, aliases: dict[str, str] | None = None) -> XValue:
    if not isinstance(value, str):
        return value
    table = aliases if aliases is not None else default_aliases()
    return table.get(value.strip().lower(), value)


def round_5dp(value: float | int) -> float:
    """Round half away from zero at the fifth decimal place."""
    quantized = Decimal(repr(float(value))).quantize(_FIVE_DP, rounding=ROUND_HALF_UP)
    return float(quantized)


def query_requests_ordering(query: str) -> bool:
    """Case-insensitive substring test for the 'sort'/'order' keywords."""
    lowered = query.lower()
    return any(kw in lowered for kw in _SORT_KEYWORDS)


def _x_sort_key(value: XValue) -> tuple[int, float, str]:
    # Total order across mixed text/number x values for stable tie-breaking.
    if isinstance(value, (int, float)):
        return (0, float(value), "")
    return (1, 0.0, str(value))


def normalize(pair: VectorPair, query: str,
              aliases: dict[str, str] | None = None) -> VectorPair:
    """Apply calendar canonicalization, conditional ascending-y sort, and
    5dp float rounding. Idempotent: the sort keys on rounded y values."""
    xs = [canonicalize_label(x, aliases) for x in pair.x]
    ys = [round_5dp(y) for y in pair.y]
    if not query_requests_ordering(query):
        paired = sorted(zip(xs, ys), key=lambda p: (p[1], _x_sort_key(p[0])))
        xs = [p[0] for p in paired]
        ys = [p[1] for p in paired]
    return VectorPair(x=tuple(xs), y=tuple(ys))


def _cells_equal(a: object, b: object) -> bool:
    a_num = isinstance(a, (int, float))
    b_num = isinstance(b, (int, float))
    if a_num != b_num:
        return False
    if a_num:
        return float(a) == float(b)
    return str(a) == str(b)


def compare(a: VectorPair, b: VectorPair) -> CompareVerdict:
    """Element-wise equality over (x, y); both sides must be pre-normalized."""
    n = min(len(a.x), len(b.x))
    for i in range(n):
        if not _cells_equal(a.x[i], b.x[i]):
            return CompareVerdict("Mismatch", Divergence(i, a.x[i], b.x[i]))
        if not _cells_equal(a.y[i], b.y[i]):
            return CompareVerdict("Mismatch", Divergence(i, a.y[i], b.y[i]))
    if len(a.x) != len(b.x):
        return CompareVerdict(
            "Mismatch",
            Divergence(n, f"length {len(a.x)}", f"length {len(b.x)}"),
        )
    return CompareVerdict("Match")


def zero_fill(a: VectorPair, b: VectorPair) -> tuple[VectorPair, VectorPair]:
    """Insert categories one side lists with y=0 but the other omits."""
    def fill(target: VectorPair, source: VectorPair) -> VectorPair:
        have = {_x_key(x) for x in target.x}
        extra = [
            (x, 0.0)
            for x, y in zip(source.x, source.y)
            if float(y) == 0.0 and _x_key(x) not in have
        ]
        if not extra:
            return target
        return VectorPair(
            x=target.x + tuple(e[0] for e in extra),
            y=target.y + tuple(e[1] for e in extra),
        )

    return fill(a, b), fill(b, a)


def _x_key(value: XValue) -> object:
    return float(value) if isinstance(value, (int, float)) else str(value)


def _compare_multiset_ties(a: VectorPair, b: VectorPair) -> CompareVerdict:
    """Equal-y runs compare as multisets of x; y vectors must still be identical."""
    if len(a.y) != len(b.y):
        return compare(a, b)
    for i, (ya, yb) in enumerate(zip(a.y, b.y)):
        if not _cells_equal(ya, yb):
            return CompareVerdict("Mismatch", Divergence(i, ya, yb))
    i = 0
    n = len(a.y)
    while i < n:
        j = i
        while j < n and _cells_equal(a.y[j], a.y[i]):
            j += 1
        left = sorted((_x_sort_key(x) for x in a.x[i:j]))
        right = sorted((_x_sort_key(x) for x in b.x[i:j]))
        if left != right:
            return CompareVerdict(
                "Mismatch",
                Divergence(i, list(a.x[i:j]), list(b.x[i:j])),
            )
        i = j
    return CompareVerdict("Match")


def evaluate_vectors(
    generated: VectorPair,
    reference: VectorPair,
    query: str,
    *,
    zero_fill_mode: bool = False,
    multiset_ties: bool = False,
    aliases: dict[str, str] | None = None,
) -> CompareVerdict:
    """Full adjustment-and-compare flow for one generated/reference pair."""
    gen = normalize(generated, query, aliases)
    ref = normalize(reference, query, aliases)
    if zero_fill_mode:
        gen, ref = zero_fill(gen, ref)
        gen = normalize(gen, query, aliases)
        ref = normalize(ref, query, aliases)
    if multiset_ties:
        return _compare_multiset_ties(gen, ref)
    return compare(gen, ref)

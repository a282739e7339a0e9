"""Hierarchical 4-axis class codes and their normalized error score.

A code has four hierarchical axes (T, D, A, B) of lengths 4, 3, 3, 3,
rendered as ``TTTT-DDD-AAA-BBB``. Each position holds a label character
in [0-9a-z] or the wildcard ``*`` meaning "not specified". Comparing a
predicted code against a truth code walks each axis left to right:

* a wrong position makes every later position of that axis wrong;
* a predicted wildcard makes every later position "don't know";
* a truth wildcard ends scoring for that axis (no error is counted, and
  the rest of the axis is treated as not specified on both sides).

Per position the error weight is 0 (agree), 0.5 (don't know) or 1
(disagree), scaled by 1/branching-factor and 1/depth, and each axis is
normalized so a fully wrong axis scores exactly 0.25. The four axes sum
to a code error in [0, 1].
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .errors import MalformedCode, MalformedTaxonomy, TaxonomyGap

AXIS_NAMES = ("T", "D", "A", "B")
AXIS_LENGTHS = (4, 3, 3, 3)
WILDCARD = "*"

_LABEL_CHARS = frozenset("0123456789abcdefghijklmnopqrstuvwxyz")
_UNIFORM_RE = re.compile(r"^uniform:(\d+)$")

# Fallback branching factor when no taxonomy tree is supplied: the size
# of the digit alphabet. An approximation; supply a tree file for exact
# scores.
DEFAULT_UNIFORM_BRANCHING = 10


class Verdict(Enum):
    """Per-position comparison outcome."""

    AGREE = 0.0
    DONT_KNOW = 0.5
    DISAGREE = 1.0

    @property
    def weight(self) -> float:
        return self.value


@dataclass(frozen=True)
class IrmaCode:
    """A validated 4-axis class code."""

    axes: tuple[str, str, str, str]

    def __post_init__(self):
        if len(self.axes) != len(AXIS_LENGTHS):
            raise MalformedCode(
                f"expected {len(AXIS_LENGTHS)} axes, got {len(self.axes)}")
        for i, (axis, expected) in enumerate(zip(self.axes, AXIS_LENGTHS)):
            if len(axis) != expected:
                raise MalformedCode(
                    f"axis {AXIS_NAMES[i]}: expected {expected} characters, "
                    f"got {len(axis)} in {axis!r}")
            for j, ch in enumerate(axis):
                if ch != WILDCARD and ch not in _LABEL_CHARS:
                    raise MalformedCode(
                        f"axis {AXIS_NAMES[i]} position {j + 1}: "
                        f"illegal character {ch!r}")

    @classmethod
    def parse(cls, text: str) -> "IrmaCode":
        if not text:
            raise MalformedCode("empty code string")
        return cls(tuple(text.split("-")))

    def render(self) -> str:
        return "-".join(self.axes)

    def __str__(self) -> str:
        return self.render()


def parse_code(text: str) -> IrmaCode:
    """Parse ``TTTT-DDD-AAA-BBB`` into a validated code."""
    return IrmaCode.parse(text)


class Taxonomy:
    """Per-axis branching factors, from a label tree or a uniform constant.

    Tree mode maps (axis index, code prefix) to the string of child
    labels available at that node; the branching factor for position i
    of an axis is the child count at the node reached by the first i-1
    truth characters. Uniform mode assigns one constant factor to every
    position, as an approximation for when no tree file is available.
    """

    def __init__(self, uniform_b: int | None = None,
                 tree: Mapping[tuple[int, str], str] | None = None):
        if (uniform_b is None) == (tree is None):
            raise ValueError("exactly one of uniform_b and tree is required")
        if uniform_b is not None and uniform_b < 1:
            raise ValueError(f"uniform branching factor must be >= 1, got {uniform_b}")
        if tree is not None:
            for (axis, prefix), children in tree.items():
                if not children:
                    raise MalformedTaxonomy(
                        f"axis {axis} prefix {prefix!r}: no child labels")
        self.uniform_b = uniform_b
        self.tree = dict(tree) if tree is not None else None

    @classmethod
    def uniform(cls, b: int = DEFAULT_UNIFORM_BRANCHING) -> "Taxonomy":
        return cls(uniform_b=b)

    @classmethod
    def load(cls, path) -> "Taxonomy":
        """Load a taxonomy file.

        The file is either a one-line ``uniform:B`` descriptor or a tree:
        one record per line, ``axis-index<TAB>prefix<TAB>child-labels``
        with a 0-based axis index and an empty prefix for the root.
        Lines starting with ``#`` are comments.
        """
        lines = []
        for lineno, rawline in enumerate(Path(path).read_text().splitlines(), start=1):
            line = rawline.strip()
            if not line or line.startswith("#"):
                continue
            lines.append((lineno, line))
        if len(lines) == 1 and _UNIFORM_RE.match(lines[0][1]):
            return cls.uniform(int(_UNIFORM_RE.match(lines[0][1]).group(1)))
        tree = {}
        for lineno, line in lines:
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedTaxonomy(
                    f"{path}:{lineno}: expected axis<TAB>prefix<TAB>children")
            axis_text, prefix, children = parts
            try:
                axis = int(axis_text)
            except ValueError:
                raise MalformedTaxonomy(
                    f"{path}:{lineno}: bad axis index {axis_text!r}") from None
            if not 0 <= axis < len(AXIS_NAMES):
                raise MalformedTaxonomy(f"{path}:{lineno}: axis index {axis} out of range")
            if not children:
                raise MalformedTaxonomy(f"{path}:{lineno}: empty child labels")
            if (axis, prefix) in tree:
                raise MalformedTaxonomy(
                    f"{path}:{lineno}: duplicate node axis {axis} prefix {prefix!r}")
            tree[(axis, prefix)] = children
        if not tree:
            raise MalformedTaxonomy(f"{path}: no taxonomy records")
        return cls(tree=tree)

    @classmethod
    def from_string(cls, value: str) -> "Taxonomy":
        """Resolve a config value: ``uniform:B`` inline, else a file path."""
        m = _UNIFORM_RE.match(value)
        if m:
            return cls.uniform(int(m.group(1)))
        return cls.load(value)

    def branching(self, axis: int, prefix: str) -> int:
        """Number of labels available at the node reached by ``prefix``."""
        if self.uniform_b is not None:
            return self.uniform_b
        children = self.tree.get((axis, prefix))
        if children is None:
            raise TaxonomyGap(
                f"no taxonomy node for axis {AXIS_NAMES[axis]} prefix {prefix!r}")
        return len(children)


def axis_verdicts(truth_axis: str, predicted_axis: str) -> list[Verdict]:
    """Position verdicts for one axis, with left-to-right propagation."""
    if len(truth_axis) != len(predicted_axis):
        raise MalformedCode(
            f"axis length mismatch: {truth_axis!r} vs {predicted_axis!r}")
    verdicts = []
    disagreed = False
    dont_know = False
    truth_unspecified = False
    for t, p in zip(truth_axis, predicted_axis):
        if disagreed:
            v = Verdict.DISAGREE
        elif dont_know:
            v = Verdict.DONT_KNOW
        elif truth_unspecified or t == WILDCARD:
            # Truth itself is unspecified from here on: no error counted.
            truth_unspecified = True
            v = Verdict.AGREE
        elif p == WILDCARD:
            dont_know = True
            v = Verdict.DONT_KNOW
        elif p == t:
            v = Verdict.AGREE
        else:
            disagreed = True
            v = Verdict.DISAGREE
        verdicts.append(v)
    return verdicts


def position_verdicts(truth: IrmaCode, predicted: IrmaCode) -> list[list[Verdict]]:
    """Per-axis verdict lists for a truth/predicted code pair."""
    return [axis_verdicts(t, p) for t, p in zip(truth.axes, predicted.axes)]


def axis_error(truth_axis: str, verdicts: Sequence[Verdict],
               taxonomy: Taxonomy, axis: int) -> float:
    """Normalized error of one axis, in [0, 0.25].

    Sums weight/(b_i * i) over the positions the truth specifies, where
    b_i is the branching factor along the truth prefix, then rescales by
    the all-wrong sum so a fully wrong axis scores exactly 0.25.
    Positions at and after a truth wildcard contribute to neither sum.
    """
    if len(verdicts) != len(truth_axis):
        raise MalformedCode(
            f"expected {len(truth_axis)} verdicts, got {len(verdicts)}")
    specified = truth_axis.index(WILDCARD) if WILDCARD in truth_axis else len(truth_axis)
    raw = 0.0
    max_raw = 0.0
    for i in range(specified):
        term = 1.0 / (taxonomy.branching(axis, truth_axis[:i]) * (i + 1))
        raw += term * verdicts[i].weight
        max_raw += term
    if max_raw == 0.0:
        return 0.0
    return 0.25 * raw / max_raw


def code_error(truth: IrmaCode, predicted: IrmaCode, taxonomy: Taxonomy) -> float:
    """Normalized error between two codes: the four axis errors summed, in [0, 1]."""
    total = 0.0
    for axis, (t, p) in enumerate(zip(truth.axes, predicted.axes)):
        total += axis_error(t, axis_verdicts(t, p), taxonomy, axis)
    return total

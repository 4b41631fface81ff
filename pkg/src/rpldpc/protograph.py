"""Protograph base matrices with fading-block structure.

A protograph is a small multigraph between variable nodes and check nodes,
stored as a base matrix of parallel-edge multiplicities.  On top of the bare
matrix we keep a layout: every column belongs to one fading block and plays
one role (information, root parity, or extra frame parity), and every row is
either a rootcheck, a per-frame checksum, or an unstructured check.

Two constructions are provided:

* ``build_rp_base`` builds an (L+1)-block root protograph of rate 1/(L+1)
  whose rootchecks guarantee one-step recovery of every information column
  when any single block survives a deep fade.
* ``build_rcrp_base`` appends a column-weight-3 extra-parity stage per frame,
  lowering the rate to 1/(L+1+e) while keeping the root structure; the
  per-frame subcodes make the result usable in relay protocols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

ROLE_INFO = "info"
ROLE_RP_PARITY = "rp_parity"
ROLE_EXTRA_PARITY = "extra_parity"
ROLES = (ROLE_INFO, ROLE_RP_PARITY, ROLE_EXTRA_PARITY)

KIND_ROOTCHECK = "rootcheck"
KIND_FRAME_CHECK = "frame_check"
KIND_PLAIN = "plain"

BUILTIN_NAMES = ("rp_a", "rcrp_a", "rp_b", "rcrp_b", "rcrp_c", "reg36")


class DivisibilityError(ValueError):
    """Edge count cannot be spread evenly over the requested check nodes."""


class InvalidWeights(ValueError):
    """A weight profile would produce an empty row or column."""


class UnknownName(ValueError):
    """Not one of the built-in code names."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    """Dense non-negative integer matrix of parallel-edge multiplicities."""

    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.int64)
        if b.ndim != 2:
            raise ValueError("base matrix must be 2-D")
        if (b < 0).any():
            raise ValueError("base matrix entries must be non-negative")
        m, n = b.shape
        if not 0 < m < n:
            raise ValueError(f"design rate ({n}-{m})/{n} must lie in (0, 1)")
        object.__setattr__(self, "b", _freeze(b))

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> int:
        return self.b.shape[1]

    @property
    def design_rate(self) -> Fraction:
        return Fraction(self.n - self.m, self.n)

    def __eq__(self, other):
        return isinstance(other, BaseMatrix) and np.array_equal(self.b, other.b)


@dataclass(frozen=True)
class ColumnLabel:
    block: int  # 1-based fading-block (frame) index
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown column role {self.role!r}")


@dataclass(frozen=True)
class CheckLabel:
    kind: str
    rc_type: int | None = None  # rootcheck: block of the single info edge
    target: int | None = None   # rootcheck: block carrying the rest edges
    frame: int | None = None    # frame_check: frame index

    def __post_init__(self):
        if self.kind == KIND_ROOTCHECK and (self.rc_type is None or self.target is None):
            raise ValueError("rootcheck label needs rc_type and target")
        if self.kind == KIND_FRAME_CHECK and self.frame is None:
            raise ValueError("frame_check label needs a frame index")
        if self.kind not in (KIND_ROOTCHECK, KIND_FRAME_CHECK, KIND_PLAIN):
            raise ValueError(f"unknown check kind {self.kind!r}")


@dataclass(frozen=True)
class CodeLayout:
    """Block/role assignment of columns and kind assignment of rows."""

    num_blocks: int
    column_labels: tuple[ColumnLabel, ...]
    check_labels: tuple[CheckLabel, ...]

    def column_blocks(self) -> np.ndarray:
        return np.array([c.block for c in self.column_labels], dtype=np.int64)

    def info_columns(self) -> list[int]:
        return [j for j, c in enumerate(self.column_labels) if c.role == ROLE_INFO]

    def columns_in_block(self, block: int) -> list[int]:
        return [j for j, c in enumerate(self.column_labels) if c.block == block]


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """Base matrix plus layout plus family tag; the unit the lifter consumes."""

    base: BaseMatrix
    layout: CodeLayout
    family: str  # rp | rcrp | regular_cw3 | plain
    design_rate: Fraction

    def __post_init__(self):
        if len(self.layout.column_labels) != self.base.n:
            raise ValueError("layout column count does not match base matrix")
        if len(self.layout.check_labels) != self.base.m:
            raise ValueError("layout check count does not match base matrix")
        if self.design_rate != self.base.design_rate:
            raise ValueError("design_rate inconsistent with base dimensions")

    def __eq__(self, other):
        return (
            isinstance(other, CodeSpec)
            and self.base == other.base
            and self.layout == other.layout
            and self.family == other.family
            and self.design_rate == other.design_rate
        )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(base: BaseMatrix, layout: CodeLayout) -> ValidationReport:
    """Check the rootcheck and zero-row/column rules; returns violations.

    Dimension mismatch between base and layout is a caller error and raises;
    structural rule breaks are reported, so constructions can be probed.
    """
    if len(layout.column_labels) != base.n or len(layout.check_labels) != base.m:
        raise ValueError("layout does not match base matrix dimensions")
    b = base.b
    report = ValidationReport()

    for i in range(base.m):
        if not b[i].any():
            report.violations.append(f"zero row {i}")
    for j in range(base.n):
        if not b[:, j].any():
            report.violations.append(f"zero column {j}")

    info_of_block = {}
    for j, lab in enumerate(layout.column_labels):
        if lab.role == ROLE_INFO:
            info_of_block.setdefault(lab.block, []).append(j)

    has_rootchecks = any(c.kind == KIND_ROOTCHECK for c in layout.check_labels)

    for i, lab in enumerate(layout.check_labels):
        if lab.kind != KIND_ROOTCHECK:
            continue
        if lab.target == lab.rc_type:
            report.violations.append(f"rootcheck row {i} targets its own block {lab.target}")
        own_info = info_of_block.get(lab.rc_type, [])
        w = int(sum(b[i, j] for j in own_info))
        if w != 1:
            report.violations.append(
                f"rootcheck type-{lab.rc_type} has {w} edges to info column i{lab.rc_type}"
            )
        for j, col in enumerate(layout.column_labels):
            if b[i, j] == 0 or (col.role == ROLE_INFO and col.block == lab.rc_type):
                continue
            if col.block != lab.target:
                report.violations.append(
                    f"rootcheck row {i} has rest edges in block {col.block}, "
                    f"expected block {lab.target}"
                )
                break

    if has_rootchecks:
        L = layout.num_blocks - 1
        for j, col in enumerate(layout.column_labels):
            if col.role != ROLE_RP_PARITY:
                continue
            types = {
                layout.check_labels[i].rc_type
                for i in range(base.m)
                if b[i, j] and layout.check_labels[i].kind == KIND_ROOTCHECK
            }
            if len(types) < L:
                report.violations.append(
                    f"parity column {j} touches only {len(types)} rootcheck types, needs {L}"
                )

    return report


def build_regular_cw3_base(n_vn: int, n_cn: int) -> CodeSpec:
    """Regular protograph with every column weight 3, edges spread round-robin.

    For a single check node this is one row of 3s; the rate is
    (n_vn - n_cn)/n_vn.
    """
    if not n_vn > n_cn >= 1:
        raise ValueError("need n_vn > n_cn >= 1")
    if (3 * n_vn) % n_cn != 0:
        raise DivisibilityError(f"3*{n_vn} edges cannot be split evenly over {n_cn} checks")
    b = np.zeros((n_cn, n_vn), dtype=np.int64)
    for j in range(n_vn):
        for t in range(3):
            b[(3 * j + t) % n_cn, j] += 1
    k = n_vn - n_cn
    cols = tuple(
        ColumnLabel(block=1, role=ROLE_INFO if j < k else ROLE_EXTRA_PARITY)
        for j in range(n_vn)
    )
    checks = tuple(CheckLabel(kind=KIND_FRAME_CHECK, frame=1) for _ in range(n_cn))
    layout = CodeLayout(num_blocks=1, column_labels=cols, check_labels=checks)
    return CodeSpec(BaseMatrix(b), layout, "regular_cw3", Fraction(k, n_vn))


def default_rest_weights(L: int) -> tuple[int, ...]:
    """Rest-edge profile (info weight, then parity weights) of a rootcheck row.

    Check degree comes out as 2L+2 (6 for one or two parity blocks).  The
    parity weights deliberately mix parities: combined with the cyclic stagger
    in ``build_rp_base`` this keeps the parity-column submatrix invertible
    over GF(2) after lifting, so a systematic encoder pinned to the info
    positions exists.  An all-even parity profile such as (1, 2, 2) provably
    cannot be encoded that way for L >= 2: both rootcheck rows aimed at a
    block then agree on every parity column mod 2.
    """
    if L == 1:
        return (2, 3)
    return (2, 1) + (2,) * (L - 1)


def build_rp_base(L: int, rest_weights: Sequence[int] | None = None) -> CodeSpec:
    """(L+1)-block root protograph of rate exactly 1/(L+1).

    Columns are block-major, info column first in each block:
    (i_1, p_1^1..p_1^L, i_2, ...).  Row (l, l') carries a single edge to i_l
    and ``rest_weights`` over the block-l' columns: rest_weights[0] on i_l'
    and rest_weights[1..L] on the parity columns, rotated cyclically by the
    block distance from l' to l.  The rotation keeps the construction
    symmetric under cyclic block relabelling, gives every parity column each
    parity weight exactly once, and is a no-op when the parity weights are
    all equal.
    """
    if L < 1:
        raise ValueError("need at least one parity block (L >= 1)")
    if rest_weights is None:
        rest_weights = default_rest_weights(L)
    rest_weights = tuple(int(w) for w in rest_weights)
    if len(rest_weights) != L + 1:
        raise InvalidWeights(f"need {L + 1} rest weights, got {len(rest_weights)}")
    if any(w < 0 for w in rest_weights):
        raise InvalidWeights("rest weights must be non-negative")

    nb = L + 1
    n = nb * nb
    m = L * nb
    b = np.zeros((m, n), dtype=np.int64)

    def col(block: int, z: int) -> int:
        # z = 0 is the info column, z = 1..L the parity columns
        return (block - 1) * nb + z

    row = 0
    checks = []
    for l in range(1, nb + 1):
        for lp in range(1, nb + 1):
            if lp == l:
                continue
            b[row, col(l, 0)] = 1
            b[row, col(lp, 0)] += rest_weights[0]
            rot = (l - lp) % nb - 1  # cyclic distance from target block, 0..L-1
            for z in range(1, nb):
                b[row, col(lp, z)] += rest_weights[1 + (z - 1 + rot) % L]
            checks.append(CheckLabel(kind=KIND_ROOTCHECK, rc_type=l, target=lp))
            row += 1

    if (b.sum(axis=0) == 0).any() or (b.sum(axis=1) == 0).any():
        raise InvalidWeights(f"rest weights {rest_weights} leave an empty row or column")

    cols = tuple(
        ColumnLabel(block=block, role=ROLE_INFO if z == 0 else ROLE_RP_PARITY)
        for block in range(1, nb + 1)
        for z in range(nb)
    )
    layout = CodeLayout(num_blocks=nb, column_labels=cols, check_labels=tuple(checks))
    spec = CodeSpec(BaseMatrix(b), layout, "rp", Fraction(1, nb))
    rep = validate(spec.base, spec.layout)
    if not rep.ok:
        raise InvalidWeights(f"construction self-check failed: {rep.violations}")
    return spec


def build_rcrp_base(rp: CodeSpec, extra_per_frame: int) -> CodeSpec:
    """Rate-compatible extension: e extra parity columns and e checksum rows per frame.

    Frame l consists of the block-l columns followed by its extra columns; the
    frame checks follow the regular CW-3 pattern over (block cols, extra cols),
    identical in every frame.  Overall rate drops to 1/(L+2+...) = 1/(L+1+e).
    """
    if rp.family != "rp":
        raise ValueError("rate-compatible construction starts from an rp spec")
    e = int(extra_per_frame)
    if e < 1:
        raise ValueError("need at least one extra parity column per frame")
    nb = rp.layout.num_blocks
    L = nb - 1
    per_block = nb  # columns per block in the rp spec
    frame_cols = per_block + e
    cw3 = build_regular_cw3_base(frame_cols, e)

    n = nb * frame_cols
    m = rp.base.m + nb * e
    b = np.zeros((m, n), dtype=np.int64)

    def newcol(block: int, z: int) -> int:
        return (block - 1) * frame_cols + z

    # root rows, re-spread over the frame-major column order
    for i in range(rp.base.m):
        for block in range(1, nb + 1):
            for z in range(per_block):
                b[i, newcol(block, z)] = rp.base.b[i, (block - 1) * per_block + z]

    checks = list(rp.layout.check_labels)
    row = rp.base.m
    for frame in range(1, nb + 1):
        for r in range(e):
            for z in range(frame_cols):
                b[row, newcol(frame, z)] = cw3.base.b[r, z]
            checks.append(CheckLabel(kind=KIND_FRAME_CHECK, frame=frame))
            row += 1

    cols = []
    for block in range(1, nb + 1):
        for lab in rp.layout.column_labels[(block - 1) * per_block : block * per_block]:
            cols.append(lab)
        cols.extend(ColumnLabel(block=block, role=ROLE_EXTRA_PARITY) for _ in range(e))

    layout = CodeLayout(num_blocks=nb, column_labels=tuple(cols), check_labels=tuple(checks))
    return CodeSpec(BaseMatrix(b), layout, "rcrp", Fraction(n - m, n))


def _reg36_spec() -> CodeSpec:
    # (3,6)-regular baseline over two blocks, no root structure: the negative
    # control for every diversity check.  This particular edge spread keeps
    # the parity columns odd/even-mixed so the lift stays encodable.
    b = np.array([[1, 2, 2, 1], [2, 1, 1, 2]], dtype=np.int64)
    cols = (
        ColumnLabel(1, ROLE_INFO),
        ColumnLabel(1, ROLE_RP_PARITY),
        ColumnLabel(2, ROLE_INFO),
        ColumnLabel(2, ROLE_RP_PARITY),
    )
    checks = (CheckLabel(kind=KIND_PLAIN), CheckLabel(kind=KIND_PLAIN))
    layout = CodeLayout(num_blocks=2, column_labels=cols, check_labels=checks)
    return CodeSpec(BaseMatrix(b), layout, "plain", Fraction(1, 2))


def builtin(name: str) -> CodeSpec:
    """Named code specs used throughout the experiments."""
    if name == "rp_a":
        return build_rp_base(1)
    if name == "rp_b":
        return build_rp_base(2)
    if name == "rcrp_a":
        return build_rcrp_base(build_rp_base(1), 1)
    if name == "rcrp_b":
        return build_rcrp_base(build_rp_base(2), 1)
    if name == "rcrp_c":
        return build_rcrp_base(build_rp_base(1), 2)
    if name == "reg36":
        return _reg36_spec()
    raise UnknownName(f"unknown builtin {name!r}; choose from {BUILTIN_NAMES}")


def _as_fraction(rate) -> Fraction:
    if isinstance(rate, Fraction):
        return rate
    if isinstance(rate, str):
        return Fraction(rate)
    if isinstance(rate, int):
        return Fraction(rate)
    return Fraction(rate).limit_denominator(10**9)


def singleton_bound(L: int, rate) -> int:
    """Largest block diversity any rate-``rate`` code can reach over L+1 blocks."""
    r = _as_fraction(rate)
    if not 0 < r <= 1:
        raise ValueError("rate must lie in (0, 1]")
    return 1 + int((L + 1) * (1 - r))


@dataclass
class DiversityReport:
    """Outcome of single-surviving-block erasure recovery, per kept block.

    ``unresolved`` maps each kept block to the info entities (base columns, or
    bit indices at the lifted level) that peeling could not recover.
    """

    full_diversity: bool
    unresolved: dict[int, tuple[int, ...]]


def _peel_base(adj: np.ndarray, known: np.ndarray) -> np.ndarray:
    """Erasure message passing on a binary adjacency; returns the known mask
    at fixpoint.  A check resolves a column when it is its only unknown
    neighbour."""
    known = known.copy()
    while True:
        unknown_deg = adj @ (~known)
        single = np.flatnonzero(unknown_deg == 1)
        progress = False
        for i in single:
            j = np.flatnonzero(adj[i] & ~known)
            if j.size == 1 and not known[j[0]]:
                known[j[0]] = True
                progress = True
        if not progress:
            return known


def protograph_diversity_check(spec: CodeSpec) -> DiversityReport:
    """Erase all blocks but one, peel, and ask whether every info column comes back.

    Parallel edges collapse to a single edge here: a check can only resolve a
    neighbour it sees exactly once, matching what one lifted check row can do.
    """
    adj = spec.base.b > 0
    blocks = spec.layout.column_blocks()
    info = np.array(spec.layout.info_columns(), dtype=np.int64)
    unresolved: dict[int, tuple[int, ...]] = {}
    for kept in range(1, spec.layout.num_blocks + 1):
        known = blocks == kept
        known = _peel_base(adj, known)
        missing = tuple(int(j) for j in info if not known[j])
        unresolved[kept] = missing
    full = all(not v for v in unresolved.values())
    return DiversityReport(full_diversity=full, unresolved=unresolved)


# --- text serialization ----------------------------------------------------

_ROLE_TOKENS = {ROLE_INFO: "info", ROLE_RP_PARITY: "rp_parity", ROLE_EXTRA_PARITY: "extra_parity"}
_TOKEN_ROLES = {v: k for k, v in _ROLE_TOKENS.items()}


def _check_token(lab: CheckLabel) -> str:
    if lab.kind == KIND_ROOTCHECK:
        return f"rc{lab.rc_type}:{lab.target}"
    if lab.kind == KIND_FRAME_CHECK:
        return f"fc{lab.frame}"
    return "pc"


def _parse_check_token(tok: str) -> CheckLabel:
    if tok.startswith("rc"):
        a, b = tok[2:].split(":")
        return CheckLabel(kind=KIND_ROOTCHECK, rc_type=int(a), target=int(b))
    if tok.startswith("fc"):
        return CheckLabel(kind=KIND_FRAME_CHECK, frame=int(tok[2:]))
    if tok == "pc":
        return CheckLabel(kind=KIND_PLAIN)
    raise ValueError(f"bad check label token {tok!r}")


def extras_per_frame(spec: CodeSpec) -> int:
    if spec.family != "rcrp":
        return 0
    return sum(
        1 for c in spec.layout.column_labels if c.block == 1 and c.role == ROLE_EXTRA_PARITY
    )


def spec_to_text(spec: CodeSpec) -> str:
    L = spec.layout.num_blocks - 1
    e = extras_per_frame(spec)
    lines = [f"RPCODE v1 {spec.base.m} {spec.base.n} {L} {spec.family} {e}"]
    for i in range(spec.base.m):
        lines.append(" ".join(str(int(x)) for x in spec.base.b[i]))
    lines.append(" ".join(f"b{c.block}:{_ROLE_TOKENS[c.role]}" for c in spec.layout.column_labels))
    lines.append(" ".join(_check_token(c) for c in spec.layout.check_labels))
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> CodeSpec:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[:2] != ["RPCODE", "v1"]:
        raise ValueError("not an RPCODE v1 document")
    m, n, L = int(head[2]), int(head[3]), int(head[4])
    family = head[5]
    b = np.array([[int(x) for x in lines[1 + i].split()] for i in range(m)], dtype=np.int64)
    col_toks = lines[1 + m].split()
    chk_toks = lines[2 + m].split()
    if len(col_toks) != n or len(chk_toks) != m:
        raise ValueError("label line lengths do not match the header")
    cols = []
    for tok in col_toks:
        blk, role = tok[1:].split(":")
        cols.append(ColumnLabel(block=int(blk), role=_TOKEN_ROLES[role]))
    checks = tuple(_parse_check_token(t) for t in chk_toks)
    layout = CodeLayout(num_blocks=L + 1, column_labels=tuple(cols), check_labels=checks)
    return CodeSpec(BaseMatrix(b), layout, family, Fraction(n - m, n))

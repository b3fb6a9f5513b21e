"""Permutation-symmetric superket basis for a blockaded g/s/r atom array.

A density matrix that starts as a symmetrized operator string stays inside a
small closed family under the driven-dissipative evolution considered here
(collective s-r drive plus single-site dephasing of r, with at most one
Rydberg excitation).  Each basis element is a normalized sum over all distinct
site assignments of a fixed multiset of single-site operators; blocks are
labelled by the number j of ground-state sg/gs coherence pairs, which is
conserved.  Every block contains at most ten families, so the generator is a
tiny dense matrix regardless of the atom count N.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

# Family listing order is fixed; matrices, coefficient vectors and all
# serialized states index into this order (after pruning).
FAMILIES = ("ss", "rs", "sr", "rg", "gr", "rr", "rs_gr", "sr_rg", "rs_sr", "rg_gr")

# Diagonal of the dephasing superoperator as a multiple of -gamma, one entry
# per family: half for every single cross-sector coherence, one for every
# doubled one, zero for populations.
_DISSIPATOR_DIAG = {
    "ss": 0.0,
    "rs": 0.5,
    "sr": 0.5,
    "rg": 0.5,
    "gr": 0.5,
    "rr": 0.0,
    "rs_gr": 1.0,
    "sr_rg": 1.0,
    "rs_sr": 1.0,
    "rg_gr": 1.0,
}


def _site_operator_multiset(kind: str, n: int, N: int, j: int) -> dict[str, int]:
    """Multiset of single-site operators defining one symmetrized family.

    Keys are two-letter operator names sigma_ab = |a><b| over {g, s, r}; values
    are site multiplicities.  A family exists iff all multiplicities are >= 0.
    """
    extra: dict[str, int]
    sg, gs, ss = j, j, n - j
    if kind == "ss":
        extra = {}
    elif kind == "rs":
        extra, ss = {"rs": 1}, n - j - 1
    elif kind == "sr":
        extra, ss = {"sr": 1}, n - j - 1
    elif kind == "rg":
        extra, sg = {"rg": 1}, j - 1
    elif kind == "gr":
        extra, gs = {"gr": 1}, j - 1
    elif kind == "rr":
        extra, ss = {"rr": 1}, n - j - 1
    elif kind == "rs_gr":
        extra, gs, ss = {"rs": 1, "gr": 1}, j - 1, n - j - 1
    elif kind == "sr_rg":
        extra, sg, ss = {"sr": 1, "rg": 1}, j - 1, n - j - 1
    elif kind == "rs_sr":
        extra, ss = {"rs": 1, "sr": 1}, n - j - 2
    elif kind == "rg_gr":
        extra, sg, gs = {"rg": 1, "gr": 1}, j - 1, j - 1
    else:
        raise DomainError(f"unknown family kind {kind!r}")
    ops = dict(extra)
    for name, mult in (("sg", sg), ("gs", gs), ("ss", ss), ("gg", N - n - j)):
        if mult:
            ops[name] = ops.get(name, 0) + mult
    return ops


_DIAGONAL_OPS = {"gg", "ss", "rr"}


@dataclass(frozen=True)
class BasisLabel:
    """One symmetrized operator family inside a fixed (n, N, j) block."""

    kind: str
    j: int
    n: int
    N: int

    def site_operators(self) -> dict[str, int]:
        return _site_operator_multiset(self.kind, self.n, self.N, self.j)

    def exists(self) -> bool:
        return all(m >= 0 for m in self.site_operators().values())

    def assignment_count(self) -> int:
        """Number of distinct site assignments of the operator multiset."""
        ops = self.site_operators()
        if any(m < 0 for m in ops.values()):
            raise DomainError(f"label {self.kind} does not exist at n={self.n}, N={self.N}, j={self.j}")
        count = math.factorial(self.N)
        for mult in ops.values():
            count //= math.factorial(mult)
        return count

    def is_diagonal(self) -> bool:
        return all(op in _DIAGONAL_OPS for op in self.site_operators())


def _check_block_args(n: int, N: int, j: int) -> None:
    if not (1 <= N):
        raise DomainError(f"need N >= 1, got N={N}")
    if not (0 <= n <= N):
        raise DomainError(f"need 0 <= n <= N, got n={n}, N={N}")
    if not (0 <= j <= min(n, N - n)):
        raise DomainError(f"need 0 <= j <= min(n, N-n) = {min(n, N - n)}, got j={j}")


def enumerate_basis(n: int, N: int, j: int) -> list[BasisLabel]:
    """All existing families of the (n, N, j) block, in fixed listing order."""
    _check_block_args(n, N, j)
    labels = [BasisLabel(kind, j, n, N) for kind in FAMILIES]
    return [lab for lab in labels if lab.exists()]


def normalization(label: BasisLabel) -> float:
    """Normalization constant making the summed operator string a unit superket.

    Distinct site assignments are orthonormal under the trace inner product,
    so the constant is 1/sqrt(multinomial count).  The count is computed in
    exact integer arithmetic.
    """
    return 1.0 / math.sqrt(label.assignment_count())


@dataclass(frozen=True)
class BlockOperators:
    """Drive and dephasing superoperator matrices of one (n, N, j) block.

    ``H`` carries units of angular frequency (proportional to Omega); ``D`` is
    the dimensionless diagonal multiplying gamma.  The equation of motion for
    a coefficient vector x is dx/dt = (i*H + gamma*diag(D)) x.
    """

    n: int
    N: int
    j: int
    labels: tuple[BasisLabel, ...]
    norms: np.ndarray
    H: np.ndarray
    D: np.ndarray
    omega: float
    gamma: float

    def index(self, kind: str) -> int:
        for i, lab in enumerate(self.labels):
            if lab.kind == kind:
                return i
        raise KeyError(kind)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def generator(self) -> np.ndarray:
        """Full block generator i*H + gamma*diag(D)."""
        return 1j * self.H + self.gamma * np.diag(self.D)

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "N": self.N,
            "j": self.j,
            "labels": [lab.kind for lab in self.labels],
            "norms": self.norms.tolist(),
            "H": [[z.real, z.imag] for z in self.H.ravel()],
            "D": self.D.tolist(),
            "omega": self.omega,
            "gamma": self.gamma,
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BlockOperators":
        doc = json.loads(text)
        n, N, j = doc["n"], doc["N"], doc["j"]
        labels = tuple(BasisLabel(kind, j, n, N) for kind in doc["labels"])
        dim = len(labels)
        H = np.array([complex(re, im) for re, im in doc["H"]]).reshape(dim, dim)
        return BlockOperators(
            n=n, N=N, j=j, labels=labels,
            norms=np.array(doc["norms"]),
            H=H, D=np.array(doc["D"]),
            omega=doc["omega"], gamma=doc["gamma"],
        )


# Nonzero entries of the drive superoperator, as (row, col, coefficient
# function of (n, j)).  The matrix element is
#   Omega * coeff(n, j) * norm[row] / norm[col],
# i.e. coefficients are stated for unnormalized basis vectors and the
# normalization ratio converts them to the orthonormal basis.
_H_TABLE = (
    ("ss", "rs", lambda n, j: -1.0),
    ("ss", "sr", lambda n, j: +1.0),
    ("ss", "rg", lambda n, j: -1.0),
    ("ss", "gr", lambda n, j: +1.0),
    ("rs", "ss", lambda n, j: -(n - j)),
    ("rs", "rr", lambda n, j: +1.0),
    ("rs", "rs_gr", lambda n, j: +1.0),
    ("rs", "rs_sr", lambda n, j: +1.0),
    ("sr", "ss", lambda n, j: +(n - j)),
    ("sr", "rr", lambda n, j: -1.0),
    ("sr", "sr_rg", lambda n, j: -1.0),
    ("sr", "rs_sr", lambda n, j: -1.0),
    ("rg", "ss", lambda n, j: -j),
    ("rg", "sr_rg", lambda n, j: +1.0),
    ("rg", "rg_gr", lambda n, j: +1.0),
    ("gr", "ss", lambda n, j: +j),
    ("gr", "rs_gr", lambda n, j: -1.0),
    ("gr", "rg_gr", lambda n, j: -1.0),
    ("rr", "rs", lambda n, j: +1.0),
    ("rr", "sr", lambda n, j: -1.0),
    ("rs_gr", "rs", lambda n, j: +j),
    ("rs_gr", "gr", lambda n, j: -(n - j)),
    ("sr_rg", "sr", lambda n, j: -j),
    ("sr_rg", "rg", lambda n, j: +(n - j)),
    ("rs_sr", "rs", lambda n, j: +(n - j - 1)),
    ("rs_sr", "sr", lambda n, j: -(n - j - 1)),
    ("rg_gr", "rg", lambda n, j: +j),
    ("rg_gr", "gr", lambda n, j: -j),
)


@lru_cache(maxsize=None)
def _block_structure(n: int, N: int, j: int):
    labels = tuple(enumerate_basis(n, N, j))
    norms = np.array([normalization(lab) for lab in labels])
    kinds = {lab.kind: i for i, lab in enumerate(labels)}
    hmat = np.zeros((len(labels), len(labels)))
    for row, col, coeff in _H_TABLE:
        if row in kinds and col in kinds:
            r, c = kinds[row], kinds[col]
            hmat[r, c] = coeff(n, j) * norms[r] / norms[c]
    dee = np.array([-_DISSIPATOR_DIAG[lab.kind] for lab in labels])
    return labels, norms, hmat, dee


def build_block(n: int, N: int, j: int, omega: float, gamma: float) -> BlockOperators:
    """Assemble the drive and dephasing matrices of one block.

    The overall drive prefactor is the single-atom Rabi frequency Omega: the
    sqrt(n) collective enhancement is produced by the normalization ratios
    themselves (e.g. the ss<->rs pair of entries multiplies to (n-j) Omega^2).
    This convention is pinned by the dense-oracle calibration tests.
    """
    _check_block_args(n, N, j)
    if omega < 0 or gamma < 0:
        raise DomainError("omega and gamma must be non-negative")
    labels, norms, hmat, dee = _block_structure(n, N, j)
    return BlockOperators(
        n=n, N=N, j=j, labels=labels, norms=norms.copy(),
        H=omega * hmat.astype(complex), D=dee.copy(),
        omega=omega, gamma=gamma,
    )


def trace_vector(ops: BlockOperators) -> np.ndarray:
    """Linear functional reading off Tr rho from a block coefficient vector.

    Only families built purely from diagonal site operators carry trace; each
    of their assignment terms has unit trace, so the entry is count * norm.
    """
    v = np.zeros(ops.dim)
    for i, lab in enumerate(ops.labels):
        if lab.is_diagonal():
            v[i] = lab.assignment_count() * ops.norms[i]
    return v

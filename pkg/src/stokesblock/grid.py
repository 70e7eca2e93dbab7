"""Finite-difference operators on a uniform tensor grid of a rectangle.

Unknowns live on the interior nodes of an ``n_x`` by ``n_y`` grid; node
``(i, j)`` (zero based, ``i`` along x) has scalar index ``i + n_x * j``.
A velocity vector stacks the x-component block before the y-component
block, each in scalar order.

All difference operators are built from the Dirichlet forward difference
``B`` (one row per grid edge, boundary values eliminated as zero):

* ``L = Gs.T @ Gs`` is the 5-point Dirichlet Laplacian,
* ``Gbold`` applies ``Gs`` to each velocity component,
* the divergence is the forward difference of each component with the
  mean value removed, and the pressure gradient is ``G = -D.T``.

Removing the mean makes ``G`` annihilate constant pressures while keeping
``||D v|| <= ||Gbold v||`` exact, since the forward difference ``K`` obeys
both ``K.T K <= T`` and ``K K.T <= T`` for the 1D Dirichlet matrix ``T``.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EigensolverError, ValidationError

__all__ = [
    "Rectangle", "Grid", "DiscreteOperators", "build_grid",
    "assemble_operators", "dirichlet_lambda1", "fd_eigenvalue_oracle",
    "fd_spectrum", "continuum_lambda1", "write_operators", "read_operators",
]

FORMAT_TAG = "stokesblock-operators"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Rectangle:
    side_a: float = 1.0
    side_b: float = 1.0

    def __post_init__(self):
        for name in ("side_a", "side_b"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
        object.__setattr__(self, "side_a", float(self.side_a))
        object.__setattr__(self, "side_b", float(self.side_b))


@dataclass(frozen=True)
class Grid:
    rectangle: Rectangle
    n_x: int
    n_y: int

    @property
    def h_x(self):
        return self.rectangle.side_a / (self.n_x + 1)

    @property
    def h_y(self):
        return self.rectangle.side_b / (self.n_y + 1)

    @property
    def n_scalar(self):
        return self.n_x * self.n_y

    @property
    def n_velocity(self):
        return 2 * self.n_scalar

    @property
    def n_pressure(self):
        return self.n_scalar

    @property
    def split(self):
        return (self.n_velocity, self.n_pressure)

    def index(self, i, j):
        """Scalar dof index of interior node ``(i, j)``."""
        if not (0 <= i < self.n_x and 0 <= j < self.n_y):
            raise ValidationError(f"node ({i}, {j}) outside the interior grid")
        return i + self.n_x * j

    def nodes(self):
        """Coordinates ``(x, y)`` of the interior nodes in dof order."""
        x = self.h_x * np.arange(1, self.n_x + 1)
        y = self.h_y * np.arange(1, self.n_y + 1)
        xx, yy = np.meshgrid(x, y, indexing="xy")
        return xx.ravel(), yy.ravel()

    def to_dict(self):
        return {
            "side_a": self.rectangle.side_a,
            "side_b": self.rectangle.side_b,
            "n_x": self.n_x,
            "n_y": self.n_y,
        }


def build_grid(rect, n_x, n_y):
    """Validated `Grid` with ``n_x * n_y`` interior nodes."""
    if not isinstance(rect, Rectangle):
        raise ValidationError("rect must be a Rectangle")
    for name, value in (("n_x", n_x), ("n_y", n_y)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ValidationError(f"{name} must be an integer, got {value!r}")
        if value < 2:
            raise ValidationError(f"{name} must be at least 2, got {value}")
    return Grid(rect, int(n_x), int(n_y))


@dataclass(frozen=True)
class DiscreteOperators:
    '''Assembled geometric operators (sparse CSR, float64).

    L : (n_s, n_s) scalar Dirichlet Laplacian
    G : (n_v, n_p) pressure gradient
    D : (n_p, n_v) divergence, exactly ``-G.T``
    Gbold : (2 * n_edges, n_v) componentwise velocity gradient
    Gs : (n_edges, n_s) scalar forward-difference gradient
    '''
    grid: Grid
    L: sp.csr_matrix = field(repr=False)
    G: sp.csr_matrix = field(repr=False)
    D: sp.csr_matrix = field(repr=False)
    Gbold: sp.csr_matrix = field(repr=False)
    Gs: sp.csr_matrix = field(repr=False)

    @property
    def L_velocity(self):
        """Vector Laplacian acting componentwise on velocities."""
        return sp.block_diag([self.L, self.L], format="csr")


def _dirichlet_difference(n, h):
    # rows: n + 1 edges, edge e joins nodes e - 1 and e (zero outside)
    main = np.full(n, 1.0 / h)
    lower = np.full(n, -1.0 / h)
    b = sp.diags([main, lower], [0, -1], shape=(n + 1, n), format="csr")
    return b


def _dirichlet_laplacian_1d(n, h):
    off = np.full(n - 1, -1.0 / h ** 2)
    return sp.diags([off, np.full(n, 2.0 / h ** 2), off], [-1, 0, 1], format="csr")


def assemble_operators(grid):
    """Assemble `DiscreteOperators` for ``grid``."""
    nx, ny = grid.n_x, grid.n_y
    ix = sp.identity(nx, format="csr")
    iy = sp.identity(ny, format="csr")
    bx = _dirichlet_difference(nx, grid.h_x)
    by = _dirichlet_difference(ny, grid.h_y)

    lap = (sp.kron(iy, _dirichlet_laplacian_1d(nx, grid.h_x))
           + sp.kron(_dirichlet_laplacian_1d(ny, grid.h_y), ix)).tocsr()
    gs = sp.vstack([sp.kron(iy, bx), sp.kron(by, ix)], format="csr")
    gbold = sp.block_diag([gs, gs], format="csr")

    # forward difference at each node; drops the edge at the near boundary
    kx = bx[1:, :]
    ky = by[1:, :]
    d0 = sp.hstack([sp.kron(iy, kx), sp.kron(ky, ix)], format="csr")
    n_p = grid.n_pressure
    column_means = np.asarray(d0.sum(axis=0)).ravel() / n_p
    correction = sp.csr_matrix(np.ones((n_p, 1))) @ sp.csr_matrix(column_means[None, :])
    div = (d0 - correction).tocsr()
    div.eliminate_zeros()
    div.sort_indices()
    grad = (-div.T).tocsr()
    grad.sort_indices()
    div = (-grad.T).tocsr()
    div.sort_indices()
    return DiscreteOperators(grid=grid, L=lap, G=grad, D=div, Gbold=gbold, Gs=gs)


def fd_eigenvalue_oracle(grid, j, k):
    """Exact eigenvalue of the discrete Laplacian for sine mode ``(j, k)``.

    ``j`` and ``k`` are one-based mode numbers along x and y.
    """
    if not (1 <= j <= grid.n_x and 1 <= k <= grid.n_y):
        raise ValidationError(f"mode ({j}, {k}) out of range 1..{grid.n_x} x 1..{grid.n_y}")
    a, b = grid.rectangle.side_a, grid.rectangle.side_b
    hx, hy = grid.h_x, grid.h_y
    return (4.0 / hx ** 2 * math.sin(j * math.pi * hx / (2 * a)) ** 2
            + 4.0 / hy ** 2 * math.sin(k * math.pi * hy / (2 * b)) ** 2)


def fd_spectrum(grid):
    """All closed-form eigenvalues of the discrete Laplacian, sorted."""
    values = [fd_eigenvalue_oracle(grid, j, k)
              for k in range(1, grid.n_y + 1) for j in range(1, grid.n_x + 1)]
    return np.sort(np.array(values))


def continuum_lambda1(rect):
    """Principal Dirichlet eigenvalue ``pi^2 (1/a^2 + 1/b^2)`` of the rectangle."""
    return math.pi ** 2 * (1.0 / rect.side_a ** 2 + 1.0 / rect.side_b ** 2)


def dirichlet_lambda1(ops, return_vector=False):
    """Smallest eigenvalue of ``ops.L`` with a residual certificate.

    Uses shift-invert Lanczos around zero. The returned value satisfies
    ``||L p - lambda p|| <= 1e-10 ||L||`` or an `EigensolverError` is
    raised. With ``return_vector`` the normalized eigenvector is returned
    as well.
    """
    lap = ops.L
    n = lap.shape[0]
    norm = _spectral_norm(lap)
    if n <= 400:
        w, v = np.linalg.eigh(lap.toarray())
        lam, vec = w[0], v[:, 0]
    else:
        try:
            w, v = spla.eigsh(lap, k=1, sigma=0.0, which="LM", tol=1e-14)
        except spla.ArpackNoConvergence as exc:
            raise EigensolverError(
                f"ARPACK did not converge: {exc}", info=getattr(exc, "eigenvalues", None)) from exc
        lam, vec = w[0], v[:, 0]
    vec = vec / np.linalg.norm(vec)
    residual = np.linalg.norm(lap @ vec - lam * vec)
    if residual > 1e-10 * norm:
        raise EigensolverError(
            f"lambda1 residual {residual:.3e} exceeds 1e-10 * ||L|| = {1e-10 * norm:.3e}",
            info={"residual": residual, "norm": norm})
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    if return_vector:
        return float(lam), vec
    return float(lam)


def _spectral_norm(a):
    if a.shape[0] <= 400:
        return float(np.linalg.norm(a.toarray(), 2))
    return float(abs(spla.eigsh(a, k=1, which="LA", return_eigenvectors=False)[0]))


# --- text serialization ---------------------------------------------------

_MATRICES = ("L", "G", "D", "Gbold", "Gs")


def _write_matrix(out, name, m):
    coo = sp.coo_matrix(m)
    order = np.lexsort((coo.col, coo.row))
    out.write(f"matrix {name} {m.shape[0]} {m.shape[1]} {coo.nnz}\n")
    for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        out.write(f"{int(r)} {int(c)} {float(v)!r}\n")


def write_operators(ops, target=None):
    '''Serialize operators to the plain-text triplet format.

    Layout: a header line ``stokesblock-operators 1``, a ``rectangle a b``
    line, a ``grid n_x n_y`` line, then for each matrix a line
    ``matrix NAME rows cols nnz`` followed by ``nnz`` lines ``row col
    value`` (zero based, row-major order, values in shortest round-trip
    decimal form), and a final ``end`` line.

    ``target`` may be a path, a text stream, or ``None`` to return a string.
    '''
    buf = io.StringIO()
    g = ops.grid
    buf.write(f"{FORMAT_TAG} {FORMAT_VERSION}\n")
    buf.write(f"rectangle {g.rectangle.side_a!r} {g.rectangle.side_b!r}\n")
    buf.write(f"grid {g.n_x} {g.n_y}\n")
    for name in _MATRICES:
        _write_matrix(buf, name, getattr(ops, name))
    buf.write("end\n")
    text = buf.getvalue()
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="ascii") as fh:
            fh.write(text)
    return None


def read_operators(source):
    """Inverse of `write_operators`; ``source`` is a path, stream or string."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and source.startswith(FORMAT_TAG):
        text = source
    else:
        with open(source, encoding="ascii") as fh:
            text = fh.read()
    lines = iter(text.splitlines())
    header = next(lines).split()
    if header != [FORMAT_TAG, str(FORMAT_VERSION)]:
        raise ValidationError(f"unrecognized header {header}")
    _, a, b = next(lines).split()
    _, nx, ny = next(lines).split()
    grid = build_grid(Rectangle(float(a), float(b)), int(nx), int(ny))
    mats = {}
    for line in lines:
        parts = line.split()
        if parts == ["end"]:
            break
        if parts[0] != "matrix":
            raise ValidationError(f"expected a matrix header, got {line!r}")
        name, rows, cols, nnz = parts[1], int(parts[2]), int(parts[3]), int(parts[4])
        r = np.empty(nnz, dtype=np.int64)
        c = np.empty(nnz, dtype=np.int64)
        v = np.empty(nnz)
        for t in range(nnz):
            ri, ci, vi = next(lines).split()
            r[t], c[t], v[t] = int(ri), int(ci), float(vi)
        mats[name] = sp.csr_matrix((v, (r, c)), shape=(rows, cols))
    missing = set(_MATRICES) - set(mats)
    if missing:
        raise ValidationError(f"missing matrices: {sorted(missing)}")
    return DiscreteOperators(grid=grid, **mats)

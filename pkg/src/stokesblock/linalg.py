"""Dense symmetric eigensolvers.

`symmetric_eig` is the production route: Householder reduction to
tridiagonal form followed by a LAPACK tridiagonal solver, with the
eigenvectors back-transformed through the accumulated reflectors.
`jacobi_eig` is a cyclic Jacobi rotation method written from scratch; it
is slow and only meant as an independent oracle for small matrices.
"""

import numpy as np
import scipy.linalg

from .errors import EigensolverError, ValidationError

__all__ = ["symmetric_eig", "jacobi_eig", "tridiagonalize"]

# drivers accepted by scipy.linalg.eigh_tridiagonal
_TRIDIAGONAL_DRIVERS = {"mrrr": "stemr", "ql": "stev"}


def _check_square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return a


def tridiagonalize(a):
    """Return ``(d, e, q)`` with ``q.T @ a @ q`` tridiagonal.

    ``d`` is the diagonal and ``e`` the sub-diagonal of the reduced matrix.
    """
    a = _check_square(a)
    h, q = scipy.linalg.hessenberg(a, calc_q=True)
    d = np.diag(h).copy()
    e = np.diag(h, -1).copy()
    return d, e, q


def symmetric_eig(a, method="mrrr"):
    '''Full eigendecomposition of a real symmetric or complex Hermitian matrix.

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric (Hermitian) matrix. Only exact symmetry is assumed, the
        lower triangle is not trusted blindly: the matrix is symmetrized
        before reduction.
    method : {"mrrr", "ql"}
        Tridiagonal solver for real input. ``"ql"`` runs LAPACK's
        implicit-shift QL/QR iteration (cap: 30 sweeps per eigenvalue);
        ``"mrrr"`` uses multiple relatively robust representations and is
        much faster for the eigenvectors; if it fails to converge the QL
        driver is tried before giving up. Complex input always goes
        through LAPACK ``heevr``.

    Returns
    -------
    w : (n,) ndarray
        Eigenvalues in ascending order.
    v : (n, n) ndarray
        Orthonormal eigenvectors, ``v[:, i]`` belongs to ``w[i]``.

    Raises
    ------
    EigensolverError
        If no tridiagonal driver converges. The exception carries the
        tridiagonal matrix.
    '''
    a = _check_square(a)
    if method not in _TRIDIAGONAL_DRIVERS:
        raise ValidationError(f"unknown method {method!r}")
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=a.dtype)
    if np.iscomplexobj(a):
        a = 0.5 * (a + a.conj().T)
        try:
            return scipy.linalg.eigh(a, driver="evr")
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(str(exc), info=str(exc)) from exc

    a = 0.5 * (a + a.T)
    if n == 1:
        return a[0].astype(float).copy(), np.ones((1, 1))
    d, e, q = tridiagonalize(a)
    # MRRR can fail on tight clusters; QL is slower but converges there
    chain = [method] if method == "ql" else [method, "ql"]
    failures = []
    for name in chain:
        try:
            w, z = scipy.linalg.eigh_tridiagonal(
                d, e, lapack_driver=_TRIDIAGONAL_DRIVERS[name])
            return w, q @ z
        except np.linalg.LinAlgError as exc:
            failures.append(f"{name}: {exc}")
    raise EigensolverError(
        "tridiagonal eigensolver did not converge (" + "; ".join(failures) + ")",
        diagonal=d, offdiagonal=e, info=failures)


def jacobi_eig(a, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigenvalue iteration for small real symmetric matrices.

    Returns eigenvalues (ascending) and eigenvectors like `symmetric_eig`.
    """
    a = np.array(_check_square(a), dtype=float)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), 1e-300)
    for sweep in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.T @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
    else:
        raise EigensolverError(
            f"Jacobi iteration did not converge in {max_sweeps} sweeps",
            diagonal=np.diag(a).copy(), info=max_sweeps)
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]

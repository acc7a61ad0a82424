"""Small dense matrices: norms, condition numbers, and the two block-triangular
perturbations that inflate the (eigenvalue) condition number of a product.

Matrices are plain numpy arrays; a real dtype means the real field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FieldDimUnsupported, IllConditionedFrame, NumericalFailure, Singular

INVERTIBILITY_FLOOR = 1e-12
SPLIT_THRESHOLD = 1e-8
TIE_TOL = 1e-12


def as_matrix(a, field: str | None = None) -> np.ndarray:
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if field is None:
        field = "complex" if np.iscomplexobj(m) else "real"
    if field == "real":
        if np.iscomplexobj(m):
            if np.any(m.imag != 0):
                raise ValueError("complex entries in a real matrix")
            m = m.real
        m = m.astype(float)
    elif field == "complex":
        m = m.astype(complex)
    else:
        raise ValueError(f"unknown field {field!r}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def field_of(a: np.ndarray) -> str:
    return "complex" if np.iscomplexobj(a) else "real"


def singular_values(a) -> np.ndarray:
    try:
        return np.linalg.svd(np.asarray(a), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def eigenvalues(a) -> np.ndarray:
    try:
        return np.linalg.eigvals(np.asarray(a))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration did not converge: {exc}") from exc


def op_norm(a) -> float:
    return float(singular_values(a)[0])


def spectral_radius(a) -> float:
    return float(np.max(np.abs(eigenvalues(a))))


def _check_invertible(s: np.ndarray):
    if s[-1] <= INVERTIBILITY_FLOOR * s[0]:
        raise Singular(f"smallest singular value {s[-1]:.3g} below floor (largest {s[0]:.3g})")


def kappa(a) -> float:
    """``‖A‖ ‖A^{-1}‖ = σ_1 / σ_d``."""
    s = singular_values(a)
    _check_invertible(s)
    return float(s[0] / s[-1])


def kappa_e(a) -> float:
    """``ρ(A) ρ(A^{-1})``: ratio of extreme eigenvalue moduli."""
    _check_invertible(singular_values(a))
    mods = np.abs(eigenvalues(a))
    return float(mods.max() / mods.min())


def product(mats) -> np.ndarray:
    """``A_{l-1} ... A_0`` for the list ``A_0, ..., A_{l-1}``."""
    mats = list(mats)
    out = np.eye(mats[0].shape[0], dtype=np.result_type(*mats))
    for m in mats:
        out = m @ out
    return out


# ---------------------------------------------------------------------------
# frames


def _reflector(x: np.ndarray) -> np.ndarray | None:
    """Unit ``u`` with ``(I - 2uu*) x`` a multiple of ``e_1``; ``None`` if
    ``x`` already is one."""
    norm = np.linalg.norm(x)
    if norm == 0.0 or np.linalg.norm(x[1:]) == 0.0:
        return None
    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
    u = x.astype(np.result_type(x, float)).copy()
    u[0] += phase * norm
    return u / np.linalg.norm(u)


def frame_to_last(v: np.ndarray) -> np.ndarray:
    """Unitary ``R`` (orthogonal for real input) with ``R·span(v)`` equal to
    the span of the last ``v.shape[1]`` coordinate vectors.

    Householder triangularization of the row-reversed basis, reversed back.
    """
    d, nu = v.shape
    w = v[::-1].copy()
    r = np.eye(d, dtype=w.dtype)
    for k in range(nu):
        u = _reflector(w[k:, k])
        if u is None:
            continue
        w[k:] -= 2.0 * np.outer(u, u.conj() @ w[k:])
        r[k:] -= 2.0 * np.outer(u, u.conj() @ r[k:])
    return r[::-1, ::-1]


def _orthonormal(w: np.ndarray, what: str) -> np.ndarray:
    q, tri = np.linalg.qr(w)
    diag = np.abs(np.diag(tri))
    if diag.min() <= 1e-10 * max(diag.max(), 1e-300):
        raise IllConditionedFrame(f"{what} lost rank numerically")
    return q


# ---------------------------------------------------------------------------
# perturbation lemmas


@dataclass
class PerturbResult:
    perturbed: list[np.ndarray]
    relative_errors: list[float]
    achieved: float
    target: float
    measure: str
    frames: list[np.ndarray] = field(repr=False)
    nu: int = 1

    @property
    def ok(self) -> bool:
        return self.achieved >= self.target * (1 - 1e-9)


def _validate(mats, eps) -> list[np.ndarray]:
    mats = [np.asarray(m) for m in mats]
    if not mats:
        raise ValueError("need at least one matrix")
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    complex_ = any(np.iscomplexobj(m) for m in mats)
    mats = [as_matrix(m, "complex" if complex_ else "real") for m in mats]
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise ValueError("matrices of mixed dimension")
    for m in mats:
        _check_invertible(singular_values(m))
    return mats


def _apply_frames(mats, frames, eps, nu):
    """``Ã_j = R_{j+1}^* diag((1+ε)I, I) R_{j+1} A_j``; equals the scaled
    conjugate ``R_{j+1}^{-1} Δ̃_j R_j``."""
    d = mats[0].shape[0]
    scale = np.ones(d)
    scale[: d - nu] += eps
    out = []
    for j, a in enumerate(mats):
        r = frames[j + 1]
        if eps == 0:
            out.append(a.copy())
            continue
        out.append(r.conj().T @ (scale[:, None] * (r @ a)))
    return out


def _errors(mats, new):
    return [op_norm(b - a) / op_norm(a) for a, b in zip(mats, new)]


def _pick_eigen(p: np.ndarray, real: bool):
    lam, vecs = np.linalg.eig(p)
    mods = np.abs(lam)
    scale = mods.max()
    is_real = np.abs(lam.imag) <= SPLIT_THRESHOLD * np.maximum(mods, 1e-300)

    def key(i):
        m = mods[i]
        return (round(m / scale / TIE_TOL) if scale else 0,
                0 if (real and is_real[i]) else 1, lam[i].real, lam[i].imag)

    i = min(range(len(lam)), key=key)
    v = vecs[:, i]
    if not real:
        return v[:, None], 1
    if is_real[i]:
        # real eigenvector of a real eigenvalue: kernel of P - λI
        _, _, vh = np.linalg.svd(p - lam[i].real * np.eye(p.shape[0]))
        return vh[-1].conj()[:, None].real, 1
    return np.stack([v.real, v.imag], axis=1), 2


def perturb_eigen(mats, eps: float) -> PerturbResult:
    """Perturb each factor by at most ``ε‖A_j‖`` so that the product has
    eigenvalue condition number at least ``(1+ε)^ℓ``.

    Over the reals this needs ``d >= 3``.
    """
    mats = _validate(mats, eps)
    d = mats[0].shape[0]
    real = not np.iscomplexobj(mats[0])
    if real and d < 3:
        raise FieldDimUnsupported("the eigenvalue perturbation needs d >= 3 over the reals")
    if d < 2:
        raise FieldDimUnsupported("the eigenvalue perturbation needs d >= 2")
    ell = len(mats)
    p = product(mats)
    v0, nu = _pick_eigen(p, real)
    v0 = _orthonormal(v0, "invariant subspace")
    frames = [frame_to_last(v0)]
    w = v0
    for a in mats[:-1]:
        w = _orthonormal(a @ w, "propagated subspace")
        frames.append(frame_to_last(w))
    frames.append(frames[0])  # V_ℓ = V_0
    new = _apply_frames(mats, frames, eps, nu)
    return PerturbResult(new, _errors(mats, new), kappa_e(product(new)), (1 + eps) ** ell,
                         "kappa_e", frames, nu)


def perturb_singular(mats, eps: float) -> PerturbResult:
    """Perturb each factor by at most ``ε‖A_j‖`` so that the product has
    condition number at least ``(1+ε)^ℓ``."""
    mats = _validate(mats, eps)
    d = mats[0].shape[0]
    if d < 2:
        raise FieldDimUnsupported("the singular-value perturbation needs d >= 2")
    ell = len(mats)
    p = product(mats)
    _, _, vh = np.linalg.svd(p)
    v = vh[-1].conj()
    frames = []
    for a in mats:
        v = v / np.linalg.norm(v)
        frames.append(frame_to_last(v[:, None]))
        v = a @ v
    frames.append(frame_to_last((v / np.linalg.norm(v))[:, None]))
    new = _apply_frames(mats, frames, eps, 1)
    return PerturbResult(new, _errors(mats, new), kappa(product(new)), (1 + eps) ** ell,
                         "kappa", frames, 1)

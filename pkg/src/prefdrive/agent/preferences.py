"""Preference vectors: simplex sampling, interpolation, scalarization, angles."""

from __future__ import annotations

import numpy as np

N_PREFS = 4
N_OBJECTIVES = 5  # core + four styles
CORE_WEIGHT = 1.0  # the core objective is never traded away

_EPS = 1e-12


def sample_preference(rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the 3-simplex (flat Dirichlet over 4 weights)."""
    return rng.dirichlet(np.ones(N_PREFS))


def validate_preference(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (N_PREFS,):
        raise ValueError(f"preference vector must have {N_PREFS} components")
    if not np.all(np.isfinite(lam)):
        raise ValueError("preference vector must be finite")
    if np.any(lam < -1e-9) or np.any(lam > 1.0 + 1e-9):
        raise ValueError("preference weights must lie in [0, 1]")
    if abs(float(lam.sum()) - 1.0) > 1e-6:
        raise ValueError("preference weights must sum to 1")
    return np.clip(lam, 0.0, 1.0)


def augment(lam: np.ndarray) -> np.ndarray:
    """Attach the fixed core weight: lambda~ = (1, lambda)."""
    lam = np.atleast_2d(np.asarray(lam, dtype=np.float64))
    core = np.full((lam.shape[0], 1), CORE_WEIGHT)
    out = np.concatenate([core, lam], axis=1)
    return out[0] if out.shape[0] == 1 else out


def scalarize(lam, q) -> float | np.ndarray:
    """Weighted objective value under the augmented preference (1, lambda).

    Accepts single vectors or aligned batches; q has 5 components per row.
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if lam.shape[1] == N_PREFS:
        lam = np.concatenate([np.full((lam.shape[0], 1), CORE_WEIGHT), lam], axis=1)
    if lam.shape[1] != q.shape[1]:
        raise ValueError("weight/value dimension mismatch")
    out = np.sum(lam * q, axis=1)
    return float(out[0]) if out.shape[0] == 1 else out


class NormalizingInterpolator:
    """Default interpolator: the unit-norm direction of the raw preference."""

    def __call__(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        norm = np.linalg.norm(lam)
        if norm < _EPS:
            raise ValueError("cannot interpolate a zero preference vector")
        return lam / norm


class AnchorInterpolator:
    """Anchor-table interpolator.

    Maps K anchor preferences to stored value-space directions and blends
    between them with inverse-distance weights; an exact anchor hit returns
    that anchor's direction. Directions are re-normalized after blending.
    """

    def __init__(self, anchors: np.ndarray, directions: np.ndarray):
        self.anchors = np.asarray(anchors, dtype=np.float64)
        self.directions = np.asarray(directions, dtype=np.float64)
        if self.anchors.ndim != 2 or self.anchors.shape[0] == 0:
            raise ValueError("need at least one anchor")
        if self.anchors.shape != self.directions.shape:
            raise ValueError("anchor/direction shape mismatch")
        norms = np.linalg.norm(self.directions, axis=1, keepdims=True)
        if np.any(norms < _EPS):
            raise ValueError("anchor directions must be nonzero")
        self.directions = self.directions / norms

    def __call__(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        if np.linalg.norm(lam) < _EPS:
            raise ValueError("cannot interpolate a zero preference vector")
        d = np.linalg.norm(self.anchors - lam, axis=1)
        hit = np.argmin(d)
        if d[hit] < 1e-9:
            return self.directions[hit].copy()
        w = 1.0 / d
        blended = (w[:, None] * self.directions).sum(axis=0) / w.sum()
        norm = np.linalg.norm(blended)
        if norm < _EPS:
            raise ValueError("anchor blend collapsed to zero")
        return blended / norm


def interpolate_preference(lam, interpolator=None) -> np.ndarray:
    interp = interpolator or NormalizingInterpolator()
    return interp(np.asarray(lam, dtype=np.float64))


def angle_loss(lam_p, q_pref) -> float | np.ndarray:
    """Angle (radians) between the preference direction and the value direction.

    Zero iff the vectors are parallel; invariant to positive rescaling of
    either argument; bounded by pi. Batched rows are handled independently.
    """
    a = np.atleast_2d(np.asarray(lam_p, dtype=np.float64))
    b = np.atleast_2d(np.asarray(q_pref, dtype=np.float64))
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na < _EPS) or np.any(nb < _EPS):
        raise ValueError("angle loss needs nonzero vectors")
    cos = np.clip(np.sum(a * b, axis=1) / (na * nb), -1.0, 1.0)
    out = np.arccos(cos)
    return float(out[0]) if out.shape[0] == 1 else out


def angle_loss_grad(lam_p: np.ndarray, q_pref: np.ndarray,
                    eps: float = 1e-7) -> np.ndarray:
    """d angle / d q_pref for batched rows (used by the policy/critic updates)."""
    a = np.atleast_2d(np.asarray(lam_p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q_pref, dtype=np.float64))
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nq = np.linalg.norm(q, axis=1, keepdims=True)
    nq = np.maximum(nq, _EPS)
    cos = np.clip(np.sum(a * q, axis=1, keepdims=True) / (na * nq), -1.0 + eps, 1.0 - eps)
    dcos_dq = a / (na * nq) - cos * q / (nq * nq)
    return -dcos_dq / np.sqrt(1.0 - cos ** 2)

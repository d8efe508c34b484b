"""Hot propagation kernels: fixed-step RK4 loops over small complex matrices.

Two kernels cover every propagation path in the package:

``rk4_superop``
    steps a vectorized state ``v`` under a constant superoperator matrix,
    ``dv/dt = L v`` (used for all one-pair models and small Lindblad systems
    whose superoperator fits in memory).

``rk4_lindblad``
    steps a density matrix under a Lindblad right-hand side kept in matrix
    form, ``drho/dt = -i[H, rho] + sum_m c_m (2 A_m rho A_m^+ - N_m rho
    - rho N_m)`` with ``N_m = A_m^+ A_m`` (used for the truncated Fock-space
    dynamics where the vectorized superoperator would be too large). The
    jump operators must be ladder-like - at most one nonzero per row and per
    column - which makes every ``N_m`` diagonal, so the dissipator costs
    O(dim^2) per step instead of O(dim^3); only the commutator needs dense
    matrix products.

Both are compiled with numba when available. The pure-numpy fallback is the
same algorithm uncompiled; select it with ``PAIRKIN_BACKEND=numpy``.
``PAIRKIN_BACKEND=numba`` forces compilation and raises if numba is missing.
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

BACKEND_ENV = "PAIRKIN_BACKEND"

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None
    HAVE_NUMBA = False


def _rk4_superop(L, v0, dt, n_steps):
    n = v0.shape[0]
    out = np.empty((n_steps + 1, n), dtype=np.complex128)
    out[0] = v0
    v = v0.copy()
    sixth = dt / 6.0
    half = 0.5 * dt
    for s in range(n_steps):
        k1 = L @ v
        k2 = L @ (v + half * k1)
        k3 = L @ (v + half * k2)
        k4 = L @ (v + dt * k3)
        v = v + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        out[s + 1] = v
    return out


def _lindblad_rhs_np(H, has_h, src, dst, amp, offsets, coeffs, nsum, rho):
    if has_h:
        out = -1j * (H @ rho - rho @ H)
    else:
        out = np.zeros_like(rho)
    out -= (nsum[:, None] + nsum[None, :]) * rho
    for m in range(offsets.shape[0] - 1):
        cm = coeffs[m]
        if cm == 0.0:
            continue
        lo, hi = offsets[m], offsets[m + 1]
        s, d, a = src[lo:hi], dst[lo:hi], amp[lo:hi]
        out[np.ix_(d, d)] += (2.0 * cm) * (a[:, None] * a.conj()[None, :]) \
            * rho[np.ix_(s, s)]
    return out


def _rk4_lindblad_np(H, has_h, src, dst, amp, offsets, coeffs, nsum, rho0,
                     dt, n_steps):
    d = rho0.shape[0]
    out = np.empty((n_steps + 1, d, d), dtype=np.complex128)
    out[0] = rho0
    rho = rho0.copy()
    sixth = dt / 6.0
    half = 0.5 * dt
    for s in range(n_steps):
        k1 = _lindblad_rhs_np(H, has_h, src, dst, amp, offsets, coeffs, nsum, rho)
        k2 = _lindblad_rhs_np(H, has_h, src, dst, amp, offsets, coeffs, nsum,
                              rho + half * k1)
        k3 = _lindblad_rhs_np(H, has_h, src, dst, amp, offsets, coeffs, nsum,
                              rho + half * k2)
        k4 = _lindblad_rhs_np(H, has_h, src, dst, amp, offsets, coeffs, nsum,
                              rho + dt * k3)
        rho = rho + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        out[s + 1] = rho
    return out


def _lindblad_rhs_loops(H, has_h, src, dst, amp, offsets, coeffs, nsum, rho):
    # Same algorithm as _lindblad_rhs_np written with explicit loops so numba
    # can compile it without temporaries.
    if has_h:
        out = -1j * (H @ rho - rho @ H)
    else:
        out = np.zeros_like(rho)
    d = rho.shape[0]
    for r in range(d):
        nr = nsum[r]
        for c in range(d):
            out[r, c] -= (nr + nsum[c]) * rho[r, c]
    for m in range(offsets.shape[0] - 1):
        cm = coeffs[m]
        if cm == 0.0:
            continue
        lo, hi = offsets[m], offsets[m + 1]
        for i in range(lo, hi):
            gain = 2.0 * cm * amp[i]
            si, di = src[i], dst[i]
            for j in range(lo, hi):
                out[di, dst[j]] += gain * np.conj(amp[j]) * rho[si, src[j]]
    return out


if HAVE_NUMBA:
    _rk4_superop_nb = njit(cache=True)(_rk4_superop)
    _lindblad_rhs_nb = njit(cache=True)(_lindblad_rhs_loops)

    @njit(cache=True)
    def _rk4_lindblad_nb(H, has_h, src, dst, amp, offsets, coeffs, nsum, rho0,
                         dt, n_steps):
        d = rho0.shape[0]
        out = np.empty((n_steps + 1, d, d), dtype=np.complex128)
        out[0] = rho0
        rho = rho0.copy()
        sixth = dt / 6.0
        half = 0.5 * dt
        for s in range(n_steps):
            k1 = _lindblad_rhs_nb(H, has_h, src, dst, amp, offsets, coeffs,
                                  nsum, rho)
            k2 = _lindblad_rhs_nb(H, has_h, src, dst, amp, offsets, coeffs,
                                  nsum, rho + half * k1)
            k3 = _lindblad_rhs_nb(H, has_h, src, dst, amp, offsets, coeffs,
                                  nsum, rho + half * k2)
            k4 = _lindblad_rhs_nb(H, has_h, src, dst, amp, offsets, coeffs,
                                  nsum, rho + dt * k3)
            rho = rho + sixth * (k1 + 2.0 * (k2 + k3) + k4)
            out[s + 1] = rho
        return out


def _default_backend() -> str:
    choice = os.environ.get(BACKEND_ENV, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError(f"{BACKEND_ENV}=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise RuntimeError(f"{BACKEND_ENV} must be 'auto', 'numba' or 'numpy' (got {choice!r})")


_active = _default_backend()


def active_backend() -> str:
    """Name of the kernel backend currently in use ('numba' or 'numpy')."""
    return _active


def set_backend(name: str) -> None:
    """Switch the kernel backend at runtime (mainly for tests and benchmarks)."""
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _active = name


def _as_c128(x):
    return np.ascontiguousarray(x, dtype=np.complex128)


def rk4_superop(L, v0, dt: float, n_steps: int) -> np.ndarray:
    """Propagate ``dv/dt = L v`` with fixed-step RK4; returns (n_steps+1, n)."""
    L = _as_c128(L)
    v0 = _as_c128(v0)
    if _active == "numba":
        return _rk4_superop_nb(L, v0, float(dt), int(n_steps))
    return _rk4_superop(L, v0, float(dt), int(n_steps))


def _jump_representation(A, coeffs):
    """(src, dst, amp, offsets, nsum) arrays for a stack of ladder-like jumps."""
    src_parts, dst_parts, amp_parts = [], [], []
    offsets = np.zeros(A.shape[0] + 1, dtype=np.int64)
    nsum = np.zeros(A.shape[1], dtype=np.float64)
    for m in range(A.shape[0]):
        rows, cols = np.nonzero(A[m])
        if len(set(rows.tolist())) != len(rows) or len(set(cols.tolist())) != len(cols):
            raise ValueError("jump operators must be ladder-like: at most one "
                             "nonzero per row and per column")
        vals = A[m][rows, cols]
        dst_parts.append(rows.astype(np.int64))
        src_parts.append(cols.astype(np.int64))
        amp_parts.append(vals.astype(np.complex128))
        offsets[m + 1] = offsets[m] + len(rows)
        # N_m = A_m^+ A_m is diagonal for ladder-like jumps
        np.add.at(nsum, cols, coeffs[m] * np.abs(vals) ** 2)
    cat = lambda parts, dt_: (np.concatenate(parts) if parts
                              else np.zeros(0, dtype=dt_))
    return (cat(src_parts, np.int64), cat(dst_parts, np.int64),
            cat(amp_parts, np.complex128), offsets, nsum)


def rk4_lindblad(H, A, coeffs, rho0, dt: float, n_steps: int) -> np.ndarray:
    """Propagate a Lindblad equation kept in matrix form with fixed-step RK4.

    ``A`` is a (m, d, d) stack of ladder-like jump operators with nonnegative
    weights ``coeffs``; the dissipator uses the 2 A rho A^+ - {A^+ A, rho}
    convention. Returns the (n_steps+1, d, d) stack of states.
    """
    H = _as_c128(H)
    A = _as_c128(A)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    rho0 = _as_c128(rho0)
    src, dst, amp, offsets, nsum = _jump_representation(A, coeffs)
    has_h = bool(np.any(H))
    args = (H, has_h, src, dst, amp, offsets, coeffs, nsum, rho0,
            float(dt), int(n_steps))
    if _active == "numba":
        return _rk4_lindblad_nb(*args)
    return _rk4_lindblad_np(*args)

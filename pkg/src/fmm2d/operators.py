"""Expansion algebra for the harmonic kernel G(y; z_s, g) = g / (z_s - y).

Outgoing ("multipole") expansions about a center z0 have the form

    M(y) = a[0] * log(y - z0) + sum_{j=1..p} a[j] / (y - z0)**j,

incoming ("local") expansions the form

    L(y) = sum_{j=0..p} b[j] * (y - z0)**j.

Frozen sign conventions, fixed by the single-source oracle tests:

* p2m produces a[j] = -sum_i g_i (z_i - z0)**(j-1) with a[0] = 0, so that the
  outgoing evaluation m2p reproduces the kernel above.
* p2l produces b[k] = +sum_i g_i / (z_i - z0)**(k+1), so that the incoming
  evaluation l2p reproduces the kernel.

All translation shifts are source-center minus target-center: m2m takes
child - parent, l2l takes parent - child, and m2l takes the outgoing center
minus the incoming center.  The a[0] slot is carried through every operator
(log corrections included) so a log-charge kernel can plug in later; the
complex log uses the principal branch, which is only branch-consistent across
shifts for a[0] = 0.

The shift operators are in-place triangular cascades costing O(p^2) additions
after an O(p) pre/post scaling; they broadcast over any leading batch
dimensions of the coefficient array, with one shift per batch row.  The scaled
variants are the default and fall back to the unscaled forms (exact for any
shift, including zero) when |shift| leaves [1e-12, 1e12], where the scaling
powers would over- or underflow.
"""

from __future__ import annotations

import numpy as np

_SCALED_MIN = 1e-12
_SCALED_MAX = 1e12


def _as_batch(coeffs, shift):
    a = np.array(coeffs, dtype=np.complex128, copy=True)
    if a.ndim < 1 or a.shape[-1] < 2:
        raise ValueError("coefficient arrays need at least 2 terms (p >= 1)")
    r = np.asarray(shift, dtype=np.complex128)
    r = np.broadcast_to(r, a.shape[:-1])
    return a, r


def _powers(r, p):
    """pw[..., j] = r**j for j = 0..p, built by cumulative multiplication."""
    pw = np.empty(r.shape + (p + 1,), dtype=np.complex128)
    pw[..., 0] = 1.0
    for j in range(1, p + 1):
        pw[..., j] = pw[..., j - 1] * r
    return pw


# ---------------------------------------------------------------------------
# initialization


def p2m(positions, strengths, center, p: int) -> np.ndarray:
    """Outgoing coefficients of point sources about ``center``.

    a[0] = 0 and a[j] = -sum_i g_i (z_i - center)**(j-1) for j = 1..p.
    Linear in the strengths.
    """
    c = np.asarray(positions, dtype=np.complex128) - center
    a = np.zeros(p + 1, dtype=np.complex128)
    w = np.asarray(strengths, dtype=np.complex128)
    for j in range(1, p + 1):
        a[j] = -np.sum(w)
        w = w * c
    return a


def p2l(positions, strengths, center, p: int) -> np.ndarray:
    """Incoming coefficients of far point sources about ``center``.

    b[k] = sum_i g_i / (z_i - center)**(k+1).  Every source must lie away
    from the center.
    """
    d = np.asarray(positions, dtype=np.complex128) - center
    if np.any(d == 0):
        raise ValueError("p2l source coincides with the expansion center")
    inv = 1.0 / d
    b = np.empty(p + 1, dtype=np.complex128)
    w = np.asarray(strengths, dtype=np.complex128) * inv
    for k in range(p + 1):
        b[k] = np.sum(w)
        w = w * inv
    return b


# ---------------------------------------------------------------------------
# shifts


def _m2m_unscaled(a, r):
    p = a.shape[-1] - 1
    for k in range(p, 1, -1):
        for j in range(k, p + 1):
            a[..., j] += r * a[..., j - 1]
    a0 = a[..., 0]
    if np.any(a0 != 0):
        rp = r
        for j in range(1, p + 1):
            a[..., j] -= rp * a0 / j
            rp = rp * r
    return a


def _m2m_scaled(a, r):
    p = a.shape[-1] - 1
    pw = _powers(r, p)
    a[..., 1:] /= pw[..., 1:]
    for k in range(p, 1, -1):
        for j in range(k, p + 1):
            a[..., j] += a[..., j - 1]
    a0 = a[..., 0]
    j_idx = np.arange(1, p + 1)
    a[..., 1:] = (a[..., 1:] - a0[..., None] / j_idx) * pw[..., 1:]
    return a


def m2m(coeffs, shift, variant: str = "scaled") -> np.ndarray:
    """Re-center outgoing coefficients; ``shift`` = old center - new center.

    Exact polynomial identity in the coefficients (binomial convolution plus
    the a[0] log correction).  ``variant`` selects the scaled or unscaled
    cascade; the scaled one routes shifts outside its safe magnitude window
    through the unscaled path, which is the identity at zero shift.
    """
    a, r = _as_batch(coeffs, shift)
    if variant == "unscaled":
        return _m2m_unscaled(a, r)
    if variant != "scaled":
        raise ValueError(f"unknown m2m variant: {variant!r}")
    mag = np.abs(r)
    ok = (mag >= _SCALED_MIN) & (mag <= _SCALED_MAX)
    if np.all(ok):
        return _m2m_scaled(a, r)
    if not np.any(ok):
        return _m2m_unscaled(a, r)
    scaled = _m2m_scaled(a.copy(), np.where(ok, r, 1.0))
    unscaled = _m2m_unscaled(a, r)
    return np.where(ok[..., None], scaled, unscaled)


def _l2l_unscaled(b, r):
    p = b.shape[-1] - 1
    rr = r[..., None]
    for k in range(p + 1):
        lo = p - k
        b[..., lo:p] = b[..., lo:p] - rr * b[..., lo + 1 : p + 1]
    return b


def _l2l_scaled(b, r):
    p = b.shape[-1] - 1
    pw = _powers(r, p)
    b[..., 1:] *= pw[..., 1:]
    for k in range(p + 1):
        lo = p - k
        b[..., lo:p] = b[..., lo:p] - b[..., lo + 1 : p + 1]
    b[..., 1:] /= pw[..., 1:]
    return b


def l2l(coeffs, shift) -> np.ndarray:
    """Re-center incoming coefficients; ``shift`` = old center - new center.

    Function-exact: evaluating the result anywhere equals evaluating the
    input there.  Zero shift is the identity.
    """
    b, r = _as_batch(coeffs, shift)
    mag = np.abs(r)
    ok = (mag >= _SCALED_MIN) & (mag <= _SCALED_MAX)
    if np.all(ok):
        return _l2l_scaled(b, r)
    if not np.any(ok):
        return _l2l_unscaled(b, r)
    scaled = _l2l_scaled(b.copy(), np.where(ok, r, 1.0))
    unscaled = _l2l_unscaled(b, r)
    return np.where(ok[..., None], scaled, unscaled)


def m2l(coeffs, shift) -> np.ndarray:
    """Convert outgoing to incoming coefficients across a separated pair.

    ``shift`` is the outgoing center minus the incoming center and must be
    nonzero.  Prescale c[j-1] = a[j] (-1)**j / shift**j, pad c[p] = 0, run the
    two triangular accumulation passes, apply the a[0] log correction, and
    postscale b[j] = (c[j] - a[0]/j) / shift**j.
    """
    a, rho = _as_batch(coeffs, shift)
    if np.any(rho == 0):
        raise ValueError("m2l shift must be nonzero (boxes are separated)")
    p = a.shape[-1] - 1
    pw = _powers(rho, p)
    c = np.empty_like(a)
    sign = -1.0
    for j in range(1, p + 1):
        c[..., j - 1] = a[..., j] / pw[..., j] * sign
        sign = -sign
    c[..., p] = 0.0
    for k in range(2, p + 1):
        lo = p - k
        c[..., lo:p] = c[..., lo:p] + c[..., lo + 1 : p + 1]
    for k in range(p, 0, -1):
        for j in range(k, p + 1):
            c[..., j] += c[..., j - 1]
    a0 = a[..., 0]
    if np.any(a0 != 0):
        # log(incoming center - outgoing center), principal branch
        c[..., 0] += a0 * np.log(-rho)
    j_idx = np.arange(1, p + 1)
    c[..., 1:] = (c[..., 1:] - a0[..., None] / j_idx) / pw[..., 1:]
    return c


# ---------------------------------------------------------------------------
# evaluation


def l2p(coeffs, center, targets) -> np.ndarray:
    """Evaluate an incoming expansion at target points (Horner recurrence)."""
    b = np.asarray(coeffs, dtype=np.complex128)
    w = np.asarray(targets, dtype=np.complex128) - center
    acc = np.full_like(w, b[-1])
    for j in range(b.shape[0] - 2, -1, -1):
        acc = acc * w + b[j]
    return acc


def m2p(coeffs, center, targets) -> np.ndarray:
    """Evaluate an outgoing expansion at target points away from its center.

    The log term is evaluated only when a[0] is nonzero (it is zero for the
    harmonic kernel).
    """
    a = np.asarray(coeffs, dtype=np.complex128)
    u = np.asarray(targets, dtype=np.complex128) - center
    if np.any(u == 0):
        raise ValueError("m2p target coincides with the expansion center")
    inv = 1.0 / u
    p = a.shape[0] - 1
    acc = np.full_like(inv, a[p])
    for j in range(p - 1, 0, -1):
        acc = acc * inv + a[j]
    acc = acc * inv
    if a[0] != 0:
        acc = acc + a[0] * np.log(u)
    return acc


def reciprocal_parts(src, tgt):
    """Real and imaginary parts of 1/(z_s - y) for a source/target block.

    Works in real arithmetic (conjugate over squared distance), which is
    several times faster than complex division.  Coincident pairs get zero
    entries; the count of such pairs is returned alongside.
    """
    dx = src.real[None, :] - tgt.real[:, None]
    dy = src.imag[None, :] - tgt.imag[:, None]
    r2 = dx * dx
    r2 += dy * dy
    zero = r2 == 0.0
    n_skip = int(np.count_nonzero(zero))
    with np.errstate(divide="ignore"):
        np.divide(1.0, r2, out=r2)
    if n_skip:
        r2[zero] = 0.0
    dx *= r2
    dy *= r2
    return dx, dy, n_skip


def kernel_block(src_pos, strengths, targets):
    """Dense kernel evaluation of one source block at one target block.

    Returns the potential increments and the number of skipped coincident
    source/target pairs (exact position equality contributes nothing, which
    also covers self-interaction when targets alias sources).
    """
    src = np.asarray(src_pos, dtype=np.complex128)
    tgt = np.asarray(targets, dtype=np.complex128)
    g = np.asarray(strengths, dtype=np.float64)
    re_part, im_part, n_skip = reciprocal_parts(src, tgt)
    phi = re_part.dot(g) - 1j * im_part.dot(g)
    return phi, n_skip


def p2p_pair(src_pos, strengths, targets):
    """Direct near-field evaluation of one box pair; see :func:`kernel_block`."""
    return kernel_block(src_pos, strengths, targets)

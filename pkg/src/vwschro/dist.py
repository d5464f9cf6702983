"""Symbolic coefficient distributions, their Fourier transforms and
windowed membership checks for the weighted symbol classes that admit
bounded regularizations.

A :class:`DistributionSpec` describes one of five variants (point mass,
point-mass derivative, classical function, tabulated transform, finite
weighted sum).  The Fourier convention throughout the package is

    u_hat(xi) = int e^{-i x xi} u(x) dx,

extended by duality, with the inverse transform carrying ``(2 pi)^{-d}``.

The membership check asks, for a given order ``i``, whether every
derivative of ``u_hat`` up to order ``i`` is polynomially bounded.  A
global check is impossible numerically, so the implementation fits the
growth of the running supremum of ``|d^beta u_hat|`` over an expanding
ladder of sub-windows and compares the fitted exponent against a degree
cap.  The result is a windowed surrogate and is labelled as such in the
report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, RangeError, UnsupportedVariantError
from .fitting import loglog_fit


class DistributionSpec:
    """Base class for symbolic coefficient distributions."""

    dim: int = 1

    def fourier(self, *xi):
        raise NotImplementedError


@dataclass(frozen=True)
class Delta(DistributionSpec):
    """Point mass at ``center``; compactly supported, transform
    ``e^{-i center . xi}`` of unit modulus."""

    center: float | tuple[float, float] = 0.0

    @property
    def dim(self) -> int:
        return 2 if isinstance(self.center, tuple) else 1

    def fourier(self, *xi):
        if self.dim == 1:
            (x1,) = xi
            return np.exp(-1j * self.center * np.asarray(x1, dtype=float))
        x1, x2 = xi
        c1, c2 = self.center
        return np.exp(-1j * (c1 * np.asarray(x1, float) + c2 * np.asarray(x2, float)))


@dataclass(frozen=True)
class DeltaDerivative(DistributionSpec):
    """k-th derivative of a 1D point mass; transform ``(i xi)^k e^{-i c xi}``."""

    center: float = 0.0
    order: int = 1

    def __post_init__(self):
        if self.order < 0:
            raise ParameterError("derivative order must be nonnegative")

    dim = 1

    def fourier(self, *xi):
        (x1,) = xi
        x1 = np.asarray(x1, dtype=float)
        return (1j * x1) ** self.order * np.exp(-1j * self.center * x1)


@dataclass(frozen=True)
class ClassicalFn(DistributionSpec):
    """Classical function given in closed form.

    ``fn`` maps grid samples to (complex) values.  ``fourier`` may supply
    the exact transform; when absent the transform is computed by
    quadrature of ``fn`` over ``[-quad_halfwidth, quad_halfwidth]`` (the
    function must decay inside that window).  ``support_radius`` marks
    compactly supported functions (admissible as time coefficients).
    """

    fn: Callable = None
    fourier_fn: Callable | None = None
    dim_: int = 1
    support_radius: float | None = None
    quad_halfwidth: float = 40.0
    quad_points: int = 2**15

    @property
    def dim(self) -> int:
        return self.dim_

    def __call__(self, *x):
        return self.fn(*x)

    def fourier(self, *xi):
        if self.fourier_fn is not None:
            return np.asarray(self.fourier_fn(*xi), dtype=np.complex128)
        if self.dim != 1:
            raise UnsupportedVariantError(
                "numerical transform of 2D classical functions is not supported; "
                "supply fourier_fn"
            )
        (x1,) = xi
        x1 = np.asarray(x1, dtype=float)
        H = self.support_radius if self.support_radius is not None else self.quad_halfwidth
        s = np.linspace(-H, H, self.quad_points + 1)
        f = np.asarray(self.fn(s), dtype=np.complex128)
        # trapezoid in chunks to bound the (len(xi), quad_points) workspace
        out = np.empty(x1.shape, dtype=np.complex128)
        flat = x1.ravel()
        res = out.ravel()
        step = max(1, 2**22 // (self.quad_points + 1))
        for lo in range(0, flat.size, step):
            chunk = flat[lo : lo + step]
            ker = np.exp(-1j * np.outer(chunk, s))
            res[lo : lo + len(chunk)] = np.trapezoid(ker * f[None, :], s, axis=1)
        return out


@dataclass(frozen=True)
class FourierTable(DistributionSpec):
    """Distribution known only through samples of its transform on a
    strictly increasing 1D grid symmetric about 0.  Queries interpolate
    linearly inside the table and raise outside."""

    xi: np.ndarray = None
    values: np.ndarray = None

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        vals = np.asarray(self.values, dtype=np.complex128)
        if xi.ndim != 1 or xi.shape != vals.shape:
            raise ParameterError("table grid and values must be matching 1D arrays")
        if not np.all(np.diff(xi) > 0):
            raise ParameterError("table grid must be strictly increasing")
        if abs(xi[0] + xi[-1]) > 1e-9 * max(1.0, abs(xi[-1])):
            raise ParameterError("table grid must be symmetric about 0")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", vals)

    dim = 1

    def fourier(self, *xi):
        (q,) = xi
        q = np.asarray(q, dtype=float)
        if np.any(q < self.xi[0]) or np.any(q > self.xi[-1]):
            raise RangeError(
                f"query outside table range [{self.xi[0]}, {self.xi[-1]}]"
            )
        re = np.interp(q, self.xi, self.values.real)
        im = np.interp(q, self.xi, self.values.imag)
        return re + 1j * im


@dataclass(frozen=True)
class FiniteSum(DistributionSpec):
    """Finite weighted sum of member distributions."""

    terms: tuple = ()

    def __post_init__(self):
        if not self.terms:
            raise ParameterError("FiniteSum needs at least one (weight, spec) term")
        dims = {spec.dim for _, spec in self.terms}
        if len(dims) != 1:
            raise ParameterError("FiniteSum members must share a dimension")

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim

    def fourier(self, *xi):
        acc = None
        for w, spec in self.terms:
            term = w * spec.fourier(*xi)
            acc = term if acc is None else acc + term
        return acc


def fourier_eval(d: DistributionSpec, xi) -> np.ndarray:
    """Evaluate ``u_hat`` of a distribution spec on a frequency array.

    1D specs take a real array; 2D specs take a tuple ``(xi1, xi2)`` of
    broadcastable arrays.
    """
    if d.dim == 1:
        arr = np.asarray(xi, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ParameterError("xi must be finite")
        return np.asarray(d.fourier(arr), dtype=np.complex128)
    if not isinstance(xi, (tuple, list)) or len(xi) != 2:
        raise ParameterError("2D specs require xi as a tuple (xi1, xi2)")
    x1, x2 = (np.asarray(a, dtype=float) for a in xi)
    return np.asarray(d.fourier(x1, x2), dtype=np.complex128)


def is_compactly_supported(d: DistributionSpec) -> bool:
    if isinstance(d, (Delta, DeltaDerivative)):
        return True
    if isinstance(d, ClassicalFn):
        return d.support_radius is not None
    if isinstance(d, FiniteSum):
        return all(is_compactly_supported(s) for _, s in d.terms)
    return False


@dataclass(frozen=True)
class MembershipReport:
    """Outcome of the windowed polynomial-boundedness check.

    ``exponents`` maps each derivative multi-index to the fitted growth
    exponent of the running supremum over expanding sub-windows;
    ``constants`` holds the matching prefactors ``sup |d u_hat| / <xi>^p``.
    The check passes iff every fitted exponent stays at or below
    ``max_poly_degree``.  This is a finite-window surrogate for the
    global bound, and ``note`` says so.
    """

    order: int
    window: tuple[float, float]
    max_poly_degree: int
    exponents: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    passed: bool = True
    note: str = (
        "windowed surrogate: exponents fitted on a finite window with a "
        "capped polynomial degree; not a certificate of the global bound"
    )


_FD4_FIRST = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _fd_first(values: np.ndarray, step: float, axis: int = 0) -> np.ndarray:
    """4th-order central first derivative; output loses 2 samples per side."""
    v = np.moveaxis(values, axis, 0)
    out = sum(c * v[j : v.shape[0] - 4 + j or None] for j, c in enumerate(_FD4_FIRST) if c)
    return np.moveaxis(out / step, 0, axis)


def _eval_grid_for(d: DistributionSpec, window: tuple[float, float], n_eval: int):
    lo, hi = window
    if isinstance(d, FourierTable):
        sel = (d.xi >= lo) & (d.xi <= hi)
        xi = d.xi[sel]
        if xi.size < 64:
            raise ParameterError("table too coarse on the requested window")
        # derivatives are taken at the table's own resolution: a refinement
        # of linear interpolation carries no new information
        return xi, np.asarray(d.values[sel], dtype=np.complex128)
    xi = np.linspace(lo, hi, n_eval)
    return xi, fourier_eval(d, xi)


def check_membership(
    d: DistributionSpec,
    i: int,
    window: tuple[float, float] = (-6.0, 6.0),
    max_poly_degree: int = 8,
    n_eval: int = 200_001,
    ladder: int = 9,
) -> MembershipReport:
    """Check polynomial boundedness of ``d^beta u_hat`` for ``|beta| <= i``.

    Derivatives are taken by repeated 4th-order central differences on a
    fine evaluation grid (the table's own grid for tabulated transforms).
    For each order the supremum over expanding symmetric sub-windows is
    fitted against ``log <w>``; the order passes when the fitted exponent
    does not exceed ``max_poly_degree``.

    Passing at order ``i`` implies passing at any smaller order on the
    same window, since the smaller check uses a subset of the same
    conditions.
    """
    if i < 0:
        raise ParameterError("membership order must be nonnegative")
    if d.dim == 1:
        xi, vals = _eval_grid_for(d, window, n_eval)
        step = float(np.median(np.diff(xi)))
        exponents: dict = {}
        constants: dict = {}
        passed = True
        cur, cur_xi = vals, xi
        for beta in range(i + 1):
            p, C = _window_growth_fit(cur_xi, np.abs(cur), ladder)
            exponents[beta] = p
            constants[beta] = C
            if p > max_poly_degree + 0.25:
                passed = False
            if beta < i:
                cur = _fd_first(cur, step)
                cur_xi = cur_xi[2:-2]
        return MembershipReport(i, window, max_poly_degree, exponents, constants, passed)
    return _check_membership_2d(d, i, window, max_poly_degree, ladder)


def _check_membership_2d(d, i, window, max_poly_degree, ladder):
    n = 513
    lo, hi = window
    ax = np.linspace(lo, hi, n)
    step = ax[1] - ax[0]
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    base = fourier_eval(d, (X1, X2))
    exponents: dict = {}
    constants: dict = {}
    passed = True
    for b1 in range(i + 1):
        for b2 in range(i + 1 - b1):
            cur = base
            for _ in range(b1):
                cur = _fd_first(cur, step, axis=0)
            for _ in range(b2):
                cur = _fd_first(cur, step, axis=1)
            t1 = 2 * b1
            t2 = 2 * b2
            r1 = np.abs(X1[t1 : n - t1 or None, t2 : n - t2 or None])
            r2 = np.abs(X2[t1 : n - t1 or None, t2 : n - t2 or None])
            rad = np.maximum(r1, r2).ravel()
            p, C = _window_growth_fit(rad, np.abs(cur).ravel(), ladder, radial=True)
            exponents[(b1, b2)] = p
            constants[(b1, b2)] = C
            if p > max_poly_degree + 0.25:
                passed = False
    return MembershipReport(i, window, max_poly_degree, exponents, constants, passed)


def _window_growth_fit(xi, mags, ladder, radial=False):
    """Fit the exponent of sup_{|xi| <= w} |f| against <w> over a geometric
    ladder of sub-windows.  Returns (exponent, constant).

    Only the growth region of the running supremum enters the fit: once
    the supremum has reached (essentially) its final value, further
    windows carry no growth information and would dilute a blow-up
    signature, so they are dropped.
    """
    r = np.abs(xi) if not radial else np.asarray(xi)
    order = np.argsort(r)
    r_sorted = r[order]
    running = np.maximum.accumulate(mags[order])
    w_max = r_sorted[-1]
    if w_max <= 0 or running.size == 0 or running[-1] <= 0:
        return 0.0, float(running[-1]) if running.size else 0.0
    ws = np.geomspace(max(w_max / 16.0, r_sorted[r_sorted > 0][0]), w_max, ladder)
    sups = running[np.searchsorted(r_sorted, ws, side="right") - 1]
    grow = np.nonzero(sups >= 0.99 * sups[-1])[0]
    last = int(grow[0]) if grow.size else len(sups) - 1
    keep = sups[: last + 1] > 0
    if last < 1 or keep.sum() < 2:
        return 0.0, float(np.max(sups / np.sqrt(1.0 + ws**2) ** 0.0))
    bracket = np.sqrt(1.0 + ws[: last + 1][keep] ** 2)
    slope, _, _, _ = loglog_fit(bracket, sups[: last + 1][keep])
    p = max(0.0, slope)
    C = float(np.max(sups / np.sqrt(1.0 + ws**2) ** p))
    return p, C

"""Deterministic 2D quadrature over rectangles.

Two interchangeable methods behind one entry point:

* tensor_gauss: panelized 16-point Gauss-Legendre product rule, refined by
  doubling the panel count of whichever axis contributes the larger
  last-doubling delta. Fast for smooth or mildly oscillatory integrands when
  the caller hints a sensible starting resolution.
* adaptive_subdivision: global heap of cells refined largest-error-first,
  with an embedded GL8/GL16 error estimate per cell and deterministic
  lexicographic tie-breaking.

Both are open rules (no endpoint evaluations), fully deterministic, and
account every integrand evaluation toward max_evals. Integrands must accept
numpy arrays and broadcast: f(x[:, None], y[None, :]) -> (nx, ny) array.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .units import DomainError, QuadratureMethod, QuadratureSpec

__all__ = [
    "IntegralResult",
    "ConvergenceError",
    "integrate_2d",
]

_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class IntegralResult:
    """Outcome of one integration.

    converged is True exactly when
    error_estimate <= max(rel_tol * |value|, abs_tol) was reached within the
    evaluation budget; a False flag is the caller's signal to escalate, never
    silently absorbed here.
    """

    value: float
    error_estimate: float
    evals: int
    converged: bool
    method: str


class ConvergenceError(RuntimeError):
    """An integral failed to converge where a converged value is required.

    Carries the offending IntegralResult objects so callers can report the
    achieved error estimates and evaluation counts.
    """

    def __init__(self, message: str, results: Sequence[IntegralResult] = ()):
        detail = "; ".join(
            f"value={r.value!r} err={r.error_estimate:.3e} evals={r.evals} method={r.method}"
            for r in results
        )
        super().__init__(message if not detail else f"{message} [{detail}]")
        self.results = tuple(results)


def _check_domain(domain) -> Tuple[float, float, float, float]:
    try:
        (x0, x1), (y0, y1) = domain
    except (TypeError, ValueError):
        raise DomainError(f"domain must be ((x0, x1), (y0, y1)), got {domain!r}") from None
    x0, x1, y0, y1 = float(x0), float(x1), float(y0), float(y1)
    if not (np.isfinite([x0, x1, y0, y1]).all() and x0 < x1 and y0 < y1):
        raise DomainError(f"domain must be a finite rectangle with positive extent, got {domain!r}")
    return x0, x1, y0, y1


def _panel_rule(a: float, b: float, n_panels: int, nodes, weights):
    # n_panels equal subintervals, each carrying one scaled Gauss rule
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def _tensor_eval(f, x0, x1, y0, y1, nx, ny, nodes, weights):
    x, wx = _panel_rule(x0, x1, nx, nodes, weights)
    y, wy = _panel_rule(y0, y1, ny, nodes, weights)
    values = np.asarray(f(x[:, None], y[None, :]), dtype=float)
    if values.shape != (x.size, y.size):
        raise DomainError(
            f"integrand must broadcast to shape {(x.size, y.size)}, got {values.shape}"
        )
    return float(wx @ values @ wy), values.size


def _tensor_gauss(f, x0, x1, y0, y1, spec: QuadratureSpec, initial_panels):
    nx, ny = initial_panels
    nx = max(2, int(nx))
    ny = max(2, int(ny))
    evals = 0
    max_evals = int(spec.max_evals)

    value, n = _tensor_eval(f, x0, x1, y0, y1, nx, ny, _GL16_X, _GL16_W)
    evals += n
    # an axis whose doubling delta falls far below tolerance is frozen: its
    # last delta keeps counting toward the error but costs no more doublings
    err_x = None
    err_y = None
    frozen_x = False
    frozen_y = False
    while True:
        if not frozen_x:
            value_x2, n = _tensor_eval(f, x0, x1, y0, y1, 2 * nx, ny, _GL16_X, _GL16_W)
            evals += n
            err_x = abs(value_x2 - value)
        if not frozen_y:
            value_y2, n = _tensor_eval(f, x0, x1, y0, y1, nx, 2 * ny, _GL16_X, _GL16_W)
            evals += n
            err_y = abs(value_y2 - value)

        # splitting combination: refined-in-both estimate at no extra evals
        if frozen_x:
            best = value_y2
        elif frozen_y:
            best = value_x2
        else:
            best = value_x2 + value_y2 - value
        err = err_x + err_y
        tol = max(spec.rel_tol * abs(best), spec.abs_tol)
        if err <= tol:
            # base grid + first doubling run before any budget check, so a
            # tiny budget can be overdrawn here; converged promises both
            # tolerance and budget, never just tolerance
            return IntegralResult(best, err, evals, evals <= max_evals, "tensor_gauss")
        frozen_x = frozen_x or err_x <= 0.05 * tol
        frozen_y = frozen_y or err_y <= 0.05 * tol
        # next round costs up to ~4x the current grid; stop if the budget
        # cannot pay rather than silently returning an unconverged value
        if evals + 4 * 256 * nx * ny >= max_evals:
            return IntegralResult(best, err, evals, False, "tensor_gauss")
        if not frozen_x and (frozen_y or err_x >= err_y):
            nx *= 2
            value = value_x2
        elif not frozen_y:
            ny *= 2
            value = value_y2
        else:
            # both frozen yet err > tol: deltas stalled above tolerance
            return IntegralResult(best, err, evals, False, "tensor_gauss")


def _cell_estimate(f, x0, x1, y0, y1):
    coarse, n8 = _tensor_eval(f, x0, x1, y0, y1, 1, 1, _GL8_X, _GL8_W)
    fine, n16 = _tensor_eval(f, x0, x1, y0, y1, 1, 1, _GL16_X, _GL16_W)
    return fine, abs(fine - coarse), n8 + n16


def _adaptive_subdivision(f, x0, x1, y0, y1, spec: QuadratureSpec, initial_panels):
    # seed the heap with a uniform initial split so caller hints still help
    nx, ny = initial_panels
    nx = max(1, int(nx))
    ny = max(1, int(ny))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)

    evals = 0
    total_value = 0.0
    total_err = 0.0
    heap = []
    for i in range(nx):
        for j in range(ny):
            v, e, n = _cell_estimate(f, xs[i], xs[i + 1], ys[j], ys[j + 1])
            evals += n
            total_value += v
            total_err += e
            # key: largest error first, then lexicographic cell coords
            heapq.heappush(heap, (-e, xs[i], ys[j], xs[i + 1], ys[j + 1], v))

    max_evals = int(spec.max_evals)
    while True:
        tol = max(spec.rel_tol * abs(total_value), spec.abs_tol)
        if total_err <= tol:
            # seeding may overdraw a tiny budget; same rule as tensor_gauss
            return IntegralResult(
                total_value, total_err, evals, evals <= max_evals, "adaptive_subdivision"
            )
        if evals + 2 * (64 + 256) > max_evals or not heap:
            return IntegralResult(total_value, total_err, evals, False, "adaptive_subdivision")

        neg_err, cx0, cy0, cx1, cy1, cvalue = heapq.heappop(heap)
        total_value -= cvalue
        total_err -= -neg_err
        if cx1 - cx0 >= cy1 - cy0:
            mids = ((cx0, cy0, 0.5 * (cx0 + cx1), cy1), (0.5 * (cx0 + cx1), cy0, cx1, cy1))
        else:
            mids = ((cx0, cy0, cx1, 0.5 * (cy0 + cy1)), (cx0, 0.5 * (cy0 + cy1), cx1, cy1))
        for bx0, by0, bx1, by1 in mids:
            v, e, n = _cell_estimate(f, bx0, bx1, by0, by1)
            evals += n
            total_value += v
            total_err += e
            heapq.heappush(heap, (-e, bx0, by0, bx1, by1, v))


def integrate_2d(
    f: Callable,
    domain,
    spec: Optional[QuadratureSpec] = None,
    initial_panels: Tuple[int, int] = (2, 2),
) -> IntegralResult:
    """Integrate f over the rectangle domain = ((x0, x1), (y0, y1)).

    f must be vectorized: called with broadcastable arrays x (column) and
    y (row), returning the (nx, ny) array of values. initial_panels is a
    performance hint (starting resolution per axis); it never changes what
    converged means, only how fast the method gets there. Identical inputs
    produce bit-identical results.
    """
    spec = spec if spec is not None else QuadratureSpec()
    x0, x1, y0, y1 = _check_domain(domain)
    if spec.method is QuadratureMethod.TENSOR_GAUSS:
        return _tensor_gauss(f, x0, x1, y0, y1, spec, initial_panels)
    if spec.method is QuadratureMethod.ADAPTIVE_SUBDIVISION:
        return _adaptive_subdivision(f, x0, x1, y0, y1, spec, initial_panels)
    raise DomainError(f"unknown quadrature method {spec.method!r}")

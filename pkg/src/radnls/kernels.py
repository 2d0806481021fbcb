"""Real-space quadrature for radial convolutions with |x - y|^(-2 kappa).

For radial g on R^n,

    int g(|y|) |x - y|^(-2 kappa) dy = int_0^inf g(s) K(|x|, s) s^(n-1) ds,

where K(r, s) is the sphere integral of |r e - s w|^(-2 kappa) over w in
S^(n-1).  It has the closed form

    K(r, s) = |S^(n-1)| M^(-2 kappa) 2F1(kappa, kappa - n/2 + 1; n/2; (m/M)^2),

M = max(r, s), m = min(r, s).  The s-integral is singular at s = r when
2 kappa > n - 1; panels are graded geometrically toward the diagonal and the
innermost gap is filled with the leading singular term.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma, hyp2f1

from .grid import surface_area

GL_ORDER = 12
GRADING_LEVELS = 48


def riesz_constant(n: int, s: float) -> float:
    """c with |grad|^(-s) g = c |x|^(s - n) * g, for 0 < s < n."""
    return math.gamma((n - s) / 2) / (2**s * math.pi ** (n / 2) * math.gamma(s / 2))


def hyp2f1_real(a: float, b: float, c: float, z) -> np.ndarray:
    """2F1(a, b; c; z) for 0 <= z < 1.

    Close to z = 1 the series is slow, so when c - a - b is not an integer
    the standard connection formula in 1 - z is used instead.
    """
    z = np.asarray(z, dtype=float)
    d = c - a - b
    if abs(d - round(d)) < 1e-9:
        return hyp2f1(a, b, c, z)
    out = np.empty_like(z)
    near = z > 0.75
    out[~near] = hyp2f1(a, b, c, z[~near])
    w = 1.0 - z[near]
    g1 = math.gamma(c) * math.gamma(d) / (gamma(c - a) * gamma(c - b))
    g2 = math.gamma(c) * math.gamma(-d) / (gamma(a) * gamma(b))
    out[near] = g1 * hyp2f1(a, b, 1 - d, w) + g2 * w**d * hyp2f1(c - a, c - b, 1 + d, w)
    return out


def sphere_kernel(n: int, kappa: float, r, s) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    M = np.maximum(r, s)
    m = np.minimum(r, s)
    z = (m / M) ** 2
    return surface_area(n) * M ** (-2 * kappa) * hyp2f1_real(kappa, kappa - n / 2 + 1, n / 2, z)


def _diagonal_coefficient(n: int, kappa: float) -> float | None:
    # Near z = 1: 2F1(a, b; c; z) ~ G(c) G(a+b-c) / (G(a) G(b)) (1 - z)^(c-a-b)
    # when c - a - b < 0.  Returns None when the kernel is not singular.
    a, b, c = kappa, kappa - n / 2 + 1, n / 2
    if c - a - b >= 0:
        return None
    return math.gamma(c) * math.gamma(a + b - c) / (gamma(a) * gamma(b))


def _gl(order: int):
    return np.polynomial.legendre.leggauss(order)


def base_breakpoints(scale: float, extent: float, panel: float = 0.25) -> np.ndarray:
    """Breakpoints on [0, extent * scale]: geometric below ``scale``, uniform above.

    Everything is measured in units of ``scale`` so that dilating a problem
    dilates its quadrature exactly.
    """
    geo = scale * 2.0 ** -np.arange(40, 0, -1)
    uni = scale * np.arange(1.0, extent + panel / 2, panel)
    return np.concatenate([[0.0], geo, uni])


def singular_rule(r: float, breaks: np.ndarray, order: int = GL_ORDER,
                  levels: int = GRADING_LEVELS):
    """Nodes and weights on [0, breaks[-1]] graded toward the point s = r.

    Returns (nodes, weights, gap) where ``gap`` is the half-width of the
    interval around r left out of the rule.
    """
    x, w = _gl(order)
    top = breaks[-1]
    if r >= top:
        # no singularity inside; grade toward the right end when close
        pts = breaks
        gap = 0.0
        if r - top < top:
            h = top - breaks[-2]
            extra = top - h * 2.0 ** -np.arange(1, levels)
            pts = np.unique(np.concatenate([breaks, extra[extra > breaks[-2]]]))
    else:
        k = int(np.searchsorted(breaks, r))
        h = breaks[k] - breaks[k - 1] if k > 0 else breaks[1]
        h = min(h, r) if r > 0 else h
        # stop grading well above the floating-point resolution of r
        depth = min(levels, int(math.log2(h / (1e-10 * r))) if r > 0 else levels)
        steps = h * 2.0 ** -np.arange(0, max(depth, 1))
        gap = steps[-1]
        keep = breaks[(breaks <= r - h) | (breaks >= r + h)]
        left = r - steps
        right = r + steps
        pts = np.unique(np.concatenate([keep, left[left >= 0], right[right <= top]]))
    lo, hi = pts[:-1], pts[1:]
    if gap > 0:
        mask = ~((lo >= r - gap * 1.0000001) & (hi <= r + gap * 1.0000001))
        lo, hi = lo[mask], hi[mask]
    nodes = (0.5 * (hi - lo)[:, None] * x[None, :] + 0.5 * (lo + hi)[:, None]).ravel()
    wts = (0.5 * (hi - lo)[:, None] * w[None, :]).ravel()
    return nodes, wts, gap


class RadialConvolution:
    """Precomputed rule for h(r_i) = int g(s) K(r_i, s) s^(n-1) ds.

    ``g`` is any vectorised callable; the kernel weights are reused across
    calls, so one instance serves many time slices or samples.
    """

    def __init__(self, n: int, kappa: float, r_eval, breaks, order: int = GL_ORDER,
                 levels: int = GRADING_LEVELS):
        self.n = n
        self.kappa = kappa
        self.r_eval = np.asarray(r_eval, dtype=float)
        coef = _diagonal_coefficient(n, kappa)
        self._nodes, self._weights, self._diag = [], [], []
        for r in self.r_eval:
            s, w, gap = singular_rule(r, breaks, order, levels)
            self._nodes.append(s)
            self._weights.append(w * sphere_kernel(n, kappa, r, s) * s ** (n - 1))
            if gap > 0 and coef is not None and r > 0:
                # K ~ |S| r^(-2 kappa) coef (2 |r - s| / r)^(c-a-b) on the gap
                e = n / 2 - 2 * kappa + n / 2 - 1
                d = surface_area(n) * r ** (-2 * kappa) * coef * (2.0 / r) ** e
                self._diag.append(d * 2.0 * gap ** (e + 1) / (e + 1) * r ** (n - 1))
            else:
                self._diag.append(0.0)
        self._diag = np.array(self._diag)

    @property
    def node_total(self) -> int:
        return int(sum(len(s) for s in self._nodes))

    def __call__(self, g) -> np.ndarray:
        flat = np.concatenate(self._nodes)
        vals = np.asarray(g(flat))
        out = np.empty(len(self.r_eval), dtype=vals.dtype)
        pos = 0
        for i, (s, w) in enumerate(zip(self._nodes, self._weights)):
            out[i] = np.sum(w * vals[pos : pos + len(s)])
            pos += len(s)
        return out + self._diag * np.asarray(g(self.r_eval))


def log_panel_rule(lo: float, hi: float, per_decade: int = 8, order: int = GL_ORDER):
    """Gauss-Legendre panels in log r on [lo, hi]: (nodes, weights for dr)."""
    x, w = _gl(order)
    panels = max(1, int(math.ceil(per_decade * math.log10(hi / lo))))
    edges = np.linspace(math.log(lo), math.log(hi), panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    u = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    wu = (0.5 * (b - a) * w[None, :]).ravel()
    r = np.exp(u)
    return r, wu * r


def riesz_potential_rule(n: int, s: float, r_eval, breaks) -> RadialConvolution:
    """Rule for |grad|^(-s) g at r_eval; multiply the result by riesz_constant(n, s)."""
    if not 0 < s < n:
        raise ValueError(f"Riesz potential needs 0 < s < n, got s={s}")
    return RadialConvolution(n, (n - s) / 2, r_eval, breaks)

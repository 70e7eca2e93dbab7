"""Dimensionless groups, the exponent lattice and the stability diagram.

The scales are a viscosity ``nu``, a velocity ``v*``, the first Dirichlet
eigenvalue ``lambda1`` (an inverse squared length) and a free time scale
``tau``. The diagram is the right triangle with hypotenuse from
``-2 St Re`` to ``St / (2 Re)`` on the horizontal axis and apex ``St``
above the origin.
"""

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "ScenarioScales", "DimensionlessSet", "DiagramData", "dimensionless_numbers",
    "lattice_certificate", "stability_diagram", "diagram_svg",
    "THETA_CRITICAL", "RE_CRITICAL", "SVG_SCALE",
]

THETA_CRITICAL = math.pi / 8
RE_CRITICAL = 1.0
SVG_SCALE = 20.0  # pixels per diagram unit
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class ScenarioScales:
    nu: float
    v_star: float
    lambda1_omega: float
    tau: float = 1.0

    def __post_init__(self):
        for name in ("nu", "lambda1_omega", "tau"):
            x = getattr(self, name)
            if not (math.isfinite(x) and x > 0):
                raise ValidationError(f"{name} must be positive, got {x!r}")
        if not (math.isfinite(self.v_star) and self.v_star >= 0):
            raise ValidationError(f"v_star must be non-negative, got {self.v_star!r}")


@dataclass(frozen=True)
class DimensionlessSet:
    re_lower: float
    re_star: float
    st_star: float
    product: float
    ratio: float
    ratio_is_limit: bool = False

    def to_dict(self):
        return asdict(self)


def dimensionless_numbers(s):
    '''``Re_ = v*/(nu sqrt(lambda1))``, ``Re* = 2 Re_``, ``St = tau v* sqrt(lambda1)``.

    ``product = St Re_`` and ``ratio = St / Re_``. For ``v* = 0`` the ratio
    is the limiting value ``tau nu lambda1`` and ``ratio_is_limit`` is set.
    '''
    root = math.sqrt(s.lambda1_omega)
    re_lower = s.v_star / (s.nu * root)
    st = s.tau * s.v_star * root
    if s.v_star == 0.0:
        ratio, limit = s.tau * s.nu * s.lambda1_omega, True
    else:
        ratio, limit = st / re_lower, False
    return DimensionlessSet(re_lower, 2.0 * re_lower, st, st * re_lower, ratio, limit)


def lattice_certificate(window=10):
    '''Integer checks on the exponent lattice of ``(T, V, nu, L)``.

    The lattice is cut out by ``alpha - beta - gamma = 0`` and
    ``beta + 2 gamma + delta = 0`` and spanned by ``r = (0,1,-1,1)`` and
    ``s = (1,1,0,-1)``. The sublattice spanned by ``c = s + r`` and
    ``d = s - r`` has index 2: ``m s + n r`` lies in it iff ``m = n mod 2``.
    Membership is decided by solving for the coordinates in ``(c, d)``
    and testing integrality, then compared with the parity rule over
    ``|m|, |n| <= window``.
    '''
    r = np.array([0, 1, -1, 1])
    s = np.array([1, 1, 0, -1])
    c = s + r
    d = s - r
    planes = np.array([[1, -1, -1, 0], [0, 1, 2, 1]])
    checks = {
        "r_dot_s": int(r @ s),
        "c": c.tolist(),
        "d": d.tolist(),
        "c_dot_d": int(c @ d),
        "plane_residuals": {name: (planes @ vec).tolist()
                            for name, vec in (("r", r), ("s", s), ("c", c), ("d", d))},
    }
    basis = np.column_stack([c, d]).astype(float)
    mismatches = []
    for m, n in itertools.product(range(-window, window + 1), repeat=2):
        target = m * s + n * r
        coef, *_ = np.linalg.lstsq(basis, target.astype(float), rcond=None)
        rounded = np.rint(coef)
        member = bool(np.all(np.abs(coef - rounded) < 1e-9)
                      and np.array_equal(basis.astype(int) @ rounded.astype(int), target))
        if member != ((m - n) % 2 == 0):
            mismatches.append([m, n])
    ok = (checks["r_dot_s"] == 0 and checks["c"] == [1, 2, -1, 0]
          and checks["d"] == [1, 0, 1, -2] and checks["c_dot_d"] == 0
          and all(v == [0, 0] for v in checks["plane_residuals"].values())
          and not mismatches)
    checks.update({
        "window": window,
        "pairs_checked": (2 * window + 1) ** 2,
        "parity_mismatches": mismatches,
        "pass": bool(ok),
    })
    return checks


@dataclass(frozen=True)
class DiagramData:
    numbers: DimensionlessSet
    left: float
    right: float
    apex: float
    two_theta: float
    theta: float
    two_theta_norm: float = None
    theta_point: float = None
    geometric_mean_error: float = 0.0
    tan_identity_error: float = 0.0
    in_stability_zone: bool = True
    degenerate: bool = False

    @property
    def identities_hold(self):
        return (self.geometric_mean_error <= IDENTITY_TOL
                and self.tan_identity_error <= IDENTITY_TOL)

    def to_dict(self):
        out = asdict(self)
        out["numbers"] = self.numbers.to_dict()
        out["theta_critical"] = THETA_CRITICAL
        out["re_critical"] = RE_CRITICAL
        out["identities_hold"] = self.identities_hold
        out["svg"] = {"scale_px_per_unit": SVG_SCALE, "origin": "diagram zero",
                      "y_axis": "up in diagram units, down in SVG pixels"}
        return out


def stability_diagram(s, theta_norm_opt=None):
    '''Geometry of the Strouhal-Reynolds-angle triangle.

    ``two_theta`` is the angle at the right vertex; its tangent, the
    ratio of apex height to right endpoint, must reproduce ``Re*``
    computed from the raw scales. The geometric-mean identity ``St^2 = (2 St Re)(St / (2 Re))``
    is checked relative to ``max(1, St^2)``. With ``theta_norm_opt`` the
    axis point seeing the apex under ``2 theta_norm`` is also recorded.
    '''
    nums = dimensionless_numbers(s)
    left = -2.0 * nums.product
    right = 0.5 * nums.ratio
    apex = nums.st_star
    two_theta = math.atan2(apex, right)
    re_direct = 2.0 * s.v_star / (s.nu * math.sqrt(s.lambda1_omega))
    # tangent of the right-vertex angle read off the triangle (opposite / adjacent)
    tan_geom = apex / right
    tan_err = abs(tan_geom - re_direct) / max(1.0, re_direct)
    gm_err = abs(apex * apex - (-left) * right) / max(1.0, apex * apex)
    two_norm = point = None
    if theta_norm_opt is not None:
        two_norm = 2.0 * float(theta_norm_opt)
        point = apex / math.tan(two_norm) if two_norm > 0 else None
    return DiagramData(
        numbers=nums, left=left, right=right, apex=apex,
        two_theta=two_theta, theta=0.5 * two_theta,
        two_theta_norm=two_norm, theta_point=point,
        geometric_mean_error=gm_err, tan_identity_error=tan_err,
        in_stability_zone=nums.re_star < RE_CRITICAL,
        degenerate=s.v_star == 0.0)


def diagram_svg(diagram, target=None):
    '''Render the diagram as SVG.

    Diagram point ``(x, y)`` maps to SVG user coordinates
    ``(20 x, -20 y)``: 1 unit is 20 px and the user-space origin is the
    diagram zero. The ``viewBox`` is padded by 2 units.
    '''
    k = SVG_SCALE
    xs = [diagram.left, diagram.right, 0.0]
    if diagram.theta_point is not None and math.isfinite(diagram.theta_point):
        xs.append(diagram.theta_point)
    pad = 2.0
    x0, x1 = min(xs) - pad, max(xs) + pad
    y1 = diagram.apex + pad
    vb = (k * x0, -k * y1, k * (x1 - x0), k * (y1 + pad))

    def pt(x, y):
        return f"{k * x + 0.0:.6g},{-k * y + 0.0:.6g}"

    center = 0.5 * (diagram.left + diagram.right)
    radius = 0.5 * (diagram.right - diagram.left)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vb[0]:.6g} {vb[1]:.6g} {vb[2]:.6g} {vb[3]:.6g}" '
        f'width="{vb[2]:.6g}" height="{vb[3]:.6g}">',
        f'<line x1="{k * x0:.6g}" y1="0" x2="{k * x1:.6g}" y2="0" stroke="black" stroke-width="1"/>',
        f'<polygon points="{pt(diagram.left, 0)} {pt(0, diagram.apex)} {pt(diagram.right, 0)}" '
        'fill="none" stroke="black" stroke-width="1.5"/>',
        f'<line x1="0" y1="0" x2="0" y2="{-k * diagram.apex:.6g}" stroke="black" stroke-dasharray="2,2"/>',
        f'<path d="M {pt(diagram.right, 0)} A {k * radius:.6g} {k * radius:.6g} 0 0 0 {pt(diagram.left, 0)}" '
        'fill="none" stroke="gray" stroke-dasharray="4,3"/>',
        f'<circle cx="{k * center:.6g}" cy="0" r="1.5" fill="gray"/>',
        f'<text x="{k * diagram.left:.6g}" y="14" font-size="10" text-anchor="middle">'
        f'-2 St Re = {diagram.left:.6g}</text>',
        f'<text x="{k * diagram.right:.6g}" y="14" font-size="10" text-anchor="middle">'
        f'St/(2 Re) = {diagram.right:.6g}</text>',
        f'<text x="4" y="{-k * diagram.apex / 2:.6g}" font-size="10">St = {diagram.apex:.6g}</text>',
        f'<text x="{k * diagram.right - 40:.6g}" y="-4" font-size="10">2theta = {diagram.two_theta:.6g}</text>',
    ]
    if diagram.theta_point is not None and math.isfinite(diagram.theta_point):
        lines.append(
            f'<line x1="0" y1="{-k * diagram.apex:.6g}" x2="{k * diagram.theta_point:.6g}" y2="0" '
            'stroke="black" stroke-dasharray="5,3"/>')
        lines.append(
            f'<text x="{k * diagram.theta_point - 50:.6g}" y="-4" font-size="9">'
            f'2|Theta| = {diagram.two_theta_norm:.6g}</text>')
    zone = "inside" if diagram.in_stability_zone else "outside"
    lines.append(
        f'<text x="{k * x0 + 4:.6g}" y="{-k * y1 + 12:.6g}" font-size="10">'
        f'Re* = {diagram.numbers.re_star:.6g} ({zone} stability zone, Re*_crit = 1, '
        f'theta_cr = pi/8)</text>')
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    if target is None:
        return text
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(text)
    return None

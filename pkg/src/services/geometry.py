"""
Boundary curves, arclength tables, curvature wells and the flux constant
"""

import logging
import os
from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from src.core.config import settings
from src.core.errors import (
    AssumptionViolationError, CurveValidationError, DegenerateParametrizationError, NoWellsError
)
from src.models.schemas import ArcLengthTable, BoundaryCurve, CurveKind, FluxConstant, WellData
from src.utils.numerics import gauss_legendre_cells, partial_gauss_legendre

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
SPEED_FLOOR = 1e-12
SYMMETRY_TOL = 1e-8
TURNING_TOL = 1e-6
QUADRATURE_CELLS = 4096
NEWTON_STEPS = 8


class ParametricCurve(ABC):
    """Closed curve t -> (x(t), y(t)), t in [0, 2pi), traversed counter-clockwise"""

    def __init__(self, scale: float = 1.0):
        self.scale = scale

    @abstractmethod
    def _raw(self, t: np.ndarray) -> Tuple[np.ndarray, ...]:
        """Unscaled (x, y, x', y', x'', y'') at t"""
        pass

    def point(self, t) -> Tuple[np.ndarray, np.ndarray]:
        x, y, *_ = self._raw(np.asarray(t, dtype=float))
        return self.scale * x, self.scale * y

    def derivatives(self, t) -> Tuple[np.ndarray, ...]:
        _, _, dx, dy, ddx, ddy = self._raw(np.asarray(t, dtype=float))
        s = self.scale
        return s * dx, s * dy, s * ddx, s * ddy

    def speed(self, t) -> np.ndarray:
        dx, dy, _, _ = self.derivatives(t)
        return np.hypot(dx, dy)

    def curvature(self, t) -> np.ndarray:
        """Signed curvature (x'y'' - y'x'') / |M'|^3, positive on convex counter-clockwise arcs"""
        dx, dy, ddx, ddy = self.derivatives(t)
        speed = np.hypot(dx, dy)
        if np.any(speed < SPEED_FLOOR):
            raise DegenerateParametrizationError(f"|M'(t)| below {SPEED_FLOOR} (degenerate parametrization)")
        return (dx * ddy - dy * ddx) / speed ** 3

    def top_parameter(self) -> float:
        """Parameter of the upper intersection with the vertical axis"""
        t = np.linspace(0.0, TWO_PI, 4097)
        x, y = self.point(t)
        crossings = np.nonzero(np.sign(x[:-1]) != np.sign(x[1:]))[0]
        if crossings.size == 0:
            raise CurveValidationError("curve does not cross the vertical axis")

        roots = [brentq(lambda p: float(self.point(p)[0]), t[k], t[k + 1], xtol=1e-15) for k in crossings]
        heights = [float(self.point(r)[1]) for r in roots]
        return float(roots[int(np.argmax(heights))] % TWO_PI)


class EllipseCurve(ParametricCurve):
    def __init__(self, a: float, b: float, scale: float = 1.0):
        super().__init__(scale)
        self.a = a
        self.b = b

    def _raw(self, t):
        c, s = np.cos(t), np.sin(t)
        a, b = self.a, self.b
        return a * c, b * s, -a * s, b * c, -a * c, -b * s

    def top_parameter(self) -> float:
        return np.pi / 2


class PolarCurve(ParametricCurve):
    """
    r(theta) = r0 + sum a_k cos(2k theta) + sum b_k sin((2k+1) theta)

    Both families are invariant under theta -> pi - theta, so the curve is
    symmetric about the vertical axis by construction.
    """

    def __init__(self, r0: float, cos_coeffs=(), sin_coeffs=(), scale: float = 1.0):
        super().__init__(scale)
        self.r0 = r0
        self.cos_coeffs = np.asarray(cos_coeffs, dtype=float)
        self.sin_coeffs = np.asarray(sin_coeffs, dtype=float)

        theta = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
        if np.min(self.radius(theta)[0]) <= 0.0:
            raise CurveValidationError("polar radius must stay positive")

    def radius(self, theta):
        r = np.full_like(theta, self.r0, dtype=float)
        dr = np.zeros_like(r)
        ddr = np.zeros_like(r)
        for k, coef in enumerate(self.cos_coeffs, start=1):
            m = 2 * k
            r = r + coef * np.cos(m * theta)
            dr = dr - coef * m * np.sin(m * theta)
            ddr = ddr - coef * m * m * np.cos(m * theta)
        for k, coef in enumerate(self.sin_coeffs):
            m = 2 * k + 1
            r = r + coef * np.sin(m * theta)
            dr = dr + coef * m * np.cos(m * theta)
            ddr = ddr - coef * m * m * np.sin(m * theta)
        return r, dr, ddr

    def _raw(self, t):
        r, dr, ddr = self.radius(t)
        c, s = np.cos(t), np.sin(t)
        x = r * c
        y = r * s
        dx = dr * c - r * s
        dy = dr * s + r * c
        ddx = ddr * c - 2.0 * dr * s - r * c
        ddy = ddr * s + 2.0 * dr * c - r * s
        return x, y, dx, dy, ddx, ddy

    def top_parameter(self) -> float:
        return np.pi / 2


class SampledCurve(ParametricCurve):
    """Ordered point list, closed implicitly, interpolated by a periodic cubic spline in chord length"""

    def __init__(self, points: np.ndarray, scale: float = 1.0):
        super().__init__(scale)
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise CurveValidationError("sampled curve needs an (m, 2) array of points")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) < 8:
            raise CurveValidationError(f"sampled curve needs at least 8 points, got {len(pts)}")

        closed = np.vstack([pts, pts[:1]])
        chords = np.hypot(*np.diff(closed, axis=0).T)
        if np.any(chords < SPEED_FLOOR):
            raise DegenerateParametrizationError("sampled curve has repeated consecutive points")

        knots = np.concatenate([[0.0], np.cumsum(chords)])
        knots *= TWO_PI / knots[-1]
        self.spline = CubicSpline(knots, closed, bc_type="periodic")
        self.d1 = self.spline.derivative(1)
        self.d2 = self.spline.derivative(2)
        self.n_points = len(pts)

    @classmethod
    def from_file(cls, path: str, scale: float = 1.0) -> "SampledCurve":
        if not os.path.exists(path):
            raise CurveValidationError(f"curve file not found: {path}")
        points = np.loadtxt(path, comments="#", ndmin=2)
        logger.info(f"📄 Loaded {len(points)} boundary points from {path}")
        return cls(points, scale=scale)

    def _raw(self, t):
        t = np.mod(t, TWO_PI)
        p, d1, d2 = self.spline(t), self.d1(t), self.d2(t)
        return p[..., 0], p[..., 1], d1[..., 0], d1[..., 1], d2[..., 0], d2[..., 1]


class CurveFactory:
    """Factory for parametric curves from their configuration"""

    @staticmethod
    def create_curve(spec: BoundaryCurve) -> ParametricCurve:
        if spec.kind == CurveKind.ELLIPSE:
            return EllipseCurve(spec.a, spec.b, scale=spec.scale)
        if spec.kind == CurveKind.POLAR:
            return PolarCurve(spec.r0, spec.cos_coeffs, spec.sin_coeffs, scale=spec.scale)
        if spec.points is not None:
            return SampledCurve(np.array(spec.points), scale=spec.scale)
        return SampledCurve.from_file(spec.path, scale=spec.scale)


def periodic_spline(table: ArcLengthTable, values: np.ndarray) -> CubicSpline:
    """Periodic cubic spline of a grid function on the arclength table"""
    s = np.append(table.s, table.s[0] + table.perimeter)
    return CubicSpline(s, np.append(values, values[0]), bc_type="periodic")


def resample_table(table: ArcLengthTable, n: int) -> ArcLengthTable:
    """Trigonometric interpolation of a uniform table onto n uniform points"""
    def fourier_resample(values: np.ndarray) -> np.ndarray:
        coeffs = np.fft.rfft(values) / table.n
        m = n // 2 + 1
        out = np.zeros(m, dtype=complex)
        keep = min(m, coeffs.size)
        out[:keep] = coeffs[:keep]
        # split or fold the Nyquist term so even-length round trips are exact
        if n > table.n and table.n % 2 == 0:
            out[coeffs.size - 1] *= 0.5
        elif n < table.n and n % 2 == 0:
            out[m - 1] = 2.0 * out[m - 1].real
        return np.fft.irfft(out * n, n)

    s = -table.L + np.arange(n) * (table.perimeter / n)
    return ArcLengthTable(
        s=s,
        kappa=fourier_resample(table.kappa),
        x=fourier_resample(table.x),
        y=fourier_resample(table.y),
        L=table.L,
        symmetric=table.symmetric,
        symmetry_defect=table.symmetry_defect,
    )


class GeometryService:
    """Arclength reparametrization, curvature wells and flux constant of a boundary curve"""

    def __init__(self, samples: Optional[int] = None):
        self.samples = samples or settings.GEOMETRY_SAMPLES

    def curvature(self, curve: BoundaryCurve, t) -> np.ndarray:
        return CurveFactory.create_curve(curve).curvature(t)

    def _cumulative_arclength(self, param: ParametricCurve, t0: float) -> Tuple[np.ndarray, np.ndarray]:
        edges = t0 + np.linspace(0.0, TWO_PI, QUADRATURE_CELLS + 1)
        cells = gauss_legendre_cells(param.speed, edges)
        return edges, np.concatenate([[0.0], np.cumsum(cells)])

    def _check_orientation(self, param: ParametricCurve):
        edges = np.linspace(0.0, TWO_PI, QUADRATURE_CELLS + 1)

        def green(t):
            x, y = param.point(t)
            dx, dy, _, _ = param.derivatives(t)
            return 0.5 * (x * dy - y * dx)

        area = float(np.sum(gauss_legendre_cells(green, edges)))
        if area <= 0.0:
            raise CurveValidationError(f"curve is not counter-clockwise (signed area {area:.6g})")
        return area

    def reparametrize(self, curve: BoundaryCurve, n: Optional[int] = None) -> ArcLengthTable:
        """
        Uniform arclength table on [-L, L) with s = 0 at the top symmetry point

        Args:
            curve: boundary description
            n: number of samples (>= 512; a multiple of 4 keeps the quarter points on the grid)

        Returns:
            ArcLengthTable with curvature and coordinates
        """
        n = n or self.samples
        if n < 512 or n % 2:
            raise CurveValidationError(f"an even sample count of at least 512 is required, got {n}")

        param = CurveFactory.create_curve(curve)
        self._check_orientation(param)

        t0 = param.top_parameter()
        edges, cumulative = self._cumulative_arclength(param, t0)
        perimeter = cumulative[-1]
        L = 0.5 * perimeter

        s = -L + np.arange(n) * (perimeter / n)
        target = np.mod(s, perimeter)

        cell = np.clip(np.searchsorted(cumulative, target, side="right") - 1, 0, QUADRATURE_CELLS - 1)
        start, base = edges[cell], cumulative[cell]
        frac = (target - base) / (cumulative[cell + 1] - base)
        t = start + frac * (edges[cell + 1] - start)
        for _ in range(NEWTON_STEPS):
            arc = base + partial_gauss_legendre(param.speed, start, t)
            t = t - (arc - target) / param.speed(t)

        kappa = param.curvature(t)
        x, y = param.point(t)

        turning = float(np.sum(kappa) * perimeter / n)
        if abs(turning - TWO_PI) > TURNING_TOL:
            raise CurveValidationError(
                f"total curvature {turning:.8f} != 2pi: curve is not simple or not smooth at this resolution"
            )

        mirror = np.mod(-np.arange(n), n)
        defect = float(max(np.max(np.abs(kappa - kappa[mirror])) / np.max(np.abs(kappa)),
                           np.max(np.abs(x + x[mirror])) / L,
                           np.max(np.abs(y - y[mirror])) / L))
        symmetric = defect <= SYMMETRY_TOL
        if not symmetric:
            raise CurveValidationError(f"curve is not symmetric about the vertical axis (defect {defect:.3e})")

        logger.info(f"✅ Reparametrized {curve.kind.value} boundary: L={L:.10f}, n={n}")
        return ArcLengthTable(s=s, kappa=kappa, x=x, y=y, L=L, symmetric=symmetric, symmetry_defect=defect)

    def _refine_extremum(self, table: ArcLengthTable, k: int) -> Tuple[float, float, float]:
        """Quartic fit on 7 points around an extremum at node k; returns (s, kappa, -kappa'')"""
        n, ds = table.n, table.ds
        offsets = np.arange(-3, 4)
        values = table.kappa[np.mod(k + offsets, n)]
        poly = np.polynomial.Polynomial.fit(offsets, values, 4, domain=[-3, 3], window=[-3, 3])
        d1, d2 = poly.deriv(1), poly.deriv(2)

        x = 0.0
        for _ in range(20):
            step = d1(x) / d2(x)
            x -= step
            if abs(step) < 1e-14:
                break
        if abs(x) > 1.0:
            x = 0.0

        if abs(x) < 1e-6:
            kk = table.kappa[np.mod(k + np.arange(-2, 3), n)]
            second = (-kk[0] + 16 * kk[1] - 30 * kk[2] + 16 * kk[3] - kk[4]) / (12.0 * ds ** 2)
        else:
            second = d2(x) / ds ** 2

        peak_value = float(table.kappa[k]) if abs(x) < 1e-6 else float(poly(x))
        s_peak = table.s[k] + x * ds
        # wrap into [-L, L)
        s_peak = (s_peak + table.L) % table.perimeter - table.L
        return float(s_peak), peak_value, float(-second)

    def locate_wells(self, table: ArcLengthTable) -> WellData:
        """
        Two symmetric non-degenerate curvature maxima s_r < 0 < s_l

        Raises:
            NoWellsError: curvature constant on the grid
            AssumptionViolationError: maxima on the axis, or not exactly two global maxima
        """
        kappa = table.kappa
        scale = max(1.0, float(np.max(np.abs(kappa))))
        if np.ptp(kappa) < 1e-10 * scale:
            raise NoWellsError("no wells: boundary curvature is constant")

        is_max = (kappa > np.roll(kappa, 1)) & (kappa >= np.roll(kappa, -1))
        peaks = [self._refine_extremum(table, k) for k in np.nonzero(is_max)[0]]
        kappa_max = max(p[1] for p in peaks)

        tol = settings.WELL_KAPPA_TOL * max(1.0, abs(kappa_max))
        top = [p for p in peaks if p[1] >= kappa_max - tol]

        separation = settings.WELL_SEPARATION_FRACTION * table.L
        distinct = []
        for p in sorted(top, key=lambda q: q[0]):
            if distinct and abs(p[0] - distinct[-1][0]) <= separation:
                continue
            distinct.append(p)
        if len(distinct) > 1 and abs(distinct[0][0] + table.perimeter - distinct[-1][0]) <= separation:
            distinct.pop()

        for s_peak, _, _ in distinct:
            if abs(s_peak) <= separation or table.L - abs(s_peak) <= separation:
                raise AssumptionViolationError(f"curvature maximum on the symmetry axis (s={s_peak:.6f})")
        if len(distinct) != 2:
            raise AssumptionViolationError(f"expected exactly two curvature maxima, found {len(distinct)}")

        (s_r, kappa_r, k2_r), (s_l, kappa_l, k2_l) = distinct
        k_min = int(np.argmin(kappa))
        kappa_min = min(float(kappa[k_min]), self._refine_extremum(table, k_min)[1])
        if not (s_r < 0.0 < s_l):
            raise AssumptionViolationError(f"wells not on opposite sides of the axis: {s_r:.6f}, {s_l:.6f}")
        if k2_r <= 0.0:
            raise AssumptionViolationError(f"degenerate curvature maximum (k2={k2_r:.3e})")

        wells = WellData(
            s_r=s_r,
            s_l=s_l,
            kappa_max=max(kappa_r, kappa_l),
            kappa_min=kappa_min,
            k2=k2_r,
            symmetric=abs(s_r + s_l) <= 1e-6 * max(1.0, table.L),
        )
        logger.info(f"✅ Wells at s_r={s_r:.8f}, s_l={s_l:.8f}; kappa_max={wells.kappa_max:.10f}, k2={k2_r:.8f}")
        return wells

    def flux_constant(self, curve: BoundaryCurve) -> FluxConstant:
        """gamma0 = |Omega| / (2L), area by Green's theorem"""
        param = CurveFactory.create_curve(curve)
        area = self._check_orientation(param)
        _, cumulative = self._cumulative_arclength(param, 0.0)
        perimeter = float(cumulative[-1])
        return FluxConstant(gamma0=area / perimeter, area=area, perimeter=perimeter)

    def analyze(self, curve: BoundaryCurve, n: Optional[int] = None):
        """Table, wells and flux constant in one call"""
        table = self.reparametrize(curve, n)
        return table, self.locate_wells(table), self.flux_constant(curve)

"""
Effective one-dimensional electric problem along the boundary
"""

import logging
import threading
from typing import Callable, Optional, Tuple

import mpmath
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh, toeplitz

from src.core.config import settings
from src.core.errors import ConvergenceError, PreconditionError
from src.models.schemas import (
    AgmonData, ArcLengthTable, ArcMode, DeGennesConstants, EffectivePotential, EffectiveSpectrum,
    WellData, WellSide, WKBAmplitude
)

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 8
RESOLVABLE_FACTOR = 1e3
REFINE_FACTOR = 1e8

# mpmath precision is process-global
_MP_LOCK = threading.Lock()


class WellProfile:
    """
    sqrt(V) on one arc leaving a well, as a function of the distance x >= 0 from it

    rho = sqrt(V) vanishes linearly at x = 0. The transport exponent
    I(x) = int_0^x (rho' - g) / rho is split as log(rho / (g x)) plus the integral
    of the regular function 1/x - g/rho, which near the well is evaluated from
    a polynomial fit of r(x) with rho = x (g + x r).
    """

    def __init__(self, x: np.ndarray, root_v: np.ndarray, g: float, near: float,
                 closes_at_well: bool = True):
        self.g = g
        self.near = near
        self.rho = CubicSpline(x, root_v)
        self.drho = self.rho.derivative()
        self.phi = self.rho.antiderivative()
        self.x_end = float(x[-1])
        self.action = float(self.phi(self.x_end))
        self.x_cap = self.x_end - near if closes_at_well else self.x_end

        window = (x >= near / 4) & (x <= 3 * near) & (x <= self.x_cap)
        if np.count_nonzero(window) >= MIN_FIT_POINTS:
            xs = x[window]
            self.r_fit = np.polynomial.Polynomial.fit(xs, (root_v[window] / xs - g) / xs, 6)
        else:
            self.r_fit = None

        xh = np.unique(np.concatenate([[0.0], x[(x > 0) & (x < self.x_cap)], [self.x_cap]]))
        self.regular = CubicSpline(xh, self._regular_part(xh)).antiderivative()

    def _near_ratio(self, x):
        return self.r_fit(x) if self.r_fit is not None else np.full_like(x, self.rho.derivative(2)(0.0) / 2)

    def _regular_part(self, x: np.ndarray) -> np.ndarray:
        """h(x) = 1/x - g/rho(x), finite at the well"""
        out = np.empty_like(x)
        near = x < self.near
        r = self._near_ratio(x[near])
        out[near] = r / (self.g + x[near] * r)
        far = ~near
        out[far] = 1.0 / x[far] - self.g / self.rho(x[far])
        return out

    def _log_ratio(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        near = x < self.near
        out[near] = np.log1p(x[near] * self._near_ratio(x[near]) / self.g)
        far = ~near
        out[far] = np.log(self.rho(x[far]) / (self.g * x[far]))
        return out

    def distance(self, x) -> np.ndarray:
        return self.phi(np.clip(np.asarray(x, dtype=float), 0.0, self.x_end))

    def transport_exponent(self, x) -> np.ndarray:
        """I(x) = int_0^x (rho' - g) / rho, frozen beyond x_cap"""
        x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), 0.0, self.x_cap)
        return self._log_ratio(x) + self.regular(x)

    def prefactor(self, x: float) -> float:
        return float(np.exp(-self.transport_exponent(x)[0]))

    def amplitude(self, x) -> np.ndarray:
        """(g/pi)^{1/4} exp(-I/2), the leading transport solution"""
        return (self.g / np.pi) ** 0.25 * np.exp(-0.5 * self.transport_exponent(x))

    def signed_rho(self, x) -> np.ndarray:
        return self.rho(np.clip(np.asarray(x, dtype=float), 0.0, self.x_end))


def agmon_integral(s: np.ndarray, V: np.ndarray, s_w: float, sigma) -> np.ndarray:
    """
    int_{[s_w, sigma]} sqrt(V) on a line segment sampled at increasing s

    Each side of the well is integrated separately, where sqrt(V) is smooth.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    right, left = _segment_profiles(s, V, s_w, g=1.0)
    out = np.empty_like(sigma)
    ahead = sigma >= s_w
    out[ahead] = right.distance(sigma[ahead] - s_w) if right else 0.0
    out[~ahead] = left.distance(s_w - sigma[~ahead]) if left else 0.0
    return out


def transport_prefactor(s: np.ndarray, V: np.ndarray, s_w: float, g: float, s_end: float) -> float:
    """exp(-int_{s_w}^{s_end} (sqrt(V)' - g) / sqrt(V)) on a line segment"""
    right, left = _segment_profiles(s, V, s_w, g)
    profile = right if s_end >= s_w else left
    return profile.prefactor(abs(s_end - s_w))


def _segment_profiles(s, V, s_w, g):
    s = np.asarray(s, dtype=float)
    root = np.sqrt(np.clip(np.asarray(V, dtype=float), 0.0, None))
    near = settings.NEAR_WELL_FRACTION * 0.5 * (s[-1] - s[0])
    tol = 1e-6 * np.min(np.diff(s))
    profiles = []
    for sign in (1.0, -1.0):
        x = sign * (s - s_w)
        keep = x > tol
        if not np.any(keep):
            profiles.append(None)
            continue
        order = np.argsort(x[keep])
        xs = np.concatenate([[0.0], x[keep][order]])
        rs = np.concatenate([[0.0], root[keep][order]])
        profiles.append(WellProfile(xs, rs, g, near, closes_at_well=False))
    return profiles[0], profiles[1]


class EffectiveModel:
    """Effective potential, Agmon distances, prefactors and the 1D oracle for one boundary"""

    def __init__(self, table: ArcLengthTable, wells: Optional[WellData], consts: DeGennesConstants):
        self.table = table
        self.wells = wells
        self.consts = consts
        self.V = self.potential()
        self._profiles = self._build_profiles() if wells is not None else None

    def potential(self) -> EffectivePotential:
        """V = 2 C1 (kappa_max - kappa) / mu'', clipped at zero"""
        c1, mu2 = self.consts.c1, self.consts.mu2
        if self.wells is not None:
            kappa_max = self.wells.kappa_max
        else:
            kappa_max = float(np.max(self.table.kappa))
        V = np.clip(2.0 * c1 * (kappa_max - self.table.kappa) / mu2, 0.0, None)

        g = None
        if self.wells is not None:
            g = float(np.sqrt(c1 * self.wells.k2 / mu2))
        return EffectivePotential(
            s=self.table.s, V=V, mu2=mu2, L=self.table.L, c1=c1, kappa_max=kappa_max,
            s_r=None if self.wells is None else self.wells.s_r,
            s_l=None if self.wells is None else self.wells.s_l,
            g=g,
        )

    def _require_wells(self):
        if self._profiles is None:
            raise PreconditionError("operation needs located wells")

    def _arc_samples(self, start: float, end: float, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Table nodes lifted into (start, end) plus both ends, where the values vanish"""
        lifted = start + np.mod(self.table.s - start, self.table.perimeter)
        tol = 1e-6 * self.table.ds
        inside = (lifted > start + tol) & (lifted < end - tol)
        order = np.argsort(lifted[inside])
        sigma = np.concatenate([[start], lifted[inside][order], [end]])
        root = np.concatenate([[0.0], values[inside][order], [0.0]])
        return sigma, root

    def _build_profiles(self):
        w, L = self.wells, self.table.L
        g = self.V.g
        near = settings.NEAR_WELL_FRACTION * L
        root_v = np.sqrt(self.V.V)

        up_sigma, up_root = self._arc_samples(w.s_r, w.s_l, root_v)
        down_sigma, down_root = self._arc_samples(w.s_l, w.s_r + 2 * L, root_v)
        return {
            ("r", "up"): WellProfile(up_sigma - w.s_r, up_root, g, near),
            ("l", "up"): WellProfile((w.s_l - up_sigma)[::-1], up_root[::-1], g, near),
            ("l", "down"): WellProfile(down_sigma - w.s_l, down_root, g, near),
            ("r", "down"): WellProfile((w.s_r + 2 * L - down_sigma)[::-1], down_root[::-1], g, near),
            "up_sigma": up_sigma,
            "down_sigma": down_sigma,
        }

    def _profile(self, side: str, arc: str) -> WellProfile:
        return self._profiles[(side, arc)]

    def actions(self) -> Tuple[float, float, float]:
        """(S_u, S_d, S): Agmon lengths of the up arc (through s = 0) and the down arc (through s = L)"""
        self._require_wells()
        S_u = self._profile("r", "up").action
        S_d = self._profile("l", "down").action
        return S_u, S_d, min(S_u, S_d)

    def _unrolled_split(self, side: WellSide, sigma: np.ndarray):
        """Distance from the well on the unrolled interval, and the arc profile for each point"""
        w = self.wells
        if side == WellSide.RIGHT:
            ahead = sigma >= w.s_r
            return ahead, np.abs(sigma - w.s_r), self._profile("r", "up"), self._profile("r", "down")
        ahead = sigma <= w.s_l
        return ahead, np.abs(w.s_l - sigma), self._profile("l", "up"), self._profile("l", "down")

    def _unrolled(self, side: WellSide, sigma, field: str) -> np.ndarray:
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        first, x, primary, other = self._unrolled_split(side, sigma)
        out = np.empty_like(sigma)
        out[first] = getattr(primary, field)(x[first])
        out[~first] = getattr(other, field)(x[~first])
        return out

    def unrolled_interval(self, side: WellSide) -> Tuple[float, float]:
        """[s_l - 2L, s_l] for the right well, [s_r, s_r + 2L] for the left one"""
        w, L = self.wells, self.table.L
        if side == WellSide.RIGHT:
            return w.s_l - 2 * L, w.s_l
        return w.s_r, w.s_r + 2 * L

    def agmon_distance(self, side: WellSide, sigma, mode: ArcMode = ArcMode.CCW) -> np.ndarray:
        """
        Agmon distance from a well to sigma

        Args:
            side: which well
            sigma: points (in [-L, L) except for the unrolled mode)
            mode: ccw / cw arc, min of both, or the unrolled one-well convention

        Returns:
            Array of distances
        """
        self._require_wells()
        side = WellSide(side)
        mode = ArcMode(mode)
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if mode == ArcMode.UNROLLED:
            return self._unrolled(side, sigma, "distance")

        w, P = self.wells, self.table.perimeter
        S_u, S_d, _ = self.actions()
        if side == WellSide.RIGHT:
            lifted = w.s_r + np.mod(sigma - w.s_r, P)
            first = lifted <= w.s_l
            ccw = np.where(first, self._profile("r", "up").distance(lifted - w.s_r),
                           S_u + self._profile("l", "down").distance(lifted - w.s_l))
        else:
            lifted = w.s_l + np.mod(sigma - w.s_l, P)
            first = lifted <= w.s_r + P
            ccw = np.where(first, self._profile("l", "down").distance(lifted - w.s_l),
                           S_d + self._profile("r", "up").distance(lifted - P - w.s_r))

        if mode == ArcMode.CCW:
            return ccw
        cw = np.where(ccw == 0.0, 0.0, S_u + S_d - ccw)
        return cw if mode == ArcMode.CW else np.minimum(ccw, cw)

    def prefactors(self) -> Tuple[float, float, float]:
        """
        (A_u, A_d, g)

        A_u integrates (sqrt(V)' - g)/sqrt(V) from s_r to 0, A_d from s_l to L.
        """
        self._require_wells()
        w = self.wells
        A_u = self._profile("r", "up").prefactor(-w.s_r)
        A_d = self._profile("l", "down").prefactor(self.table.L - w.s_l)
        return A_u, A_d, self.V.g

    def conjecture_terms(self) -> Tuple[float, float]:
        """
        Prefactor and action written with the curvature instead of V

        A = exp(-int_{[s_l, L]} (d_s sqrt(kmax - k) - sqrt(k2/2)) / sqrt(kmax - k)),
        S = sqrt(2 C1 / mu'') int_up sqrt(kmax - k).
        """
        self._require_wells()
        w, L = self.wells, self.table.L
        q = np.sqrt(np.clip(w.kappa_max - self.table.kappa, 0.0, None))
        near = settings.NEAR_WELL_FRACTION * L
        g_q = np.sqrt(w.k2 / 2.0)

        down_sigma, down_q = self._arc_samples(w.s_l, w.s_r + 2 * L, q)
        prefactor = WellProfile(down_sigma - w.s_l, down_q, g_q, near).prefactor(L - w.s_l)

        up_sigma, up_q = self._arc_samples(w.s_r, w.s_l, q)
        action = np.sqrt(2.0 * self.consts.c1 / self.consts.mu2) * WellProfile(
            up_sigma - w.s_r, up_q, g_q, near).action
        return float(prefactor), float(action)

    def agmon_data(self) -> AgmonData:
        S_u, S_d, _ = self.actions()
        A_u, A_d, g = self.prefactors()
        n = self.table.n
        return AgmonData(
            s=self.table.s,
            phi_r=self.agmon_distance(WellSide.RIGHT, self.table.s, ArcMode.MIN),
            phi_l=self.agmon_distance(WellSide.LEFT, self.table.s, ArcMode.MIN),
            S_u=S_u, S_d=S_d, g=g, A_u=A_u, A_d=A_d,
            V0=float(self.V.V[n // 2]),
            VL=float(self.V.V[0]),
        )

    def wkb_functions(self, side: WellSide) -> Tuple[Callable, Callable, Callable]:
        """(f, Phi, rho) on the unrolled interval of a well; f is frozen near the far well"""
        self._require_wells()
        side = WellSide(side)
        centre = self.wells.s_r if side == WellSide.RIGHT else self.wells.s_l

        def f(sigma):
            return self._unrolled(side, sigma, "amplitude")

        def phi(sigma):
            return self._unrolled(side, sigma, "distance")

        def rho(sigma):
            sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
            return np.sign(sigma - centre) * self._unrolled(side, sigma, "signed_rho")

        return f, phi, rho

    def wkb_amplitude(self, side: WellSide) -> WKBAmplitude:
        """Leading transport amplitude f~_{1,0} on the table nodes of the unrolled interval"""
        self._require_wells()
        side = WellSide(side)
        up, down = self._profiles["up_sigma"], self._profiles["down_sigma"]
        if side == WellSide.RIGHT:
            down = down - self.table.perimeter
        sigma = np.unique(np.concatenate([down, up]))
        f, phi, rho = self.wkb_functions(side)
        return WKBAmplitude(side=side, sigma=sigma, f=f(sigma), phi=phi(sigma), rho=rho(sigma))

    def transport_residual(self, side: WellSide, lo: float, hi: float, points: int = 4001) -> float:
        """
        max |(mu''/2)(2 Phi' f' + Phi'' f) - (mu''/2) g f| / max |f| on [lo, hi]

        Derivatives are taken from splines of the sampled amplitude and rho.
        """
        f, _, rho = self.wkb_functions(side)
        sigma = np.linspace(lo, hi, points)
        fv, rv = f(sigma), rho(sigma)
        df = CubicSpline(sigma, fv).derivative()(sigma)
        drho = CubicSpline(sigma, rv).derivative()(sigma)
        half = 0.5 * self.consts.mu2
        residual = half * (2.0 * rv * df + drho * fv) - half * self.V.g * fv
        return float(np.max(np.abs(residual)) / np.max(np.abs(fv)))

    # -----------------------------------------------------------------
    # Fourier oracle
    # -----------------------------------------------------------------

    def _modes_for(self, h: float, m: int) -> int:
        """Half-width K of the Fourier window from the points-per-wavelength rule"""
        v_max = float(np.max(self.V.V))
        k_phys = np.sqrt(v_max / np.sqrt(h)) if v_max > 0 else 0.0
        n_points = settings.EFFECTIVE_POINTS_PER_WAVELENGTH * self.table.perimeter * k_phys / (2 * np.pi)
        return int(max(np.ceil(n_points / 2), m + 8, 16))

    def _fourier_potential(self, count: int) -> np.ndarray:
        """Coefficients V^_m, m = 0..count-1, of the trigonometric interpolant of V"""
        n = self.table.n
        fft = np.fft.fft(self.V.V) / n
        idx = np.arange(count)
        coeffs = np.zeros(count, dtype=complex)
        valid = idx < n // 2
        coeffs[valid] = fft[idx[valid]] * (-1.0) ** idx[valid]
        return coeffs

    def _matrix(self, h: float, theta: float, K: int) -> np.ndarray:
        L = self.table.L
        quantum = np.pi / L
        theta = theta - np.round(theta / quantum) * quantum
        k = np.arange(-K, K + 1)
        column = self._fourier_potential(2 * K + 1)
        H = toeplitz(column, np.conj(column))
        H[np.diag_indices_from(H)] += np.sqrt(h) * (k * quantum + theta) ** 2
        return 0.5 * self.consts.mu2 * H

    def _refine_pair(self, H: np.ndarray, vectors: np.ndarray) -> Tuple[float, float, float]:
        """Rayleigh-Ritz of the lowest pair in extended precision; returns (lam1, lam2, gap)"""
        with _MP_LOCK, mpmath.workdps(settings.MP_DPS):
            rows = [[mpmath.mpc(z) for z in row] for row in H]
            vs = [[mpmath.mpc(z) for z in vectors[:, a]] for a in range(2)]
            hv = [[mpmath.fdot(row, vs[b]) for row in rows] for b in range(2)]
            P = [[mpmath.fdot(hv[b], vs[a], conjugate=True) for b in range(2)] for a in range(2)]
            G = [[mpmath.fdot(vs[b], vs[a], conjugate=True) for b in range(2)] for a in range(2)]

            a = mpmath.re(G[0][0] * G[1][1] - G[0][1] * G[1][0])
            b = -mpmath.re(P[0][0] * G[1][1] + P[1][1] * G[0][0] - P[0][1] * G[1][0] - P[1][0] * G[0][1])
            c = mpmath.re(P[0][0] * P[1][1] - P[0][1] * P[1][0])
            root = mpmath.sqrt(max(b * b - 4 * a * c, mpmath.mpf(0)))
            lam1 = (-b - root) / (2 * a)
            lam2 = (-b + root) / (2 * a)
            return float(lam1), float(lam2), float(root / a)

    def effective_eigs(self, h: float, theta: float = 0.0, m: int = 4) -> EffectiveSpectrum:
        """
        Lowest eigenvalues of (mu''/2)(h^{1/2}(D_s + theta)^2 + V) on the circle of length 2L

        Fourier basis e^{i k pi s / L}, |k| <= K, with K from the points-per-wavelength
        rule; the run is repeated at 2K and must agree within the drift tolerance.

        Args:
            h: semiclassical parameter in (0, 1]
            theta: flux offset (the spectrum has period pi/L in theta)
            m: number of eigenvalues

        Returns:
            EffectiveSpectrum from the 2K run
        """
        if not 0.0 < h <= 1.0:
            raise PreconditionError(f"h={h} must lie in (0, 1]")
        if m < 1:
            raise PreconditionError("m must be positive")

        K = self._modes_for(h, m)
        count = max(m, 2)
        coarse = eigh(self._matrix(h, theta, K), eigvals_only=True, subset_by_index=[0, count - 1])
        H = self._matrix(h, theta, 2 * K)
        values, vectors = eigh(H, subset_by_index=[0, count - 1])

        norm = float(np.max(np.sum(np.abs(H), axis=1)))
        drift = float(np.max(np.abs(values - coarse)))
        if drift > settings.EFFECTIVE_DRIFT_TOL * max(1.0, norm):
            raise ConvergenceError(
                f"effective spectrum drifts by {drift:.3e} between {2 * K + 1} and {4 * K + 1} modes at h={h}"
            )

        gap = float(values[1] - values[0])
        eps = np.finfo(float).eps
        refined = False
        if settings.EXTENDED_PRECISION and gap < REFINE_FACTOR * eps * norm:
            lam1, lam2, gap = self._refine_pair(H, vectors[:, :2])
            values = values.copy()
            values[0], values[1] = lam1, lam2
            refined = True

        resolvable = gap >= RESOLVABLE_FACTOR * eps * norm
        if not resolvable:
            logger.warning(f"⚠️ Gap {gap:.3e} at h={h} below {RESOLVABLE_FACTOR:g} eps ||H||")

        logger.debug(f"effective h={h:.6e} theta={theta:.6f} K={2 * K} gap={gap:.6e}")
        return EffectiveSpectrum(
            h=h, theta=theta, eigenvalues=values[:m], n_modes=4 * K + 1, drift=drift, gap=gap,
            matrix_norm=norm, refined=refined, resolvable=resolvable,
        )

"""
de Gennes model operator D_t^2 + (xi - t)^2 on the half-line, Neumann at t = 0
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from src.core.config import settings
from src.core.errors import (
    DiagnosticError, IllConditionedResolventError, NoInteriorMinimumError, PreconditionError
)
from src.models.schemas import DeGennesConstants, DeGennesEigenpair, HalfLineGrid
from src.utils.numerics import richardson_limit

logger = logging.getLogger(__name__)

DEFAULT_BRACKET = (0.2, 1.5)
MAX_BAND = 3
GAP_TOLERANCE = 1e-8
RESOLVENT_TOLERANCE = 1e-6
# relative disagreement allowed between the two mu'' routes
MU2_ROUTE_TOLERANCE = 1e-5


class DeGennesSolver:
    """Symmetric tridiagonal discretization of the de Gennes family on a fixed grid"""

    def __init__(self, grid: Optional[HalfLineGrid] = None):
        self.grid = grid or HalfLineGrid()
        self.t = self.grid.nodes
        self.dt = self.grid.dt
        self.w = self.grid.weights

        # ghost point u(-dt) = u(dt), symmetrized with the half weight at t = 0
        inv = 1.0 / self.dt ** 2
        self.off = np.full(self.grid.n - 1, -inv)
        self.off[0] = -np.sqrt(2.0) * inv

        if not self.grid.extraction_grade:
            logger.warning(f"⚠️ Grid n={self.grid.n} is below extraction grade (n >= 2000)")

    def _diagonal(self, xi: float) -> np.ndarray:
        return 2.0 / self.dt ** 2 + (xi - self.t) ** 2

    def _check_xi(self, xi: float):
        if abs(xi) > self.grid.t_max / 2:
            raise PreconditionError(
                f"xi={xi} outside [-t_max/2, t_max/2] = [{-self.grid.t_max / 2}, {self.grid.t_max / 2}]"
            )

    def _solve(self, xi: float, first: int, last: int) -> Tuple[np.ndarray, np.ndarray]:
        return eigh_tridiagonal(self._diagonal(xi), self.off, select="i", select_range=(first, last))

    def _to_function(self, v: np.ndarray) -> np.ndarray:
        """Euclidean eigenvector -> trapezoid-normalized grid function with u(0) > 0"""
        if v[0] < 0:
            v = -v
        return v / np.sqrt(self.w * self.dt)

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid rule on [0, t_max] (the Dirichlet node contributes zero)"""
        return float(np.sum(self.w * values) * self.dt)

    def rayleigh_quotient(self, xi: float, u: np.ndarray) -> float:
        """Discrete energy ratio written with differences, free of the 1/dt^2 cancellation"""
        diff = np.diff(np.append(u, 0.0))
        kinetic = np.sum(diff ** 2) / self.dt
        potential = self.integrate((xi - self.t) ** 2 * u ** 2)
        return (kinetic + potential) / self.integrate(u ** 2)

    def eigenpair(self, xi: float, n: int = 1) -> DeGennesEigenpair:
        """
        n-th eigenpair of the discrete de Gennes operator

        Args:
            xi: frequency parameter
            n: band index, 1 <= n <= 3

        Returns:
            DeGennesEigenpair with trapezoid-normalized u and u(0) > 0
        """
        if not 1 <= n <= MAX_BAND:
            raise PreconditionError(f"band index n={n} not in [1, {MAX_BAND}]")
        self._check_xi(xi)

        vals, vecs = self._solve(xi, n - 1, n)
        if vals[1] - vals[0] < GAP_TOLERANCE:
            raise DiagnosticError(
                f"mu_{n} and mu_{n + 1} not separated at xi={xi} (gap {vals[1] - vals[0]:.3e}); refine the grid"
            )

        u = self._to_function(vecs[:, 0])
        return DeGennesEigenpair(xi=float(xi), mu=self.rayleigh_quotient(xi, u), u=u, n=n, grid=self.grid)

    def mu(self, xi: float, n: int = 1) -> float:
        return self.eigenpair(xi, n).mu

    def mu_prime(self, xi: float) -> float:
        """Feynman-Hellmann derivative of the discrete mu_1: 2 <(xi - t) u, u>"""
        pair = self.eigenpair(xi)
        return self.integrate(2.0 * (xi - self.t) * pair.u ** 2)

    def band_gap(self, xi: float) -> float:
        vals, _ = self._solve(xi, 0, 1)
        return float(vals[1] - vals[0])

    def mu_curve(self, xis: Sequence[float], max_workers: Optional[int] = None) -> np.ndarray:
        """mu_1 sampled at several xi, computed in parallel"""
        with ThreadPoolExecutor(max_workers=max_workers or settings.MAX_WORKERS) as pool:
            return np.array(list(pool.map(self.mu, xis)))

    def minimize_mu1(self, bracket: Tuple[float, float] = DEFAULT_BRACKET) -> Tuple[float, float]:
        """
        Minimizer and minimum of the discrete mu_1

        Brent's method on the stationarity condition mu_1'(xi) = 0, with mu_1'
        from Feynman-Hellmann, so the flat minimum does not cost precision.

        Args:
            bracket: interval inside (0, 2) where mu_1' changes sign

        Returns:
            (xi0, theta0)
        """
        a, b = bracket
        if not 0.0 < a < b < 2.0:
            raise PreconditionError(f"bracket {bracket} must lie inside (0, 2)")

        fa, fb = self.mu_prime(a), self.mu_prime(b)
        if not (fa < 0.0 < fb):
            raise NoInteriorMinimumError(
                f"mu_1' does not change sign from - to + on {bracket} (values {fa:.3e}, {fb:.3e})"
            )

        xi0 = brentq(self.mu_prime, a, b, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
        return float(xi0), self.mu(xi0)

    def second_derivative(self, xi: float, step: Optional[float] = None) -> float:
        """
        mu_1'' by centered second differences at step and step/2, Richardson-combined

        Cross-checked against the centered difference of the Feynman-Hellmann derivative.
        """
        step = step or settings.MU2_STEP
        centre = self.mu(xi)

        def second_difference(d: float) -> float:
            return (self.mu(xi + d) - 2.0 * centre + self.mu(xi - d)) / d ** 2

        estimate = richardson_limit(2.0, [second_difference(step), second_difference(step / 2)])
        via_slope = (self.mu_prime(xi + step) - self.mu_prime(xi - step)) / (2.0 * step)

        if abs(estimate - via_slope) > MU2_ROUTE_TOLERANCE * abs(estimate):
            raise DiagnosticError(
                f"second-difference noise: mu'' {estimate:.10f} vs slope route {via_slope:.10f}; "
                f"grid too coarse for step {step}"
            )
        return estimate

    def _grid_constants(self, bracket: Tuple[float, float], step: float) -> Dict[str, float]:
        xi0, theta0 = self.minimize_mu1(bracket)
        return {
            "theta0": theta0,
            "xi0": xi0,
            "u0": self.eigenpair(xi0).u0,
            "mu2": self.second_derivative(xi0, step),
        }

    def constants(self, bracket: Tuple[float, float] = DEFAULT_BRACKET,
                  step: Optional[float] = None) -> DeGennesConstants:
        """
        Model constants Theta0, xi0, C1, mu_1''(xi0), u(0)

        Each quantity is computed on this grid and on the grid refined by two,
        then Richardson-extrapolated (second-order scheme).
        """
        step = step or settings.MU2_STEP
        logger.info(f"🔄 Extracting de Gennes constants (n={self.grid.n}, t_max={self.grid.t_max})")

        coarse = self._grid_constants(bracket, step)
        fine = DeGennesSolver(self.grid.refined())._grid_constants(bracket, step)
        values = {key: richardson_limit(2.0, [coarse[key], fine[key]]) for key in coarse}

        c1 = values["u0"] ** 2 / 3.0
        if settings.C1_OVERRIDE is not None:
            logger.warning(f"⚠️ C1 overridden from environment: {settings.C1_OVERRIDE} (computed {c1})")
            c1 = settings.C1_OVERRIDE

        consts = DeGennesConstants(
            theta0=values["theta0"],
            xi0=values["xi0"],
            c1=c1,
            mu2=values["mu2"],
            u0=values["u0"],
            grid_n=self.grid.n,
            t_max=self.grid.t_max,
        )
        logger.info(
            f"✅ Theta0={consts.theta0:.12f} xi0={consts.xi0:.12f} C1={consts.c1:.12f} mu2={consts.mu2:.12f}"
        )
        return consts

    def moment_residuals(self, xi0: Optional[float] = None, mu2: Optional[float] = None,
                         dxi: float = 1e-3) -> Tuple[float, float]:
        """
        Residuals of the two moment identities at the discrete minimum

        r1 = int (xi0 - t) u^2, r2 = 1 + 2 int (xi0 - t) u d_xi u - mu''/2.
        Both vanish for the discrete model at its own minimizer.
        """
        if xi0 is None:
            xi0 = self.minimize_mu1()[0]
        if mu2 is None:
            mu2 = self.second_derivative(xi0)

        u = self.eigenpair(xi0).u
        du = (self.eigenpair(xi0 + dxi).u - self.eigenpair(xi0 - dxi).u) / (2.0 * dxi)

        r1 = self.integrate((xi0 - self.t) * u ** 2)
        r2 = 1.0 + 2.0 * self.integrate((xi0 - self.t) * u * du) - 0.5 * mu2
        return float(r1), float(r2)

    def xi_derivative(self, xi: float, dxi: float = 1e-4) -> np.ndarray:
        """Centered difference of the ground state in xi (sign fixed by u(0) > 0)"""
        return (self.eigenpair(xi + dxi).u - self.eigenpair(xi - dxi).u) / (2.0 * dxi)

    def deflated_resolvent(self, xi: float, z: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Solve (p0 - z) w = P_perp (xi - t) v on the orthogonal complement of v

        The constraint is imposed with a bordered sparse system
        [[T - z, v], [v^T, 0]] [w, lam] = [r_perp, 0].

        Returns:
            (w, v, r_perp) as Euclidean vectors of the symmetrized problem
        """
        self._check_xi(xi)
        vals, vecs = self._solve(xi, 0, 1)
        mu_second = vals[1]
        if abs(z - mu_second) < RESOLVENT_TOLERANCE:
            raise IllConditionedResolventError(
                f"z={z} within {RESOLVENT_TOLERANCE} of mu_2({xi})={mu_second}"
            )
        if z > mu_second:
            raise PreconditionError(f"z={z} must lie below mu_2({xi})={mu_second}")

        v = vecs[:, 0] if vecs[0, 0] > 0 else -vecs[:, 0]
        r = (xi - self.t) * v
        r_perp = r - v * np.dot(v, r)

        n = self.grid.n
        shifted = sparse.diags([self.off, self._diagonal(xi) - z, self.off], [-1, 0, 1], shape=(n, n))
        bordered = sparse.bmat([[shifted, v[:, None]], [v[None, :], None]], format="csc")
        solution = spsolve(bordered, np.append(r_perp, 0.0))
        return solution[:-1], v, r_perp

    def c2(self, xi: float, z: float) -> float:
        """C2(xi, z) = 1 - 4 <(p0 - z)^{-1} P_perp (xi - t) u, (xi - t) u>"""
        w, _, r_perp = self.deflated_resolvent(xi, z)
        return float(1.0 - 4.0 * np.dot(w, r_perp))

"""
Rescaled boundary operator in tubular coordinates: two-well (with flux) and one-well variants
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from src.core.config import settings
from src.core.errors import ConvergenceError, DiagnosticError, PreconditionError, ResolutionError
from src.models.schemas import (
    AgmonData, ArcLengthTable, DecayReport, DeGennesConstants, EigenSolveResult, MagneticOperator2D,
    OperatorVariant, TubularGrid, WellData, WellSide, WKBResidual
)
from src.services.degennes import DeGennesSolver
from src.services.effective import EffectiveModel
from src.services.geometry import periodic_spline
from src.utils.numerics import cutoff, cutoff_moment_bound, smoothstep

logger = logging.getLogger(__name__)

MAX_RETRIES = 5
N_EIGS = 4
NCV = 20
MIN_GAP = 1e-10
RESIDUAL_TOL = 1e-10
ORTHOGONALITY_TOL = 1e-8
REFINE_STEPS = 3
DECAY_ALPHA = 0.25
TAIL_TAU = 6.0
TAIL_MASS_TOL = 1e-6
PEAK_CELLS = 2
SYMMETRY_TOL = 1e-6
AGMON_THETA = 0.1
AGMON_EPS_FRACTION = 0.2


def reduce_gauge(b: float, hbar: float, half_length: float, target: float) -> float:
    """Shift b by multiples of the flux quantum hbar pi / half_length into the window nearest target"""
    quantum = hbar * np.pi / half_length
    return float(b - np.round((b - target) / quantum) * quantum)


class BoundaryOperatorService:
    """Assembly and diagonalization of the rescaled boundary operator for one domain"""

    def __init__(self, consts: DeGennesConstants, table: Optional[ArcLengthTable] = None,
                 wells: Optional[WellData] = None):
        self.consts = consts
        self.table = table
        self.wells = wells
        self._kappa = periodic_spline(table, table.kappa) if table is not None else None

    # -----------------------------------------------------------------
    # Assembly
    # -----------------------------------------------------------------

    def cutoff_scale(self, grid: TubularGrid, kappa_max: float) -> float:
        """mu = max(hbar^{1/2 + 2 eta}, smallest scale keeping the weight above MIN_WEIGHT)"""
        nominal = grid.hbar ** (0.5 + 2.0 * grid.eta)
        safe = grid.hbar * max(kappa_max, 0.0) * cutoff_moment_bound() / (1.0 - settings.MIN_WEIGHT)
        return float(max(nominal, safe))

    def _assemble(self, sigma: np.ndarray, kappa_fn: Callable, periodic: bool, b: float,
                  grid: TubularGrid, mu: float):
        n_s, n_t = sigma.size, grid.n_tau
        hbar, dtau = grid.hbar, grid.dtau
        delta = float(sigma[1] - sigma[0])
        tau = grid.tau
        tau_half = tau + 0.5 * dtau
        w_tau = np.ones(n_t)
        w_tau[0] = 0.5
        c_tau = cutoff(mu * tau)
        c_half = cutoff(mu * tau_half)

        def weight(kap, t, c):
            return 1.0 - hbar * t[None, :] * kap[:, None] * c[None, :]

        kappa_nodes = kappa_fn(sigma)
        a_nodes = weight(kappa_nodes, tau, c_tau)
        a_normal = weight(kappa_nodes, tau_half, c_half)

        if periodic:
            left = np.arange(n_s)
            right = (left + 1) % n_s
            s_half = sigma + 0.5 * delta
        else:
            left = np.arange(n_s - 1)
            right = left + 1
            s_half = sigma[:-1] + 0.5 * delta
        kappa_half = kappa_fn(s_half)
        a_tangent = weight(kappa_half, tau, c_tau)

        lowest = min(a_nodes.min(), a_normal.min(), a_tangent.min())
        if lowest < settings.MIN_WEIGHT:
            raise PreconditionError(f"tubular weight {lowest:.3f} below {settings.MIN_WEIGHT}; raise the cutoff scale")

        index = np.arange(n_s * n_t).reshape(n_s, n_t)
        diag = np.zeros((n_s, n_t), dtype=complex)
        rows, cols, vals = [], [], []

        # normal part: sum a_{k+1/2} |psi_{k+1} - psi_k|^2 / dtau, Dirichlet beyond the last node
        wn = delta * a_normal / dtau
        diag += wn
        diag[:, 1:] += wn[:, :-1]
        p, q, w = index[:, :-1].ravel(), index[:, 1:].ravel(), -wn[:, :-1].ravel()
        rows += [p, q]
        cols += [q, p]
        vals += [w, w]

        # tangential part: a^{-1} |D psi|^2 at sigma half points
        def tangent_coeffs(kap):
            A = b - tau[None, :] + 0.5 * hbar * c_tau[None, :] * kap[:, None] * tau[None, :] ** 2
            return 1j * hbar / delta + 0.5 * A, -1j * hbar / delta + 0.5 * A

        wt = delta * dtau * w_tau[None, :] / a_tangent
        cp, cq = tangent_coeffs(kappa_half)
        np.add.at(diag, left, wt * np.abs(cp) ** 2)
        np.add.at(diag, right, wt * np.abs(cq) ** 2)
        P, Q = index[left].ravel(), index[right].ravel()
        rows += [P, Q]
        cols += [Q, P]
        vals += [(wt * np.conj(cp) * cq).ravel(), (wt * np.conj(cq) * cp).ravel()]

        if not periodic:
            # edges to the Dirichlet ghosts beyond both ends
            ends = np.array([sigma[0] - 0.5 * delta, sigma[-1] + 0.5 * delta])
            kap_end = kappa_fn(ends)
            a_end = weight(kap_end, tau, c_tau)
            w_end = delta * dtau * w_tau[None, :] / a_end
            cp_end, cq_end = tangent_coeffs(kap_end)
            diag[0] += w_end[0] * np.abs(cq_end[0]) ** 2
            diag[-1] += w_end[1] * np.abs(cp_end[1]) ** 2

        rows.append(index.ravel())
        cols.append(index.ravel())
        vals.append(diag.ravel())

        dim = n_s * n_t
        K = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(dim, dim)).tocsr()
        mass = (delta * dtau * w_tau[None, :] * a_nodes).ravel()
        return K, mass, a_nodes, kappa_nodes

    def _one_well_kappa(self, side: OperatorVariant) -> Callable:
        """kappa_r = kappa blended to zero over collars next to the far well; kappa_l(s) = kappa_r(-s)"""
        L, s_l = self.table.L, self.wells.s_l
        collar = settings.COLLAR_FRACTION * L

        def kappa_r(s):
            s = np.asarray(s, dtype=float)
            blend = smoothstep((s - (s_l - 2 * L)) / collar) * smoothstep((s_l - s) / collar)
            return self._kappa(s) * blend

        if side == OperatorVariant.ONE_WELL_RIGHT:
            return kappa_r
        return lambda s: kappa_r(-np.asarray(s, dtype=float))

    def assemble(self, grid: TubularGrid, flux: bool = True,
                 variant: OperatorVariant = OperatorVariant.TWO_WELL,
                 padding: Optional[float] = None, gamma0: float = 0.0) -> MagneticOperator2D:
        """
        Sparse quadratic-form discretization of the rescaled boundary operator

        Args:
            grid: tubular grid (n_s sets the tangential spacing 2L/n_s for every variant)
            flux: include gamma0/hbar in the tangential factor (two-well only)
            variant: two-well on the periodic boundary, or a one-well operator
            padding: flat extension beyond the unrolled interval of a one-well operator
            gamma0: flux constant

        Returns:
            MagneticOperator2D
        """
        if self.table is None or self.wells is None:
            raise PreconditionError("assembly needs the arclength table and the wells")
        variant = OperatorVariant(variant)
        L = self.table.L
        required = grid.required_n_s(L, self.consts.xi0)
        if grid.n_s < required:
            raise ResolutionError(
                f"n_s={grid.n_s} below {required} points needed to resolve the tangential oscillation",
                required=required,
            )

        mu = self.cutoff_scale(grid, self.wells.kappa_max)
        delta = 2.0 * L / grid.n_s

        if variant == OperatorVariant.TWO_WELL:
            sigma = -L + np.arange(grid.n_s) * delta
            b = gamma0 / grid.hbar if flux else 0.0
            b = reduce_gauge(b, grid.hbar, L, self.consts.xi0)
            K, mass, a_nodes, kap = self._assemble(sigma, self._kappa, True, b, grid, mu)
            periodic = True
        else:
            pad = settings.ONE_WELL_PADDING if padding is None else padding
            s_l = self.wells.s_l
            lo, hi = s_l - 2 * L - pad, s_l + pad
            if variant == OperatorVariant.ONE_WELL_LEFT:
                lo, hi = -hi, -lo
            j_lo = int(np.floor((lo + L) / delta))
            j_hi = int(np.ceil((hi + L) / delta))
            sigma = -L + np.arange(j_lo, j_hi + 1) * delta
            b = self.consts.xi0
            K, mass, a_nodes, kap = self._assemble(sigma, self._one_well_kappa(variant), False, b, grid, mu)
            periodic = False

        logger.info(f"🔄 Assembled {variant.value} operator: {sigma.size}x{grid.n_tau} nodes, "
                    f"hbar={grid.hbar}, mu={mu:.4f}, gauge={b:.6f}")
        return MagneticOperator2D(
            K=K, mass=mass, sigma=sigma, tau=grid.tau, weight=a_nodes, kappa=kap, variant=variant,
            grid=grid, gauge=b, cutoff_scale=mu, periodic=periodic,
        )

    def strip_operator(self, grid: TubularGrid, length: float, flux: float = 0.0) -> MagneticOperator2D:
        """Flat periodic strip (kappa = 0) of the given length, the half-plane limit"""
        half = 0.5 * length
        sigma = -half + np.arange(grid.n_s) * (length / grid.n_s)
        b = reduce_gauge(flux / grid.hbar, grid.hbar, half, self.consts.xi0)
        K, mass, a_nodes, kap = self._assemble(sigma, np.zeros_like, True, b, grid, 1.0)
        return MagneticOperator2D(
            K=K, mass=mass, sigma=sigma, tau=grid.tau, weight=a_nodes, kappa=kap,
            variant=OperatorVariant.TWO_WELL, grid=grid, gauge=b, cutoff_scale=1.0, periodic=True,
        )

    # -----------------------------------------------------------------
    # Eigenpairs
    # -----------------------------------------------------------------

    def default_shift(self, hbar: float) -> float:
        kappa_max = self.wells.kappa_max if self.wells is not None else 0.0
        return self.consts.theta0 - self.consts.c1 * kappa_max * hbar - 5.0 * hbar ** 2

    def lowest_pair(self, op: MagneticOperator2D, shift: Optional[float] = None) -> EigenSolveResult:
        """
        Two lowest eigenpairs of K v = nu M v by shift-invert Lanczos

        The factorization of K - shift M is retried with a perturbed shift when it
        fails; eigenvectors are returned M-normalized.
        """
        shift = self.default_shift(op.grid.hbar) if shift is None else shift
        M = sparse.diags(op.mass).tocsc()
        K = op.K.tocsc()

        lu, used = None, shift
        for attempt in range(MAX_RETRIES + 1):
            try:
                lu = splu((K - used * M).tocsc())
                break
            except RuntimeError as e:
                logger.warning(f"⚠️ Factorization failed at shift {used:.8f}: {str(e)}")
                used = shift - 1e-6 * (attempt + 1) * max(1.0, abs(shift))
        if lu is None:
            raise DiagnosticError(f"shift-invert factorization failed after {MAX_RETRIES} retries near {shift}")

        solves = {"count": 0}

        def solve(x):
            solves["count"] += 1
            return lu.solve(np.asarray(x, dtype=complex).ravel())

        opinv = LinearOperator(K.shape, matvec=solve, dtype=complex)
        dim = K.shape[0]
        v0 = (np.ones(dim) + 1e-3 * np.sin(np.arange(dim))).astype(complex)

        try:
            values, vectors = eigsh(K, k=N_EIGS, M=M, sigma=used, which="LM", OPinv=opinv, v0=v0,
                                    ncv=min(NCV, dim - 1), tol=0.0, maxiter=10 * dim)
        except ArpackNoConvergence as e:
            raise ConvergenceError(
                f"eigensolver did not converge ({len(e.eigenvalues)} of {N_EIGS} pairs, {solves['count']} solves)"
            ) from e

        order = np.argsort(values.real)[:2]
        nus, vecs = self._ritz_pair(op, K, vectors[:, order])
        residuals = self._residuals(op, K, nus, vecs)
        for _ in range(REFINE_STEPS):
            if max(residuals) <= RESIDUAL_TOL:
                break
            # one block inverse-iteration sweep on the pair
            block = np.column_stack([solve(op.mass * vecs[:, i]) for i in range(2)])
            nus, vecs = self._ritz_pair(op, K, block)
            residuals = self._residuals(op, K, nus, vecs)

        orthogonality = float(abs(op.inner(vecs[:, 0], vecs[:, 1])))
        if max(residuals) > RESIDUAL_TOL or orthogonality > ORTHOGONALITY_TOL:
            raise ConvergenceError(
                f"eigenpairs not converged after {solves['count']} solves: residuals "
                f"{residuals[0]:.2e}, {residuals[1]:.2e} (tol {RESIDUAL_TOL:g}), "
                f"orthogonality {orthogonality:.2e} (tol {ORTHOGONALITY_TOL:g})"
            )

        result = EigenSolveResult(
            nu1=float(nus[0]), nu2=float(nus[1]), vectors=vecs, residuals=residuals,
            iterations=solves["count"], shift=float(used), orthogonality=orthogonality,
        )
        logger.info(f"✅ nu1={result.nu1:.12f} nu2={result.nu2:.12f} gap={result.gap:.3e} "
                    f"({result.iterations} solves)")
        return result

    @staticmethod
    def _ritz_pair(op: MagneticOperator2D, K, basis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Rayleigh-Ritz on a two-column basis; vectors come back M-orthonormal"""
        KB = K @ basis
        MB = op.mass[:, None] * basis
        k_small = basis.conj().T @ KB
        m_small = basis.conj().T @ MB
        k_small = 0.5 * (k_small + k_small.conj().T)
        m_small = 0.5 * (m_small + m_small.conj().T)
        nus, coeffs = eigh(k_small, m_small)
        vecs = basis @ coeffs
        for i in range(vecs.shape[1]):
            vecs[:, i] /= op.norm(vecs[:, i])
        return nus, vecs

    @staticmethod
    def _residuals(op: MagneticOperator2D, K, nus: np.ndarray, vecs: np.ndarray) -> List[float]:
        """||(A - nu) v||_a with A = M^{-1} K"""
        residuals = []
        for i in range(vecs.shape[1]):
            r = K @ vecs[:, i] - nus[i] * op.mass * vecs[:, i]
            residuals.append(float(np.sqrt(np.sum(np.abs(r) ** 2 / op.mass))))
        return residuals

    @staticmethod
    def check_resolvable(result: EigenSolveResult):
        if result.gap < MIN_GAP:
            raise DiagnosticError(f"gap {result.gap:.3e} below {MIN_GAP:g}: outside the double-precision regime")

    @staticmethod
    def hermiticity_defect(op: MagneticOperator2D, pairs: int = 20, seed: int = 0) -> float:
        """max |<Au, v>_a - <u, Av>_a| / (||A|| ||u|| ||v||) over random pairs"""
        rng = np.random.default_rng(seed)
        norm = float(np.max(np.asarray(abs(op.K).sum(axis=1)).ravel() / op.mass))
        worst = 0.0
        for _ in range(pairs):
            u = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
            v = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
            defect = abs(op.inner(op.apply(u), v) - op.inner(u, op.apply(v)))
            worst = max(worst, defect / (norm * op.norm(u) * op.norm(v)))
        return worst

    # -----------------------------------------------------------------
    # Diagnostics
    # -----------------------------------------------------------------

    def _ground_state_on(self, tau: np.ndarray, solver: DeGennesSolver) -> Tuple[np.ndarray, np.ndarray]:
        """u_{xi0} and d_xi u at xi0 interpolated onto the normal grid"""
        nodes = np.append(solver.t, solver.grid.t_max)
        xi0 = self.consts.xi0
        u = np.append(solver.eigenpair(xi0).u, 0.0)
        du = np.append(solver.xi_derivative(xi0), 0.0)
        return CubicSpline(nodes, u)(tau), CubicSpline(nodes, du)(tau)

    def delta1(self, hbar: float) -> float:
        """Theta0 - C1 kmax hbar + C1 Theta0^{1/4} sqrt(3 k2 / 2) hbar^{3/2}"""
        c = self.consts
        third = c.c1 * c.theta0 ** 0.25 * np.sqrt(1.5 * self.wells.k2)
        return c.theta0 - c.c1 * self.wells.kappa_max * hbar + third * hbar ** 1.5

    def wkb_residual(self, op: MagneticOperator2D, model: EffectiveModel,
                     solver: Optional[DeGennesSolver] = None, include_corrector: bool = False,
                     ground: Optional[EigenSolveResult] = None) -> WKBResidual:
        """
        Relative residual of the leading WKB quasimode of a one-well operator

        Psi = hbar^{-1/8} f(sigma) u(tau) e^{-Phi(sigma)/hbar^{1/2}}, optionally plus
        i hbar^{1/2} Phi' f d_xi u; the fast phase e^{i sigma xi0/hbar} is absorbed by the gauge.
        """
        if op.variant == OperatorVariant.TWO_WELL:
            raise PreconditionError("the WKB quasimode is built for one-well operators")
        hbar = op.grid.hbar
        solver = solver or DeGennesSolver()
        u, du = self._ground_state_on(op.tau, solver)

        side = WellSide.RIGHT if op.variant == OperatorVariant.ONE_WELL_RIGHT else WellSide.LEFT
        f, phi, rho = model.wkb_functions(side)
        fv, pv, rv = f(op.sigma), phi(op.sigma), rho(op.sigma)
        envelope = hbar ** -0.125 * fv * np.exp(-pv / np.sqrt(hbar))

        psi = envelope[:, None] * u[None, :]
        if include_corrector:
            psi = psi + 1j * np.sqrt(hbar) * (envelope * rv)[:, None] * du[None, :]
        psi = psi.ravel()

        d1 = self.delta1(hbar)
        r = op.K @ psi - d1 * op.mass * psi
        residual = float(np.sqrt(np.sum(np.abs(r) ** 2 / op.mass)) / op.norm(psi))

        ground = ground or self.lowest_pair(op)
        overlap = self.quasimode_overlap(op, psi, ground.vectors[:, 0])

        logger.info(f"📋 WKB residual hbar={hbar}: {residual:.3e} (corrector={include_corrector}), "
                    f"overlap {overlap:.6f}")
        return WKBResidual(hbar=hbar, residual=residual, delta1=d1, overlap=overlap,
                           include_corrector=include_corrector)

    @staticmethod
    def quasimode_overlap(op: MagneticOperator2D, psi: np.ndarray, v: np.ndarray) -> float:
        """|<psi, v>_a| / (||psi|| ||v||); only a global phase drops out"""
        return float(abs(op.inner(psi, v)) / (op.norm(psi) * op.norm(v)))

    def tangential_profile(self, op: MagneticOperator2D, vectors: np.ndarray) -> np.ndarray:
        """p(sigma) = (sum_i int |v_i(sigma, .)|^2 a dtau)^{1/2}"""
        n_s, n_t = op.shape
        density = np.zeros(n_s)
        weights = (op.mass / op.dsigma).reshape(n_s, n_t)
        for i in range(vectors.shape[1]):
            density += np.sum(np.abs(vectors[:, i].reshape(n_s, n_t)) ** 2 * weights, axis=1)
        return np.sqrt(density)

    def decay_diagnostics(self, op: MagneticOperator2D, result: EigenSolveResult,
                          agmon: AgmonData) -> DecayReport:
        """Normal moment, tail mass, peak positions, symmetry and the Agmon bound of the ground pair"""
        hbar = op.grid.hbar
        n_s, n_t = op.shape
        v = result.vectors[:, 0]
        norm = op.norm(v)

        tau_weight = np.tile(np.exp(DECAY_ALPHA * op.tau), n_s)
        moment = op.norm(tau_weight * v) / norm
        tail = np.tile(op.tau > TAIL_TAU, n_s)
        tail_mass = float(np.sum(np.abs(v[tail]) ** 2 * op.mass[tail]) / norm ** 2)

        profile = self.tangential_profile(op, result.vectors)
        rolled = (profile > np.roll(profile, 1)) & (profile >= np.roll(profile, -1))
        candidates = np.nonzero(rolled)[0]
        top = candidates[np.argsort(profile[candidates])[::-1][:2]]
        peaks = sorted(float(op.sigma[k]) for k in top)
        targets = [self.wells.s_r, self.wells.s_l]
        offsets = [abs(p - t) / op.dsigma for p, t in zip(peaks, targets)] if len(peaks) == 2 else [float("inf")]

        symmetry = None
        symmetry_ok = True
        if op.periodic and n_s % 2 == 0:
            mirror = np.mod(-np.arange(n_s), n_s)
            symmetry = float(np.max(np.abs(profile - profile[mirror])) / np.max(profile))
            symmetry_ok = symmetry <= SYMMETRY_TOL

        phi = np.minimum(
            periodic_spline(self.table, agmon.phi_r)(op.sigma),
            periodic_spline(self.table, agmon.phi_l)(op.sigma),
        )
        eps = AGMON_EPS_FRACTION * agmon.S
        with np.errstate(divide="ignore"):
            observed = -np.sqrt(hbar) * np.log(profile / np.max(profile))
        away = phi > eps
        bound = (1.0 - AGMON_THETA) * phi - eps
        margin = float(np.min(observed[away] - bound[away])) if np.any(away) else 0.0

        return DecayReport(
            normal_moment=float(moment),
            tail_mass=tail_mass,
            peak_positions=peaks,
            peak_offsets_cells=offsets,
            symmetry_defect=symmetry,
            agmon_margin=margin,
            normal_ok=bool(np.isfinite(moment) and tail_mass <= TAIL_MASS_TOL),
            peaks_ok=bool(max(offsets) <= PEAK_CELLS),
            symmetry_ok=bool(symmetry_ok),
            agmon_ok=bool(margin >= 0.0),
        )

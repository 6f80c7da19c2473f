"""
Orchestration: constants -> geometry -> effective -> splitting -> oracles
"""

import asyncio
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.core.config import settings
from src.core.errors import InsufficientDataError, TunnelingError
from src.models.schemas import (
    DeGennesConstants, DomainSummary, GapNormalization, RunConfig, SplittingInputs, SweepResult
)
from src.services.boundary2d import BoundaryOperatorService
from src.services.degennes import DeGennesSolver
from src.services.effective import EffectiveModel
from src.services.geometry import GeometryService
from src.services.splitting import SplittingCalculator, compare, fit_alpha0

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "h", "inv_h", "hbar", "gap_formula", "envelope", "phase_mod_2pi",
    "gap_effective", "rel_err_effective",
    "nu1", "nu2", "gap_2d", "rel_err_2d", "residual1", "residual2", "ns", "ntau",
    "reason",
]


class PipelineService:
    """Runs the stages for one RunConfig; stage results are computed once and reused"""

    def __init__(self, config: Optional[RunConfig] = None, constants: Optional[DeGennesConstants] = None):
        self.config = config or RunConfig()
        self.solver = DeGennesSolver(self.config.degennes.to_grid())
        self.geometry = GeometryService(self.config.geometry.samples)
        self._constants = constants
        self._domain = None
        self._model: Optional[EffectiveModel] = None

    # -----------------------------------------------------------------
    # Stages
    # -----------------------------------------------------------------

    def constants(self) -> DeGennesConstants:
        if self._constants is None:
            self._constants = self.solver.constants()
        return self._constants

    @property
    def cached_constants(self) -> Optional[DeGennesConstants]:
        """Constants if already extracted, without triggering the extraction"""
        return self._constants

    def domain(self):
        """(table, wells, flux) of the configured boundary"""
        if self._domain is None:
            curve = self.config.domain.to_curve()
            logger.info(f"🔄 Analyzing {curve.kind.value} boundary")
            self._domain = self.geometry.analyze(curve)
        return self._domain

    def effective_model(self) -> EffectiveModel:
        if self._model is None:
            table, wells, _ = self.domain()
            self._model = EffectiveModel(table, wells, self.constants())
        return self._model

    def boundary_service(self) -> BoundaryOperatorService:
        table, wells, _ = self.domain()
        return BoundaryOperatorService(self.constants(), table, wells)

    def splitting_inputs(self, alpha0: Optional[float] = None) -> SplittingInputs:
        consts = self.constants()
        table, wells, flux = self.domain()
        agmon = self.effective_model().agmon_data()
        if alpha0 is None:
            alpha0 = self.config.splitting.alpha0 or 0.0
        return SplittingInputs(
            theta0=consts.theta0, xi0=consts.xi0, c1=consts.c1, mu2=consts.mu2,
            L=table.L, gamma0=flux.gamma0, k2=wells.k2,
            kappa_max=wells.kappa_max, kappa_min=wells.kappa_min,
            S_u=agmon.S_u, S_d=agmon.S_d, g=agmon.g, A_u=agmon.A_u, A_d=agmon.A_d,
            V0=agmon.V0, VL=agmon.VL, alpha0=alpha0,
        )

    def domain_summary(self) -> DomainSummary:
        table, wells, flux = self.domain()
        agmon = self.effective_model().agmon_data()
        return DomainSummary(
            kind=self.config.domain.kind, L=table.L, area=flux.area, gamma0=flux.gamma0,
            kappa_max=wells.kappa_max, kappa_min=wells.kappa_min, s_r=wells.s_r, s_l=wells.s_l,
            k2=wells.k2, S_u=agmon.S_u, S_d=agmon.S_d, S=agmon.S, g=agmon.g,
            A_u=agmon.A_u, A_d=agmon.A_d, V0=agmon.V0, VL=agmon.VL, symmetric=wells.symmetric,
        )

    def potential_table(self) -> pd.DataFrame:
        """Curvature and effective potential along the boundary"""
        table, _, _ = self.domain()
        V = self.effective_model().V
        return pd.DataFrame({
            "s": table.s, "x": table.x, "y": table.y, "kappa": table.kappa, "V": V.V, "v": V.v,
        })

    # -----------------------------------------------------------------
    # Oracles, one h at a time
    # -----------------------------------------------------------------

    def _effective_row(self, h: float, calculator: SplittingCalculator) -> Dict[str, Any]:
        row: Dict[str, Any] = {"gap_effective": np.nan, "reason": ""}
        try:
            theta = 0.0
            if self.config.oracles.effective_flux:
                theta = float(calculator.flux_phase(h)) / calculator.inputs.L
            spectrum = self.effective_model().effective_eigs(h, theta=theta, m=2)
            if spectrum.resolvable:
                row["gap_effective"] = spectrum.gap * h ** 1.5
            else:
                row["reason"] = "effective gap below resolution"
        except TunnelingError as e:
            logger.warning(f"⚠️ Effective oracle skipped at h={h:.6e}: {str(e)}")
            row["reason"] = f"effective: {str(e)}"
        return row

    def _boundary_row(self, h: float) -> Dict[str, Any]:
        hbar = float(np.sqrt(h))
        grid = self.config.boundary.to_grid(hbar)
        row: Dict[str, Any] = {
            "nu1": np.nan, "nu2": np.nan, "gap_2d": np.nan, "residual1": np.nan, "residual2": np.nan,
            "ns": grid.n_s, "ntau": grid.n_tau, "reason": "",
        }
        try:
            service = self.boundary_service()
            _, _, flux = self.domain()
            op = service.assemble(grid, flux=True, gamma0=flux.gamma0)
            result = service.lowest_pair(op)
            service.check_resolvable(result)
            row.update(
                nu1=result.nu1, nu2=result.nu2, gap_2d=h * result.gap,
                residual1=result.residuals[0], residual2=result.residuals[1],
            )
        except TunnelingError as e:
            logger.warning(f"⚠️ Boundary oracle skipped at hbar={hbar:.6f}: {str(e)}")
            row["reason"] = f"boundary2d: {str(e)}"
        return row

    def _oracle_row(self, h: float, calculator: SplittingCalculator) -> Dict[str, Any]:
        row: Dict[str, Any] = {"h": h, "hbar": float(np.sqrt(h))}
        reasons: List[str] = []
        if self.config.oracles.effective1d:
            part = self._effective_row(h, calculator)
            reasons.append(part.pop("reason"))
            row.update(part)
        if self.config.oracles.boundary2d:
            part = self._boundary_row(h)
            reasons.append(part.pop("reason"))
            row.update(part)
        row["reason"] = "; ".join(r for r in reasons if r)
        return row

    # -----------------------------------------------------------------
    # Sweep
    # -----------------------------------------------------------------

    async def run_sweep(self) -> SweepResult:
        """
        Evaluate the prediction and the enabled oracles over the configured h grid

        Oracle rows run in a worker pool and are merged back in grid order. Rows
        hitting an oracle guard keep NaN values and a reason.

        Returns:
            SweepResult with the merged table and the comparison reports
        """
        start_time = time.time()
        hs = self.config.hgrid.values()

        # Step 1: upstream stages (fail fast on geometry errors)
        inputs = self.splitting_inputs()
        calculator = SplittingCalculator(inputs)

        # Step 2: oracles, in parallel over h
        rows = [{"h": float(h), "hbar": float(np.sqrt(h)), "reason": ""} for h in hs]
        if self.config.oracles.effective1d or self.config.oracles.boundary2d:
            loop = asyncio.get_running_loop()
            with ThreadPoolExecutor(max_workers=settings.MAX_WORKERS) as pool:
                tasks = [loop.run_in_executor(pool, self._oracle_row, float(h), calculator) for h in hs]
                rows = await asyncio.gather(*tasks)

        table = pd.DataFrame(rows).reindex(columns=SWEEP_COLUMNS)
        table["reason"] = table["reason"].fillna("")

        # Step 3: optional alpha0 fit from the flux-carrying oracle
        alpha0_fit = None
        if self.config.splitting.fit_alpha0:
            alpha0_fit = self._fit_alpha0(table, inputs)
            if alpha0_fit is not None:
                inputs = inputs.with_alpha0(alpha0_fit.alpha0)
                calculator = SplittingCalculator(inputs)

        # Step 4: prediction and comparisons
        prediction = calculator.predict(hs, GapNormalization.PHYSICAL, with_flux=True)
        table["inv_h"] = 1.0 / table["h"]
        table["gap_formula"] = prediction.gap_formula
        table["envelope"] = prediction.envelope
        table["phase_mod_2pi"] = prediction.phase_mod_2pi

        comparisons = {}
        if table["gap_effective"].notna().any():
            with_flux = self.config.oracles.effective_flux
            reference = calculator.predict(hs, GapNormalization.PHYSICAL, with_flux=with_flux)
            table["rel_err_effective"] = table["gap_effective"] / reference.gap_formula - 1.0
            comparisons["effective1d"] = compare(hs, table["gap_effective"].to_numpy(), reference, inputs)
        if table["gap_2d"].notna().any():
            table["rel_err_2d"] = table["gap_2d"] / prediction.gap_formula - 1.0
            comparisons["boundary2d"] = compare(hs, table["gap_2d"].to_numpy(), prediction, inputs)

        logger.info(f"✅ Sweep of {len(hs)} points finished in {time.time() - start_time:.2f}s")
        return SweepResult(table=table, prediction=prediction, inputs=inputs,
                           comparisons=comparisons, alpha0_fit=alpha0_fit)

    def _fit_alpha0(self, table: pd.DataFrame, inputs: SplittingInputs):
        column = None
        if table["gap_2d"].notna().sum() > 0:
            column = "gap_2d"
        elif self.config.oracles.effective_flux and table["gap_effective"].notna().sum() > 0:
            column = "gap_effective"
        if column is None:
            logger.warning("⚠️ alpha0 fit requested but no flux-carrying oracle data is available")
            return None
        try:
            return fit_alpha0(table["h"].to_numpy(), table[column].to_numpy(), inputs)
        except InsufficientDataError as e:
            logger.error(f"❌ alpha0 fit failed: {str(e)}")
            raise

    # -----------------------------------------------------------------
    # Status
    # -----------------------------------------------------------------

    def get_system_status(self) -> Dict[str, Any]:
        """Status of the stages computed so far"""
        try:
            return {
                "status": "healthy",
                "components": {
                    "degennes": "ready" if self._constants is not None else "idle",
                    "geometry": "ready" if self._domain is not None else "idle",
                    "effective": "ready" if self._model is not None else "idle",
                    "boundary2d": "enabled" if self.config.oracles.boundary2d else "disabled",
                },
            }
        except Exception as e:
            logger.error(f"Error getting system status: {str(e)}")
            return {"status": "error", "error": str(e), "components": {}}

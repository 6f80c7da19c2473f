"""
Logging setup and startup utilities
"""

import asyncio
import logging
from typing import Optional

from src.core.config import settings
from src.models.schemas import RunConfig

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool = False, quiet: bool = False):
    """Configure root logging once per entry point (stderr, level from settings)"""
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def log_system_status(config: Optional[RunConfig] = None):
    """Log the resolved numerical configuration"""
    config = config or RunConfig()
    logger.info("📋 Configuration")
    logger.info(f"   domain: {config.domain.kind.value} (scale {config.domain.scale})")
    logger.info(f"   de Gennes grid: n={config.degennes.n}, t_max={config.degennes.t_max}")
    logger.info(f"   geometry samples: {config.geometry.samples}")
    logger.info(f"   h grid: [{config.hgrid.min:g}, {config.hgrid.max:g}] x {config.hgrid.count} "
                f"({config.hgrid.spacing.value})")
    logger.info(f"   oracles: effective1d={config.oracles.effective1d}, boundary2d={config.oracles.boundary2d}")
    logger.info(f"   boundary grid: n_sigma={config.boundary.n_sigma}, n_tau={config.boundary.n_tau}, "
                f"tau_max={config.boundary.tau_max}")
    logger.info(f"   extended precision: {settings.EXTENDED_PRECISION} ({settings.MP_DPS} digits), "
                f"workers: {settings.MAX_WORKERS}")
    if settings.C1_OVERRIDE is not None:
        logger.warning(f"⚠️ C1 override active: {settings.C1_OVERRIDE}")


async def initialize_system(pipeline):
    """Warm the constants and geometry caches of a pipeline before serving requests"""
    logger.info("🚀 Initializing magnetic tunneling service...")

    try:
        loop = asyncio.get_running_loop()
        consts = await loop.run_in_executor(None, pipeline.constants)
        logger.info(f"✅ de Gennes constants ready (Theta0={consts.theta0:.10f})")
        await loop.run_in_executor(None, pipeline.domain)
        logger.info("✅ System initialization completed successfully!")

    except Exception as e:
        logger.error(f"❌ System initialization failed: {str(e)}")
        # Requests compute the stages lazily
        logger.info("⚠️ Continuing startup without warm caches...")

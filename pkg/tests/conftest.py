"""
Shared fixtures: converged de Gennes constants and the (2, 1) ellipse
"""

import os
import sys

import pytest

# Add the project root to path for imports
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.models.schemas import BoundaryCurve, RunConfig
from src.services.degennes import DeGennesSolver
from src.services.effective import EffectiveModel
from src.services.geometry import GeometryService
from src.services.pipeline import PipelineService


@pytest.fixture(scope="session")
def solver():
    return DeGennesSolver()


@pytest.fixture(scope="session")
def constants(solver):
    return solver.constants()


@pytest.fixture(scope="session")
def geometry():
    return GeometryService()


@pytest.fixture(scope="session")
def ellipse(geometry):
    """(table, wells, flux) of the (2, 1) ellipse"""
    return geometry.analyze(BoundaryCurve.ellipse(2.0, 1.0))


@pytest.fixture(scope="session")
def ellipse_model(ellipse, constants):
    table, wells, _ = ellipse
    return EffectiveModel(table, wells, constants)


@pytest.fixture(scope="session")
def ellipse_pipeline(constants):
    return PipelineService(RunConfig(), constants=constants)


@pytest.fixture(scope="session")
def ellipse_inputs(ellipse_pipeline):
    return ellipse_pipeline.splitting_inputs(alpha0=0.0)

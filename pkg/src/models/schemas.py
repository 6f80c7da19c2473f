"""
Pydantic models for grids, constants, geometry, predictions and run configuration
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.config import settings


class CurveKind(str, Enum):
    ELLIPSE = "ellipse"
    POLAR = "polar"
    SAMPLED = "sampled"


class WellSide(str, Enum):
    RIGHT = "r"
    LEFT = "l"


class ArcMode(str, Enum):
    CCW = "ccw"
    CW = "cw"
    MIN = "min"
    UNROLLED = "unrolled"


class OperatorVariant(str, Enum):
    TWO_WELL = "two-well"
    ONE_WELL_RIGHT = "one-well-right"
    ONE_WELL_LEFT = "one-well-left"


class GapNormalization(str, Enum):
    EFFECTIVE = "effective"   # gap of the rescaled effective operator, scale h^{1/8}
    PHYSICAL = "physical"     # lambda = h * nu, scale h^{13/8}
    RESCALED = "rescaled"     # nu = lambda / h, scale h^{5/8}

    @property
    def h_power(self) -> float:
        """Power of h relating this normalization to the effective one"""
        return {"effective": 0.0, "physical": 1.5, "rescaled": 0.5}[self.value]

    @property
    def prefactor_power(self) -> float:
        """Algebraic power of h multiplying the exponential in the gap formula"""
        return 0.125 + self.h_power


class HGridSpacing(str, Enum):
    QUARTIC = "quartic"   # uniform in h^{-1/4}
    INVERSE = "inverse"   # uniform in 1/h


class Severity(str, Enum):
    REQUIRED = "required"
    DIAGNOSTIC = "diagnostic"


class ArrayModel(BaseModel):
    """Base for models carrying numpy arrays"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# ---------------------------------------------------------------------------
# de Gennes model
# ---------------------------------------------------------------------------

class HalfLineGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_max: float = Field(default_factory=lambda: settings.GRID_T_MAX, ge=15.0)
    n: int = Field(default_factory=lambda: settings.GRID_N, ge=100)

    @property
    def dt(self) -> float:
        return self.t_max / self.n

    @property
    def nodes(self) -> np.ndarray:
        """Unknown nodes t_0 = 0, ..., t_{n-1}; t_n = t_max carries the Dirichlet value"""
        return np.arange(self.n) * self.dt

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights (in units of dt); half weight at the Neumann node"""
        w = np.ones(self.n)
        w[0] = 0.5
        return w

    @property
    def extraction_grade(self) -> bool:
        return self.n >= 2000

    def refined(self, factor: int = 2) -> "HalfLineGrid":
        return HalfLineGrid(t_max=self.t_max, n=self.n * factor)


class DeGennesEigenpair(ArrayModel):
    xi: float
    mu: float
    u: np.ndarray
    n: int = Field(ge=1)
    grid: HalfLineGrid

    @property
    def u0(self) -> float:
        return float(self.u[0])


class DeGennesConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta0: float = Field(gt=0.0, lt=1.0)
    xi0: float = Field(gt=0.0)
    c1: float = Field(gt=0.0)
    mu2: float = Field(gt=0.0)
    u0: float = Field(gt=0.0)
    grid_n: int
    t_max: float

    @property
    def c1_literal(self) -> float:
        """u0^2/6, the normalization that does not satisfy mu2 = 6 C1 sqrt(Theta0)"""
        return self.u0 ** 2 / 6.0


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

class BoundaryCurve(BaseModel):
    """
    Closed boundary curve description.

    Polar curves use r(theta) = r0 + sum_k cos_coeffs[k-1] cos(2k theta)
    + sum_k sin_coeffs[k] sin((2k+1) theta), always symmetric about the y-axis.
    """

    model_config = ConfigDict(frozen=True)

    kind: CurveKind = CurveKind.ELLIPSE
    a: float = Field(default=2.0, gt=0.0)
    b: float = Field(default=1.0, gt=0.0)
    r0: float = Field(default=1.0, gt=0.0)
    cos_coeffs: Tuple[float, ...] = ()
    sin_coeffs: Tuple[float, ...] = ()
    points: Optional[Tuple[Tuple[float, float], ...]] = None
    path: Optional[str] = None
    scale: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def check_sampled(self):
        if self.kind == CurveKind.SAMPLED and self.points is None and self.path is None:
            raise ValueError("sampled curve needs points or a path")
        return self

    @classmethod
    def ellipse(cls, a: float, b: float, scale: float = 1.0) -> "BoundaryCurve":
        return cls(kind=CurveKind.ELLIPSE, a=a, b=b, scale=scale)

    @classmethod
    def circle(cls, radius: float = 1.0) -> "BoundaryCurve":
        return cls(kind=CurveKind.ELLIPSE, a=radius, b=radius)

    @classmethod
    def polar(cls, r0: float = 1.0, cos_coeffs=(), sin_coeffs=(), scale: float = 1.0) -> "BoundaryCurve":
        return cls(kind=CurveKind.POLAR, r0=r0, cos_coeffs=tuple(cos_coeffs),
                   sin_coeffs=tuple(sin_coeffs), scale=scale)

    @classmethod
    def sampled(cls, points=None, path: Optional[str] = None, scale: float = 1.0) -> "BoundaryCurve":
        pts = None if points is None else tuple((float(x), float(y)) for x, y in points)
        return cls(kind=CurveKind.SAMPLED, points=pts, path=path, scale=scale)


class ArcLengthTable(ArrayModel):
    s: np.ndarray          # uniform on [-L, L), s = 0 at the top symmetry point
    kappa: np.ndarray
    x: np.ndarray
    y: np.ndarray
    L: float = Field(gt=0.0)
    symmetric: bool = True
    symmetry_defect: float = 0.0

    @property
    def n(self) -> int:
        return int(self.s.size)

    @property
    def ds(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def perimeter(self) -> float:
        return 2.0 * self.L


class WellData(BaseModel):
    model_config = ConfigDict(frozen=True)

    s_r: float = Field(lt=0.0)
    s_l: float = Field(gt=0.0)
    kappa_max: float
    kappa_min: float
    k2: float = Field(gt=0.0)
    symmetric: bool = True


class FluxConstant(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma0: float = Field(gt=0.0)
    area: float = Field(gt=0.0)
    perimeter: float = Field(gt=0.0)


# ---------------------------------------------------------------------------
# Effective operator
# ---------------------------------------------------------------------------

class EffectivePotential(ArrayModel):
    s: np.ndarray
    V: np.ndarray
    mu2: float = Field(gt=0.0)
    L: float = Field(gt=0.0)
    c1: float = 0.0
    kappa_max: float = 0.0
    s_r: Optional[float] = None
    s_l: Optional[float] = None
    g: Optional[float] = None

    @property
    def v(self) -> np.ndarray:
        """Unscaled potential C1 (kappa_max - kappa) = (mu2/2) V"""
        return 0.5 * self.mu2 * self.V

    @property
    def has_wells(self) -> bool:
        return self.s_r is not None and self.s_l is not None and self.g is not None


class AgmonData(ArrayModel):
    s: np.ndarray
    phi_r: np.ndarray
    phi_l: np.ndarray
    S_u: float = Field(gt=0.0)
    S_d: float = Field(gt=0.0)
    g: float = Field(gt=0.0)
    A_u: float = Field(gt=0.0)
    A_d: float = Field(gt=0.0)
    V0: float = Field(gt=0.0)
    VL: float = Field(gt=0.0)

    @property
    def S(self) -> float:
        return min(self.S_u, self.S_d)


class WKBAmplitude(ArrayModel):
    side: WellSide
    sigma: np.ndarray
    f: np.ndarray       # f~_{1,0}
    phi: np.ndarray     # Agmon distance from the well
    rho: np.ndarray     # signed sqrt(V), Phi' = rho


class EffectiveSpectrum(ArrayModel):
    h: float
    theta: float
    eigenvalues: np.ndarray
    n_modes: int
    drift: float
    gap: float
    matrix_norm: float
    refined: bool = False
    resolvable: bool = True


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

class SplittingInputs(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta0: float = Field(gt=0.0)
    xi0: float = Field(gt=0.0)
    c1: float = Field(gt=0.0)
    mu2: float = Field(gt=0.0)
    L: float = Field(gt=0.0)
    gamma0: float = Field(gt=0.0)
    k2: float = Field(gt=0.0)
    kappa_max: float
    kappa_min: float
    S_u: float = Field(gt=0.0)
    S_d: float = Field(gt=0.0)
    g: float = Field(gt=0.0)
    A_u: float = Field(gt=0.0)
    A_d: float = Field(gt=0.0)
    V0: float = Field(gt=0.0)
    VL: float = Field(gt=0.0)
    alpha0: float = 0.0

    @property
    def S(self) -> float:
        return min(self.S_u, self.S_d)

    @property
    def symmetric(self) -> bool:
        scale = max(self.S_u, self.S_d)
        return (abs(self.S_u - self.S_d) <= 1e-6 * scale
                and abs(self.A_u * np.sqrt(self.V0) - self.A_d * np.sqrt(self.VL))
                <= 1e-6 * self.A_u * np.sqrt(self.V0))

    def with_alpha0(self, alpha0: float) -> "SplittingInputs":
        return self.model_copy(update={"alpha0": float(alpha0)})


class LogMagnitude(BaseModel):
    """A magnitude carried as its logarithm, plus a phase for complex quantities"""

    model_config = ConfigDict(frozen=True)

    log_abs: float
    phase: float = 0.0

    @property
    def value(self) -> float:
        return float(np.exp(self.log_abs)) if np.isfinite(self.log_abs) else 0.0

    @property
    def complex_value(self) -> complex:
        return self.value * complex(np.cos(self.phase), np.sin(self.phase))


class SplittingPrediction(ArrayModel):
    h: np.ndarray
    log_w_eff: np.ndarray
    log_gap: np.ndarray
    gap_formula: np.ndarray
    envelope: np.ndarray
    phase_mod_2pi: np.ndarray
    subdominant_ratio: np.ndarray
    dominant_arc: str
    alpha0: float
    normalization: GapNormalization = GapNormalization.PHYSICAL
    with_flux: bool = True

    @property
    def inv_h(self) -> np.ndarray:
        return 1.0 / self.h


class Alpha0Fit(BaseModel):
    alpha0: float
    residual: float
    n_points: int
    n_zeros: int
    log_scale: float = 0.0


class ComparisonReport(BaseModel):
    normalization: GapNormalization
    n_points: int
    max_log_rel_err: float
    median_log_rel_err: float
    fitted_rate: Optional[float] = None
    fitted_rate_linear: Optional[float] = None
    reference_rate: Optional[float] = None
    rate_rel_err: Optional[float] = None
    zero_offsets: List[float] = []
    mean_zero_spacing: Optional[float] = None
    predicted_zero_spacing: Optional[float] = None


# ---------------------------------------------------------------------------
# Boundary operator
# ---------------------------------------------------------------------------

class TubularGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_s: int = Field(default_factory=lambda: settings.N_SIGMA, ge=16)
    n_tau: int = Field(default_factory=lambda: settings.N_TAU, ge=20)
    hbar: float = Field(gt=0.0, lt=1.0)
    tau_max: float = Field(default_factory=lambda: settings.TAU_MAX, ge=12.0)
    eta: float = Field(default_factory=lambda: settings.CUTOFF_ETA, gt=0.0, lt=0.25)

    @property
    def h(self) -> float:
        return self.hbar ** 2

    @property
    def dtau(self) -> float:
        return self.tau_max / self.n_tau

    @property
    def tau(self) -> np.ndarray:
        return np.arange(self.n_tau) * self.dtau

    def required_n_s(self, L: float, xi0: float) -> int:
        return int(np.ceil(10.0 * L * xi0 / (np.pi * self.hbar)))


class MagneticOperator2D(ArrayModel):
    K: Any                  # scipy.sparse csr matrix, Hermitian (quadratic form)
    mass: np.ndarray        # diagonal of the a-weighted mass matrix
    sigma: np.ndarray
    tau: np.ndarray
    weight: np.ndarray      # a_hbar on the (sigma, tau) nodes
    kappa: np.ndarray       # curvature used on the sigma nodes
    variant: OperatorVariant
    grid: TubularGrid
    gauge: float            # constant term of the tangential factor after gauge reduction
    cutoff_scale: float
    periodic: bool

    @property
    def shape(self) -> Tuple[int, int]:
        return int(self.sigma.size), int(self.tau.size)

    @property
    def dim(self) -> int:
        return int(self.sigma.size * self.tau.size)

    @property
    def dsigma(self) -> float:
        return float(self.sigma[1] - self.sigma[0])

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Action of A = M^{-1} K on a flattened grid function"""
        return (self.K @ psi) / self.mass

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.vdot(u, self.mass * v))

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(np.real(self.inner(u, u))))


class EigenSolveResult(ArrayModel):
    nu1: float
    nu2: float
    vectors: np.ndarray
    residuals: List[float]
    iterations: int
    shift: float
    orthogonality: float

    @property
    def gap(self) -> float:
        return self.nu2 - self.nu1


class DecayReport(BaseModel):
    normal_moment: float
    tail_mass: float
    peak_positions: List[float]
    peak_offsets_cells: List[float]
    symmetry_defect: Optional[float] = None
    agmon_margin: float
    normal_ok: bool
    peaks_ok: bool
    symmetry_ok: bool
    agmon_ok: bool

    @property
    def passed(self) -> bool:
        return self.normal_ok and self.peaks_ok and self.symmetry_ok and self.agmon_ok


class WKBResidual(BaseModel):
    hbar: float
    residual: float
    delta1: float
    overlap: float
    include_corrector: bool


# ---------------------------------------------------------------------------
# Pipeline results
# ---------------------------------------------------------------------------

class DomainSummary(BaseModel):
    """Scalar geometry and tunneling data of one domain"""

    kind: CurveKind
    L: float
    area: float
    gamma0: float
    kappa_max: float
    kappa_min: float
    s_r: float
    s_l: float
    k2: float
    S_u: float
    S_d: float
    S: float
    g: float
    A_u: float
    A_d: float
    V0: float
    VL: float
    symmetric: bool


class SweepResult(ArrayModel):
    table: Any                          # pandas DataFrame, one row per h, ordered by 1/h
    prediction: SplittingPrediction
    inputs: SplittingInputs
    comparisons: Dict[str, ComparisonReport] = {}
    alpha0_fit: Optional[Alpha0Fit] = None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

class CheckResult(BaseModel):
    name: str
    module: str
    value: float
    tolerance: float
    passed: bool
    severity: Severity = Severity.REQUIRED
    detail: str = ""


class ValidationReport(BaseModel):
    checks: List[CheckResult] = []

    @property
    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed and c.severity == Severity.REQUIRED]

    @property
    def passed(self) -> bool:
        return not self.failed


# ---------------------------------------------------------------------------
# Run configuration (flat key=value file, dotted sections)
# ---------------------------------------------------------------------------

def _split_floats(value):
    if isinstance(value, str):
        return tuple(float(v) for v in value.split(",") if v.strip())
    return value


class DomainConfig(BaseModel):
    kind: CurveKind = CurveKind.ELLIPSE
    a: float = Field(default=2.0, gt=0.0)
    b: float = Field(default=1.0, gt=0.0)
    r0: float = Field(default=1.0, gt=0.0)
    cos: Tuple[float, ...] = ()
    sin: Tuple[float, ...] = ()
    path: Optional[str] = None
    scale: float = Field(default=1.0, gt=0.0)

    @field_validator("cos", "sin", mode="before")
    @classmethod
    def split_floats(cls, value):
        return _split_floats(value)

    def to_curve(self) -> BoundaryCurve:
        if self.kind == CurveKind.ELLIPSE:
            return BoundaryCurve.ellipse(self.a, self.b, scale=self.scale)
        if self.kind == CurveKind.POLAR:
            return BoundaryCurve.polar(self.r0, self.cos, self.sin, scale=self.scale)
        return BoundaryCurve.sampled(path=self.path, scale=self.scale)


class DeGennesConfig(BaseModel):
    t_max: float = Field(default_factory=lambda: settings.GRID_T_MAX, ge=15.0)
    n: int = Field(default_factory=lambda: settings.GRID_N, ge=100)

    def to_grid(self) -> HalfLineGrid:
        return HalfLineGrid(t_max=self.t_max, n=self.n)


class GeometryConfig(BaseModel):
    samples: int = Field(default_factory=lambda: settings.GEOMETRY_SAMPLES, ge=512)


class HGridConfig(BaseModel):
    min: float = Field(default=1.0e-3, gt=0.0, lt=1.0)
    max: float = Field(default=1.0e-2, gt=0.0, lt=1.0)
    count: int = Field(default=60, ge=2)
    spacing: HGridSpacing = HGridSpacing.INVERSE

    @model_validator(mode="after")
    def check_order(self):
        if self.min >= self.max:
            raise ValueError("hgrid.min must be below hgrid.max")
        return self

    def values(self) -> np.ndarray:
        """h values ordered by increasing 1/h"""
        if self.spacing == HGridSpacing.QUARTIC:
            x = np.linspace(self.max ** -0.25, self.min ** -0.25, self.count)
            return x ** -4
        inv = np.linspace(1.0 / self.max, 1.0 / self.min, self.count)
        return 1.0 / inv


class SplittingConfig(BaseModel):
    alpha0: Optional[float] = None
    fit_alpha0: bool = False


class OracleConfig(BaseModel):
    effective1d: bool = True
    boundary2d: bool = False
    effective_flux: bool = True


class BoundaryConfig(BaseModel):
    n_sigma: int = Field(default_factory=lambda: settings.N_SIGMA, ge=16)
    n_tau: int = Field(default_factory=lambda: settings.N_TAU, ge=20)
    tau_max: float = Field(default_factory=lambda: settings.TAU_MAX, ge=12.0)
    eta: float = Field(default_factory=lambda: settings.CUTOFF_ETA, gt=0.0, lt=0.25)

    def to_grid(self, hbar: float) -> TubularGrid:
        return TubularGrid(n_s=self.n_sigma, n_tau=self.n_tau, hbar=hbar,
                           tau_max=self.tau_max, eta=self.eta)


class OutputConfig(BaseModel):
    dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    strict_paper_signs: bool = False


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: DomainConfig = Field(default_factory=DomainConfig)
    degennes: DeGennesConfig = Field(default_factory=DeGennesConfig)
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    hgrid: HGridConfig = Field(default_factory=HGridConfig)
    splitting: SplittingConfig = Field(default_factory=SplittingConfig)
    oracles: OracleConfig = Field(default_factory=OracleConfig)
    boundary: BoundaryConfig = Field(default_factory=BoundaryConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @classmethod
    def from_sections(cls, nested: Dict[str, Dict[str, Any]]) -> "RunConfig":
        for section, values in nested.items():
            if section not in cls.model_fields:
                raise ValueError(f"unknown config section '{section}'")
            known = cls.model_fields[section].annotation.model_fields
            for name in values:
                if name not in known:
                    raise ValueError(f"unknown config key '{section}.{name}'")
        return cls.model_validate(nested)

    def to_text(self) -> str:
        """Resolved config in the same key=value format it is read from"""
        lines = []
        for section in type(self).model_fields:
            lines.append(f"# [{section}]")
            block = getattr(self, section)
            for name in type(block).model_fields:
                value = getattr(block, name)
                if value is None:
                    continue
                lines.append(f"{section}.{name}={_format_value(value)}")
        return "\n".join(lines) + "\n"


def _format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


class HealthResponse(BaseModel):
    status: str
    version: str
    components: Dict[str, str]


class PredictionRequest(BaseModel):
    domain: DomainConfig = Field(default_factory=DomainConfig)
    hgrid: HGridConfig = Field(default_factory=HGridConfig)
    alpha0: float = 0.0
    normalization: GapNormalization = GapNormalization.PHYSICAL
    with_flux: bool = True


class PredictionResponse(BaseModel):
    h: List[float]
    gap_formula: List[float]
    envelope: List[float]
    phase_mod_2pi: List[float]
    S: float
    alpha0: float
    normalization: GapNormalization
    dominant_arc: str

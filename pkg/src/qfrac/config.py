"""Runtime configuration.

Values come from the environment (or a ``.env`` file); every field name is also
its environment variable, e.g. ``QFRAC_SEED`` or ``LOG_LEVEL``.
"""

from typing import TYPE_CHECKING, Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

if TYPE_CHECKING:
    from .quadrature import QuadratureConfig
    from .quaternion import ImaginaryUnit


class QFracConfig(BaseSettings):
    """Numerical defaults and CLI behaviour for qfrac"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Reproducibility
    qfrac_seed: Optional[int] = Field(default=None, description="Overrides --seed when set")

    # Quadrature defaults
    qfrac_rel_tol: float = Field(default=1e-10, gt=0)
    qfrac_abs_tol: float = Field(default=1e-12, gt=0)
    qfrac_max_subdiv: int = Field(default=10000, gt=0)
    qfrac_workers: int = Field(default=1, ge=1, description="Parallel panel evaluation")

    # Sector estimate grid
    qfrac_grid_points: int = Field(default=200, ge=2)
    qfrac_grid_min: float = Field(default=1e-6, gt=0)
    qfrac_grid_max: float = Field(default=1e6, gt=0)

    # Contour computations
    qfrac_plane: str = Field(default="1,0,0", description="Imaginary unit as a 3-vector")

    # Logging Configuration
    log_level: str = Field(default="WARNING", description="Log level (DEBUG, INFO, WARNING, ERROR)")
    debug: bool = Field(default=False)

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        return value.upper()

    @property
    def effective_log_level(self) -> str:
        """DEBUG when the debug flag is on, otherwise the configured level"""
        return "DEBUG" if self.debug else self.log_level

    @property
    def quadrature_defaults(self) -> "QuadratureConfig":
        """Quadrature settings built from the environment"""
        from .quadrature import QuadratureConfig

        return QuadratureConfig(
            rel_tol=self.qfrac_rel_tol,
            abs_tol=self.qfrac_abs_tol,
            max_subdiv=self.qfrac_max_subdiv,
            workers=self.qfrac_workers,
        )

    @property
    def default_plane(self) -> "ImaginaryUnit":
        """Imaginary unit used for contour integrals when none is given"""
        from .quaternion import ImaginaryUnit

        return ImaginaryUnit.parse(self.qfrac_plane)


config = QFracConfig()

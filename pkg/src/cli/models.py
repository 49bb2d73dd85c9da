#!/usr/bin/env python3
"""
Job description shared by every CLI command
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from src.utils.data_validation import InputValidator

COMMANDS = (
    'render-param',
    'render-julia',
    'classify',
    'ray',
    'cutray',
    'cusp',
    'holes',
    'component',
    'capacity',
    'verify',
)

# commands that need a map parameter
NEEDS_LAMBDA = {'render-julia', 'classify', 'cutray', 'component'}
NEEDS_THETA = {'cutray', 'cusp'}


class JobConfig(BaseModel):
    """One reproducible CLI run; dumped with --dump-config, replayed with --config"""
    command: Literal[COMMANDS]
    n: int = Field(3, ge=3, description="Degree of z^n + lambda z^-n")
    lam: Optional[Tuple[float, float]] = Field(None, description="lambda as (re, im)")
    theta: Optional[str] = Field(None, description="Exact angle p/q")
    bbox: Optional[Tuple[float, float, float, float]] = Field(None, description="xmin, xmax, ymin, ymax")
    resolution: Tuple[int, int] = Field((512, 512), description="Width and height in pixels")
    maxiter: Optional[int] = Field(None, gt=0)
    ray_kind: Literal['external', 'internal', 'parameter'] = 'external'
    steps: Optional[int] = Field(None, gt=0)
    depth: Optional[int] = Field(None, ge=0)
    level: int = Field(3, ge=3, description="Hole level k")
    samples: int = Field(256, ge=2)
    rho: Optional[float] = Field(None, gt=0, lt=1)
    radii: List[float] = Field(default_factory=lambda: [1e2, 1e3, 1e4])
    arg: float = 0.0
    method: Literal['fast', 'oracle'] = 'fast'
    quick: bool = False
    tol: float = Field(1e-9, gt=0)
    output: Optional[str] = None
    threads: Optional[int] = Field(None, ge=1)
    png: bool = False

    @field_validator('theta')
    @classmethod
    def validate_theta(cls, v):
        if v is None:
            return v
        angle = InputValidator().validate_angle(v)
        if angle is None:
            raise ValueError(f"'{v}' is not an exact angle p/q")
        return f"{angle.numerator}/{angle.denominator}"

    @field_validator('resolution')
    @classmethod
    def validate_resolution(cls, v):
        if min(v) < 2:
            raise ValueError('resolution must be at least 2x2')
        return v

    @field_validator('radii')
    @classmethod
    def validate_radii(cls, v):
        if not v or any(r <= 0 for r in v):
            raise ValueError('radii must be positive')
        return v

    @field_validator('lam')
    @classmethod
    def validate_lam(cls, v):
        if v is not None and v[0] == 0 and v[1] == 0:
            raise ValueError('lambda must be non-zero')
        return v

    @model_validator(mode='after')
    def check_command_inputs(self):
        if self.command in NEEDS_LAMBDA and self.lam is None:
            raise ValueError(f"{self.command} needs --lambda")
        if self.command in NEEDS_THETA and self.theta is None:
            raise ValueError(f"{self.command} needs --theta")
        if self.command == 'ray':
            if self.theta is None:
                raise ValueError("ray needs --theta")
            if self.ray_kind != 'parameter' and self.lam is None:
                raise ValueError(f"{self.ray_kind} rays need --lambda")
        if self.bbox is not None:
            xmin, xmax, ymin, ymax = self.bbox
            if not (xmin < xmax and ymin < ymax):
                raise ValueError('bbox is empty')
        return self

    @property
    def lambda_value(self) -> Optional[complex]:
        return complex(*self.lam) if self.lam is not None else None

"""Direct and inverse scattering for the half-line Schrodinger operator."""
from . import errors
from .core import ValidationReport, fourier_cos_transform, validate_scattering_data, winding_index
from .types import (IFunction, JostData, KreinKernel, PhaseShiftSequence, PotentialGrid,
                    QuarkoniumData, ScatteringData, SpectralFunction, TransformationKernel,
                    WaveFunctionTable)

__all__ = [
    "errors", "ValidationReport", "fourier_cos_transform", "validate_scattering_data",
    "winding_index", "IFunction", "JostData", "KreinKernel", "PhaseShiftSequence",
    "PotentialGrid", "QuarkoniumData", "ScatteringData", "SpectralFunction",
    "TransformationKernel", "WaveFunctionTable",
]

__version__ = "0.1.0"

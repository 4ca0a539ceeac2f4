"""Stochastic SLAM observer on SE(3) x R^3n with simulation and verification tools."""
from .analysis import ErrorRecord, EnvelopeFit, compute_errors, fit_envelope, lyapunov_value, summary_statistics
from .dynamics import VelocityProfile, WorldState, assert_noncollinear, truth_step
from .exceptions import ConfigError, DivergenceError, NotSkewSymmetricError, NumericalError, StochSlamError
from .liegroup import Pose, orthonormality_error, pose_compose, pose_inverse, skew, so3_exp, vex
from .observer import (
    GainSet,
    ObserverState,
    correction_terms,
    innovation,
    landmark_gain,
    observer_step,
    sigma_upper_bound,
)
from .sensors import (
    MeasurementFrame,
    NoiseModel,
    RandomSource,
    SensorStreams,
    measure_landmarks,
    measure_velocities,
    sample_brownian_increment,
)

__version__ = "0.1.0"

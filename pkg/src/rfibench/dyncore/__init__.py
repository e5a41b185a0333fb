"""Generalized-coordinate rigid-body dynamics for the desk-scale tasks."""

from .dynamics import (
    ObjectState,
    PIDState,
    forward_dynamics,
    jacobian_ik,
    pd_velocity_loop,
    planar_contact_step,
    step,
)
from .models import PHYSICS_DT, DecoupledJoints, PlanarArm
from .state import AppliedForces, DynamicsParams, GeneralizedState

__all__ = [
    "AppliedForces",
    "DecoupledJoints",
    "DynamicsParams",
    "GeneralizedState",
    "ObjectState",
    "PHYSICS_DT",
    "PIDState",
    "PlanarArm",
    "forward_dynamics",
    "jacobian_ik",
    "pd_velocity_loop",
    "planar_contact_step",
    "step",
]

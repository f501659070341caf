import pathlib

import numpy as np
import pytest

from trocardock.arm import (
    ArmModel,
    JointDescriptor,
    JointLimits,
    LinkInertia,
    load_arm_model,
)
from trocardock.geometry import Pose

REPO_ROOT = pathlib.Path(__file__).resolve().parents[1]
SCENARIO_DIR = REPO_ROOT / "scenarios"


@pytest.fixture(scope="session")
def model7() -> ArmModel:
    return load_arm_model(SCENARIO_DIR / "arm_7dof.json")


def single_joint_model(axis=(0.0, 0.0, 1.0), tool_xyz=(1.0, 0.0, 0.0),
                       parent=None, mass=1.0, com=(0.5, 0.0, 0.0)) -> ArmModel:
    """Hand-checkable 1-joint model used as a test oracle."""
    return ArmModel(
        joints=(JointDescriptor(parent or Pose.identity(), np.asarray(axis, dtype=float)),),
        tool_transform=Pose(np.eye(3), np.asarray(tool_xyz, dtype=float)),
        limits=JointLimits(np.array([-3.0]), np.array([3.0]), np.array([2.0])),
        link_inertias=(LinkInertia(mass, np.asarray(com, dtype=float), np.eye(3) * 0.01),),
    )


def random_q(model: ArmModel, rng: np.random.Generator, margin: float = 0.2) -> np.ndarray:
    lo = model.limits.lower * (1 - margin)
    hi = model.limits.upper * (1 - margin)
    return rng.uniform(lo, hi)

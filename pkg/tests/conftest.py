import numpy as np
import pytest

from demo_gauge import kernels
from demo_gauge.robot_model import JointSpec, ManipulatorModel, Pose, rpy_matrix


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Touch every kernel once so JIT compilation never lands inside a timed test."""
    Q = np.zeros((3, 2))
    a = np.array([0.3, 0.2])
    z = np.zeros(2)
    eye = np.eye(4)
    kernels.fk_series(a, z, z, z, eye, eye, Q)
    J = kernels.jacobian_series(a, z, z, z, eye, eye, Q)
    kernels.manipulability_series(J, np.array([0, 1], dtype=np.int64))
    kernels.limit_clearance_series(Q, np.full(2, -3.0), np.full(2, 3.0))
    pts = np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.2, 0.0, 0.0]])
    goals = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    kernels.legibility_entropies(pts, goals, 0.5, 0.5, 0.5, 1.0, 1e-9)
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    kernels.lloyd(X, X[:2].copy(), 10, 1e-8)


def make_planar_2r(l1: float = 0.5, l2: float = 0.3) -> ManipulatorModel:
    return ManipulatorModel(
        name="planar-2r",
        joints=(
            JointSpec(a=l1, alpha=0.0, d=0.0),
            JointSpec(a=l2, alpha=0.0, d=0.0),
        ),
        base_pose=Pose.identity(),
        tool_transform=Pose.identity(),
    )


def make_random_model(rng: np.random.Generator, dof: int = 4) -> ManipulatorModel:
    joints = tuple(
        JointSpec(
            a=float(rng.uniform(0.1, 0.5)),
            alpha=float(rng.uniform(-1.5, 1.5)),
            d=float(rng.uniform(-0.2, 0.2)),
            theta_offset=float(rng.uniform(-0.4, 0.4)),
            q_min=-2.9,
            q_max=2.9,
        )
        for _ in range(dof)
    )
    base = Pose(
        position=rng.uniform(-0.2, 0.2, size=3),
        rotation=rpy_matrix(*rng.uniform(-0.3, 0.3, size=3)),
    )
    tool = Pose(
        position=rng.uniform(-0.1, 0.1, size=3),
        rotation=rpy_matrix(*rng.uniform(-0.3, 0.3, size=3)),
    )
    return ManipulatorModel(name="random", joints=joints, base_pose=base, tool_transform=tool)


@pytest.fixture
def planar_2r() -> ManipulatorModel:
    return make_planar_2r()

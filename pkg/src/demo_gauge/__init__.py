"""demo-gauge: quality and consistency analytics for robot demonstration data."""

from .errors import (
    DemoGaugeError,
    JointLimitError,
    MetricUnavailableError,
    SingularDesignError,
    ValidationError,
)
from .robot_model import (
    JointSpec,
    ManipulatorModel,
    Pose,
    forward_kinematics,
    jacobian,
    load_robot_model,
    manipulability_index,
)
from .trajectory import (
    CartesianTrajectory,
    JointTrajectory,
    load_joint_trajectory,
    resample_uniform,
)
from .metrics import (
    METRIC_NAMES,
    GoalSet,
    LegibilityConfig,
    MetricConfig,
    MetricVector,
    compute_metric_vector,
)
from .consistency import DemonstrationSet, cluster_sets, kmeans2
from .evaluation import (
    ProxyBounds,
    ReachOutcome,
    TransportOutcome,
    overall_success,
    phase_success,
    reach_success_rate,
)
from .analysis import (
    Dataset,
    FittedModel,
    TermSpec,
    anova_oneway,
    ols_fit,
    pearson_matrix,
    stepwise_fit,
)
from .synthetic import RegimeConfig, generate_dataset
from .manifest import Manifest, PipelineConfig, load_manifest

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DemoGaugeError",
    "ValidationError",
    "JointLimitError",
    "MetricUnavailableError",
    "SingularDesignError",
    "JointSpec",
    "ManipulatorModel",
    "Pose",
    "forward_kinematics",
    "jacobian",
    "manipulability_index",
    "load_robot_model",
    "JointTrajectory",
    "CartesianTrajectory",
    "load_joint_trajectory",
    "resample_uniform",
    "METRIC_NAMES",
    "GoalSet",
    "LegibilityConfig",
    "MetricConfig",
    "MetricVector",
    "compute_metric_vector",
    "DemonstrationSet",
    "cluster_sets",
    "kmeans2",
    "ProxyBounds",
    "ReachOutcome",
    "TransportOutcome",
    "overall_success",
    "phase_success",
    "reach_success_rate",
    "Dataset",
    "TermSpec",
    "FittedModel",
    "ols_fit",
    "stepwise_fit",
    "pearson_matrix",
    "anova_oneway",
    "RegimeConfig",
    "generate_dataset",
    "Manifest",
    "PipelineConfig",
    "load_manifest",
]

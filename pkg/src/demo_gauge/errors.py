"""Exception types shared across the package."""


class DemoGaugeError(Exception):
    """Base class for all errors raised by demo_gauge."""


class ValidationError(DemoGaugeError):
    """Malformed input: bad file, bad schema, inconsistent dimensions."""


class JointLimitError(ValidationError):
    """A recorded sample lies outside the declared joint limits."""

    def __init__(self, joint: int, sample: int, value: float, lo: float, hi: float):
        self.joint = joint
        self.sample = sample
        self.value = value
        super().__init__(
            f"joint {joint + 1} at sample {sample} is out of limits: "
            f"{value:.6g} not in [{lo:.6g}, {hi:.6g}]"
        )


class MetricUnavailableError(DemoGaugeError):
    """A metric cannot be computed from the given trajectory (e.g. no torques)."""


class SingularDesignError(DemoGaugeError):
    """Regression design matrix is rank deficient."""

    def __init__(self, terms: list[str]):
        self.terms = list(terms)
        super().__init__(
            "design matrix is rank deficient; collinear terms: " + ", ".join(terms)
        )

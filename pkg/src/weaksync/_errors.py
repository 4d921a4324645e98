class IntegrationError(RuntimeError):
    """Numerical failure during simulation."""

    def __init__(self, message: str, t: float):
        self.t = t
        super().__init__(message)


class StepSizeUnderflowError(IntegrationError):
    def __init__(self, t: float, h: float):
        self.h = h
        super().__init__(f"step size underflow at t={t:.9g} (h={h:.3e})", t)


class NonFiniteStateError(IntegrationError):
    def __init__(self, t: float, component: int):
        self.component = component
        super().__init__(f"non-finite state at t={t:.9g}, first offending component {component}", t)


class TooManyStepsError(IntegrationError):
    def __init__(self, t: float, max_steps: int):
        self.max_steps = max_steps
        super().__init__(f"exceeded {max_steps} integrator steps at t={t:.9g}", t)

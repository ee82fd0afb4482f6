#    Licensed under the Apache License, Version 2.0 (the "License"); you may
#    not use this file except in compliance with the License. You may obtain
#    a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#    WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#    License for the specific language governing permissions and limitations
#    under the License.

"""Time stepping with an integrating factor Runge-Kutta scheme.

The linear part of the flow is integrated exactly through its Fourier
symbol ``L``; classical RK4 advances the interaction picture variable
``e^{-tL} phi`` (Lawson's method). Steps never raise: failures come
back as a state whose status says what happened.

"""

import dataclasses
import logging
import math

import numpy as np
from scipy import fft

from smcflab import diagnostics, dynamics, geometry, grid

LOG = logging.getLogger(__name__)

RUNNING = "running"
FINISHED = "finished"
BLOWN_UP = "blown_up"
ERROR = "error"

# Relative distance below which a clock reading is taken to be an event time.
TIME_SNAP = 1e-12


class StepSizeError(ValueError):
    "The step size controller asked for a step below dt_min."


@dataclasses.dataclass(frozen=True)
class StepControl:
    dt_init: float = 0.01
    cfl_safety: float = 0.5
    dt_min: float = 1e-6
    dt_max: float = 0.05
    blowup_grad_threshold: float = 1.0
    blowup_value_threshold: float = 1e3

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError(
                "need 0 < dt_min <= dt_init <= dt_max, got {}, {}, {}".format(
                    self.dt_min, self.dt_init, self.dt_max
                )
            )
        if not (0 < self.cfl_safety <= 1):
            raise ValueError(
                "cfl_safety must lie in (0, 1], got {!r}".format(self.cfl_safety)
            )
        if not (self.blowup_grad_threshold > 0 and self.blowup_value_threshold > 0):
            raise ValueError("blow-up thresholds must be positive")


@dataclasses.dataclass(frozen=True)
class SolverState:
    t: float
    phi: grid.Field
    step_count: int = 0
    dt: float = 0.01
    status: str = RUNNING
    reason: str = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive, got {!r}".format(self.dt))


def _as_rhs(mode):
    if isinstance(mode, dynamics.Rhs):
        return mode
    return dynamics.factory(mode)


def _check_thresholds(field, control):
    "Return the reason a state counts as blown up, or None."
    sup_phi = grid.lp_norm(field, np.inf)
    if sup_phi > control.blowup_value_threshold:
        return "sup |phi| = {:.6g} exceeds {:g}".format(
            sup_phi, control.blowup_value_threshold
        )
    du = geometry.gradient(field)
    sup_du = float(np.sqrt(np.max(np.sum(du**2, axis=(0, 1)))))
    if sup_du > control.blowup_grad_threshold:
        return "sup |Du| = {:.6g} exceeds {:g}".format(
            sup_du, control.blowup_grad_threshold
        )
    return None


def step(state, control, mode):
    """Advance one integrating factor RK4 step of size ``state.dt``.

    :param state: current state, which must be running
    :type state: SolverState
    :param control: blow-up thresholds
    :type control: StepControl
    :param mode: right-hand side or its description
    :type mode: smcflab.dynamics.RhsMode

    """
    if state.status != RUNNING:
        raise ValueError("cannot step a {} state".format(state.status))
    rhs = _as_rhs(mode)
    spec = state.phi.spec
    dt = state.dt
    half = np.exp(rhs.linear_symbol(spec) * (0.5 * dt))
    full = half * half

    def remainder(coeffs):
        field = grid.Field(spec, fft.ifftn(coeffs))
        return fft.fftn(rhs.nonlinear(field))

    try:
        v = fft.fftn(state.phi.values)
        k1 = remainder(v)
        k2 = remainder(half * (v + 0.5 * dt * k1))
        k3 = remainder(half * v + 0.5 * dt * k2)
        k4 = remainder(full * v + dt * half * k3)
        v_new = full * v + (dt / 6.0) * (full * k1 + 2.0 * half * (k2 + k3) + k4)
        phi = grid.Field(spec, fft.ifftn(v_new))
    except (grid.NonFiniteFieldError, geometry.GeometryError) as err:
        LOG.warning("step %d at t=%g failed: %s", state.step_count, state.t, err)
        return dataclasses.replace(state, status=BLOWN_UP, reason=str(err))

    reason = _check_thresholds(phi, control)
    if reason:
        LOG.warning("blow-up at t=%g: %s", state.t + dt, reason)
        return dataclasses.replace(state, status=BLOWN_UP, reason=reason)
    return dataclasses.replace(
        state, t=state.t + dt, phi=phi, step_count=state.step_count + 1
    )


def coefficient_deviation(field):
    "sup over the grid of |g^ij / (Lambda s) - delta_ij| (Frobenius)."
    du = geometry.gradient(field)
    metric = geometry.metric_from_gradient(du)
    frame = geometry.frame_from_gradient(du)
    d = field.spec.d
    eye = np.eye(d).reshape((d, d) + (1,) * d)
    deviation = metric.ginv / (frame.lam * frame.s) - eye
    return float(np.sqrt(np.max(np.sum(deviation**2, axis=(0, 1)))))


def adapt_dt(state, control):
    """Step size from the size of the quasilinear coefficient perturbation.

    Raises StepSizeError when the answer would fall below ``dt_min``.

    """
    spec = state.phi.spec
    deviation = coefficient_deviation(state.phi)
    raw = control.cfl_safety / (1.0 + deviation * spec.xi_max**2)
    if raw < control.dt_min:
        raise StepSizeError(
            "step size {:.3g} below dt_min {:g} (coefficient deviation {:.3g})".format(
                raw, control.dt_min, deviation
            )
        )
    return min(raw, control.dt_max, 2.0 * state.dt)


def sample_times(t_end, sample_dt):
    "Record times k * sample_dt up to t_end, with t_end itself always included."
    if t_end == 0:
        return [0.0]
    count = int(math.floor(t_end / sample_dt * (1 + TIME_SNAP)))
    times = [k * sample_dt for k in range(count + 1)]
    if t_end - times[-1] > TIME_SNAP * t_end:
        times.append(t_end)
    else:
        times[-1] = min(times[-1], t_end)
    return times


def _advance_to(state, target, control, rhs):
    while state.status == RUNNING and state.t < target:
        try:
            dt = adapt_dt(state, control)
        except StepSizeError as err:
            LOG.error("%s", err)
            return dataclasses.replace(state, status=ERROR, reason=str(err))
        taken = min(dt, target - state.t)
        state = step(dataclasses.replace(state, dt=taken), control, rhs)
        if target - state.t <= TIME_SNAP * max(1.0, target):
            state = dataclasses.replace(state, t=target)
        state = dataclasses.replace(state, dt=dt)
    return state


def run(cfg, sink):
    """Evolve the configured initial state and report to ``sink``.

    :param cfg: validated run configuration
    :type cfg: smcflab.config.RunConfig
    :param sink: receiver of records and snapshots
    :type sink: smcflab.writers.Sink

    """
    spec = grid.make_grid(cfg.grid.d, cfg.grid.n, cfg.grid.length)
    phi = cfg.initial_state(spec)
    rhs = dynamics.factory(cfg.solver.rhs_mode())
    control = cfg.solver.step_control()
    plan = None
    if spec.d >= 2:
        plan = diagnostics.parameter_plan(spec.d, cfg.diagnostics.delta)

    t_end = cfg.solver.t_end
    records = sample_times(t_end, cfg.diagnostics.sample_dt)
    snapshots = sorted(set(cfg.diagnostics.snapshot_times))
    events = sorted(set(records) | set(snapshots))

    LOG.info(
        "starting %s run d=%d n=%d L=%g to t=%g",
        rhs.NAME,
        spec.d,
        spec.n,
        spec.length,
        t_end,
    )
    state = SolverState(t=0.0, phi=phi, dt=control.dt_init)

    for target in events:
        state = _advance_to(state, target, control, rhs)
        if state.status != RUNNING:
            break
        if target in records:
            rec = diagnostics.record(state.phi, state.t, plan)
            LOG.debug("t=%g step=%d dt=%.3g %s", state.t, state.step_count, state.dt, rec)
            sink.write_record(rec)
        if target in snapshots:
            sink.write_snapshot(state.phi, state.t, state.step_count)
        if state.step_count == 0:
            reason = _check_thresholds(state.phi, control)
            if reason:
                LOG.warning("initial state rejected: %s", reason)
                state = dataclasses.replace(state, status=BLOWN_UP, reason=reason)
                break
    sink.flush()

    if state.status == RUNNING:
        state = dataclasses.replace(state, status=FINISHED)
        LOG.info("finished at t=%g after %d steps", state.t, state.step_count)
    else:
        LOG.warning(
            "run stopped with status %s at t=%g: %s", state.status, state.t, state.reason
        )
    return state


def evolve(field, mode, t_end, dt, control=None):
    """Fixed step evolution to ``t_end``, the step shortened to divide it."""
    rhs = _as_rhs(mode)
    if control is None:
        control = StepControl(dt_init=dt, dt_min=dt, dt_max=dt)
    steps = max(1, int(math.ceil(t_end / dt - TIME_SNAP)))
    state = SolverState(t=0.0, phi=field, dt=t_end / steps if t_end > 0 else dt)
    if t_end <= 0:
        return dataclasses.replace(state, status=FINISHED)
    for _ in range(steps):
        state = step(state, control, rhs)
        if state.status != RUNNING:
            return state
    return dataclasses.replace(state, t=t_end, status=FINISHED)


def time_reversal_error(field, mode, t_end, dt):
    "L2 distance to ``field`` after evolving forward and back with the reflected flow."
    rhs = _as_rhs(mode)
    forward = evolve(field, rhs, t_end, dt)
    back = evolve(forward.phi, rhs.reflected(), t_end, dt)
    return grid.lp_norm(back.phi - field, 2)

import logging
import typing as t
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

import custom_errors as ce

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StateSpaceModel:
    """Linear time-invariant model x' = A x + B u, y = C x + D u.

    `dt is None` means continuous time, otherwise the model is discrete with
    sample time `dt` and x' is the next state.
    """
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    dt: float | None = None
    input_labels: tuple[str, ...] = field(default=())
    output_labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        a = a.reshape(0, 0) if a.size == 0 else np.atleast_2d(a)
        n = a.shape[0]
        d = np.atleast_2d(np.asarray(self.d, dtype=float))
        try:
            b = np.asarray(self.b, dtype=float).reshape(n, -1) if n else np.zeros((0, d.shape[1]))
            c = np.asarray(self.c, dtype=float).reshape(-1, n) if n else np.zeros((d.shape[0], 0))
            d = d.reshape(c.shape[0], b.shape[1])
        except ValueError as error:
            raise ce.ValidationError(f'Inconsistent state-space dimensions: {error}') from error
        if a.shape != (n, n):
            raise ce.ValidationError(f'A must be square, got shape {a.shape}')
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'c', c)
        object.__setattr__(self, 'd', d)
        if self.dt is not None and not self.dt > 0:
            raise ce.ValidationError(f'Sample time must be positive, got {self.dt}')
        if self.input_labels and len(self.input_labels) != self.m:
            raise ce.ValidationError(f'{len(self.input_labels)} input labels for {self.m} inputs')
        if self.output_labels and len(self.output_labels) != self.p:
            raise ce.ValidationError(f'{len(self.output_labels)} output labels for {self.p} outputs')

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def p(self) -> int:
        return self.c.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.dt is not None

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.a) if self.n else np.zeros(0, dtype=complex)

    def spectral_radius(self) -> float:
        poles = self.poles()
        return float(np.max(np.abs(poles))) if poles.size else 0.0

    def is_stable(self) -> bool:
        """Discrete: all poles inside the unit circle. Continuous: all poles in the open left half-plane."""
        poles = self.poles()
        if not poles.size:
            return True
        if self.is_discrete:
            return bool(np.all(np.abs(poles) < 1.0))
        return bool(np.all(poles.real < 0.0))

    def frf(self, omega: t.Sequence[float] | np.ndarray) -> np.ndarray:
        """Frequency response at angular frequencies `omega`, shape (len(omega), p, m)"""
        omega = np.asarray(omega, dtype=float)
        if self.is_discrete:
            if np.any(np.abs(omega) * self.dt >= np.pi):
                raise ce.DomainError(f'Frequencies must stay below the Nyquist limit {np.pi / self.dt:.4g} rad/s')
            points = np.exp(1j * omega * self.dt)
        else:
            points = 1j * omega
        response = np.empty((omega.size, self.p, self.m), dtype=complex)
        identity = np.eye(self.n)
        for index, point in enumerate(points):
            if self.n:
                response[index] = self.c @ np.linalg.solve(point * identity - self.a, self.b) + self.d
            else:
                response[index] = self.d
        return response

    def markov_parameters(self, count: int) -> np.ndarray:
        """First `count` Markov parameters D, CB, CAB, ... of a discrete model, shape (count, p, m)"""
        if not self.is_discrete:
            raise ce.ValidationError('Markov parameters need a discrete model')
        markov = np.empty((count, self.p, self.m))
        if count:
            markov[0] = self.d
        state = self.b.copy()
        for index in range(1, count):
            markov[index] = self.c @ state
            state = self.a @ state
        return markov

    def simulate(self, u: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        """Response of a discrete model to the input sequence `u` of shape (N, m)"""
        if not self.is_discrete:
            raise ce.ValidationError('Only discrete models can be simulated sample by sample')
        u = np.asarray(u, dtype=float).reshape(-1, self.m)
        x = np.zeros(self.n) if x0 is None else np.asarray(x0, dtype=float).copy()
        y = np.empty((u.shape[0], self.p))
        for k, u_k in enumerate(u):
            y[k] = self.c @ x + self.d @ u_k
            x = self.a @ x + self.b @ u_k
        return y

    def discretize(self, dt: float) -> 'StateSpaceModel':
        """Zero-order-hold discretisation through the matrix exponential of [[A, B], [0, 0]]"""
        if self.is_discrete:
            raise ce.ValidationError('Model is already discrete')
        if not dt > 0:
            raise ce.DomainError(f'Sample time must be positive, got {dt}')
        n, m = self.n, self.m
        block = np.zeros((n + m, n + m))
        block[:n, :n] = self.a
        block[:n, n:] = self.b
        exponential = scipy.linalg.expm(block * dt)
        return StateSpaceModel(
            a=exponential[:n, :n], b=exponential[:n, n:], c=self.c.copy(), d=self.d.copy(), dt=dt,
            input_labels=self.input_labels, output_labels=self.output_labels,
        )

    def with_labels(self, input_labels: t.Sequence[str], output_labels: t.Sequence[str]) -> 'StateSpaceModel':
        return StateSpaceModel(self.a, self.b, self.c, self.d, self.dt, tuple(input_labels), tuple(output_labels))

    @classmethod
    def zero(cls, p: int, m: int, dt: float | None = None) -> 'StateSpaceModel':
        """Single-state model with an identically zero response"""
        return cls(a=np.zeros((1, 1)), b=np.zeros((1, m)), c=np.zeros((p, 1)), d=np.zeros((p, m)), dt=dt)


def second_order_section(gain: float, omega: float, zeta: float) -> StateSpaceModel:
    """Continuous band-pass g*s / (s^2 + 2*zeta*omega*s + omega^2) in controllable form"""
    return StateSpaceModel(
        a=[[0.0, 1.0], [-omega ** 2, -2.0 * zeta * omega]],
        b=[[0.0], [1.0]],
        c=[[0.0, gain]],
        d=[[0.0]],
    )


def series(first: StateSpaceModel, second: StateSpaceModel) -> StateSpaceModel:
    """Continuous cascade: the outputs of `first` drive the inputs of `second`"""
    if first.p != second.m:
        raise ce.ValidationError(f'Cannot cascade {first.p} outputs into {second.m} inputs')
    n1, n2 = first.n, second.n
    a = np.zeros((n1 + n2, n1 + n2))
    a[:n1, :n1] = first.a
    a[n1:, :n1] = second.b @ first.c
    a[n1:, n1:] = second.a
    b = np.vstack([first.b, second.b @ first.d])
    c = np.hstack([second.d @ first.c, second.c])
    d = second.d @ first.d
    return StateSpaceModel(a=a, b=b, c=c, d=d, dt=first.dt)


def block_diagonal(models: t.Sequence[StateSpaceModel]) -> StateSpaceModel:
    """Stack independent models: inputs and outputs are concatenated in order"""
    return StateSpaceModel(
        a=scipy.linalg.block_diag(*[model.a for model in models]),
        b=scipy.linalg.block_diag(*[model.b for model in models]),
        c=scipy.linalg.block_diag(*[model.c for model in models]),
        d=scipy.linalg.block_diag(*[model.d for model in models]),
        dt=models[0].dt,
    )

"""Value tables produced by markov.valuation."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ValueBundle:
    """
    Exact values for one joint type.

    V is indexed by the selected joint signal: under stationary Markov
    strategies the principal's signals enter only through what was selected.

    Attributes:
        V: (n, G, |Ω|^n) state-signal values
        J: (n, G) state values
        Q: (n, |A|^n, G, Ω) state-signal-action values at the agent's own selected signal
    """
    V: np.ndarray
    J: np.ndarray
    Q: np.ndarray

    def shifted(self, agent: int, v: float, j: float, q: float) -> "ValueBundle":
        V, J, Q = self.V.copy(), self.J.copy(), self.Q.copy()
        V[agent] += v
        J[agent] += j
        Q[agent] += q
        return ValueBundle(V=V, J=J, Q=Q)


@dataclass(frozen=True)
class AggregateValues:
    """
    Averaged value tables used by the design constraints.

    Attributes:
        q_pi: (n, G, |Ω|^n, A) opponents-averaged Q built from J
        q_alpha: (n, |A|^n, G, Ω) α-averaged continuation Q built from V
        v_alpha: (n, G, Ω[ω_i], Ω[ω_i^k]) opponents'-signal-averaged V; NaN where α_i(ω_i^k) = 0
    """
    q_pi: np.ndarray
    q_alpha: np.ndarray
    v_alpha: np.ndarray


@dataclass(frozen=True)
class BellmanResiduals:
    """Max absolute residual of each recursion."""
    v_recursion: float
    j_recursion: float
    q_recursion: float

    @property
    def worst(self) -> float:
        return max(self.v_recursion, self.j_recursion, self.q_recursion)

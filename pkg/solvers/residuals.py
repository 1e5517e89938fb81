"""
Objectives and constraint residuals of the fixed-point-alignment program.

All quantities are per joint type and follow the obedient selection rule.
Residual families carry the labels used in every report:

    RG    policy rows are distributions
    FE    V_i(g; ω⃗) ≥ E_{a⃗_{-i}} Qα_i(a'_i, a⃗_{-i}, g; ω_i)            on supported ω⃗
    BOB0  J^π_i(g) ≥ Vα_i(g, ω'_i; ω_i)                                on supported ω_i
    BOB1  Vα_i(g, ω'_i; ω_i) ≤ Σ_k α_i(k) Vα_i(g; k)                   on supported ω_i
    FS    J_i(g) ≥ Vα_i(g; ω_i)                                        on supported ω_i
    AD    admissibility of π against κ (weak or strong)
    FPM1  α_i(ω_i)·(J_i(g) - Vα_i(g; ω_i))
    FPM2  π_i(a_i | ω_i)·(V_i(g; ω⃗) - Qπ_i(a_i, g; ω⃗; J_i))            on supported ω⃗

`design_terms` evaluates everything with arbitrary leading batch dimensions.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np

from evaluators.admissibility import weak_admissibility_gap
from markov.dynamics import action_distribution
from markov.valuation import (
    alpha_averaged_q,
    block_values,
    continuation_q,
    opponent_averaged_q,
    own_signal_values,
    signal_marginals,
)
from models.design import CONSTRAINT_LABELS, MISALIGNMENT_LABELS
from models.game import AugmentedGame
from models.report import AdmissibilityMode, CertificationReport
from models.strategy import Goal, Policy, SignalingRule
from utils.tables import JointIndex, joint_policy

logger = logging.getLogger(__name__)

NEG = -np.inf


def block_policy(pi_table: np.ndarray, types: Sequence[int]) -> np.ndarray:
    """(..., n, G, Ω, A) rows of a (..., n, G, Ω, Θ, A) policy table for a joint type."""
    return np.stack([pi_table[..., i, :, :, types[i], :] for i in range(len(types))], axis=-4)


def at_own_signal(table: np.ndarray, index: JointIndex, signal_axis: int) -> np.ndarray:
    """Expand each agent's own-signal axis into the joint-signal axis; agents on axis -4 of the result's frame."""
    return np.stack(
        [np.take(table[..., i, :, :, :], index.signals[:, i], axis=signal_axis) for i in range(index.n_agents)],
        axis=-4,
    )


@dataclass(frozen=True)
class DesignTerms:
    """Unreduced residual tables for one joint type (leading batch dims allowed)."""
    J: np.ndarray               # (..., n, G) candidate J
    V: np.ndarray               # (..., n, G, |Ω|^n) candidate V
    J_exact: np.ndarray         # (..., n, G) J under (α, β^O, π)
    support: np.ndarray         # (..., G, |Ω|^n) α > 0
    own_support: np.ndarray     # (..., n, G, Ω) α_i > 0
    alpha: np.ndarray
    marginals: np.ndarray       # (..., n, G, Ω)
    U: np.ndarray               # (..., n, G, Ω[w], Ω[k]) unnormalized Vα
    aligned: np.ndarray         # (..., n, G) Σ_k U(k, k)
    z_terms: np.ndarray         # (..., n, G, |Ω|^n)
    fe: np.ndarray              # (..., n, G, |Ω|^n, A)
    fpm2: np.ndarray            # (..., n, G, |Ω|^n, A)
    j_optimal: np.ndarray       # (..., n, G) right-hand side of the J optimality equation
    rg: np.ndarray              # (..., n, G, Ω)
    ad: Optional[np.ndarray]    # weak (..., n, G) signed, strong (..., G, |A|^n) signed

    def conditional(self) -> np.ndarray:
        """Vα (..., n, G, w, k); 0 where α_i(k) = 0."""
        safe = np.where(self.own_support, self.marginals, 1.0)
        return np.where(self.own_support[..., None, :], self.U / safe[..., None, :], 0.0)

    def zfpa(self) -> np.ndarray:
        return (self.J - self.aligned).sum(axis=(-1, -2))

    def z(self) -> np.ndarray:
        return np.where(self.support[..., None, :, :], self.z_terms, 0.0).sum(axis=(-1, -2, -3))


def design_terms(
    rewards: np.ndarray,
    transition: np.ndarray,
    gamma: float,
    alpha: np.ndarray,
    pis: np.ndarray,
    index: JointIndex,
    kappa: Optional[np.ndarray] = None,
    J: Optional[np.ndarray] = None,
    V: Optional[np.ndarray] = None,
    mode: AdmissibilityMode = AdmissibilityMode.WEAK,
) -> DesignTerms:
    """
    Evaluate every objective and residual table for one joint type.

    Args:
        rewards: (n, |A|^n, G, Ω) rewards for the joint type
        transition: (G, |A|^n, G)
        gamma: Discount
        alpha: (..., G, |Ω|^n) signaling rows
        pis: (..., n, G, Ω, A) policy rows
        index: Joint index bookkeeping
        kappa: (G, |A|^n) goal rows; AD is skipped when None
        J, V: Candidate values; the exact values under (α, β^O, π) when None
        mode: Admissibility mode of the AD family
    """
    J_exact, V_exact, _ = block_values(rewards, transition, gamma, alpha, pis, index)
    J = J_exact if J is None else J
    V = V_exact if V is None else V

    q_alpha = alpha_averaged_q(rewards, transition, gamma, alpha, V)
    q_alpha_joint = at_own_signal(q_alpha, index, signal_axis=-1)                  # (..., n, |A|^n, G, |Ω|^n)
    joint = joint_policy(pis, index)
    z_terms = V - np.einsum("...gsa,...iags->...igs", joint, q_alpha_joint)

    support = alpha > 0
    fe_raw = opponent_averaged_q(q_alpha, pis, index) - V[..., None]
    fe = np.where(support[..., None, :, :, None], fe_raw, NEG)

    marginals = signal_marginals(alpha, index)
    own_support = marginals > 0
    U = own_signal_values(V, alpha, index)
    aligned = np.einsum("...gkk->...g", U)

    q_pi = opponent_averaged_q(continuation_q(rewards, transition, gamma, J), pis, index)
    own_rows = at_own_signal(np.moveaxis(pis, -1, -3), index, signal_axis=-1)      # (..., n, A, G, |Ω|^n)
    own_rows = np.moveaxis(own_rows, -3, -1)                                       # (..., n, G, |Ω|^n, A)
    fpm2 = np.where(support[..., None, :, :, None], np.abs(own_rows * (V[..., None] - q_pi)), NEG)

    followed = np.einsum("...igsa,...igsa->...igs", own_rows, q_pi)
    j_optimal = own_signal_values(followed, alpha, index).max(axis=-2).sum(axis=-1)

    rg = np.maximum(np.abs(pis.sum(axis=-1) - 1.0), np.max(-pis, axis=-1, initial=0.0))

    ad = None
    if kappa is not None:
        actions = action_distribution(alpha, pis, index)
        if AdmissibilityMode(mode) == AdmissibilityMode.STRONG:
            ad = kappa - actions
        else:
            ad = weak_admissibility_gap(rewards, alpha, kappa, actions, index.n_agents, index.n_signals)

    return DesignTerms(
        J=J, V=V, J_exact=J_exact, support=support, own_support=own_support, alpha=alpha,
        marginals=marginals, U=U, aligned=aligned, z_terms=z_terms, fe=fe, fpm2=fpm2,
        j_optimal=j_optimal, rg=rg, ad=ad,
    )


def residual_tables(terms: DesignTerms) -> Dict[str, np.ndarray]:
    """Signed residual tables per label; excluded entries are -inf."""
    conditional = terms.conditional()
    own = terms.own_support[..., None, :]
    diagonal = np.einsum("...gkk->...gk", conditional)
    tables = {
        "RG": terms.rg,
        "FE": terms.fe,
        "BOB0": np.where(own, conditional - terms.J_exact[..., None, None], NEG),
        "BOB1": np.where(own, conditional - terms.aligned[..., None, None], NEG),
        "FS": np.where(terms.own_support, diagonal - terms.J[..., None], NEG),
        "FPM1": np.abs(terms.marginals * terms.J[..., None] - np.einsum("...gkk->...gk", terms.U)),
        "FPM2": terms.fpm2,
    }
    if terms.ad is not None:
        tables["AD"] = np.abs(terms.ad)
    return tables


RESIDUAL_AXES = {
    "RG": ("agent", "state", "signal"),
    "FE": ("agent", "state", "joint_signal", "action"),
    "BOB0": ("agent", "state", "alternative", "principal_signal"),
    "BOB1": ("agent", "state", "alternative", "principal_signal"),
    "FS": ("agent", "state", "principal_signal"),
    "FPM1": ("agent", "state", "principal_signal"),
    "FPM2": ("agent", "state", "joint_signal", "action"),
}
AD_AXES = {
    AdmissibilityMode.WEAK: ("agent", "state"),
    AdmissibilityMode.STRONG: ("state", "joint_action"),
}


def smooth_penalty(terms: DesignTerms, include_ad: bool = True, include_fpm2: bool = False) -> np.ndarray:
    """
    Sum of squared, support-weighted violations.

    Weighting by α keeps the penalty continuous as a signal's probability
    goes to zero, where its unweighted residual stops counting.
    """
    alpha = terms.alpha
    fe = np.maximum(np.where(np.isfinite(terms.fe), terms.fe, 0.0), 0.0) * alpha[..., None, :, :, None]
    m = terms.marginals
    bob1 = np.maximum(terms.U - m[..., None, :] * terms.aligned[..., None, None], 0.0)
    fs = np.maximum(np.einsum("...gkk->...gk", terms.U) - m * terms.J[..., None], 0.0)
    total = (fe ** 2).sum(axis=(-1, -2, -3, -4))
    total = total + (bob1 ** 2).sum(axis=(-1, -2, -3, -4)) + (fs ** 2).sum(axis=(-1, -2, -3))
    total = total + terms.z() ** 2
    if include_ad and terms.ad is not None:
        total = total + (terms.ad ** 2).sum(axis=(-1, -2))
    if include_fpm2:
        fpm2 = np.where(np.isfinite(terms.fpm2), terms.fpm2, 0.0)
        total = total + (fpm2 ** 2).sum(axis=(-1, -2, -3, -4))
    return total


# Game-level operations

def _terms(game: AugmentedGame, signaling: SignalingRule, policy: Policy, types,
           goal: Optional[Goal] = None, J=None, V=None,
           mode: AdmissibilityMode = AdmissibilityMode.WEAK) -> DesignTerms:
    types = game.type_profile(types)
    t = game.type_index(types)
    kappa = None if goal is None else goal.block(t)
    return design_terms(
        game.rewards_for(types), game.transition, game.discount, signaling.block(t),
        policy.for_types(types), game.index, kappa=kappa, J=J, V=V, mode=mode,
    )


def z_objective(game: AugmentedGame, signaling: SignalingRule, policy: Policy, V: np.ndarray,
                types: Union[int, Sequence[int]]) -> float:
    """Σ over agents, states and supported joint signals of V - E_π Qα(·; V)."""
    return float(_terms(game, signaling, policy, types, V=V).z())


def zfpa_objective(game: AugmentedGame, signaling: SignalingRule, J: np.ndarray, V: np.ndarray,
                   types: Union[int, Sequence[int]]) -> float:
    """Σ_{i,g} J_i(g) - Σ_k α_i(k) Vα_i(g; k); does not depend on a policy."""
    types = game.type_profile(types)
    alpha = signaling.block(game.type_index(types))
    U = own_signal_values(np.asarray(V, dtype=np.float64), alpha, game.index)
    return float((np.asarray(J) - np.einsum("igkk->ig", U)).sum())


def constraint_residuals(
    game: AugmentedGame,
    signaling: SignalingRule,
    policy: Policy,
    J: np.ndarray,
    V: np.ndarray,
    goal: Optional[Goal],
    types: Union[int, Sequence[int]],
    mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    tol: float = 1e-7,
) -> Dict[str, CertificationReport]:
    """RG, FE, BOB0, BOB1, FS and AD residuals with witnesses."""
    tables = residual_tables(_terms(game, signaling, policy, types, goal, J, V, mode))
    reports = {
        label: CertificationReport.from_violations(label, tables[label], RESIDUAL_AXES[label], tol)
        for label in CONSTRAINT_LABELS if label != "AD"
    }
    if "AD" in tables:
        reports["AD"] = CertificationReport.from_violations("AD", tables["AD"], AD_AXES[AdmissibilityMode(mode)], tol)
    return reports


def fpm_residuals(
    game: AugmentedGame,
    signaling: SignalingRule,
    policy: Policy,
    J: np.ndarray,
    V: np.ndarray,
    types: Union[int, Sequence[int]],
    tol: float = 1e-7,
) -> Dict[str, CertificationReport]:
    """FPM1 and FPM2 complementarity residuals with witnesses."""
    tables = residual_tables(_terms(game, signaling, policy, types, J=J, V=V))
    return {
        label: CertificationReport.from_violations(label, tables[label], RESIDUAL_AXES[label], tol)
        for label in MISALIGNMENT_LABELS
    }


def j_optimality_residual(game: AugmentedGame, signaling: SignalingRule, policy: Policy, J: np.ndarray,
                          types: Union[int, Sequence[int]]) -> float:
    """
    max_{i,g} |J_i(g) - Σ_k max_w Σ α(k, ω⃗_{-i}) Σ_a π_i(a | w) Qπ_i(a, g; (w, ω⃗_{-i}); J_i)|.

    Each principal signal is answered by the best kept signal.
    """
    terms = _terms(game, signaling, policy, types, J=J)
    return float(np.max(np.abs(np.asarray(J) - terms.j_optimal)))

"""Exhaustive deterministic deviations of one agent, backed up through exact values."""

import itertools

import numpy as np

from markov.dynamics import induced_transition
from markov.valuation import evaluate_values
from models.strategy import Policy, SelectionRule


def one_period_rules(game, agent, own_type, selection, policy):
    """Every deterministic (selection, action) rule of one agent, as full strategies."""
    free = [b for b, batch in enumerate(game.batches) if len(set(batch.tolist())) > 1]
    slots = [(g, b) for g in range(game.n_states) for b in free]
    cells = [(g, w) for g in range(game.n_states) for w in range(game.n_signals)]
    eye = np.eye(game.n_actions)
    for picks in itertools.product(range(game.batch_size), repeat=len(slots)):
        positions = np.array(selection.positions)
        for (g, b), slot in zip(slots, picks):
            positions[agent, g, own_type, b] = slot
        for actions in itertools.product(range(game.n_actions), repeat=len(cells)):
            table = np.array(policy.table)
            for (g, w), action in zip(cells, actions):
                table[agent, g, w, own_type] = eye[action]
            yield SelectionRule(positions), Policy(table)


def one_step_tables(game, signaling, selection, policy, agent, types):
    """Stacked one-step rewards r̄ (R, G) and kernels K (R, G, G) of every one-period rule."""
    own_type = game.type_profile(types)[agent]
    rewards, kernels = [], []
    for rule_selection, rule_policy in one_period_rules(game, agent, own_type, selection, policy):
        J = evaluate_values(game, signaling, rule_selection, rule_policy, types).J[agent]
        K = induced_transition(game, signaling, rule_selection, rule_policy, types)
        rewards.append(J - game.discount * K @ J)
        kernels.append(K)
    return np.stack(rewards), np.stack(kernels)


def best_deviation_gains(game, signaling, selection, policy, agent, types=0):
    """
    Best one-period and two-period deviation gains per state.

    The two-period deviation may use different rules in each period and then
    reverts to the profile. Rules act row by row, so a per-state maximum over
    rules is attained by a single rule.

    Returns:
        ((G,) one-period gains, (G,) two-period gains)
    """
    J = evaluate_values(game, signaling, selection, policy, types).J[agent]
    r, K = one_step_tables(game, signaling, selection, policy, agent, types)
    gamma = game.discount
    second = np.max(r + gamma * K @ J, axis=0)
    first = np.max(r + gamma * K @ second, axis=0)
    return second - J, first - J

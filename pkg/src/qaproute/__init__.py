"""Qubit routing workbench built on a dynamic assignment-problem objective."""

from .circuit import Circuit, Gate, parse_circuit, random_circuit, slice_circuit, slice_to_flow
from .device import Device, distance_matrix, device_from_spec, make_grid, make_tokyo
from .env import reset, step, legal_actions, observation, validate_schedule
from .qap import Mapping, RewardWeights, effective_flow, qap_objective, qap_reward, total_reward
from .routers import (
    RoutedCircuit,
    RouterConfig,
    count_cnots,
    route,
    route_basic_swap,
    route_bidirectional,
    route_qap_greedy,
    route_sabre,
    route_with_policy,
)

__version__ = "0.1.0"

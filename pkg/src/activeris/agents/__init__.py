"""Off-policy continuous-control agents and their replay buffer."""
from ..errors import ParameterError
from .base import Agent, AgentHyperparams, RandomAgent, RunningNormalizer
from .buffer import Batch, ReplayBuffer, Transition
from .ddpg import DdpgAgent, Td3Agent
from .sac import SacAgent

AGENTS = {"sac": SacAgent, "ddpg": DdpgAgent, "td3": Td3Agent, "random": RandomAgent}


def make_agent(name: str, obs_dim: int, act_dim: int, hp: AgentHyperparams = AgentHyperparams(), seed=0) -> Agent:
    try:
        cls = AGENTS[name.lower()]
    except KeyError:
        raise ParameterError(f"unknown agent {name!r}; choose from {sorted(AGENTS)}") from None
    return cls(obs_dim, act_dim, hp, seed)


def sac_update(agent: SacAgent, batch: Batch) -> dict:
    return agent.update(batch)


def ddpg_update(agent: DdpgAgent, batch: Batch) -> dict:
    return agent.update(batch)


def td3_update(agent: Td3Agent, batch: Batch, update_index: int) -> dict:
    return agent.update(batch, update_index)


__all__ = [
    "Agent",
    "AgentHyperparams",
    "RandomAgent",
    "RunningNormalizer",
    "Batch",
    "ReplayBuffer",
    "Transition",
    "DdpgAgent",
    "Td3Agent",
    "SacAgent",
    "AGENTS",
    "make_agent",
    "sac_update",
    "ddpg_update",
    "td3_update",
]

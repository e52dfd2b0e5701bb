from .config import ConfigInvalid, ScenarioConfig, load_scenario, validate
from .engine import Simulation, run, run_to_dir
from .metrics import MetricsFrame
from .network import DelayModel, Delivery, Message, network_deliver

__all__ = [
    "ConfigInvalid", "DelayModel", "Delivery", "Message", "MetricsFrame", "ScenarioConfig",
    "Simulation", "load_scenario", "network_deliver", "run", "run_to_dir", "validate",
]

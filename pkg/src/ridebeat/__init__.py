"""ridebeat: a bike-sensor driven beat engine.

Riding speed maps to tempo and rider posture maps to volume; a drum loop
follows both live.  The package contains the sensing chain, the parameter
mapping with its three interaction modes, the beat sequencer and stimulus
renderer, a deterministic virtual bike, an offline replay/report CLI, and
a WebSocket session server for live riding.
"""

__version__ = "0.1.0"

from .config import CalibrationProfile, EngineConfig, MappingConfig
from .mapping import EngineState, Mode
from .pipeline import Engine
from .sensing import RideState, SensingOutput, SensorSample
from .sequencer import BeatEvent, DrumPattern
from .simulator import BikeState, RiderCommand

__all__ = [
    "BeatEvent",
    "BikeState",
    "CalibrationProfile",
    "DrumPattern",
    "Engine",
    "EngineConfig",
    "EngineState",
    "MappingConfig",
    "Mode",
    "RideState",
    "RiderCommand",
    "SensingOutput",
    "SensorSample",
    "__version__",
]

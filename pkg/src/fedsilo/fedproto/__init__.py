"""Federation protocol: codec, local training, aggregation, transports, orchestration."""
from .aggregation import AggregationError, Update, aggregate
from .codec import (BROADCAST, UPLOAD, CodecError, RoundMessage, decode_message, encode_message)
from .config import FEDAVG_FULL, FEDPER_PARTIAL, FederationConfig
from .federation import (CentralizedResult, FederationResult, RoundRecord, Scenario,
                         StandaloneResult, pool_clients, run_centralized, run_federation,
                         run_private_baselines, train_standalone)
from .scenarios import (ACTIVITY_EVEN_RANDOM, ACTIVITY_UNEVEN_SCAFFOLD, COLUMN_SYSID, SCENARIOS,
                        activity_scenario, column_reference_client, column_scenario)
from .tasks import ActivityTask, ColumnTask
from .training import LocalMetrics, TrainingError, local_train
from .transport import (FederatedClient, FederationError, HandshakeError, InProcessTransport,
                        SocketTransport)

__all__ = [
    "ACTIVITY_EVEN_RANDOM",
    "ACTIVITY_UNEVEN_SCAFFOLD",
    "BROADCAST",
    "COLUMN_SYSID",
    "FEDAVG_FULL",
    "FEDPER_PARTIAL",
    "SCENARIOS",
    "UPLOAD",
    "ActivityTask",
    "AggregationError",
    "CentralizedResult",
    "CodecError",
    "ColumnTask",
    "FederatedClient",
    "FederationConfig",
    "FederationError",
    "FederationResult",
    "HandshakeError",
    "InProcessTransport",
    "LocalMetrics",
    "RoundMessage",
    "RoundRecord",
    "Scenario",
    "SocketTransport",
    "StandaloneResult",
    "TrainingError",
    "Update",
    "activity_scenario",
    "aggregate",
    "column_reference_client",
    "column_scenario",
    "decode_message",
    "encode_message",
    "local_train",
    "pool_clients",
    "run_centralized",
    "run_federation",
    "run_private_baselines",
    "train_standalone",
]

"""What travels between silos.

Round messages are a small binary format: a fixed header followed by named
float64 segments. This demo encodes a FedPer upload, decodes it, shows how
corruption is reported, and runs a two-client federation over loopback TCP
next to the in-process transport.

Run with ``python3 demos/04_wire_protocol.py``.
"""
# %%
import numpy as np

from fedsilo.data import generate_synthetic_activity
from fedsilo.fedproto import (ACTIVITY_EVEN_RANDOM, UPLOAD, CodecError, FederationConfig, RoundMessage,
                              activity_scenario, decode_message, encode_message, run_federation)
from fedsilo.models.spec import GNN_MIXTURE, ModelSpec, init_model

w = init_model(ModelSpec(GNN_MIXTURE, seed=1, hidden=4))
shared = w.select(ModelSpec(GNN_MIXTURE).shared_segments())
msg = RoundMessage(UPLOAD, round=3, segments=shared, client_id=2, n_k=451)
blob = encode_message(msg)
print(f"{len(shared)} segments, {shared.total_len} floats -> {len(blob)} bytes")
print("header:", blob[:25].hex(" "))
assert decode_message(blob) == msg

# %%
for label, bad in (("magic", b"XXXX" + blob[4:]), ("truncated", blob[:-3]), ("trailing", blob + b"\0")):
    try:
        decode_message(bad)
    except CodecError as exc:
        print(f"{label:9s} -> {exc}")

# %%
samples = generate_synthetic_activity(3, 240)
sc = activity_scenario(ACTIVITY_EVEN_RANDOM, samples, 3, k_clients=2, spec=ModelSpec(GNN_MIXTURE, seed=3, hidden=8))
cfg = FederationConfig(K=2, rounds=2, local_epochs=2, batch_size=16, lr0=1e-2, optimizer="adam", seed=3)
a = run_federation(sc, cfg)
b = run_federation(sc, cfg.replace(transport="socket"))
print("records identical over both transports:", a.records == b.records)
print("global models bitwise equal:", a.global_params.bitwise_equal(b.global_params))
print("round 2 global MSE per client:", {k: round(v, 4) for k, v in b.records[-1].global_test_mse.items()})
print("max |w|:", float(np.abs(b.global_params.flat()).max()))

"""Learning a scarce operator's column dynamics from its peers.

The target operator (V = 1.9) holds two one-hour trajectories; four peers
hold many. A Koopman/Wiener autoencoder is trained privately on the scarce
data, federated across all five operators, and on a full-data reference set.
Test error is the open-loop multistep MSE over a five-hour run.

Run with ``python3 demos/03_column_sysid.py`` (a few minutes on one core).
"""
# %%
import numpy as np

from fedsilo import colsim
from fedsilo.fedproto import (FederationConfig, column_reference_client, column_scenario, run_federation,
                              train_standalone)

SEED, N_RICH, N_FULL = 0, 12, 12
full = colsim.generate_client_dataset(1.9, N_FULL, SEED)
train = {V: (full[:2] if V == 1.9 else colsim.generate_client_dataset(V, N_RICH, SEED))
         for V in colsim.V_VALUES}
test = {V: [colsim.generate_test_trajectory(V, SEED)] for V in colsim.V_VALUES}
sc = column_scenario(train, test, SEED)
target = next(c for c in sc.clients if c.tag == "target")
print("clients:", [(c.meta["V"], c.n_k) for c in sc.clients], "target id", target.client_id)

# %%
cfg = FederationConfig(K=5, rounds=6, local_epochs=15, batch_size=2, lr0=1e-2, optimizer="adam",
                       early_stop_patience=10, seed=SEED)
private = train_standalone(sc, target, cfg).test_mse
reference = train_standalone(sc, column_reference_client(sc, full, test[1.9], SEED), cfg).test_mse
fed = run_federation(sc, cfg)
federated = fed.records[-1].global_test_mse[target.client_id]

# %%
print(f"private (2 trajectories)   {private:.2e}")
print(f"federated (5 operators)    {federated:.2e}")
print(f"full data ({N_FULL} trajectories) {reference:.2e}")
print(f"private / federated = {private / federated:.1f}x")

# %%
# first five minutes of the target's test run, condenser and reboiler, scaled units
from fedsilo.models.koopman import koopman_rollout  # noqa: E402

traj = target.test[0]
pred = koopman_rollout(fed.client_params[target.client_id], traj.states[0], traj.inputs)
print("  x1 true  x10 true  x1 pred  x10 pred")
print(np.column_stack([traj.states[:5, [0, -1]], pred[:5, [0, -1]]]).round(4))

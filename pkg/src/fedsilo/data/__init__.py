"""Dataset ingestion, synthetic data, splits, partitions and scaling."""
from .activity import (CSV_COLUMNS, ActivitySample, FormatError, Rejection, activity_oracle,
                       featurized, generate_synthetic_activity, ingest_activity_csv, molecule,
                       write_activity_csv, write_rejections)
from .partition import (ClientDataset, PartitionError, largest_remainder, partition_by_condition,
                        partition_even_random, partition_uneven_scaffold, scaffold_targets,
                        solvent_scaffold, split_train_val_test)
from .scaling import MinMaxScaler, ScalerStateError, apply_scaler, fit_scaler, invert_scaler

__all__ = [
    "ActivitySample",
    "CSV_COLUMNS",
    "ClientDataset",
    "FormatError",
    "MinMaxScaler",
    "PartitionError",
    "Rejection",
    "ScalerStateError",
    "activity_oracle",
    "apply_scaler",
    "featurized",
    "fit_scaler",
    "generate_synthetic_activity",
    "ingest_activity_csv",
    "invert_scaler",
    "largest_remainder",
    "molecule",
    "partition_by_condition",
    "partition_even_random",
    "partition_uneven_scaffold",
    "scaffold_targets",
    "solvent_scaffold",
    "split_train_val_test",
    "write_activity_csv",
    "write_rejections",
]

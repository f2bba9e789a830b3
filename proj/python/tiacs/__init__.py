# Copyright 2026 The tiacs Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Trajectory-integrated public charging accessibility."""

from ._core import (
    ChargingStation,
    Error,
    ParseError,
    PreconditionError,
    ProximityTable,
    RoadNetwork,
    Snapshot,
    StageError,
    Trajectory,
    ValidationError,
    __version__,
    build_proximity_table,
    build_snapshot,
    gini,
    load_network,
    load_stations,
    load_trajectories,
    ols,
    repair,
    run,
    split_by_tou,
    synth,
    ti_acs,
    write_trajectories,
)

__all__ = [
    "ChargingStation",
    "Error",
    "ParseError",
    "PreconditionError",
    "ProximityTable",
    "RoadNetwork",
    "Snapshot",
    "StageError",
    "Trajectory",
    "ValidationError",
    "__version__",
    "build_proximity_table",
    "build_snapshot",
    "gini",
    "load_network",
    "load_stations",
    "load_trajectories",
    "ols",
    "repair",
    "run",
    "split_by_tou",
    "synth",
    "ti_acs",
    "write_trajectories",
]

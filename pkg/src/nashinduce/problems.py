"""Bundled example problems, stored as byte-exact JSON strings."""

from __future__ import annotations

REMARK2 = """\
{
  "schema_version": "1",
  "A": [[1.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
  "players": [
    {
      "B": [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
      "K_dagger": [[1.0, 0.0, 1.0], [0.0, 2.414213562373095, 2.414213562373095]]
    },
    {
      "B": [[1.0], [0.0], [0.0]],
      "K_dagger": [[1.0, 0.0, 0.0]]
    }
  ]
}
"""

SCALAR_FEASIBLE = """\
{
  "schema_version": "1",
  "A": [[1.0]],
  "players": [
    {
      "B": [[1.0]],
      "K_dagger": [[3.0]]
    }
  ]
}
"""

SCALAR_INFEASIBLE = """\
{
  "schema_version": "1",
  "A": [[1.0]],
  "players": [
    {
      "B": [[1.0]],
      "K_dagger": [[1.5]]
    }
  ]
}
"""

TWO_PLAYER_SCALAR = """\
{
  "schema_version": "1",
  "A": [[1.0]],
  "players": [
    {
      "B": [[1.0]],
      "K_dagger": [[1.0]],
      "Q": [[1.0]],
      "R_row": [[[1.0]], [[0.0]]]
    },
    {
      "B": [[1.0]],
      "K_dagger": [[1.0]],
      "Q": [[1.0]],
      "R_row": [[[0.0]], [[1.0]]]
    }
  ]
}
"""

BUNDLED = {
    "remark2": REMARK2,
    "scalar_feasible": SCALAR_FEASIBLE,
    "scalar_infeasible": SCALAR_INFEASIBLE,
    "two_player_scalar": TWO_PLAYER_SCALAR,
}

"""Game engines and a single dispatch point for running one round."""

from __future__ import annotations

from typing import Any

from advgame.core import GameKind, SimOutcome
from advgame.registry import Registry


def simulate(
    game: GameKind | str,
    invader: Any,
    defender: Any,
    config: Any = None,
    registry: Registry | None = None,
) -> SimOutcome:
    """Run one round of ``game`` between two already-validated strategies."""
    game = GameKind.parse(game)
    if game is GameKind.TOWER_DEFENSE:
        from advgame.games.td import simulate_td

        return simulate_td(defender, invader, config, registry)
    if game is GameKind.BATTLE_CARD:
        from advgame.games.bc import resolve_battle

        return resolve_battle(invader, defender, config, registry)
    from advgame.games.ta import run_duel

    return run_duel(invader, defender, config, registry)


__all__ = ["simulate"]

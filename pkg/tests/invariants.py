"""Whole-economy conservation checks, recomputed from counters after each step."""

from __future__ import annotations

from mmoecon.economy import RECHARGE_TOK_GAIN, UPGRADE_CAP_GAIN


def check_conservation(sim) -> None:
    s, cfg = sim.state, sim.config
    totals = s.totals()
    recharges = sum(s.ccy_spent.values())
    upgrades = sum(s.upgrades.values())
    shop = s.shop_purchases
    grid = s.grid
    remaining = grid.remaining()
    for kind in ("EXP", "MAT"):
        assert remaining[kind] + grid.collected[kind] == grid.placed[kind], kind
    assert totals["tok"] == RECHARGE_TOK_GAIN * recharges - s.shop_price * (shop["mat"] + shop["exp"]) - upgrades
    assert totals["mat"] == grid.collected["MAT"] + shop["mat"] - upgrades
    assert totals["exp"] == grid.collected["EXP"] + shop["exp"] - upgrades
    assert totals["cap"] == UPGRADE_CAP_GAIN * upgrades
    assert totals["ccy"] == cfg.initial_ccy * cfg.agents - recharges
    for ledger in s.ledgers.values():
        ledger.check()
    s.book.check()

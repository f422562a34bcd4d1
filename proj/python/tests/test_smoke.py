import pytest

import mmosim


def small(**extra):
    cfg = {"run_id": "py", "total_days": 1, "population": {"generate": 40}}
    cfg.update(extra)
    return cfg


def with_defaults(patch):
    sim = mmosim.Simulation("default")
    snap = sim.snapshot()
    cfg = snap["config"]
    cfg.update(patch)
    return cfg


def test_run_is_deterministic():
    cfg = with_defaults(small())
    a, b = mmosim.Simulation(cfg), mmosim.Simulation(cfg)
    ea, eb = a.advance(24), b.advance(24)
    assert ea == eb
    assert a.log_hash() == b.log_hash()
    assert a.finished


def test_money_is_conserved():
    sim = mmosim.Simulation(with_defaults(small()))
    for _ in range(24):
        sim.advance(1)
        m = sim.money_supply()
        assert m["players_total"] + m["reserve"] + m["burn"] == m["initial_total"]


def test_snapshot_restore():
    cfg = with_defaults(small(total_days=2))
    a = mmosim.Simulation(cfg)
    a.advance(20)
    b = mmosim.Simulation.restore(a.snapshot())
    assert b.current_step == 20
    assert a.advance(10) == b.advance(10)


def test_stats_and_interventions():
    sim = mmosim.Simulation(with_defaults(small()))
    iid = sim.schedule({"at_step": 3, "kind": "enable_feature", "name": "black_market_enabled"})
    sim.advance(5)
    assert sim.world()["channels"]["black_market"] is True
    frame = sim.stats(5, 24)
    assert sum(frame["agents_by_state"].values()) == 40
    assert iid >= 1
    with pytest.raises(mmosim.SimError):
        sim.stats(99, 24)


def test_errors_surface():
    with pytest.raises(mmosim.SimError, match="InvalidConfig"):
        mmosim.Simulation(with_defaults({"tax_rate": 3}))


def test_helpers(tmp_path):
    assert mmosim.gini([0, 0, 0, 400]) == pytest.approx(0.75)
    assert mmosim.round_half_up_tax(90, 0.05) == 5
    pop = mmosim.generate_population(10, 3)
    assert [p["uid"] for p in pop] == list(range(10))
    h = mmosim.run(with_defaults(small()), str(tmp_path / "r"))
    assert h == mmosim.log_content_hash(str(tmp_path / "r" / "log.jsonl"))
    rep = mmosim.fit_and_evaluate(100, 2)
    assert set(rep) == {"stable_development", "novice", "wealth_elite", "casual", "high_skill"}

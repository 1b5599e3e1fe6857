"""Brute-force searches and the average-allocation baseline."""

import itertools
import math
from dataclasses import replace

import pytest

from posecontest.contest import simulate_contest
from posecontest.oracle import (
    average_baseline,
    award_grid,
    exhaustive_award_search,
    exhaustive_effort_search,
    format_search_ledger,
)


class TestAwardGrid:
    def test_small_case_enumerated_by_hand(self):
        grid = award_grid(30.0, 3, 5.0)
        expected = {
            (30.0, 0.0, 0.0),
            (25.0, 5.0, 0.0),
            (20.0, 10.0, 0.0),
            (20.0, 5.0, 5.0),
            (15.0, 15.0, 0.0),
            (15.0, 10.0, 5.0),
            (10.0, 10.0, 10.0),
        }
        assert set(grid) == expected
        assert list(grid) == sorted(grid)

    def test_matches_filtered_product(self):
        # independent enumeration: all compositions, kept when sorted
        for pool, n, step in ((12.0, 2, 3.0), (20.0, 4, 5.0), (6.0, 3, 1.0)):
            units = int(pool / step)
            brute = {
                tuple(u * step for u in combo)
                for combo in itertools.product(range(units + 1), repeat=n)
                if sum(combo) == units and all(a >= b for a, b in zip(combo, combo[1:]))
            }
            assert set(award_grid(pool, n, step)) == brute

    def test_entries_are_valid_prize_vectors(self):
        for entry in award_grid(100.0, 4, 5.0):
            assert len(entry) == 4
            assert sum(entry) == pytest.approx(100.0)
            assert all(a >= b for a, b in zip(entry, entry[1:]))
            assert entry[-1] >= 0.0

    def test_single_slot(self):
        assert award_grid(10.0, 1, 5.0) == ((10.0,),)

    def test_validation(self):
        with pytest.raises(ValueError, match="does not divide"):
            award_grid(10.0, 2, 3.0)
        with pytest.raises(ValueError):
            award_grid(10.0, 0, 5.0)
        with pytest.raises(ValueError):
            award_grid(10.0, 2, 0.0)
        with pytest.raises(ValueError):
            award_grid(10.0, 2, math.inf)


class TestAwardSearch:
    def test_finds_the_grid_minimum(self, tiny_scenario):
        result = exhaustive_award_search(tiny_scenario, 3.0)
        grid = award_grid(12.0, 3, 3.0)
        assert result.evaluated == len(grid) == len(result.entries)

        feasible = []
        for prizes in grid:
            outcome = simulate_contest(tiny_scenario.with_awards(prizes))
            if outcome.feasible:
                feasible.append((outcome.total_loss, prizes, outcome.efforts))
        assert result.found_feasible == bool(feasible)
        best = min(feasible)
        assert result.best_total_loss == best[0]
        assert result.best_prizes == best[1]
        assert result.best_efforts == best[2]

    def test_entries_align_with_grid(self, tiny_scenario):
        result = exhaustive_award_search(tiny_scenario, 6.0)
        assert tuple(e.prizes for e in result.entries) == award_grid(12.0, 3, 6.0)
        for e in result.entries:
            outcome = simulate_contest(tiny_scenario.with_awards(e.prizes))
            assert e.efforts == outcome.efforts
            assert e.total_loss == outcome.total_loss
            assert e.feasible == outcome.feasible

    def test_nothing_feasible(self, tiny_scenario):
        # three users each upload at least 1; a budget of 2 can never fit
        squeezed = replace(tiny_scenario, budget=2)
        result = exhaustive_award_search(squeezed, 6.0)
        assert not result.found_feasible
        assert result.best_prizes is None
        assert result.best_efforts is None
        assert result.best_total_loss == math.inf
        assert result.evaluated > 0

    def test_tie_breaks_to_smallest_prizes(self, tiny_scenario):
        result = exhaustive_award_search(tiny_scenario, 3.0)
        ties = [
            e.prizes
            for e in result.entries
            if e.feasible and e.total_loss == result.best_total_loss
        ]
        assert result.best_prizes == min(ties)


class TestEffortSearch:
    def test_matches_brute_force(self, tiny_scenario):
        efforts, loss = exhaustive_effort_search(tiny_scenario)
        sets = [c.effort_set for c in tiny_scenario.contestants]
        best = min(
            (sum(c.loss_table[f] for c, f in zip(tiny_scenario.contestants, combo)), combo)
            for combo in itertools.product(*sets)
            if sum(combo) <= tiny_scenario.budget
        )
        assert loss == best[0]
        assert efforts == best[1]

    def test_beats_or_matches_any_award_setting(self, tiny_scenario):
        _, floor_loss = exhaustive_effort_search(tiny_scenario)
        result = exhaustive_award_search(tiny_scenario, 3.0)
        assert floor_loss <= result.best_total_loss

    def test_cap_guard(self, tiny_scenario):
        with pytest.raises(ValueError, match="cap"):
            exhaustive_effort_search(tiny_scenario, cap=3)

    def test_budget_below_minimum(self, tiny_scenario):
        squeezed = replace(tiny_scenario, budget=2)
        with pytest.raises(ValueError):
            exhaustive_effort_search(squeezed)


class TestAverageBaseline:
    def test_share_rounds_down_to_divisor(self, tiny_scenario):
        efforts, loss = average_baseline(tiny_scenario)
        # budget 9 over 3 users gives a share of 3, itself a divisor of 6
        assert efforts == (3, 3, 3)
        assert loss == pytest.approx(
            sum(c.loss_table[3] for c in tiny_scenario.contestants)
        )

    def test_non_divisor_share(self, tiny_scenario):
        # share 4 is not a divisor of 6, so everyone drops to 3
        bumped = replace(tiny_scenario, budget=12)
        efforts, _ = average_baseline(bumped)
        assert efforts == (3, 3, 3)

    def test_share_below_one(self, tiny_scenario):
        squeezed = replace(tiny_scenario, budget=2)
        with pytest.raises(ValueError, match="no admissible rate"):
            average_baseline(squeezed)


class TestLedgerFormat:
    def test_csv_layout(self, tiny_scenario):
        result = exhaustive_award_search(tiny_scenario, 6.0)
        text = format_search_ledger(result)
        lines = text.strip().split("\n")
        assert lines[0] == "awards,efforts,total_loss,feasible"
        assert len(lines) == 1 + result.evaluated
        first = lines[1].split(",")
        assert len(first) == 4
        assert len(first[0].split(" ")) == 3
        assert len(first[1].split(" ")) == 3
        float(first[2])
        assert first[3] in ("true", "false")

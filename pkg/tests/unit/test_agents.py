"""
Unit tests for passenger profiles and the agent state machine.
"""

import math

import numpy as np
import pytest

from deplane.agents import (
    BAG_WAIT_RANGE,
    DELAY_BOUNDS,
    FREE_SPEED_RANGES,
    AgentPhase,
    GoalKind,
    ProfileKind,
    bag_spot,
    heading,
    keep_route,
    max_speed,
    next_goal,
    phase_sequence_is_monotone,
    remaining_distance,
    sample_initial_delay,
    sample_profile,
    tick_phase,
)
from tests.conftest import make_agent


class RecordingRng:
    """Returns the low end of every draw and records the call order"""

    def __init__(self, normals=None):
        self.calls = []
        self._normals = list(normals or [])

    def uniform(self, lo, hi):
        self.calls.append(("uniform", lo, hi))
        return lo

    def normal(self, mean, sd):
        self.calls.append(("normal", mean, sd))
        return self._normals.pop(0) if self._normals else mean


@pytest.mark.unit
class TestSampling:
    """Test profile sampling."""

    @pytest.mark.parametrize("kind", list(ProfileKind))
    def test_attributes_within_bounds(self, kind):
        rng = np.random.default_rng(2024)
        lo, hi = FREE_SPEED_RANGES[kind]
        for _ in range(2000):
            profile = sample_profile(kind, rng)
            assert lo <= profile.free_speed <= hi
            assert DELAY_BOUNDS[0] <= profile.initial_delay <= DELAY_BOUNDS[1]
            assert profile.diameter == 0.4558
            assert profile.min_diameter == 0.33
            assert profile.orientation == 180.0
            if kind is ProfileKind.WITH_BAG:
                assert BAG_WAIT_RANGE[0] <= profile.bag_wait <= BAG_WAIT_RANGE[1]
            else:
                assert profile.bag_wait is None

    def test_speed_ranges(self):
        assert FREE_SPEED_RANGES[ProfileKind.NO_BAGS] == (1.5, 2.5)
        assert FREE_SPEED_RANGES[ProfileKind.WITH_BAG] == (0.419, 1.916)

    def test_delay_is_truncated_by_rejection(self):
        rng = RecordingRng(normals=[1.0, 20.0, 5.0])
        assert sample_initial_delay(rng) == 5.0
        assert len(rng.calls) == 3

    def test_draw_order(self):
        rng = RecordingRng()
        profile = sample_profile(ProfileKind.WITH_BAG, rng)

        assert rng.calls == [
            ("uniform", 0.419, 1.916),
            ("normal", 4.4, 1.52),
            ("uniform", 2.3, 8.9),
        ]
        assert profile.has_bag
        assert profile.bag_wait == 2.3

    def test_no_bag_profile_skips_bag_draw(self):
        rng = RecordingRng()
        sample_profile(ProfileKind.NO_BAGS, rng)
        assert [c[0] for c in rng.calls] == ["uniform", "normal"]

    def test_same_seed_same_profile(self):
        first = sample_profile(ProfileKind.WITH_BAG, np.random.default_rng(7))
        second = sample_profile(ProfileKind.WITH_BAG, np.random.default_rng(7))
        assert first == second


@pytest.mark.unit
class TestPhaseTimers:
    """Test tick_phase and phase ordering."""

    def test_delay_expires_to_exit(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout, delay=2.0)
        for _ in range(39):
            tick_phase(agent, 0.05)
        assert agent.phase is AgentPhase.DELAYED
        tick_phase(agent, 0.05)
        assert agent.phase is AgentPhase.MOVING_TO_EXIT
        assert agent.timer == 0.0

    def test_delay_expires_to_bag_spot(self, corridor_layout):
        agent = make_agent(
            0, (6.165, 1.93), corridor_layout, kind=ProfileKind.WITH_BAG, delay=2.0
        )
        tick_phase(agent, 2.0)
        assert agent.phase is AgentPhase.MOVING_TO_BAG_SPOT

    def test_moving_phases_have_no_timer(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout, delay=2.0)
        tick_phase(agent, 2.0)
        tick_phase(agent, 5.0)
        assert agent.phase is AgentPhase.MOVING_TO_EXIT
        assert agent.timer == 0.0

    def test_bag_timer_runs_out_on_the_last_tick(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout)
        agent.enter(AgentPhase.COLLECTING_BAG)
        agent.timer = 2.3
        for _ in range(45):
            tick_phase(agent, 0.05)
        assert agent.phase is AgentPhase.COLLECTING_BAG
        tick_phase(agent, 0.05)
        assert agent.phase is AgentPhase.MOVING_TO_EXIT

    def test_rejects_non_positive_dt(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout)
        with pytest.raises(ValueError):
            tick_phase(agent, 0.0)

    def test_phases_never_go_back(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout)
        agent.enter(AgentPhase.MOVING_TO_EXIT)
        with pytest.raises(ValueError):
            agent.enter(AgentPhase.DELAYED)

    def test_evacuate(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout)
        agent.enter(AgentPhase.MOVING_TO_EXIT)
        agent.evacuate(12.5)

        assert not agent.onboard
        assert agent.evacuated_at == 12.5
        assert agent.phases_visited == [
            AgentPhase.DELAYED,
            AgentPhase.MOVING_TO_EXIT,
            AgentPhase.EVACUATED,
        ]
        assert phase_sequence_is_monotone(agent.phases_visited)

    def test_monotone_check(self):
        assert phase_sequence_is_monotone([AgentPhase.DELAYED, AgentPhase.EVACUATED])
        assert not phase_sequence_is_monotone(
            [AgentPhase.MOVING_TO_EXIT, AgentPhase.COLLECTING_BAG]
        )
        assert not phase_sequence_is_monotone(
            [AgentPhase.DELAYED, AgentPhase.DELAYED]
        )


@pytest.mark.unit
class TestBagSpot:
    """Test the choice of where a bag is collected."""

    def test_nearest_aisle_point_keeps_wall_clearance(self, corridor_layout):
        agent = make_agent(0, (6.165, 2.36), corridor_layout, kind=ProfileKind.WITH_BAG)
        point, region = bag_spot(corridor_layout, agent)

        assert region == 1
        assert point == pytest.approx((6.165, 1.505))

    def test_agent_already_in_aisle(self, corridor_layout):
        agent = make_agent(0, (5.0, 1.5), corridor_layout, kind=ProfileKind.WITH_BAG)
        point, region = bag_spot(corridor_layout, agent)

        assert region == 1
        assert point == (5.0, 1.5)


@pytest.mark.unit
class TestNextGoal:
    """Test goal selection and the phase changes it drives."""

    def test_wait_while_delayed(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout, delay=3.0)
        goal = next_goal(agent, corridor_layout)
        assert goal.kind is GoalKind.WAIT
        assert goal.target == agent.position

    def test_heads_into_aisle(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout, delay=2.0)
        tick_phase(agent, 2.0)
        goal = next_goal(agent, corridor_layout)

        assert goal.kind is GoalKind.MOVE
        assert goal.target == pytest.approx((6.165, 1.505))
        assert [w.portal_id for w in agent.waypoints[:-1]] == [1, 0]

    def test_replans_after_region_change(self, corridor_layout):
        agent = make_agent(0, (6.165, 1.93), corridor_layout, delay=2.0)
        tick_phase(agent, 2.0)
        next_goal(agent, corridor_layout)

        agent.position = (6.165, 1.55)
        agent.region_id = 1
        agent.waypoints = []
        goal = next_goal(agent, corridor_layout)

        assert goal.target == pytest.approx((2.75, 1.5))

    def test_exit_waypoint_steers_past_door(self, corridor_layout):
        agent = make_agent(0, (1.5, 1.5), corridor_layout, delay=2.0)
        tick_phase(agent, 2.0)
        goal = next_goal(agent, corridor_layout)
        assert goal.target == pytest.approx((1.5, -1.0))

    def test_despawn_past_exit(self, corridor_layout):
        agent = make_agent(0, (1.5, 1.5), corridor_layout, delay=2.0)
        tick_phase(agent, 2.0)
        agent.position = (1.5, -0.1)
        assert next_goal(agent, corridor_layout).kind is GoalKind.DESPAWN

    def test_bag_collection_cycle(self, corridor_layout):
        agent = make_agent(
            0,
            (6.165, 2.36),
            corridor_layout,
            kind=ProfileKind.WITH_BAG,
            delay=2.0,
            bag_wait=3.0,
        )
        tick_phase(agent, 2.0)
        goal = next_goal(agent, corridor_layout)

        assert agent.phase is AgentPhase.MOVING_TO_BAG_SPOT
        assert goal.kind is GoalKind.MOVE
        assert goal.stop_at_target
        assert goal.target == pytest.approx((6.165, 1.505))

        agent.position = (6.165, 1.6)
        agent.region_id = 1
        goal = next_goal(agent, corridor_layout)

        assert agent.phase is AgentPhase.COLLECTING_BAG
        assert agent.timer == 3.0
        assert goal.kind is GoalKind.WAIT

        tick_phase(agent, 3.0)
        assert agent.phase is AgentPhase.MOVING_TO_EXIT
        assert next_goal(agent, corridor_layout).kind is GoalKind.MOVE
        assert agent.phases_visited == [
            AgentPhase.DELAYED,
            AgentPhase.MOVING_TO_BAG_SPOT,
            AgentPhase.COLLECTING_BAG,
            AgentPhase.MOVING_TO_EXIT,
        ]

    def test_evacuated_agent_despawns(self, corridor_layout):
        agent = make_agent(0, (1.5, 1.5), corridor_layout)
        agent.enter(AgentPhase.MOVING_TO_EXIT)
        agent.evacuate(1.0)
        assert next_goal(agent, corridor_layout).kind is GoalKind.DESPAWN


@pytest.mark.unit
class TestKeepRoute:
    """Test waypoint bookkeeping when an agent changes region."""

    def leaving_row(self, layout):
        agent = make_agent(0, (6.165, 1.93), layout, delay=2.0)
        tick_phase(agent, 2.0)
        next_goal(agent, layout)
        return agent

    def test_doorway_target_kept_after_entering(self, corridor_layout):
        agent = self.leaving_row(corridor_layout)
        keep_route(agent, corridor_layout, 1)
        assert [w.portal_id for w in agent.waypoints[:-1]] == [1, 0]

    def test_pushed_back_through_portal_keeps_route(self, corridor_layout):
        agent = self.leaving_row(corridor_layout)
        before = list(agent.waypoints)
        keep_route(agent, corridor_layout, 2)
        assert agent.waypoints == before

    def test_skipping_ahead_drops_earlier_waypoints(self, corridor_layout):
        agent = self.leaving_row(corridor_layout)
        keep_route(agent, corridor_layout, 0)
        assert [w.portal_id for w in agent.waypoints] == [0, None]
        assert agent.waypoints[-1].exit_id == "1L"

    def test_region_off_the_route_clears_it(self, corridor_layout):
        agent = self.leaving_row(corridor_layout)
        keep_route(agent, corridor_layout, 0)
        keep_route(agent, corridor_layout, 2)
        assert agent.waypoints == []

    def test_bag_collectors_keep_their_list(self, corridor_layout):
        agent = make_agent(0, (6.165, 2.36), corridor_layout, kind=ProfileKind.WITH_BAG)
        tick_phase(agent, 2.0)
        agent.waypoints = [object()]
        keep_route(agent, corridor_layout, 0)
        assert len(agent.waypoints) == 1


@pytest.mark.unit
class TestRemainingDistance:
    """Test route length left to walk."""

    def test_route_to_exit(self, corridor_layout):
        agent = make_agent(0, (4.0, 1.5), corridor_layout, delay=2.0)
        tick_phase(agent, 2.0)
        next_goal(agent, corridor_layout)
        expected = math.dist((4.0, 1.5), (3.0, 1.5)) + math.dist((3.0, 1.5), (1.5, 0.0))
        assert remaining_distance(agent) == pytest.approx(expected)

    def test_route_to_bag_spot(self, corridor_layout):
        agent = make_agent(0, (6.165, 2.36), corridor_layout, kind=ProfileKind.WITH_BAG)
        tick_phase(agent, 2.0)
        next_goal(agent, corridor_layout)
        assert remaining_distance(agent) == pytest.approx(2.36 - 1.505)

    def test_no_route_yet(self, corridor_layout):
        agent = make_agent(0, (4.0, 1.5), corridor_layout)
        assert remaining_distance(agent) == 0.0


@pytest.mark.unit
class TestKinematics:
    """Test speed and heading helpers."""

    def test_max_speed_uses_lobby_modifier(self, corridor_layout):
        agent = make_agent(0, (1.0, 1.0), corridor_layout, free_speed=2.0)
        assert max_speed(agent.profile) == pytest.approx(3.084)

    def test_heading(self):
        ux, uy, d = heading((0.0, 0.0), (3.0, 4.0))
        assert (ux, uy, d) == pytest.approx((0.6, 0.8, 5.0))

    def test_heading_at_target(self):
        assert heading((1.0, 1.0), (1.0, 1.0)) == (0.0, 0.0, 0.0)

"""World layer: kinematics, geometry, routes, observations, events, termination."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefdrive.world.env import NEUTRAL_ACTION, OBS_DIM, DrivingWorld, WorldConfig
from prefdrive.world.geometry import (Polyline, arc_points, raycast, rect_corners,
                                      rects_overlap, straight_points, wrap_angle)
from prefdrive.world.routes import (ENV_COLLIDE_LEFT, ENV_COLLIDE_RIGHT, OFF_ROAD_LEFT,
                                    OFF_ROAD_RIGHT, ONCOMING_CENTER, SCENARIOS,
                                    build_scenario)
from prefdrive.world.vehicle import (DT, MAX_STEER_RAD, VehicleParams, VehicleState,
                                     place_on_pose, split_control, state_to_dict,
                                     step_vehicle)

QUIET = dict(traffic_density=0.0, obstacle_density=0.0)


def place(env: DrivingWorld, s: float, lateral: float, v: float = 0.0,
          heading_offset: float = 0.0) -> None:
    """Teleport the ego to lane coordinates (s, lateral) mid-episode."""
    x, y, h = env.route.frame_at(s, lateral)
    env.ego = place_on_pose(x, y, h + heading_offset, v)
    env.prev_ego = env.ego
    env.s = s
    idx = int(np.searchsorted(env.route.center.cum_s, s, side="right")) - 1
    env.hint = max(0, min(idx, env.route.center.n_segments - 1))


class TestControlSplit:
    def test_full_throttle(self):
        assert split_control(1.0) == (1.0, 0.0)

    def test_coast_point(self):
        assert split_control(-0.5) == (0.0, 0.0)

    def test_full_brake(self):
        assert split_control(-1.0) == (0.0, 1.0)

    def test_linear_throttle_segment(self):
        t, b = split_control(0.25)
        assert t == pytest.approx((0.25 + 0.5) / 1.5) and b == 0.0
        assert split_control(1.0)[0] == 1.0 and split_control(-0.5)[0] == 0.0

    def test_linear_brake_segment(self):
        t, b = split_control(-0.75)
        assert t == 0.0 and b == pytest.approx(0.5)

    def test_clips_out_of_range(self):
        assert split_control(3.0) == (1.0, 0.0)
        assert split_control(-3.0) == (0.0, 1.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-1.0, 1.0))
    def test_never_both_active(self, u):
        t, b = split_control(u)
        assert 0.0 <= t <= 1.0 and 0.0 <= b <= 1.0
        assert t * b == 0.0


class TestVehicleStep:
    def test_full_lock_turns_heading_by_max_per_tick(self):
        s0 = VehicleState()
        left = step_vehicle(s0, steer=1.0, pedal=-0.5)
        right = step_vehicle(s0, steer=-1.0, pedal=-0.5)
        assert left.heading == pytest.approx(MAX_STEER_RAD)
        assert right.heading == pytest.approx(-MAX_STEER_RAD)
        assert math.degrees(MAX_STEER_RAD) == pytest.approx(11.0)

    def test_first_order_accel_lag(self):
        p = VehicleParams()
        s0 = VehicleState(v=5.0, a_long=0.0)
        s1 = step_vehicle(s0, steer=0.0, pedal=1.0, params=p)
        a_cmd = p.a_max - p.drag * 5.0
        alpha = DT / p.tau_acc
        assert s1.a_long == pytest.approx(alpha * a_cmd)
        s2 = step_vehicle(s1, steer=0.0, pedal=1.0, params=p)
        a_cmd2 = p.a_max - p.drag * s1.v
        assert s2.a_long == pytest.approx(s1.a_long + alpha * (a_cmd2 - s1.a_long))

    def test_braking_monotone_until_standstill(self):
        s = VehicleState(v=10.0)
        speeds = [s.v]
        for _ in range(200):
            s = step_vehicle(s, steer=0.0, pedal=-1.0)
            speeds.append(s.v)
        assert all(b <= a for a, b in zip(speeds, speeds[1:]))
        assert speeds[-1] == 0.0

    def test_speed_clamp_recomputes_accel(self):
        s = VehicleState(v=0.05, a_long=-3.0)
        s1 = step_vehicle(s, steer=0.0, pedal=-1.0)
        assert s1.v == 0.0
        assert s1.a_long == pytest.approx(-0.05 / DT)

    def test_no_reverse(self):
        s = VehicleState(v=0.0)
        for _ in range(20):
            s = step_vehicle(s, steer=0.0, pedal=-1.0)
        assert s.v == 0.0

    def test_coasting_drag_only(self):
        p = VehicleParams()
        s0 = VehicleState(v=8.0, a_long=0.0)
        s1 = step_vehicle(s0, steer=0.0, pedal=-0.5, params=p)
        assert s1.a_long == pytest.approx((DT / p.tau_acc) * (-p.drag * 8.0))

    def test_lateral_accel_is_v_times_yaw_rate(self):
        s0 = VehicleState(v=6.0)
        s1 = step_vehicle(s0, steer=0.5, pedal=-0.5)
        assert s1.yaw_rate == pytest.approx(0.5 * MAX_STEER_RAD / DT)
        assert s1.a_lat == pytest.approx(s1.v * s1.yaw_rate)

    def test_position_uses_updated_speed_and_heading(self):
        s0 = VehicleState(x=1.0, y=2.0, heading=0.0, v=5.0)
        s1 = step_vehicle(s0, steer=1.0, pedal=1.0)
        assert s1.x == pytest.approx(1.0 + s1.v * math.cos(s1.heading) * DT)
        assert s1.y == pytest.approx(2.0 + s1.v * math.sin(s1.heading) * DT)

    def test_full_brake_after_full_throttle_still_decelerates(self):
        p = VehicleParams()
        s = VehicleState(v=5.0, a_long=p.a_max)
        s1 = step_vehicle(s, steer=0.0, pedal=-1.0, params=p)
        assert s1.v < 5.0

    def test_state_to_dict_rounds(self):
        d = state_to_dict(VehicleState(x=1.23456789, v=2.0))
        assert d["x"] == 1.234568 and d["v"] == 2.0


class TestGeometry:
    def test_wrap_angle(self):
        assert wrap_angle(0.0) == 0.0
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(math.pi + 0.1) == pytest.approx(-math.pi + 0.1)

    def test_projection_sign_left_positive(self):
        line = Polyline(straight_points((0.0, 0.0), 0.0, 20.0))
        s, lat, _ = line.project(np.array([5.0, 2.0]))
        assert s == pytest.approx(5.0) and lat == pytest.approx(2.0)
        s, lat, _ = line.project(np.array([7.5, -1.0]))
        assert s == pytest.approx(7.5) and lat == pytest.approx(-1.0)

    def test_projection_clamps_to_ends(self):
        line = Polyline(straight_points((0.0, 0.0), 0.0, 10.0))
        s, lat, _ = line.project(np.array([-3.0, 0.0]))
        assert s == 0.0
        s, lat, _ = line.project(np.array([13.0, 0.0]))
        assert s == pytest.approx(10.0)

    def test_arc_points_turn_left_and_right(self):
        left = arc_points((0.0, 0.0), 0.0, radius=10.0, sweep=math.pi / 2)
        assert left[-1] == pytest.approx([10.0, 10.0], abs=1e-9)
        right = arc_points((0.0, 0.0), 0.0, radius=10.0, sweep=-math.pi / 2)
        assert right[-1] == pytest.approx([10.0, -10.0], abs=1e-9)

    def test_offset_is_parallel(self):
        line = Polyline(straight_points((0.0, 0.0), 0.0, 20.0))
        off = line.offset(3.0)
        assert np.allclose(off.points[:, 1], 3.0)

    def test_raycast_hand_geometry(self):
        wall = np.array([[10.0, -5.0, 10.0, 5.0]])
        cls = np.array([2])
        ang = math.radians(20.0)
        dist, hit_cls = raycast((0.0, 0.0), [0.0, ang, math.pi], wall, cls, 50.0)
        assert dist[0] == pytest.approx(10.0)
        assert dist[1] == pytest.approx(10.0 / math.cos(ang))
        assert dist[2] == 50.0  # facing away
        assert hit_cls.tolist() == [2, 2, 0]

    def test_raycast_nearest_of_two(self):
        walls = np.array([[10.0, -5.0, 10.0, 5.0],
                          [4.0, -5.0, 4.0, 5.0]])
        dist, hit_cls = raycast((0.0, 0.0), [0.0], walls, np.array([2, 1]), 50.0)
        assert dist[0] == pytest.approx(4.0)
        assert hit_cls[0] == 1

    def test_rects_overlap(self):
        a = rect_corners(0.0, 0.0, 0.0, 4.0, 2.0)
        b = rect_corners(3.0, 0.0, 0.0, 4.0, 2.0)     # overlaps along x
        c = rect_corners(10.0, 0.0, 0.0, 4.0, 2.0)    # far away
        d = rect_corners(0.0, 2.5, math.pi / 4, 4.0, 2.0)  # rotated, touching band
        assert rects_overlap(a, b)
        assert not rects_overlap(a, c)
        assert rects_overlap(a, d)


class TestRoutes:
    def test_scenarios_build_and_are_deterministic(self):
        for sid, spec in SCENARIOS.items():
            r1, spec1 = build_scenario(sid)
            r2, _ = build_scenario(sid)
            assert spec1 is spec
            assert np.array_equal(r1.center.points, r2.center.points)
            assert r1.n_waypoints == int(spec.length // 5.0) + 1
            assert r1.goal_s == pytest.approx(5.0 * (r1.n_waypoints - 1))
            assert r1.center.length >= r1.goal_s

    def test_invalid_scenario_rejected(self):
        with pytest.raises(ValueError):
            build_scenario(0)
        with pytest.raises(ValueError):
            build_scenario(8)

    def test_waypoint_spacing(self):
        route, _ = build_scenario(1)
        assert np.allclose(np.diff(route.wp_s), 5.0)
        euclid = np.hypot(*np.diff(route.waypoints, axis=0).T)
        assert np.all(euclid <= 5.0 + 1e-9)
        assert np.all(euclid >= 4.0)  # tight arcs shorten the chord slightly

    def test_default_route_has_500_waypoints(self):
        env = DrivingWorld(WorldConfig())
        env.reset(seed=3)
        assert env.route.n_waypoints == 500
        assert env.route.goal_s == pytest.approx(2495.0)

    def test_scenario3_fixed_course_shape(self):
        route, spec = build_scenario(3)
        assert spec.town == "tee"
        assert spec.traffic_density == 0.0 and spec.obstacle_density == 0.0
        # straight, junction at 90 m, right turn, then later a left turn
        assert not route.junction_at(50.0)
        assert route.junction_at(95.0)
        assert route.center.heading_at(0.0) == pytest.approx(0.0, abs=0.05)
        assert route.center.heading_at(130.0) == pytest.approx(-math.pi / 2, abs=0.1)
        assert route.center.heading_at(280.0) == pytest.approx(0.0, abs=0.1)
        assert route.wp_junction.any()

    def test_limits_in_known_set(self):
        for sid in SCENARIOS:
            route, _ = build_scenario(sid)
            assert set(np.unique(route.point_limits)) <= {5.56, 8.33, 13.89}


class TestObservation:
    def test_vector_dimension(self):
        env = DrivingWorld(WorldConfig(scenario=1))
        _, obs = env.reset(seed=0)
        vec = obs.vector()
        assert OBS_DIM == 154
        assert vec.shape == (154,)
        assert len(obs.f) == 128 and len(obs.o) == 17
        assert len(obs.a_hist) == 6 and len(obs.wp) == 2

    def test_sensor_block_normalized(self):
        env = DrivingWorld(WorldConfig(scenario=2))
        env.reset(seed=1)
        rng = np.random.default_rng(7)
        for _ in range(30):
            _, obs, out = env.step(rng.uniform(-1.0, 1.0, size=2))
            ranges, classes = obs.f[:64], obs.f[64:]
            assert np.all(ranges >= 0.0) and np.all(ranges <= 1.0)
            assert set(np.unique(classes)) <= {0.0, 0.5, 1.0}
            if out.termination:
                break

    def test_action_history_most_recent_first(self):
        env = DrivingWorld(WorldConfig(scenario=1))
        env.reset(seed=0)
        acts = [(0.1, 0.2), (0.3, 0.4), (0.5, 0.6)]
        for a in acts:
            _, obs, _ = env.step(a)
        assert obs.a_hist == pytest.approx([0.5, 0.6, 0.3, 0.4, 0.1, 0.2])

    def test_waypoint_vector_at_reset(self):
        env = DrivingWorld(WorldConfig(scenario=1))
        state, obs = env.reset(seed=0)
        # first target is waypoint 1, five meters ahead on the route
        assert obs.wp[0] == pytest.approx(5.0, abs=0.2)
        assert abs(obs.wp[1]) < 0.2
        assert obs.v_limit in (5.56, 8.33, 13.89)

    def test_two_envs_bit_identical(self):
        cfg = WorldConfig(town="grid", n_waypoints=60)
        a, b = DrivingWorld(cfg), DrivingWorld(cfg)
        _, oa = a.reset(seed=42)
        _, ob = b.reset(seed=42)
        assert np.array_equal(oa.vector(), ob.vector())
        rng = np.random.default_rng(5)
        for _ in range(120):
            act = rng.uniform(-1.0, 1.0, size=2)
            sa, oa, ra = a.step(act)
            sb, ob, rb = b.step(act)
            assert state_to_dict(sa) == state_to_dict(sb)
            assert np.array_equal(oa.vector(), ob.vector())
            assert ra.events == rb.events and ra.termination == rb.termination
            assert a.s == b.s and a.lateral == b.lateral
            if ra.termination:
                break

    def test_reset_reseeds_traffic(self):
        env = DrivingWorld(WorldConfig(scenario=1))
        env.reset(seed=0)
        pos_a = [c.s for c in env.traffic.cars]
        env.reset(seed=1)
        pos_b = [c.s for c in env.traffic.cars]
        env.reset(seed=0)
        pos_a2 = [c.s for c in env.traffic.cars]
        assert pos_a == pos_a2
        assert pos_a != pos_b


class TestLaneEvents:
    @pytest.fixture()
    def env(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=40, **QUIET))
        env.reset(seed=9)
        return env

    def test_in_lane_no_events(self, env):
        place(env, s=30.0, lateral=0.0, v=2.0)
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "off_road" not in out.events
        assert "lane_invasion" not in out.events

    def test_oncoming_lane_invasion(self, env):
        place(env, s=30.0, lateral=ONCOMING_CENTER, v=2.0)
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "lane_invasion" in out.events
        assert "off_road" not in out.events
        assert env.last_context.in_oncoming

    def test_right_shoulder_off_road(self, env):
        place(env, s=30.0, lateral=-2.0, v=2.0)
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "off_road" in out.events
        assert "lane_invasion" not in out.events

    def test_left_shoulder_off_road(self, env):
        place(env, s=30.0, lateral=5.4, v=2.0)
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "off_road" in out.events

    def test_lane_edge_is_not_off_road(self, env):
        place(env, s=30.0, lateral=OFF_ROAD_LEFT + 0.05, v=0.0)
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "off_road" not in out.events

    def test_d_center_uses_nearest_lane(self, env):
        place(env, s=30.0, lateral=3.4, v=0.0)
        env.step(NEUTRAL_ACTION)
        assert env.last_context.d_center == pytest.approx(0.1, abs=0.02)
        assert env.last_context.d_lat == pytest.approx(3.4, abs=0.02)


class TestCollisions:
    def test_left_barrier_contact(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=40, **QUIET))
        env.reset(seed=9)
        place(env, s=30.0, lateral=ENV_COLLIDE_RIGHT + 0.05, v=5.0)
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "collision_environment" in out.events
        assert out.termination == "collision"
        assert out.impact_accel == pytest.approx(env.ego.v / DT)
        assert env.done

    def test_right_barrier_contact(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=40, **QUIET))
        env.reset(seed=9)
        place(env, s=30.0, lateral=ENV_COLLIDE_LEFT - 0.05, v=3.0)
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "collision_environment" in out.events
        assert out.termination == "collision"

    def test_parked_obstacle_contact(self):
        env = DrivingWorld(WorldConfig(scenario=1))
        env.reset(seed=4)
        assert env.traffic.obstacles, "scenario 1 spawns parked obstacles"
        ob = env.traffic.obstacles[0]
        s, lat, _ = env.route.center.project(np.array([ob.x, ob.y]))
        place(env, s=s, lateral=lat, v=3.0)
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "collision_environment" in out.events
        assert out.termination == "collision"
        assert out.impact_accel == pytest.approx(env.ego.v / DT)

    def test_traffic_vehicle_contact_reports_impact(self):
        env = DrivingWorld(WorldConfig(scenario=1))
        env.reset(seed=4)
        assert env.traffic.cars, "scenario 1 spawns traffic"
        car = env.traffic.cars[0]
        x, y, h = env.traffic.car_pose(car)
        s, lat, _ = env.route.center.project(np.array([x, y]))
        place(env, s=s, lateral=lat, v=0.0)
        env.ego = place_on_pose(x, y, h, 0.0)
        env.prev_ego = env.ego
        _, _, out = env.step(NEUTRAL_ACTION)
        assert "collision_vehicle" in out.events
        assert out.termination == "collision"
        assert out.impact_accel > 0.0  # closing speed of the moving car

    def test_step_after_done_raises(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=40, **QUIET))
        env.reset(seed=9)
        place(env, s=30.0, lateral=ENV_COLLIDE_RIGHT + 0.05, v=5.0)
        env.step(NEUTRAL_ACTION)
        with pytest.raises(RuntimeError):
            env.step(NEUTRAL_ACTION)


class TestTerminationPriority:
    """The resolution order, probed directly on the checker."""

    @pytest.fixture()
    def env(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=40, max_steps=250,
                                       **QUIET))
        env.reset(seed=9)
        env.step_count = 300            # stagnation and step-limit both armed
        env.last_progress_step = 0
        return env

    def test_collision_beats_everything(self, env):
        assert env.check_termination(True, 10.0, True) == "collision"

    def test_deviation_beats_stagnation_goal_limit(self, env):
        assert env.check_termination(False, 10.0, True) == "route_deviation"

    def test_stagnation_beats_goal_and_limit(self, env):
        assert env.check_termination(False, 0.0, True) == "stagnation"

    def test_goal_beats_step_limit(self, env):
        env.last_progress_step = env.step_count
        assert env.check_termination(False, 0.0, True) == "goal"

    def test_step_limit_last(self, env):
        env.last_progress_step = env.step_count
        assert env.check_termination(False, 0.0, False) == "step_limit"

    def test_none_when_nothing_fires(self, env):
        env.step_count = 100
        env.last_progress_step = 100
        assert env.check_termination(False, 0.0, False) is None

    def test_deviation_threshold_is_strict(self, env):
        env.last_progress_step = env.step_count
        env.step_count = 10
        env.last_progress_step = 10
        assert env.check_termination(False, 6.01, False) == "route_deviation"
        assert env.check_termination(False, 5.99, False) is None


class TestTerminationIntegration:
    """Each cause reached by actually driving."""

    def test_goal(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=12, **QUIET))
        env.reset(seed=2)
        for _ in range(400):
            _, _, out = env.step((0.0, 0.4))
            if out.termination:
                break
        assert out.termination == "goal"
        assert "goal_reached" in out.events
        assert env.route_completion == 1.0

    def test_stagnation_after_exactly_200_idle_steps(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=12, **QUIET))
        env.reset(seed=2)
        for i in range(1, 201):
            _, _, out = env.step((0.0, -0.5))
            if i < 200:
                assert out.termination is None
        assert out.termination == "stagnation"
        assert env.step_count == 200

    def test_step_limit(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=400, max_steps=60,
                                       **QUIET))
        env.reset(seed=2)
        for _ in range(60):
            _, _, out = env.step((0.0, 0.0))
        assert out.termination == "step_limit"
        assert env.step_count == 60
        assert env.route_completion < 1.0

    def test_route_deviation_through_the_wide_gap(self):
        # The left side has 0.75 m between the 6 m deviation line and the
        # barrier, so a slow leftward drift terminates as route_deviation.
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=40, **QUIET))
        env.reset(seed=9)
        out = None
        for _ in range(12):
            _, _, out = env.step((0.0, 0.1))
        for _ in range(9):
            _, _, out = env.step((1.0, -0.5))
            if out.termination:
                break
        for _ in range(300):
            if out.termination:
                break
            _, _, out = env.step((0.0, -0.42))
        assert out.termination == "route_deviation"
        assert "collision_environment" not in out.events

    def test_collision_with_wall_while_driving(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=40, **QUIET))
        env.reset(seed=9)
        out = None
        for _ in range(400):
            _, _, out = env.step((-0.35, 0.5))  # arc hard right into the barrier
            if out.termination:
                break
        assert out.termination == "collision"
        assert "collision_environment" in out.events


class TestContextPlumbing:
    def test_progress_and_targets(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=40, **QUIET))
        env.reset(seed=9)
        place(env, s=20.0, lateral=0.0, v=8.0)
        prev_s = env.s
        env.step((0.0, 0.2))
        ctx = env.last_context
        assert ctx.p_prog == pytest.approx((env.s - prev_s) / 5.0)
        assert ctx.v_target == env.route.limit_at(env.s)
        assert ctx.v_max == pytest.approx(float(np.max(env.route.point_limits)))
        assert ctx.dt == DT
        assert ctx.d_route == 0.0  # on the lane, within the 1 m dead-band

    def test_waypoint_events_fire_in_order(self):
        env = DrivingWorld(WorldConfig(town="grid", n_waypoints=12, **QUIET))
        env.reset(seed=2)
        seen = 0
        for _ in range(400):
            _, _, out = env.step((0.0, 0.4))
            if "waypoint_reached" in out.events:
                seen += 1
            if out.termination:
                break
        assert out.termination == "goal"
        assert seen >= 5  # several distinct waypoint crossings on the way

"""WebSocket telemetry server: drive a trained policy, stream frames.

One process hosts one live episode. The first client connecting with
``?role=controller`` may send ``set_preference`` and ``reset`` messages;
any number of viewers receive the same frame stream. Preference changes
take effect at the next environment step, and episodes restart
automatically (fresh seed) when they terminate, so the stream never ends.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .agent.preferences import validate_preference
from .agent.td3 import PDMORLAgent
from .rewards import RewardParams, assemble, jerk_vector
from .world.env import DrivingWorld, WorldConfig
from .world.vehicle import DT

#: Points along route polylines are thinned to this stride for the wire.
ROUTE_STRIDE = 3


def parse_speed(text: str) -> float:
    """``REAL`` plays at wall-clock rate; ``xN`` plays N times faster."""
    if text.upper() == "REAL":
        return 1.0
    if text.lower().startswith("x"):
        factor = float(text[1:])
        if factor <= 0:
            raise ValueError("speed factor must be positive")
        return factor
    raise ValueError(f"speed must be REAL or xN, got {text!r}")


def _round_list(values, nd: int = 5) -> list[float]:
    return [round(float(v), nd) for v in np.asarray(values).ravel()]


class ServeSession:
    """Mutable state shared by the step loop and the socket handlers."""

    def __init__(self, agent: PDMORLAgent, world_config: WorldConfig,
                 reward_params: RewardParams | None = None,
                 speed: float = 1.0, base_seed: int = 90_000):
        self.agent = agent
        self.world_config = world_config
        self.reward_params = reward_params if reward_params is not None else RewardParams()
        self.interval = DT / speed
        self.lam = np.full(4, 0.25)
        self.pending_lam: np.ndarray | None = None
        self.pending_reset: dict[str, Any] | None = None
        self.clients: list[WebSocket] = []
        self.controller: WebSocket | None = None
        self.episode = 0
        self.step_index = 0
        self._seed = base_seed
        self.env = DrivingWorld(world_config)
        self._obs = None
        self.wake = asyncio.Event()

    # -- lifecycle --------------------------------------------------------

    def start_episode(self, scenario: int | None = None) -> None:
        if scenario is not None and scenario != self.env.config.scenario:
            self.env = DrivingWorld(
                dataclasses.replace(self.env.config, scenario=scenario))
        self._seed += 1
        _, self._obs = self.env.reset(seed=self._seed)
        self.episode += 1
        self.step_index = 0

    def route_message(self) -> dict[str, Any]:
        route = self.env.route
        return {
            "type": "route",
            "episode": self.episode,
            "scenario": self.env.config.scenario,
            "center": [_round_list(p, 2) for p in route.center.points[::ROUTE_STRIDE]],
            "left": [_round_list(p, 2) for p in route.left_barrier.points[::ROUTE_STRIDE]],
            "right": [_round_list(p, 2) for p in route.right_barrier.points[::ROUTE_STRIDE]],
            "goal_s": round(float(route.goal_s), 2),
        }

    def step_once(self) -> dict[str, Any]:
        """Apply pending commands, advance one step, build the frame."""
        if self.pending_lam is not None:
            self.lam = self.pending_lam
            self.pending_lam = None
        action = self.agent.select_action(self._obs.vector(), self.lam)
        state, self._obs, outcome = self.env.step(action)
        ctx = self.env.last_context
        reward = assemble(ctx, self.reward_params)
        self.step_index += 1
        return {
            "type": "frame",
            "episode": self.episode,
            "step": self.step_index,
            "pose": [round(state.x, 4), round(state.y, 4), round(state.heading, 5)],
            "v": round(state.v, 4),
            "a_long": round(state.a_long, 4),
            "a_lat": round(state.a_lat, 4),
            "jerk": _round_list(jerk_vector(ctx), 4),
            "steer": round(state.steer, 4),
            "throttle": round(state.throttle, 4),
            "brake": round(state.brake, 4),
            "lambda": _round_list(self.lam, 6),
            "reward_vector": _round_list(reward, 5),
            "events": sorted(outcome.events),
            "termination": outcome.termination,
            "progress": round(float(self.env.s), 3),
            "route_completion": round(float(self.env.route_completion), 5),
            "d_lat": round(float(self.env.lateral), 4),
            "v_limit": round(float(ctx.v_target), 3),
        }

    # -- client messages ----------------------------------------------------

    def handle_message(self, ws: WebSocket, raw: Any) -> dict[str, Any] | None:
        """Returns an error message to send back, or None on success."""
        if not isinstance(raw, dict) or "type" not in raw:
            return {"type": "error", "reason": "message must be an object with a 'type'"}
        if ws is not self.controller:
            return {"type": "error", "reason": "only the controller may send commands"}
        kind = raw["type"]
        if kind == "set_preference":
            try:
                self.pending_lam = validate_preference(raw.get("lambda"))
            except (ValueError, TypeError) as exc:
                return {"type": "error", "reason": f"invalid preference: {exc}"}
            return None
        if kind == "reset":
            scenario = raw.get("scenario")
            if scenario is not None and (not isinstance(scenario, int)
                                         or not 1 <= scenario <= 7):
                return {"type": "error", "reason": "scenario must be 1..7"}
            self.pending_reset = {"scenario": scenario}
            return None
        return {"type": "error", "reason": f"unknown message type: {kind!r}"}


async def _broadcast(session: ServeSession, message: dict[str, Any]) -> None:
    text = json.dumps(message)
    for ws in list(session.clients):
        try:
            await ws.send_text(text)
        except Exception:
            _drop_client(session, ws)


def _drop_client(session: ServeSession, ws: WebSocket) -> None:
    if ws in session.clients:
        session.clients.remove(ws)
    if session.controller is ws:
        session.controller = None


async def _step_loop(session: ServeSession) -> None:
    while True:
        if not session.clients:
            session.wake.clear()
            await session.wake.wait()
            continue
        if session.pending_reset is not None:
            scenario = session.pending_reset.get("scenario")
            session.pending_reset = None
            session.start_episode(scenario=scenario)
            await _broadcast(session, session.route_message())
        frame = session.step_once()
        await _broadcast(session, frame)
        if frame["termination"] is not None:
            session.start_episode()
            await _broadcast(session, session.route_message())
        await asyncio.sleep(session.interval)


def create_app(agent: PDMORLAgent, world_config: WorldConfig,
               reward_params: RewardParams | None = None,
               speed: float = 1.0) -> FastAPI:
    session = ServeSession(agent, world_config, reward_params, speed=speed)
    session.start_episode()

    @asynccontextmanager
    async def _lifespan(app: FastAPI):
        task = asyncio.create_task(_step_loop(session))
        try:
            yield
        finally:
            task.cancel()

    app = FastAPI(title="preference-driven policy telemetry", lifespan=_lifespan)
    app.state.session = session

    @app.websocket("/ws")
    async def _ws(ws: WebSocket) -> None:
        role = ws.query_params.get("role", "viewer")
        if role not in ("controller", "viewer"):
            await ws.close(code=1008)
            return
        await ws.accept()
        if role == "controller":
            if session.controller is not None:
                await ws.send_text(json.dumps(
                    {"type": "error", "reason": "a controller is already connected"}))
                await ws.close(code=1008)
                return
            session.controller = ws
        session.clients.append(ws)
        session.wake.set()
        await ws.send_text(json.dumps(session.route_message()))
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    message = None
                reply = session.handle_message(ws, message)
                if reply is not None:
                    await ws.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass
        finally:
            _drop_client(session, ws)

    return app


def run_server(checkpoint: str | Path, port: int, speed: str = "REAL",
               scenario: int | None = None, host: str = "127.0.0.1") -> None:
    import uvicorn

    agent = PDMORLAgent.load(checkpoint)
    config = WorldConfig(scenario=scenario)
    app = create_app(agent, config, speed=parse_speed(speed))
    uvicorn.run(app, host=host, port=port, log_level="warning")

"""Dual-agent orchestration: a planning agent proposes an action plan
over the context bundle, an editing agent emits one action per step, and
the loop re-validates constraints with bounded replanning.

Agent endpoints speak an OpenAI-style chat-completion HTTP API or replay
scripted JSON Lines transcripts (one ``{"content": ...}`` record per
response, consumed in order), which keeps the whole loop runnable
offline and deterministic.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from . import geometry, render
from .constraints import (
    CompileConfig,
    ConstraintReport,
    ConstraintSet,
    GeometryParams,
    compile_constraints,
    evaluate,
)
from .editenv import (
    Action,
    ActionOutcome,
    EnvConfig,
    EpisodeLog,
    LogEntry,
    apply_action,
    scene_hash,
)
from .scene import SceneGraph, scene_to_json

logger = logging.getLogger(__name__)

_RECENT_OUTCOMES = 5


class TransportError(Exception):
    pass


class PlanParseFailure(Exception):
    pass


class PlanValidationFailure(Exception):
    def __init__(self, message: str, object_id: str | None = None):
        super().__init__(message)
        self.object_id = object_id


class ActionParseFailure(Exception):
    pass


class EpisodeFailed(Exception):
    """Hard constraints unsatisfied after the feedback-round budget."""

    def __init__(self, report: ConstraintReport, scene: SceneGraph, log: EpisodeLog):
        super().__init__(f"episode failed: {report.summary()}")
        self.report = report
        self.scene = scene
        self.log = log


class Role(str, Enum):
    EVALUATOR = "evaluator"
    EDITOR = "editor"
    JUDGE = "judge"


def load_prompt(name: str) -> str:
    return (resources.files("sceneloop") / "prompts" / f"{name}.txt").read_text("utf-8")


class MockTransport:
    """Replays scripted responses in order; raises when exhausted."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self._cursor = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "MockTransport":
        responses = []
        for i, line in enumerate(Path(path).read_text("utf-8").splitlines()):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                responses.append(str(rec["content"]))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise TransportError(f"{path}:{i + 1}: bad transcript record: {e}") from e
        return cls(responses)

    def complete(self, messages: list[dict]) -> str:
        if self._cursor >= len(self._responses):
            raise TransportError(
                f"mock transcript exhausted after {self._cursor} responses"
            )
        out = self._responses[self._cursor]
        self._cursor += 1
        return out


class CallableTransport:
    """Adapts a plain function (messages -> text); used in tests."""

    def __init__(self, fn):
        self._fn = fn

    def complete(self, messages: list[dict]) -> str:
        return self._fn(messages)


class HttpTransport:
    """OpenAI-style chat-completion client."""

    def __init__(self, base_url: str, model: str, auth_env: str | None = None,
                 temperature: float = 0.0, max_tokens: int = 2048, timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.auth_env = auth_env
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout = timeout

    def complete(self, messages: list[dict]) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env)
            if not token:
                raise TransportError(f"auth environment variable {self.auth_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        try:
            resp = requests.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as e:
            raise TransportError(f"request failed: {e}") from e
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:300]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as e:
            raise TransportError(f"malformed completion response: {e}") from e


@dataclass
class AgentEndpoint:
    """Descriptor for one agent seat: either an HTTP transport or a
    scripted mock transcript, never both."""

    role: Role
    base_url: str | None = None
    model: str | None = None
    auth_env: str | None = None
    temperature: float = 0.0
    max_tokens: int = 2048
    accepts_images: bool = False
    mock_path: str | Path | None = None

    def __post_init__(self):
        has_http = self.base_url is not None
        has_mock = self.mock_path is not None
        if has_http == has_mock:
            raise ValueError("exactly one of base_url or mock_path must be set")
        if has_http and not self.model:
            raise ValueError("HTTP endpoints need a model name")

    def build_transport(self):
        if self.mock_path is not None:
            return MockTransport.from_file(self.mock_path)
        return HttpTransport(
            self.base_url, self.model, self.auth_env, self.temperature, self.max_tokens
        )

    @classmethod
    def from_json(cls, role: Role, d: dict) -> "AgentEndpoint":
        return cls(
            role=role,
            base_url=d.get("base_url"),
            model=d.get("model"),
            auth_env=d.get("auth_env"),
            temperature=float(d.get("temperature", 0.0)),
            max_tokens=int(d.get("max_tokens", 2048)),
            accepts_images=bool(d.get("accepts_images", False)),
            mock_path=d.get("mock_path"),
        )


@dataclass
class AgentEndpoints:
    evaluator: AgentEndpoint
    editor: AgentEndpoint


@dataclass
class LoopConfig:
    max_plan_length: int = 30
    max_feedback_rounds: int = 3
    editor_retry_limit: int = 2
    collision_checking: bool = True

    def __post_init__(self):
        if min(self.max_plan_length, self.max_feedback_rounds, self.editor_retry_limit) < 1:
            raise ValueError("loop bounds must be positive")


@dataclass
class ContextBundle:
    """Everything an agent sees: scene, constraints, rendered views,
    the latest constraint report, and recent action outcomes."""

    scene: SceneGraph
    constraints: ConstraintSet
    views: list[Path] = field(default_factory=list)
    latest_report: ConstraintReport | None = None
    recent_outcomes: list[tuple[Action, ActionOutcome]] = field(default_factory=list)

    def __post_init__(self):
        self.views = [Path(v) for v in self.views]
        missing = [str(v) for v in self.views if not v.exists()]
        if missing:
            raise ValueError(f"bundle views do not exist: {missing}")


@dataclass
class Plan:
    actions: tuple[Action, ...]
    rationale: str = ""

    def __post_init__(self):
        self.actions = tuple(self.actions)


def extract_json(text: str):
    """Pull the first JSON object out of model output: whole-string,
    fenced block, or balanced-brace scan."""
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "```" in text:
        for chunk in text.split("```")[1::2]:
            chunk = chunk.strip()
            if chunk.startswith("json"):
                chunk = chunk[4:].strip()
            try:
                return json.loads(chunk)
            except json.JSONDecodeError:
                continue
    start = text.find("{")
    while start != -1:
        depth = 0
        for i in range(start, len(text)):
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
                if depth == 0:
                    try:
                        return json.loads(text[start : i + 1])
                    except json.JSONDecodeError:
                        break
        start = text.find("{", start + 1)
    raise ValueError("no JSON object found in output")


def _outcome_lines(recent: list[tuple[Action, ActionOutcome]]) -> str:
    if not recent:
        return "none"
    lines = []
    for action, outcome in recent[-_RECENT_OUTCOMES:]:
        verdict = "accepted" if outcome.accepted else f"rejected ({outcome.reason.value})"
        extra = f" colliding={list(outcome.colliding_ids)}" if outcome.colliding_ids else ""
        lines.append(f"- {json.dumps(action.to_json())} -> {verdict}{extra}")
    return "\n".join(lines)


def bundle_text(bundle: ContextBundle, goal: str) -> str:
    grid = geometry.occupancy_grid(bundle.scene, 0.1)
    sections = [
        f"GOAL: {goal}",
        f"SCENE GRAPH:\n{scene_to_json(bundle.scene)}",
        f"CONSTRAINTS:\n{json.dumps(bundle.constraints.to_json(), ensure_ascii=False)}",
        f"VIEWS: {', '.join(v.name for v in bundle.views) or 'none'}",
        f"OCCUPANCY (top-down, # occupied / . free):\n{render.occupancy_ascii(grid)}",
        f"RECENT ACTION OUTCOMES:\n{_outcome_lines(bundle.recent_outcomes)}",
    ]
    if bundle.latest_report is not None:
        sections.insert(
            3,
            "LATEST CONSTRAINT REPORT:\n"
            + json.dumps(bundle.latest_report.to_json(), ensure_ascii=False),
        )
    return "\n\n".join(sections)


def _user_content(endpoint: AgentEndpoint, text: str, views: list[Path]):
    """Plain text for text-only endpoints; text plus base64 image parts
    when the endpoint accepts image attachments."""
    if not endpoint.accepts_images:
        return text
    parts = [{"type": "text", "text": text}]
    for view in views:
        if view.suffix != ".svg":
            continue
        encoded = base64.b64encode(view.read_bytes()).decode("ascii")
        parts.append(
            {
                "type": "image_url",
                "image_url": {"url": f"data:image/svg+xml;base64,{encoded}"},
            }
        )
    return parts


def _parse_plan(raw: str, scene: SceneGraph, cfg: LoopConfig) -> Plan:
    doc = extract_json(raw)
    if not isinstance(doc, dict) or "actions" not in doc:
        raise ValueError("plan must be a JSON object with an 'actions' array")
    actions_raw = doc["actions"]
    if not isinstance(actions_raw, list):
        raise ValueError("'actions' must be an array")
    actions = [Action.from_json(a) for a in actions_raw]
    plan = Plan(actions=tuple(actions), rationale=str(doc.get("rationale", "")))
    if len(plan.actions) > cfg.max_plan_length:
        raise PlanValidationFailure(
            f"plan length {len(plan.actions)} exceeds max {cfg.max_plan_length}"
        )
    known = set(scene.object_ids())
    for a in plan.actions:
        if a.object_id not in known:
            raise PlanValidationFailure(
                f"plan references unknown object {a.object_id!r}", a.object_id
            )
    return plan


def request_plan(
    evaluator: AgentEndpoint,
    bundle: ContextBundle,
    goal: str,
    cfg: LoopConfig | None = None,
    transport=None,
    extra_context: str = "",
) -> Plan:
    """Ask the planning agent for a full action plan.

    Malformed output gets one reprompt with the parse error appended;
    a second failure raises PlanParseFailure. Plans naming unknown
    objects raise PlanValidationFailure without a reprompt.
    """
    cfg = cfg or LoopConfig()
    transport = transport or evaluator.build_transport()
    text = bundle_text(bundle, goal)
    if extra_context:
        text = f"{text}\n\n{extra_context}"
    messages = [
        {"role": "system", "content": load_prompt("evaluator_plan")},
        {"role": "user", "content": _user_content(evaluator, text, bundle.views)},
    ]
    raw = transport.complete(messages)
    try:
        return _parse_plan(raw, bundle.scene, cfg)
    except PlanValidationFailure:
        raise
    except ValueError as first_err:
        messages.append({"role": "assistant", "content": raw})
        messages.append(
            {
                "role": "user",
                "content": (
                    f"Your previous output could not be parsed: {first_err}. "
                    "Respond with only the JSON plan object."
                ),
            }
        )
        raw = transport.complete(messages)
        try:
            return _parse_plan(raw, bundle.scene, cfg)
        except PlanValidationFailure:
            raise
        except ValueError as second_err:
            raise PlanParseFailure(f"plan unparseable after reprompt: {second_err}") from second_err


def request_action(
    editor: AgentEndpoint,
    state: ContextBundle,
    next_hint: Action,
    goal: str,
    cfg: LoopConfig | None = None,
    transport=None,
) -> Action:
    """Ask the editing agent for the concrete action executing one plan
    step. The editor may adjust parameters but never the operation or
    object id; deviations count against editor_retry_limit."""
    cfg = cfg or LoopConfig()
    transport = transport or editor.build_transport()
    text = (
        f"{bundle_text(state, goal)}\n\n"
        f"PLAN STEP TO EXECUTE:\n{json.dumps(next_hint.to_json())}"
    )
    messages = [
        {"role": "system", "content": load_prompt("editor_step")},
        {"role": "user", "content": _user_content(editor, text, state.views)},
    ]
    last_err: Exception | None = None
    for _attempt in range(cfg.editor_retry_limit + 1):
        raw = transport.complete(messages)
        try:
            doc = extract_json(raw)
            action = Action.from_json(doc)
            if action.object_id != next_hint.object_id:
                raise ValueError(
                    f"editor changed object_id {next_hint.object_id!r} -> {action.object_id!r}"
                )
            if action.operation != next_hint.operation:
                raise ValueError(
                    f"editor changed operation {next_hint.operation.value} -> {action.operation.value}"
                )
            return action
        except ValueError as e:
            last_err = e
            messages.append({"role": "assistant", "content": raw})
            messages.append(
                {
                    "role": "user",
                    "content": (
                        f"Invalid action: {e}. Respond with only one JSON action "
                        f"for object {next_hint.object_id!r}, operation "
                        f"{next_hint.operation.value!r}."
                    ),
                }
            )
    raise ActionParseFailure(f"editor output invalid after retries: {last_err}")


def _dry_run(scene: SceneGraph, plan: Plan, env: EnvConfig) -> list[tuple[Action, ActionOutcome]]:
    outcomes = []
    sim = scene
    for action in plan.actions:
        sim, outcome = apply_action(sim, action, env)
        outcomes.append((action, outcome))
    return outcomes


def _dry_run_text(outcomes: list[tuple[Action, ActionOutcome]]) -> str:
    lines = ["DRY-RUN FORECAST (simulated, nothing applied yet):"]
    for i, (action, outcome) in enumerate(outcomes):
        verdict = "ok" if outcome.accepted else f"REJECTED ({outcome.reason.value})"
        lines.append(f"step {i}: {json.dumps(action.to_json())} -> {verdict}")
    lines.append(
        "Revise the plan if needed and respond with the final JSON plan object."
    )
    return "\n".join(lines)


def run_episode(
    g0: SceneGraph,
    goal: str,
    endpoints: AgentEndpoints,
    cfg: LoopConfig | None = None,
    *,
    env: EnvConfig | None = None,
    compile_cfg: CompileConfig | None = None,
    geo: GeometryParams | None = None,
    workdir: str | Path | None = None,
    rng_seed: int = 0,
) -> tuple[SceneGraph, EpisodeLog, ConstraintReport]:
    """Run one full editing episode: compile constraints, plan, execute
    step by step with feedback, re-validate, and replan up to
    max_feedback_rounds times.

    Returns (final scene, episode log, final report) on success and
    raises EpisodeFailed, carrying the same payload, when hard
    constraints remain unsatisfied after the round budget.
    """
    cfg = cfg or LoopConfig()
    env = env or EnvConfig(collision_checking=cfg.collision_checking)
    compile_cfg = compile_cfg or CompileConfig(collision_enforced=env.collision_checking)
    geo = geo or GeometryParams()
    workdir = Path(workdir) if workdir is not None else Path(tempfile.mkdtemp(prefix="episode_"))
    workdir.mkdir(parents=True, exist_ok=True)

    cs = compile_constraints(goal, g0, compile_cfg)
    evaluator_transport = endpoints.evaluator.build_transport()
    editor_transport = endpoints.editor.build_transport()

    log = EpisodeLog(
        initial_scene_hash=scene_hash(g0),
        rng_seed=rng_seed,
        config=env,
        meta={
            "goal": goal,
            "views_mode": "attached" if endpoints.evaluator.accepts_images else "textual",
            "max_plan_length": cfg.max_plan_length,
            "max_feedback_rounds": cfg.max_feedback_rounds,
        },
    )

    scene = g0
    latest_report: ConstraintReport | None = None
    recent: list[tuple[Action, ActionOutcome]] = []
    t = 0
    rounds_used = 0

    def write_views(step: int) -> list[Path]:
        svg = workdir / f"view_t{step}.svg"
        pgm = workdir / f"occ_t{step}.pgm"
        svg.write_text(render.render_topdown(scene), encoding="utf-8")
        pgm.write_text(
            render.render_occupancy(geometry.occupancy_grid(scene, geo.cell_size)),
            encoding="utf-8",
        )
        return [svg, pgm]

    while True:
        views = write_views(t)
        bundle = ContextBundle(scene, cs, views, latest_report, list(recent))
        plan = request_plan(
            endpoints.evaluator, bundle, goal, cfg, transport=evaluator_transport
        )
        forecast = _dry_run(scene, plan, env)
        if any(not outcome.accepted for _, outcome in forecast):
            # offer the planner its collision/bounds forecast for one
            # confirmation pass before anything is applied
            plan = request_plan(
                endpoints.evaluator,
                bundle,
                goal,
                cfg,
                transport=evaluator_transport,
                extra_context=_dry_run_text(forecast),
            )

        for hint in plan.actions:
            attempts = 0
            while True:
                views = write_views(t)
                bundle = ContextBundle(scene, cs, views, latest_report, list(recent))
                action = request_action(
                    endpoints.editor, bundle, hint, goal, cfg, transport=editor_transport
                )
                scene, outcome = apply_action(scene, action, env)
                log.append(
                    LogEntry(
                        step=t,
                        action=action,
                        outcome=outcome,
                        post_hash=scene_hash(scene),
                        round=rounds_used,
                    )
                )
                recent.append((action, outcome))
                t += 1
                if outcome.accepted or attempts >= cfg.editor_retry_limit:
                    break
                attempts += 1

        latest_report = evaluate(cs, scene, geo)
        log.meta["rounds_used"] = rounds_used
        if latest_report.overall_hard_ok:
            write_views(t)
            return scene, log, latest_report
        if rounds_used >= cfg.max_feedback_rounds:
            write_views(t)
            raise EpisodeFailed(latest_report, scene, log)
        rounds_used += 1
        logger.info(
            "hard constraints unsatisfied, replanning (round %d): %s",
            rounds_used,
            latest_report.summary(),
        )

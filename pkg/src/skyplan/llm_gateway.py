"""Chat-completion client for prompt-driven placement, with an offline mock.

The live path speaks the de facto chat-completions JSON surface over HTTPS;
the mock path replays canned responses and records every request so tests can
assert zero network activity and key hygiene.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import httpx

from .errors import ConfigError, DomainError, GatewayError

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .coverage_map import CoverageMap
    from .placement import PlacementProblem

API_KEY_ENV = "SKYPLAN_LLM_API_KEY"
PROMPT_DIGEST_CAP = 100_000  # bytes

SYSTEM_ROLE_TEXT = (
    "You are a radio network planning assistant. You receive a gridded "
    "per-beam RSRP table and a placement task. Reply with a single fenced "
    "JSON array of [x, y] coordinate pairs and nothing else."
)


@dataclass
class GatewayConfig:
    endpoint_url: str = ""
    model_name: str = ""
    api_key: str | None = None  # None -> read from environment at call time
    timeout: float = 60.0
    max_retries: int = 2
    mock_script: list[str] | None = None
    # Populated in mock mode: one entry per request body sent.
    request_log: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")

    @property
    def is_mock(self) -> bool:
        return self.mock_script is not None

    def resolved_key(self) -> str:
        key = self.api_key or os.environ.get(API_KEY_ENV, "")
        if not key:
            raise ConfigError(
                f"live gateway mode requires an API key ({API_KEY_ENV})"
            )
        return key

    def validate_live(self) -> None:
        if not self.endpoint_url:
            raise ConfigError("live gateway mode requires endpoint_url")
        self.resolved_key()


@dataclass(frozen=True)
class PlacementPrompt:
    task_text: str
    map_digest: str
    response_schema_text: str
    uav_count: int

    @property
    def user_text(self) -> str:
        return f"{self.task_text}\n\n{self.map_digest}\n\n{self.response_schema_text}"


def build_prompt(
    problem: "PlacementProblem", cmap: "CoverageMap", stride: float = 10.0
) -> PlacementPrompt:
    """Render the task description plus a stride-subsampled RSRP digest.

    Deterministic: identical inputs produce byte-identical text.
    """
    if stride < cmap.resolution:
        raise DomainError("digest stride must be >= map resolution")
    x0, x1, y0, y1 = problem.area
    task = (
        f"Task: place {problem.uav_count} UAV relay(s) at altitude "
        f"{cmap.altitude:.2f} m to maximize the sum of per-UAV Shannon rates. "
        f"UAVs sharing a serving beam split the {problem.channel.bandwidth:.2f} Hz "
        f"bandwidth equally. Area: x in [{x0:.2f}, {x1:.2f}] m, "
        f"y in [{y0:.2f}, {y1:.2f}] m. Minimum pairwise separation: "
        f"{problem.min_separation:.2f} m. Noise power: "
        f"{problem.channel.noise_power:.2f} dBm."
    )
    step = max(1, round(stride / cmap.resolution))
    lines = ["beam,x,y,rsrp_dbm"]
    for b in range(cmap.beam_count):
        for iy in range(0, cmap.ny, step):
            for ix in range(0, cmap.nx, step):
                x, y = cmap.node_xy(ix, iy)
                v = cmap.rsrp[b, iy, ix]
                sval = "NaN" if v != v else f"{v:.2f}"
                lines.append(f"{b},{x:.2f},{y:.2f},{sval}")
    digest = "Per-beam RSRP measurements (dBm):\n" + "\n".join(lines)
    if len(digest.encode()) > PROMPT_DIGEST_CAP:
        raise DomainError(
            f"map digest exceeds {PROMPT_DIGEST_CAP} bytes; use a larger stride"
        )
    schema = (
        f"Respond with exactly one fenced JSON array of {problem.uav_count} "
        f"[x, y] pairs, e.g. ```json\n[[10.0, 20.0]]\n```"
    )
    return PlacementPrompt(
        task_text=task,
        map_digest=digest,
        response_schema_text=schema,
        uav_count=problem.uav_count,
    )


_FENCE_RE = re.compile(r"```(?:json)?\s*(\[.*?\])\s*```", re.DOTALL)


def parse_coordinates(text: str, expected_k: int) -> list[tuple[float, float]]:
    """Extract the first fenced JSON array of [x, y] pairs from a reply."""
    m = _FENCE_RE.search(text)
    if not m:
        raise GatewayError("no fenced JSON array found in response")
    try:
        data = json.loads(m.group(1))
    except json.JSONDecodeError as exc:
        raise GatewayError(f"fenced block is not valid JSON: {exc}") from None
    if not isinstance(data, list) or not all(
        isinstance(p, list) and len(p) == 2
        and all(isinstance(v, (int, float)) for v in p)
        for p in data
    ):
        raise GatewayError("response is not an array of [x, y] numeric pairs")
    if len(data) != expected_k:
        raise GatewayError(
            f"expected {expected_k} coordinate pairs, got {len(data)}"
        )
    return [(float(p[0]), float(p[1])) for p in data]


def _send_live(body: dict, cfg: GatewayConfig) -> str:
    headers = {"Authorization": f"Bearer {cfg.resolved_key()}"}
    try:
        resp = httpx.post(
            cfg.endpoint_url, json=body, headers=headers, timeout=cfg.timeout
        )
    except httpx.HTTPError as exc:
        raise GatewayError(f"transport failure: {exc}") from None
    if resp.status_code != 200:
        raise GatewayError(f"endpoint returned HTTP {resp.status_code}")
    try:
        return resp.json()["choices"][0]["message"]["content"]
    except (KeyError, IndexError, ValueError) as exc:
        raise GatewayError(f"malformed completion payload: {exc}") from None


def request_placement(
    prompt: PlacementPrompt, cfg: GatewayConfig
) -> list[tuple[float, float]]:
    """Send one chat completion and parse K coordinate pairs from the reply.

    Retries transport and parse failures up to cfg.max_retries. Mock mode
    consumes cfg.mock_script in order and never touches the network.
    """
    if not cfg.is_mock:
        cfg.validate_live()
    body = {
        "model": cfg.model_name,
        "messages": [
            {"role": "system", "content": SYSTEM_ROLE_TEXT},
            {"role": "user", "content": prompt.user_text},
        ],
        "temperature": 0,
    }
    last: Exception | None = None
    for _ in range(cfg.max_retries + 1):
        if cfg.is_mock:
            cfg.request_log.append(body)
            if not cfg.mock_script:
                raise GatewayError("mock script exhausted")
            content = cfg.mock_script.pop(0)
        else:
            try:
                content = _send_live(body, cfg)
            except GatewayError as exc:
                last = exc
                continue
        try:
            return parse_coordinates(content, prompt.uav_count)
        except GatewayError as exc:
            last = exc
    raise GatewayError(f"placement request failed after retries: {last}")

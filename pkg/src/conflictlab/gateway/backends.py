"""Inference backends: remote multimodal chat, oracle mock, scripted mock.

All backends share one tiny surface — ``backend_id`` plus
``complete(request) -> raw text`` — so the evaluation harness composes
with any of them. The two mocks are deterministic and offline; the
remote backend speaks a chat-completions-style JSON dialect with
base64 data-URL images and enforces timeout, bounded retry with
exponential backoff, a max in-flight cap, and a request-count budget.
"""

from __future__ import annotations

import base64
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Protocol, runtime_checkable

import httpx

from ..errors import (
    BudgetExceeded,
    InconsistentTarget,
    RemoteError,
    Timeout,
    UnknownObservation,
    UnlabeledObservation,
)
from ..metrics import ConfusionMatrix
from ..model import ConflictLabel, Observation
from .request import ChatRequest, PartKind, RequestMode

__all__ = [
    "Backend",
    "invoke",
    "OracleBackend",
    "ScriptedConfusionBackend",
    "scripted_confusion_backend",
    "RemoteConfig",
    "RemoteBackend",
    "png_data_url",
]


@runtime_checkable
class Backend(Protocol):
    """Anything that can answer a chat request with raw text."""

    backend_id: str

    def complete(self, request: ChatRequest) -> str:
        ...


def invoke(backend: Backend, request: ChatRequest) -> str:
    """Send one request through a backend and return the raw reply text.

    Safe for concurrent use whenever the backend is; replies are matched
    back to observations by ``request.observation_id``, so completion
    order never matters.
    """
    return backend.complete(request)


class OracleBackend:
    """Answers with the ground-truth label — the perfect-model mock.

    Composed with the evaluation harness it must produce the identity
    confusion matrix (fp = fn = 0) on any labeled split, which makes it
    the canonical end-to-end smoke check.

    In rationale mode the reply is the same synthesized three-line target
    used for training exports (verdict / explanation / recommendation),
    filled with scene facts when the observation's scenario is known — so
    explanation scoring can be exercised offline end to end.
    """

    def __init__(
        self,
        truth_by_id: Mapping[str, ConflictLabel],
        scenario_by_id: Optional[Mapping[str, "object"]] = None,
    ):
        self._truth = dict(truth_by_id)
        self._scenarios = dict(scenario_by_id or {})
        self.backend_id = "oracle"

    @classmethod
    def from_observations(
        cls,
        observations: Iterable[Observation],
        scenarios: Optional[Mapping[str, "object"]] = None,
    ) -> "OracleBackend":
        """Build from labeled observations; ``scenarios`` maps scenario
        refs to scenario records for fact-based rationale text."""
        truth: dict[str, ConflictLabel] = {}
        by_obs: dict[str, object] = {}
        for obs in observations:
            if obs.ground_truth is None:
                raise UnlabeledObservation(
                    f"observation {obs.id} has no ground truth to mock from"
                )
            truth[obs.id] = obs.ground_truth
            if scenarios and obs.scenario_ref in scenarios:
                by_obs[obs.id] = scenarios[obs.scenario_ref]
        return cls(truth, by_obs)

    def complete(self, request: ChatRequest) -> str:
        try:
            label = self._truth[request.observation_id]
        except KeyError:
            raise UnknownObservation(
                f"oracle backend knows no observation {request.observation_id!r}"
            ) from None
        if request.mode is RequestMode.VERDICT_WITH_RATIONALE:
            # Local import: the exporter module depends on this one.
            from ..finetune import rationale_target

            text, _ = rationale_target(label, self._scenarios.get(request.observation_id))
            return text
        return label.wire


class ScriptedConfusionBackend:
    """Deterministic backend that realizes a prescribed confusion matrix.

    Within each truth class, observations are ordered by id: the first
    ``fn`` conflicts answer "no" (the rest "yes"), and the first ``fp``
    no-conflicts answer "yes" (the rest "no"). Evaluating the same
    observation set against this backend therefore reproduces ``target``
    exactly — which is how recorded confusion matrices are replayed
    through the full pipeline.
    """

    def __init__(self, target: ConfusionMatrix, observations: Iterable[Observation]):
        conflicts: list[str] = []
        no_conflicts: list[str] = []
        for obs in observations:
            if obs.ground_truth is None:
                raise UnlabeledObservation(
                    f"observation {obs.id} has no ground truth; scripted "
                    "backends need fully labeled inputs"
                )
            if obs.ground_truth is ConflictLabel.CONFLICT:
                conflicts.append(obs.id)
            else:
                no_conflicts.append(obs.id)
        conflicts.sort()
        no_conflicts.sort()

        if target.tp + target.fn != len(conflicts):
            raise InconsistentTarget(
                f"target tp+fn = {target.tp + target.fn} but the input has "
                f"{len(conflicts)} conflict observations"
            )
        if target.tn + target.fp != len(no_conflicts):
            raise InconsistentTarget(
                f"target tn+fp = {target.tn + target.fp} but the input has "
                f"{len(no_conflicts)} no-conflict observations"
            )

        answers: dict[str, str] = {}
        for i, oid in enumerate(conflicts):
            answers[oid] = "no" if i < target.fn else "yes"
        for i, oid in enumerate(no_conflicts):
            answers[oid] = "yes" if i < target.fp else "no"
        self._answers = answers
        self.target = target
        self.backend_id = (
            f"scripted-tp{target.tp}-fp{target.fp}-fn{target.fn}-tn{target.tn}"
        )

    def complete(self, request: ChatRequest) -> str:
        try:
            return self._answers[request.observation_id]
        except KeyError:
            raise UnknownObservation(
                f"scripted backend was not built over observation "
                f"{request.observation_id!r}"
            ) from None


def scripted_confusion_backend(
    target: ConfusionMatrix, observations: Iterable[Observation]
) -> ScriptedConfusionBackend:
    """Build a backend whose evaluation reproduces ``target`` exactly.

    Raises:
        InconsistentTarget: target row totals disagree with the class
            totals of ``observations`` (tp+fn must equal the conflict
            count, tn+fp the no-conflict count).
        UnlabeledObservation: an observation lacks ground truth.
    """
    return ScriptedConfusionBackend(target, observations)


@dataclass(frozen=True)
class RemoteConfig:
    """Connection and resilience settings for a hosted chat endpoint."""

    endpoint: str
    model_id: str = ""
    auth_token_env: Optional[str] = None
    timeout_s: float = 60.0
    retries: int = 2
    max_in_flight: int = 4
    request_budget: Optional[int] = None
    backoff_base_s: float = 0.5

    def __post_init__(self) -> None:
        if not self.endpoint:
            raise ValueError("endpoint must be non-empty")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.max_in_flight <= 0:
            raise ValueError("max_in_flight must be positive")
        if self.request_budget is not None and self.request_budget <= 0:
            raise ValueError("request_budget must be positive when set")
        if self.backoff_base_s < 0:
            raise ValueError("backoff_base_s must be >= 0")


def png_data_url(png_bytes: bytes) -> str:
    """Encode PNG bytes as a base64 data URL (the wire form for images)."""
    return "data:image/png;base64," + base64.b64encode(png_bytes).decode("ascii")


def _chat_body(request: ChatRequest, model_id: str) -> dict:
    content: list[dict] = []
    for part in request.user_parts:
        if part.kind is PartKind.IMAGE:
            content.append(
                {"type": "image_url", "image_url": {"url": png_data_url(part.image_bytes)}}
            )
        else:
            content.append({"type": "text", "text": part.text})
    return {
        "model": model_id,
        "temperature": request.params.temperature,
        "max_tokens": request.params.max_answer_tokens,
        "messages": [
            {"role": "system", "content": request.system},
            {"role": "user", "content": content},
        ],
    }


class RemoteBackend:
    """Chat-completions client with retry, concurrency cap, and budget.

    Transient failures (timeouts, HTTP 429, HTTP 5xx) are retried up to
    ``config.retries`` times with deterministic exponential backoff
    (``backoff_base_s * 2**k`` before retry ``k``); other HTTP errors are
    terminal immediately. Every attempt that goes on the wire counts
    against ``request_budget``. At most ``max_in_flight`` requests are
    outstanding at once, so the backend is safe to drive from a thread
    pool. ``transport`` and ``sleeper`` exist so tests can inject faults
    and observe backoff without real waiting.
    """

    def __init__(
        self,
        config: RemoteConfig,
        *,
        transport: Optional[httpx.BaseTransport] = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.backend_id = f"remote:{config.model_id or 'request-model'}"
        self._sleeper = sleeper
        self._semaphore = threading.BoundedSemaphore(config.max_in_flight)
        self._budget_lock = threading.Lock()
        self._spent = 0
        headers = {}
        if config.auth_token_env:
            token = os.environ.get(config.auth_token_env)
            if not token:
                raise RemoteError(
                    f"auth token environment variable {config.auth_token_env!r} "
                    "is not set"
                )
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(
            transport=transport, timeout=config.timeout_s, headers=headers
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RemoteBackend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def requests_sent(self) -> int:
        with self._budget_lock:
            return self._spent

    def _charge_budget(self) -> None:
        with self._budget_lock:
            budget = self.config.request_budget
            if budget is not None and self._spent >= budget:
                raise BudgetExceeded(
                    f"request budget of {budget} exhausted after {self._spent} "
                    "attempts"
                )
            self._spent += 1

    def complete(self, request: ChatRequest) -> str:
        body = _chat_body(request, self.config.model_id or request.model_id)
        attempts = self.config.retries + 1
        last_failure: Optional[str] = None
        timed_out = False
        with self._semaphore:
            for attempt in range(attempts):
                if attempt > 0:
                    self._sleeper(self.config.backoff_base_s * 2 ** (attempt - 1))
                self._charge_budget()
                try:
                    response = self._client.post(self.config.endpoint, json=body)
                except httpx.TimeoutException as exc:
                    timed_out = True
                    last_failure = f"timeout: {exc}"
                    continue
                except httpx.HTTPError as exc:
                    timed_out = False
                    last_failure = f"transport error: {exc}"
                    continue
                if response.status_code == 429 or response.status_code >= 500:
                    timed_out = False
                    last_failure = f"HTTP {response.status_code}"
                    continue
                if response.status_code != 200:
                    raise RemoteError(
                        f"terminal HTTP {response.status_code} for observation "
                        f"{request.observation_id}: {response.text[:200]}"
                    )
                return self._extract_text(response, request.observation_id)
        if timed_out:
            raise Timeout(
                f"observation {request.observation_id}: all {attempts} attempts "
                f"timed out (last: {last_failure})"
            )
        raise RemoteError(
            f"observation {request.observation_id}: no attempt succeeded "
            f"after {attempts} tries (last: {last_failure})"
        )

    @staticmethod
    def _extract_text(response: httpx.Response, observation_id: str) -> str:
        try:
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise RemoteError(
                f"observation {observation_id}: malformed response body: {exc}"
            ) from exc
        if not isinstance(text, str):
            raise RemoteError(
                f"observation {observation_id}: response content is not text"
            )
        return text

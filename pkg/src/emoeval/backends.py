"""Uniform completion interface to every external model.

Each model role (thinker, judge, filter, strategy LM, talker) sits behind
the same contract: a prompt plus media attachments in, text out.  Offline
work uses :class:`FixtureBackend`, a deterministic mock keyed by a stable
hash of the request content, so every pipeline output is a pure function
of inputs and fixtures regardless of parallelism.

Role bindings come from the environment::

    EMOEVAL_BACKEND_URL_<ROLE>       HTTP endpoint for the role
    EMOEVAL_BACKEND_KEY_<ROLE>       bearer credential (optional)
    EMOEVAL_BACKEND_FIXTURES_<ROLE>  fixture directory (mock; wins over URL)

with ROLE one of THINKER, JUDGE, FILTER, SLM, TALKER.  Credentials never
appear in manifests or outputs.
"""

from __future__ import annotations

import hashlib
import os
import random
import threading
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence, runtime_checkable

from .corpus import MediaRef

ROLES = ("THINKER", "JUDGE", "FILTER", "SLM", "TALKER")

ENV_URL = "EMOEVAL_BACKEND_URL_{role}"
ENV_KEY = "EMOEVAL_BACKEND_KEY_{role}"
ENV_FIXTURES = "EMOEVAL_BACKEND_FIXTURES_{role}"


class BackendError(Exception):
    pass


class TransportError(BackendError):
    def __init__(self, attempts: int, detail: str = ""):
        self.attempts = attempts
        message = f"transport failed after {attempts} attempt(s)"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class RateLimited(BackendError):
    pass


class FixtureMiss(BackendError):
    def __init__(self, request_hash: str, prompt_head: str):
        self.request_hash = request_hash
        super().__init__(
            f"no fixture for request hash {request_hash} (prompt starts {prompt_head!r})"
        )


class DispatchError(BackendError):
    def __init__(self, request_id: str, cause: BaseException):
        self.request_id = request_id
        super().__init__(f"request {request_id!r} failed: {cause}")


@dataclass(frozen=True)
class BackendRequest:
    prompt: str
    attachments: tuple[MediaRef, ...] = ()
    params: Mapping[str, Any] = field(default_factory=dict)
    request_id: str = ""

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if not self.request_id:
            raise ValueError("request_id must be non-empty")
        object.__setattr__(self, "attachments", tuple(self.attachments))


@dataclass(frozen=True)
class BackendResponse:
    text: str
    latency_ms: int
    backend_name: str

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be >= 0")


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff_ms: int = 100
    jitter: bool = False

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.base_backoff_ms < 0:
            raise ValueError("base_backoff_ms must be >= 0")

    def backoff_ms(self, attempt: int, rng: random.Random | None = None) -> float:
        """Delay before retry number ``attempt + 1`` (exponential, 1-based)."""
        delay = self.base_backoff_ms * (2 ** (attempt - 1))
        if self.jitter and delay:
            delay *= (rng or random).uniform(0.5, 1.5)
        return delay


@runtime_checkable
class Backend(Protocol):
    name: str

    def complete(self, request: BackendRequest) -> BackendResponse: ...


def request_hash(prompt: str, attachment_uris: Sequence[str] = ()) -> str:
    """Stable content hash keying mock fixtures."""
    digest = hashlib.sha256()
    digest.update(prompt.encode("utf-8"))
    digest.update(b"\x00")
    digest.update("\x1f".join(attachment_uris).encode("utf-8"))
    return digest.hexdigest()


def fixture_path(directory: Path | str, prompt: str, attachment_uris: Sequence[str] = ()) -> Path:
    return Path(directory) / f"{request_hash(prompt, attachment_uris)}.txt"


def write_fixture(
    directory: Path | str, prompt: str, attachment_uris: Sequence[str], text: str
) -> Path:
    """Store a canned response for the given request content; returns its path."""
    path = fixture_path(directory, prompt, attachment_uris)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


class FixtureBackend:
    """Deterministic mock: replies come from a mapping or a fixture directory.

    Unknown requests raise :class:`FixtureMiss` so tests fail loudly
    instead of silently fabricating output.
    """

    def __init__(
        self,
        fixtures: Mapping[str, str] | None = None,
        directory: Path | str | None = None,
        name: str = "fixture",
    ):
        self._fixtures = dict(fixtures or {})
        self._directory = Path(directory) if directory is not None else None
        self.name = name

    def add(self, prompt: str, text: str, attachment_uris: Sequence[str] = ()) -> None:
        self._fixtures[request_hash(prompt, attachment_uris)] = text

    def complete(self, request: BackendRequest) -> BackendResponse:
        key = request_hash(request.prompt, [m.uri for m in request.attachments])
        text = self._fixtures.get(key)
        if text is None and self._directory is not None:
            path = self._directory / f"{key}.txt"
            if path.is_file():
                text = path.read_text(encoding="utf-8")
        if text is None:
            raise FixtureMiss(key, request.prompt[:48])
        return BackendResponse(text=text, latency_ms=0, backend_name=self.name)


class ScriptedBackend:
    """Replays a fixed sequence of replies/exceptions, recording every call."""

    def __init__(self, script: Iterable[str | BaseException], name: str = "scripted"):
        self._script = list(script)
        self._cursor = 0
        self._lock = threading.Lock()
        self.calls: list[BackendRequest] = []
        self.name = name

    def complete(self, request: BackendRequest) -> BackendResponse:
        with self._lock:
            self.calls.append(request)
            if self._cursor >= len(self._script):
                raise TransportError(1, "script exhausted")
            item = self._script[self._cursor]
            self._cursor += 1
        if isinstance(item, BaseException):
            raise item
        return BackendResponse(text=item, latency_ms=0, backend_name=self.name)


class HttpBackend:
    """Thin JSON-over-HTTP adapter.

    Posts ``{"prompt", "params", "attachments"}`` and expects a JSON body
    with a ``text`` field.  HTTP 429 surfaces as :class:`RateLimited`;
    other failures as :class:`TransportError`.
    """

    def __init__(
        self,
        url: str,
        api_key: str | None = None,
        name: str = "http",
        timeout_s: float = 60.0,
        post: Callable[..., Any] | None = None,
    ):
        self.url = url
        self.api_key = api_key
        self.name = name
        self.timeout_s = timeout_s
        if post is None:
            import requests

            post = requests.post
        self._post = post

    def payload(self, request: BackendRequest) -> dict[str, Any]:
        return {
            "prompt": request.prompt,
            "params": dict(request.params),
            "attachments": [m.to_record() for m in request.attachments],
        }

    def complete(self, request: BackendRequest) -> BackendResponse:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        started = time.monotonic()
        try:
            reply = self._post(
                self.url, json=self.payload(request), headers=headers, timeout=self.timeout_s
            )
        except Exception as exc:  # connection/timeout errors from the HTTP stack
            raise TransportError(1, str(exc)) from exc
        latency_ms = int((time.monotonic() - started) * 1000)
        status = getattr(reply, "status_code", 200)
        if status == 429:
            raise RateLimited(f"endpoint {self.url} rate limited the request")
        if status >= 400:
            raise TransportError(1, f"HTTP {status}")
        try:
            body = reply.json()
            text = body["text"]
        except Exception as exc:
            raise TransportError(1, f"reply body not usable: {exc}") from exc
        return BackendResponse(text=text, latency_ms=latency_ms, backend_name=self.name)


class RetryingBackend:
    """Wraps a backend with bounded exponential-backoff transport retries.

    Transient failures (:class:`TransportError`, :class:`RateLimited`) are
    retried up to the policy's attempt budget; anything else propagates
    immediately.
    """

    def __init__(
        self,
        inner: Backend,
        policy: RetryPolicy,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.inner = inner
        self.policy = policy
        self._sleep = sleep
        self._rng = rng

    @property
    def name(self) -> str:
        return self.inner.name

    def complete(self, request: BackendRequest) -> BackendResponse:
        for attempt in range(1, self.policy.max_attempts + 1):
            try:
                return self.inner.complete(request)
            except (TransportError, RateLimited) as exc:
                if attempt == self.policy.max_attempts:
                    raise TransportError(attempt, str(exc)) from exc
                delay_ms = self.policy.backoff_ms(attempt, self._rng)
                if delay_ms:
                    self._sleep(delay_ms / 1000.0)
        raise AssertionError("unreachable")


def dispatch_all(
    backend: Backend,
    requests: Sequence[BackendRequest],
    max_in_flight: int,
    min_interval_ms: int = 0,
) -> dict[str, BackendResponse]:
    """Complete every request with bounded fan-out; results keyed by id.

    At most ``max_in_flight`` requests are outstanding at once and, when a
    rate is configured, request starts are at least ``min_interval_ms``
    apart.  The first error cancels all unstarted work and is raised as a
    :class:`DispatchError` naming the failing request.
    """
    if max_in_flight < 1:
        raise ValueError("max_in_flight must be >= 1")
    ids = [r.request_id for r in requests]
    if len(set(ids)) != len(ids):
        raise ValueError("request_id values must be unique within a dispatch")
    if not requests:
        return {}

    throttle = threading.Lock()
    next_start = [0.0]

    def call(req: BackendRequest) -> BackendResponse:
        if min_interval_ms:
            with throttle:
                now = time.monotonic()
                delay = max(0.0, next_start[0] - now)
                next_start[0] = max(now, next_start[0]) + min_interval_ms / 1000.0
            if delay:
                time.sleep(delay)
        return backend.complete(req)

    results: dict[str, BackendResponse] = {}
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        futures = {pool.submit(call, req): req.request_id for req in requests}
        done, pending = wait(futures, return_when=FIRST_EXCEPTION)
        failed = next((f for f in done if f.exception() is not None), None)
        if failed is not None:
            for fut in pending:
                fut.cancel()
            raise DispatchError(futures[failed], failed.exception()) from failed.exception()
        for fut in done:
            results[futures[fut]] = fut.result()
    return results


def resolve_backend(role: str, env: Mapping[str, str] | None = None) -> Backend | None:
    """Build the backend bound to ``role`` from environment variables.

    Fixture bindings win over URL bindings so tests and offline runs can
    shadow a configured endpoint.  Returns None when the role is unbound.
    """
    env = os.environ if env is None else env
    role = role.upper()
    fixtures = env.get(ENV_FIXTURES.format(role=role))
    if fixtures:
        return FixtureBackend(directory=fixtures, name=f"fixture:{role.lower()}")
    url = env.get(ENV_URL.format(role=role))
    if url:
        key = env.get(ENV_KEY.format(role=role))
        return HttpBackend(url=url, api_key=key, name=f"http:{role.lower()}")
    return None

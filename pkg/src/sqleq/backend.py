"""Completion backends: a chat-completion HTTP client and a scripted mock.

The HTTP client speaks the common chat-completion JSON shape
({model, messages, temperature, max_tokens} in, choices[0].message.content
out), retries transport failures and throttle responses with exponential
backoff (base 1s, factor 2, jitter from an injectable RNG), never retries
authentication failures, and bounds in-flight requests with a semaphore.

The mock backend maps script rules to fixed responses and is a pure
function of the prompt bytes and script: same inputs, same Completion.
"""

import json
import random
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Optional

from .errors import (
    AuthError, MalformedResponse, ThrottledExhausted, TransportError,
)

BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 2.0
BACKOFF_JITTER_SECONDS = 0.25


@dataclass(frozen=True)
class GenConfig:
    model: str
    temperature: float = 0.2
    max_output_tokens: int = 1000
    timeout: float = 30.0
    max_retries: int = 3
    parallelism: int = 4

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.parallelism <= 0:
            raise ValueError("parallelism must be positive")


@dataclass(frozen=True)
class Completion:
    text: str
    usage: Optional[dict] = None
    latency_ms: float = 0.0
    attempts: int = 1


class HttpBackend:
    """Client for one chat-completion endpoint.

    A single instance may be shared across threads; the internal
    semaphore keeps concurrent in-flight requests at or below
    `parallelism` regardless of caller fan-out.
    """

    def __init__(self, endpoint, api_key=None, parallelism=4,
                 sleeper=time.sleep, jitter_rng=None):
        self.endpoint = endpoint
        self.api_key = api_key
        self._limiter = threading.Semaphore(parallelism)
        self._sleep = sleeper
        self._rng = jitter_rng or random.Random()

    @classmethod
    def from_config(cls, endpoint, cfg, api_key=None, **kwargs):
        return cls(endpoint, api_key=api_key, parallelism=cfg.parallelism,
                   **kwargs)

    def complete(self, bundle, cfg):
        started = time.monotonic()
        throttled = False
        last_error = None
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                self._sleep(self._backoff_delay(attempt - 1))
            try:
                text, usage = self._request_once(bundle.body, cfg)
            except _Throttled as exc:
                throttled = True
                last_error = exc
                continue
            except _Transport as exc:
                throttled = False
                last_error = exc
                continue
            latency = (time.monotonic() - started) * 1000.0
            return Completion(text=text, usage=usage, latency_ms=latency,
                              attempts=attempt + 1)
        if throttled:
            raise ThrottledExhausted(
                f"throttled on all {cfg.max_retries + 1} attempts")
        raise TransportError(str(last_error))

    def _backoff_delay(self, retry_index):
        base = BACKOFF_BASE_SECONDS * (BACKOFF_FACTOR ** retry_index)
        return base + self._rng.uniform(0.0, BACKOFF_JITTER_SECONDS)

    def _request_once(self, prompt, cfg):
        payload = json.dumps({
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        }).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        request = urllib.request.Request(self.endpoint, data=payload,
                                         headers=headers, method="POST")
        with self._limiter:
            try:
                with urllib.request.urlopen(request,
                                            timeout=cfg.timeout) as response:
                    body = response.read()
            except urllib.error.HTTPError as exc:
                if exc.code in (401, 403):
                    raise AuthError(
                        f"endpoint rejected credentials (HTTP {exc.code})"
                    ) from exc
                if exc.code == 429:
                    raise _Throttled(f"HTTP {exc.code}") from exc
                raise _Transport(f"HTTP {exc.code}") from exc
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                raise _Transport(str(exc)) from exc
        return _parse_completion(body)


def _parse_completion(body):
    try:
        data = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedResponse(f"response is not JSON: {exc}") from exc
    try:
        choice = data["choices"][0]
        text = choice["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(
            "response lacks choices[0].message.content") from exc
    if text is None:
        text = ""
    if not isinstance(text, str):
        raise MalformedResponse("completion content is not a string")
    return text, data.get("usage")


class _Throttled(Exception):
    pass


class _Transport(Exception):
    pass


@dataclass(frozen=True)
class MockRule:
    response: str
    substring: Optional[str] = None
    pair_id: Optional[str] = None
    strategy: Optional[str] = None

    def matches(self, bundle):
        if self.substring is not None and self.substring not in bundle.body:
            return False
        if self.pair_id is not None and \
                bundle.meta.get("pair_id") != self.pair_id:
            return False
        if self.strategy is not None and bundle.strategy != self.strategy:
            return False
        return True


class MockBackend:
    """Deterministic scripted backend for tests and offline runs.

    Rules are checked in order; the first match wins, unmatched prompts
    get `default`. Completion latency is fixed at 0 so reports built on
    mock runs are byte-stable.
    """

    def __init__(self, rules=(), default="Unknown"):
        self.rules = list(rules)
        self.default = default
        self.calls = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path, default="Unknown"):
        """Script file: JSON list of {match: {...}, response}."""
        with open(path, encoding="utf-8") as f:
            entries = json.load(f)
        rules = [
            MockRule(response=e["response"], **e.get("match", {}))
            for e in entries
        ]
        return cls(rules=rules, default=default)

    def complete(self, bundle, cfg):
        del cfg
        with self._lock:
            self.calls.append((bundle.strategy, bundle.meta.get("pair_id")))
        for rule in self.rules:
            if rule.matches(bundle):
                return Completion(text=rule.response)
        return Completion(text=self.default)

    @property
    def call_count(self):
        with self._lock:
            return len(self.calls)

    def reset(self):
        with self._lock:
            self.calls.clear()

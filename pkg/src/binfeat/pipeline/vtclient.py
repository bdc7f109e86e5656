"""REST client for report lookup, rescan requests, and file download.

The HTTP transport is injectable so the client is testable offline. All
requests pass through a global rate limiter; quota responses honor
Retry-After, transient failures retry with exponential backoff, and
permanent failures are appended to a dead-letter log.
"""

from __future__ import annotations

import json
import os
import time

import requests

API_BASE = "https://www.virustotal.com/api/v3"
DEFAULT_API_KEY_ENV = "VT_API_KEY"


class VTError(Exception):
    """Base class for client failures."""


class CredentialError(VTError):
    pass


class NotFoundError(VTError):
    pass


class QuotaExceededError(VTError):
    def __init__(self, retry_after: float):
        super().__init__(f"quota exhausted; retry after {retry_after}s")
        self.retry_after = retry_after


class TransportError(VTError):
    pass


class RateLimiter:
    """Minimum-interval limiter shared by all requests from one client."""

    def __init__(self, requests_per_minute: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / requests_per_minute if requests_per_minute > 0 else 0.0
        self._clock = clock
        self._sleep = sleep
        self._next_at = 0.0

    def acquire(self) -> None:
        now = self._clock()
        if now < self._next_at:
            self._sleep(self._next_at - now)
            now = self._next_at
        self._next_at = now + self.interval


def _requests_transport(method: str, url: str, headers: dict) -> tuple[int, dict, bytes]:
    try:
        response = requests.request(method, url, headers=headers, timeout=60)
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    return response.status_code, dict(response.headers), response.content


class VTClient:
    def __init__(
        self,
        api_key: str | None = None,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        transport=None,
        requests_per_minute: float = 4.0,
        max_retries: int = 5,
        backoff_base: float = 1.0,
        dead_letter_path: str | None = None,
        sleep=time.sleep,
    ):
        if api_key is None:
            api_key = os.environ.get(api_key_env)
        if not api_key:
            raise CredentialError(
                f"no API key given and ${api_key_env} is not set"
            )
        self._api_key = api_key
        self._transport = transport or _requests_transport
        self._limiter = RateLimiter(requests_per_minute, sleep=sleep)
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._dead_letter_path = dead_letter_path
        self._sleep = sleep

    def _dead_letter(self, url: str, error: str) -> None:
        if self._dead_letter_path is None:
            return
        entry = {"url": url, "error": error, "at": int(time.time())}
        with open(self._dead_letter_path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(entry))
            fh.write("\n")

    def _request(self, method: str, path: str) -> bytes:
        url = f"{API_BASE}{path}"
        headers = {"x-apikey": self._api_key}
        last_error: VTError | None = None
        for attempt in range(self._max_retries):
            self._limiter.acquire()
            try:
                status, resp_headers, body = self._transport(method, url, headers)
            except TransportError as exc:
                last_error = exc
                self._sleep(self._backoff_base * 2**attempt)
                continue
            if status == 200:
                return body
            if status == 404:
                error = NotFoundError(f"{path}: not found")
                self._dead_letter(url, str(error))
                raise error
            if status == 429:
                retry_after = float(resp_headers.get("Retry-After", 60))
                last_error = QuotaExceededError(retry_after)
                self._sleep(retry_after)
                continue
            last_error = TransportError(f"{path}: HTTP {status}")
            self._sleep(self._backoff_base * 2**attempt)
        self._dead_letter(url, str(last_error))
        raise last_error if last_error else TransportError(f"{path}: failed")

    def fetch_report(self, sha256: str) -> dict:
        body = self._request("GET", f"/files/{sha256}")
        try:
            return json.loads(body)
        except json.JSONDecodeError as exc:
            raise TransportError(f"malformed report body: {exc}") from exc

    def request_rescan(self, sha256: str) -> dict:
        body = self._request("POST", f"/files/{sha256}/analyse")
        try:
            return json.loads(body)
        except json.JSONDecodeError as exc:
            raise TransportError(f"malformed rescan body: {exc}") from exc

    def download_file(self, sha256: str) -> bytes:
        return self._request("GET", f"/files/{sha256}/download")

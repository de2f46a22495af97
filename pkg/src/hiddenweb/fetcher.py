"""Polite HTTP retrieval of pages and form submissions."""

from __future__ import annotations

import logging
import os
import threading
import time
import urllib.robotparser
from dataclasses import dataclass, field
from typing import Dict, Optional, Set
from urllib.parse import urljoin, urlsplit

import requests

from .filler import SubmissionRequest
from .forms import WebPage, canonicalize_url

logger = logging.getLogger(__name__)

TIMEOUT_ENV = "HIDDENWEB_TIMEOUT"
_REDIRECTS = (301, 302, 303, 307, 308)


class FetchError(Exception):
    def __init__(self, message: str, url: str = ""):
        super().__init__(message)
        self.url = url


class NetworkError(FetchError):
    pass


class FetchTimeout(FetchError):
    pass


class TooManyRedirects(FetchError):
    pass


class RobotsDisallowed(FetchError):
    pass


def _default_timeout() -> float:
    raw = os.environ.get(TIMEOUT_ENV)
    if raw:
        try:
            return float(raw)
        except ValueError:
            logger.warning("ignoring non-numeric %s=%r", TIMEOUT_ENV, raw)
    return 10.0


@dataclass
class FetchPolicy:
    per_host_delay: float = 1.0
    max_retries: int = 2
    timeout: float = field(default_factory=_default_timeout)
    max_redirects: int = 5
    user_agent: str = "hiddenweb/0.1 (domain-based hidden web crawler)"
    respect_robots: bool = True

    def __post_init__(self):
        if self.per_host_delay <= 0 or self.timeout <= 0:
            raise ValueError("per_host_delay and timeout must be positive")
        if self.max_retries < 0 or self.max_redirects < 0:
            raise ValueError("max_retries and max_redirects must be non-negative")


def host_key(url: str) -> str:
    parts = urlsplit(url)
    return f"{(parts.hostname or '').lower()}:{parts.port or ''}"


class VisitedSet:
    """Canonical URLs and submission fingerprints already processed."""

    def __init__(self):
        self._urls: Set[str] = set()
        self._fingerprints: Set[tuple] = set()
        self._lock = threading.Lock()

    def add_url(self, url: str) -> bool:
        """Record ``url``; False if it was already present."""
        key = canonicalize_url(url)
        with self._lock:
            if key in self._urls:
                return False
            self._urls.add(key)
            return True

    def has_url(self, url: str) -> bool:
        with self._lock:
            return canonicalize_url(url) in self._urls

    @staticmethod
    def _fp(fingerprint: tuple) -> tuple:
        method, url, params = fingerprint
        return (method, canonicalize_url(url), tuple(params))

    def add_fingerprint(self, fingerprint: tuple) -> bool:
        key = self._fp(fingerprint)
        with self._lock:
            if key in self._fingerprints:
                return False
            self._fingerprints.add(key)
            return True

    def has_fingerprint(self, fingerprint: tuple) -> bool:
        with self._lock:
            return self._fp(fingerprint) in self._fingerprints

    def __len__(self):
        return len(self._urls) + len(self._fingerprints)


class _HostGate:
    # one lock per host: requests to a host are serialized and spaced
    def __init__(self, delay: float):
        self.delay = delay
        self._locks: Dict[str, threading.Lock] = {}
        self._last: Dict[str, float] = {}
        self._guard = threading.Lock()

    def lock(self, host: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(host, threading.Lock())

    def wait(self, host: str):
        last = self._last.get(host)
        if last is not None:
            pause = last + self.delay - time.monotonic()
            if pause > 0:
                time.sleep(pause)

    def done(self, host: str):
        self._last[host] = time.monotonic()


class Fetcher:
    def __init__(self, policy: Optional[FetchPolicy] = None, visited: Optional[VisitedSet] = None,
                 session: Optional[requests.Session] = None):
        self.policy = policy or FetchPolicy()
        self.visited = visited if visited is not None else VisitedSet()
        self._gate = _HostGate(self.policy.per_host_delay)
        self._session = session
        self._local = threading.local()
        self._robots: Dict[str, Optional[urllib.robotparser.RobotFileParser]] = {}
        self._robots_lock = threading.Lock()
        self.requests_made = 0
        self._count_lock = threading.Lock()

    @property
    def session(self) -> requests.Session:
        if self._session is not None:
            return self._session
        s = getattr(self._local, "session", None)
        if s is None:
            s = self._local.session = requests.Session()
            s.headers["User-Agent"] = self.policy.user_agent
        return s

    def _send(self, method: str, url: str, data: Optional[str]) -> requests.Response:
        host = host_key(url)
        headers = {"User-Agent": self.policy.user_agent}
        if data is not None:
            headers["Content-Type"] = "application/x-www-form-urlencoded"
        last_exc: Optional[FetchError] = None
        for attempt in range(self.policy.max_retries + 1):
            with self._gate.lock(host):
                self._gate.wait(host)
                try:
                    with self._count_lock:
                        self.requests_made += 1
                    resp = self.session.request(method, url, data=data, headers=headers,
                                                timeout=self.policy.timeout,
                                                allow_redirects=False)
                    resp.content  # read the body inside the politeness window
                except requests.Timeout as exc:
                    last_exc = FetchTimeout(f"timeout fetching {url}: {exc}", url)
                    continue
                except requests.RequestException as exc:
                    last_exc = NetworkError(f"error fetching {url}: {exc}", url)
                    continue
                finally:
                    self._gate.done(host)
            if resp.status_code >= 500 and attempt < self.policy.max_retries:
                logger.info("HTTP %s from %s, retrying (%d/%d)", resp.status_code, url,
                            attempt + 1, self.policy.max_retries)
                continue
            return resp
        assert last_exc is not None
        raise last_exc

    def _robots_for(self, url: str) -> Optional[urllib.robotparser.RobotFileParser]:
        parts = urlsplit(url)
        base = f"{parts.scheme}://{parts.netloc}"
        with self._robots_lock:
            if base in self._robots:
                return self._robots[base]
        parser = None
        try:
            resp = self._send("GET", base + "/robots.txt", None)
            if resp.status_code == 200:
                parser = urllib.robotparser.RobotFileParser()
                parser.parse(resp.text.splitlines())
        except FetchError as exc:
            logger.info("robots.txt unavailable for %s: %s", base, exc)
        with self._robots_lock:
            self._robots[base] = parser
        return parser

    def allowed(self, url: str) -> bool:
        if not self.policy.respect_robots:
            return True
        parser = self._robots_for(url)
        return parser is None or parser.can_fetch(self.policy.user_agent, url)

    def _request(self, method: str, url: str, data: Optional[str] = None) -> WebPage:
        if urlsplit(url).scheme not in ("http", "https"):
            raise NetworkError(f"unsupported URL scheme: {url}", url)
        redirects = 0
        while True:
            if not self.allowed(url):
                raise RobotsDisallowed(f"robots.txt disallows {url}", url)
            resp = self._send(method, url, data)
            location = resp.headers.get("Location")
            if resp.status_code in _REDIRECTS and location:
                redirects += 1
                if redirects > self.policy.max_redirects:
                    raise TooManyRedirects(
                        f"more than {self.policy.max_redirects} redirects from {url}", url)
                url = urljoin(url, location)
                if resp.status_code in (301, 302, 303) and method == "POST":
                    method, data = "GET", None
                self.visited.add_url(url)
                continue
            return WebPage.from_bytes(url, resp.content, resp.status_code,
                                      resp.headers.get("Content-Type"), redirects)

    def fetch_page(self, url: str) -> WebPage:
        self.visited.add_url(url)
        return self._request("GET", url)

    def submit_form(self, req: SubmissionRequest) -> WebPage:
        self.visited.add_fingerprint(req.fingerprint)
        if req.method == "POST":
            return self._request("POST", req.url, req.body)
        return self._request("GET", req.url)

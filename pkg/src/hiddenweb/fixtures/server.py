"""Loopback HTTP server materialising the sites of a :class:`SiteManifest`."""

from __future__ import annotations

import html
import json
import logging
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, List, Optional, Sequence, Tuple
from urllib.parse import parse_qsl, urlsplit

from .manifest import SeedPageSpec, SiteManifest, SiteSpec, is_placeholder

logger = logging.getLogger(__name__)

ROBOTS_TXT = "User-agent: *\nDisallow: /private/\n"
NAV = ("Home", "Browse", "New arrivals", "Help", "Contact")


@dataclass(frozen=True)
class RequestLog:
    t: float  # time.monotonic() at arrival
    method: str
    path: str
    params: Tuple[Tuple[str, str], ...]
    status: int

    @property
    def fingerprint(self):
        return (self.method, self.path, self.params)


def _e(text) -> str:
    return html.escape(str(text), quote=True)


def _page(title: str, body: str) -> str:
    nav = "".join(f'<li><a href="/{i}">{_e(n)}</a></li>' for i, n in enumerate(NAV))
    return ("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
            f"<title>{_e(title)}</title></head>\n<body>\n<ul class=\"nav\">{nav}</ul>\n"
            f"{body}\n<div class=\"footer\"><p>About this shop</p></div>\n</body></html>\n")


def filter_rows(site: SiteSpec, params: Sequence[Tuple[str, str]]) -> List[Dict[str, str]]:
    """Conjunctive case-insensitive substring filter of the site's dataset."""
    given = dict(params)
    rows = site.dataset
    for spec in site.form.fields:
        if spec.column is None:
            continue
        value = given.get(spec.name, "")
        if not value.strip() or is_placeholder(value):
            continue
        needle = value.casefold()
        rows = [r for r in rows if needle in r.get(spec.column, "").casefold()]
    return rows


def render_form(site: SiteSpec) -> str:
    out = [f'<form action="{_e(site.form.action)}" method="{site.form.method.lower()}">']
    in_table = False
    for spec in site.form.fields:
        fid = f"f-{spec.name}"
        if spec.control == "hidden":
            control = f'<input type="hidden" name="{_e(spec.name)}" value="{_e(spec.value)}">'
        elif spec.control == "select":
            opts = "".join(
                f"<option{' selected' if o == spec.value else ''}>{_e(o)}</option>"
                for o in spec.options)
            control = f'<select id="{fid}" name="{_e(spec.name)}">{opts}</select>'
        elif spec.control in ("radio", "checkbox"):
            control = " ".join(
                f'<input type="{spec.control}" name="{_e(spec.name)}" value="{_e(o)}"'
                f'{" checked" if o == spec.value else ""}> {_e(o)}' for o in spec.options)
        else:
            extra = f' placeholder="{_e(spec.label)}"' if spec.label_style == "placeholder" else ""
            control = (f'<input type="text" id="{fid}" name="{_e(spec.name)}"'
                       f' value="{_e(spec.value)}"{extra}>')
        if spec.label_style == "cell" and spec.control != "hidden":
            if not in_table:
                out.append('<table class="search">')
                in_table = True
            out.append(f"<tr><td>{_e(spec.label)}:</td><td>{control}</td></tr>")
            continue
        if in_table:
            out.append("</table>")
            in_table = False
        if spec.control == "hidden":
            out.append(control)
        elif spec.label_style == "for":
            out.append(f'<p><label for="{fid}">{_e(spec.label)}</label> {control}</p>')
        elif spec.label_style == "wrap":
            out.append(f"<p><label>{_e(spec.label)} {control}</label></p>")
        elif spec.label_style == "text":
            out.append(f"<p>{_e(spec.label)}: {control}</p>")
        else:
            out.append(f"<p>{control}</p>")
    if in_table:
        out.append("</table>")
    if site.form.submit:
        out.append(f'<p><input type="submit" name="submit" value="{_e(site.form.submit)}"></p>')
    out.append("</form>")
    return "\n".join(out)


def _slug(label: str) -> str:
    return "-".join(label.lower().split()) or "field"


def render_results(site: SiteSpec, rows: List[Dict[str, str]]) -> str:
    columns = list(site.columns)
    flagged = set(site.unavailable)
    show_stock = bool(flagged)
    if site.style == "table":
        head = "".join(f"<th>{_e(c.label)}</th>" for c in columns)
        if show_stock:
            head += "<th>Availability</th>"
        body = []
        for r in rows:
            cells = "".join(f"<td>{_e(r.get(c.column, ''))}</td>" for c in columns)
            if show_stock:
                cells += "<td>{}</td>".format(
                    "Out of stock" if r.get("ISBN") in flagged else "In stock")
            body.append(f"<tr>{cells}</tr>")
        return f'<table class="results">\n<tr>{head}</tr>\n' + "\n".join(body) + "\n</table>"
    items = []
    for r in rows:
        parts = []
        for c in columns:
            value = _e(r.get(c.column, ""))
            if c.style == "heading":
                parts.append(f'<h3 class="{_slug(c.label)}">{value}</h3>')
            elif c.style == "inline":
                parts.append(f"<p><b>{_e(c.label)}:</b> {value}</p>")
            else:
                parts.append(f'<span class="{_slug(c.label)}">{value}</span>')
        if show_stock:
            parts.append('<span class="stock">{}</span>'.format(
                "Out of stock" if r.get("ISBN") in flagged else "In stock"))
        items.append('<div class="book">' + "".join(parts) + "</div>")
    return '<div class="results">\n' + "\n".join(items) + "\n</div>"


def render_search(site: SiteSpec, params) -> str:
    if site.search_error:
        rows = []
    else:
        rows = filter_rows(site, params)[:site.per_page]
    if not rows:
        body = (f"<h1>{_e(site.name)} search</h1>\n{render_form(site)}\n"
                "<p class=\"summary\">No results found for your query.</p>")
    else:
        noun = "book" if len(rows) == 1 else "books"
        body = (f"<h1>{_e(site.name)} search</h1>\n{render_form(site)}\n"
                f"<p class=\"summary\">Showing {len(rows)} matching {noun}</p>\n"
                f"{render_results(site, rows)}")
    return _page(f"{site.name}: search", body)


def render_landing(site: SiteSpec) -> str:
    return _page(f"{site.name} books", f"<h1>Welcome to {_e(site.name)}</h1>\n{render_form(site)}")


def render_seed(seed: SeedPageSpec) -> str:
    columns = list(seed.dataset[0].keys()) if seed.dataset else []
    head = "".join(f"<th>{_e(c)}</th>" for c in columns)
    rows = "\n".join("<tr>" + "".join(f"<td>{_e(r.get(c, ''))}</td>" for c in columns) + "</tr>"
                     for r in seed.dataset)
    return _page(seed.title, f"<h1>{_e(seed.title)}</h1>\n<table class=\"catalogue\">\n"
                             f"<tr>{head}</tr>\n{rows}\n</table>")


class _SiteState:
    def __init__(self, site: Optional[SiteSpec], seeds: Sequence[SeedPageSpec] = ()):
        self.site = site
        self.seeds = {s.path: s for s in seeds}
        self.failures_left = site.search_failures if site else 0
        self.log: List[RequestLog] = []
        self.lock = threading.Lock()

    def take_failure(self) -> bool:
        with self.lock:
            if self.failures_left > 0:
                self.failures_left -= 1
                return True
            return False

    def record(self, entry: RequestLog):
        with self.lock:
            self.log.append(entry)


def _handler(state: _SiteState):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        disable_nagle_algorithm = True
        server_version = "fixture/1.0"

        def log_message(self, fmt, *args):
            logger.debug("%s " + fmt, self.address_string(), *args)

        def _params(self):
            parts = urlsplit(self.path)
            params = parse_qsl(parts.query, keep_blank_values=True)
            if self.command == "POST":
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length).decode("utf-8", "replace") if length else ""
                params += parse_qsl(raw, keep_blank_values=True)
            return parts.path, tuple(params)

        def _send(self, status, body="", ctype="text/html; charset=utf-8", headers=()):
            data = body.encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            for k, v in headers:
                self.send_header(k, v)
            self.end_headers()
            self.wfile.write(data)

        def _dispatch(self):
            arrived = time.monotonic()
            path, params = self._params()
            status, body, ctype, headers = self._route(path, params)
            state.record(RequestLog(arrived, self.command, path, params, status))
            self._send(status, body, ctype, headers)

        def _route(self, path, params):
            html_ct = "text/html; charset=utf-8"
            if path == "/robots.txt":
                return 200, ROBOTS_TXT, "text/plain; charset=utf-8", ()
            if path in state.seeds:
                return 200, render_seed(state.seeds[path]), html_ct, ()
            site = state.site
            if site is None:
                return 404, _page("Not found", "<p>Page not found</p>"), html_ct, ()
            if path == site.route("echo"):
                payload = json.dumps({"method": self.command, "params": [list(p) for p in params]})
                return 200, payload, "application/json", ()
            hops = site.landing_redirects
            if path in (site.mount, site.route("")):
                if hops:
                    target = site.route("hop/1") if hops > 1 else site.route("home")
                    return 302, "", html_ct, (("Location", target),)
                return 200, render_landing(site), html_ct, ()
            if path.startswith(site.route("hop/")):
                try:
                    n = int(path.rsplit("/", 1)[1])
                except ValueError:
                    n = hops
                # a chain of ``hops`` redirects: landing, hop/1 .. hop/(hops-1), home
                target = site.route(f"hop/{n + 1}") if n + 1 < hops else site.route("home")
                return 302, "", html_ct, (("Location", target),)
            if path == site.route("home"):
                return 200, render_landing(site), html_ct, ()
            if path == site.route(site.form.action):
                if state.take_failure():
                    return 503, _page("Busy", "<p>Service temporarily busy</p>"), html_ct, ()
                return 200, render_search(site, params), html_ct, ()
            return 404, _page("Not found", "<p>Page not found</p>"), html_ct, ()

        def do_GET(self):
            self._dispatch()

        def do_POST(self):
            self._dispatch()

    return Handler


class FixtureServer:
    """Serve every site of a manifest on its own loopback port.

    Use as a context manager; ``urls`` maps site names to landing URLs.
    """

    def __init__(self, manifest: SiteManifest, host: str = "127.0.0.1",
                 base_port: Optional[int] = None):
        self.manifest = manifest
        self.host = host
        self.base_port = base_port
        self._servers: List[Tuple[str, ThreadingHTTPServer, _SiteState]] = []
        self._threads: List[threading.Thread] = []
        self.urls: Dict[str, str] = {}
        self.seed_page_urls: List[str] = []

    def _port_for(self, i: int, declared: int) -> int:
        if declared:
            return declared
        return self.base_port + i if self.base_port else 0

    def start(self) -> "FixtureServer":
        entries = [(s.name, s, self._port_for(i, s.port), _SiteState(s))
                   for i, s in enumerate(self.manifest.sites)]
        if self.manifest.seed_pages:
            entries.append(("__seeds__", None, self._port_for(len(entries), 0),
                            _SiteState(None, self.manifest.seed_pages)))
        for name, site, port, state in entries:
            server = ThreadingHTTPServer((self.host, port), _handler(state))
            server.daemon_threads = True
            thread = threading.Thread(target=server.serve_forever, kwargs={"poll_interval": 0.05},
                                      name=f"fixture-{name}", daemon=True)
            thread.start()
            self._servers.append((name, server, state))
            self._threads.append(thread)
            base = f"http://{self.host}:{server.server_address[1]}"
            if site is not None:
                self.urls[name] = base + site.mount
            else:
                self.seed_page_urls = [base + p.path for p in self.manifest.seed_pages]
        return self

    def stop(self):
        for _, server, _ in self._servers:
            server.shutdown()
            server.server_close()
        for t in self._threads:
            t.join(timeout=5)
        self._servers.clear()
        self._threads.clear()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    @property
    def seed_urls(self) -> List[str]:
        return [self.urls[s.name] for s in self.manifest.sites]

    def _state(self, name: str) -> _SiteState:
        for n, _, state in self._servers:
            if n == name:
                return state
        raise KeyError(name)

    def log(self, name: str) -> List[RequestLog]:
        state = self._state(name)
        with state.lock:
            return list(state.log)

    def reset_logs(self):
        for _, _, state in self._servers:
            with state.lock:
                state.log.clear()


def serve(manifest: SiteManifest, **kw) -> FixtureServer:
    return FixtureServer(manifest, **kw).start()

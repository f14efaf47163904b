"""
Polite seed-set crawler.

Fetches up to `max_pages_per_site` pages of every seed site (homepage plus same-site
pages within `max_depth` hops), extracts anchors, resolves each target to a seed node
and counts inter-seed links. Fetches to one host are serialized and spaced by at
least the per-host delay; different hosts are crawled concurrently.
"""
import logging
import threading
import time
import urllib.robotparser
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional
from urllib.parse import urldefrag, urljoin, urlsplit, urlunsplit

import numpy as np
import requests
from bs4 import BeautifulSoup
from pydantic import BaseModel, ConfigDict, Field

from src.config import CrawlConfig
from src.graph_core import DirectedCountGraph, SiteNode, check_unique_ids, normalize_host

logger = logging.getLogger(__name__)

WEB_SCHEMES = ("http", "https")
DEFAULT_PORTS = {"http": 80, "https": 443}


def canonicalize_url(url: str) -> str:
    """Lowercase scheme and host, drop the fragment and default port, keep path and query."""
    url, _ = urldefrag(url.strip())
    parts = urlsplit(url)
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    netloc = host
    if parts.port and DEFAULT_PORTS.get(scheme) != parts.port:
        netloc = f"{host}:{parts.port}"
    return urlunsplit((scheme, netloc, parts.path or "/", parts.query, ""))


def extract_links(html: str | bytes, base_url: str) -> list[str]:
    """
    Absolute http(s) targets of every anchor, in document order (duplicates kept).
    Honors <base href>; tolerant of malformed markup.
    """
    soup = BeautifulSoup(html or b"", "html.parser")
    base_tag = soup.find("base", href=True)
    if base_tag is not None:
        base_url = urljoin(base_url, base_tag["href"].strip())

    links = []
    for anchor in soup.find_all("a", href=True):
        href = anchor["href"].strip()
        if not href or href.startswith("#"):
            continue
        try:
            target = urljoin(base_url, href)
            if urlsplit(target).scheme.lower() not in WEB_SCHEMES:
                continue
            links.append(canonicalize_url(target))
        except ValueError:
            continue
    return links


class HostResolver:
    """
    Maps URLs to node ids by longest host-suffix match over the nodes' host patterns,
    so a configured subdomain node (es.wikipedia.org) wins over its parent domain.
    """
    def __init__(self, nodes: Iterable[SiteNode]):
        self.patterns: dict[str, str] = {}
        for node in nodes:
            for pattern in node.host_patterns:
                self.patterns.setdefault(pattern, node.id)

    def resolve_hostname(self, host: str) -> Optional[str]:
        host = normalize_host(host)
        labels = host.split(".")
        for start in range(len(labels)):
            candidate = ".".join(labels[start:])
            if candidate in self.patterns:
                return self.patterns[candidate]
        return None

    def resolve(self, url: str) -> Optional[str]:
        try:
            host = urlsplit(url).hostname
        except ValueError:
            return None
        return self.resolve_hostname(host) if host else None


def resolve_host(url: str, node_set: Iterable[SiteNode]) -> Optional[str]:
    return HostResolver(node_set).resolve(url)


class FetchRecord(BaseModel):
    url: str
    host: str
    started: float


class CrawlReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    fetched: int = 0
    failed: list[tuple[str, str]] = Field(default_factory=list)
    skipped_robots: int = 0
    pages_attempted: int = 0
    pages_per_site: dict[str, int] = Field(default_factory=dict)
    unreachable_sites: list[str] = Field(default_factory=list)
    resolved_edges: Optional[DirectedCountGraph] = Field(default=None, exclude=True)
    fetch_log: list[FetchRecord] = Field(default_factory=list, exclude=True)

    def summary(self) -> dict:
        payload = self.model_dump()
        payload["n_edges"] = self.resolved_edges.n_edges if self.resolved_edges is not None else 0
        return payload


class HostThrottle:
    """One lock and one last-fetch timestamp per host."""
    def __init__(self, delay_s: float):
        self.delay_s = delay_s
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}
        self._delays: dict[str, float] = {}
        self._guard = threading.Lock()
        self.log: list[FetchRecord] = []

    def _lock_for(self, host: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(host, threading.Lock())

    def set_delay(self, host: str, delay_s: float) -> None:
        with self._guard:
            self._delays[host] = max(self.delay_s, delay_s)

    def wait_turn(self, url: str) -> None:
        host = urlsplit(url).netloc.lower()
        with self._lock_for(host):
            delay = self._delays.get(host, self.delay_s)
            last = self._last.get(host)
            if last is not None:
                remaining = last + delay - time.monotonic()
                if remaining > 0:
                    time.sleep(remaining)
            now = time.monotonic()
            self._last[host] = now
            with self._guard:
                self.log.append(FetchRecord(url=url, host=host, started=now))


class Crawler:
    def __init__(self, config: CrawlConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.by_id = check_unique_ids(config.seeds)
        self.resolver = HostResolver(config.seeds)
        self.session = session or requests.Session()
        self.session.headers["User-Agent"] = config.user_agent
        self.proxies = None
        if config.proxy:
            self.session.trust_env = False
            self.proxies = {"http": config.proxy, "https": config.proxy}
        self.timeout = config.timeout / 1000 if config.timeout > 0 else None
        self.throttle = HostThrottle(config.per_host_delay / 1000)
        self._robots: dict[str, Optional[urllib.robotparser.RobotFileParser]] = {}
        self._robots_lock = threading.Lock()

    def _get(self, url: str) -> requests.Response:
        self.throttle.wait_turn(url)
        return self.session.get(url, timeout=self.timeout, proxies=self.proxies)

    def _robots_for(self, url: str) -> Optional[urllib.robotparser.RobotFileParser]:
        parts = urlsplit(url)
        root = f"{parts.scheme}://{parts.netloc}"
        with self._robots_lock:
            if root in self._robots:
                return self._robots[root]
        parser = urllib.robotparser.RobotFileParser()
        robots_url = f"{root}/robots.txt"
        parser.set_url(robots_url)
        try:
            resp = self._get(robots_url)
            if resp.status_code in (401, 403):
                parser.disallow_all = True
            elif resp.status_code >= 400:
                parser.allow_all = True
            else:
                parser.parse(resp.content.decode("utf-8", errors="ignore").splitlines())
                crawl_delay = parser.crawl_delay(self.config.user_agent)
                if crawl_delay:
                    self.throttle.set_delay(parts.netloc.lower(), float(crawl_delay))
        except requests.RequestException as exc:
            logger.debug(f"robots.txt unavailable for {root}: {exc}")
            parser.allow_all = True
        with self._robots_lock:
            self._robots.setdefault(root, parser)
        return parser

    def _allowed(self, url: str) -> bool:
        if not self.config.respect_robots:
            return True
        parser = self._robots_for(url)
        return parser is None or parser.can_fetch(self.config.user_agent, url)

    def _fetch(self, url: str) -> tuple[Optional[bytes], Optional[str], str]:
        """(body, failure reason, final url)."""
        try:
            resp = self._get(url)
        except requests.RequestException as exc:
            return None, f"{type(exc).__name__}: {exc}", url
        if resp.status_code >= 400:
            return None, f"HTTP {resp.status_code}", url
        content_type = resp.headers.get("Content-Type", "")
        if content_type and "html" not in content_type.lower():
            return None, f"not html ({content_type})", url
        return resp.content, None, canonicalize_url(resp.url or url)

    def _start_url(self, node: SiteNode) -> Optional[str]:
        if node.id in self.config.start_urls:
            return canonicalize_url(self.config.start_urls[node.id])
        if node.host_patterns:
            return canonicalize_url(f"http://{node.host_patterns[0]}/")
        return None

    def crawl_site(self, node: SiteNode) -> dict:
        result = {"node": node.id, "pages": 0, "attempted": 0, "skipped": 0,
                  "failed": [], "links": Counter()}
        start = self._start_url(node)
        if start is None:
            result["failed"].append((f"node:{node.id}", "no host pattern or start url"))
            return result

        queue = deque([(start, 0)])
        seen = {start}
        while queue and result["pages"] < self.config.max_pages_per_site:
            url, depth = queue.popleft()
            result["attempted"] += 1
            if not self._allowed(url):
                result["skipped"] += 1
                logger.info(f"   -> robots.txt disallows {url}")
                continue
            body, reason, final_url = self._fetch(url)
            if reason is not None:
                result["failed"].append((url, reason))
                logger.warning(f"   -> fetch failed {url}: {reason}")
                continue
            result["pages"] += 1
            for link in extract_links(body, final_url):
                target = self.resolver.resolve(link)
                if target is None:
                    continue
                if target != node.id:
                    result["links"][target] += 1
                elif depth < self.config.max_depth and link not in seen:
                    seen.add(link)
                    queue.append((link, depth + 1))
        return result

    def crawl(self) -> CrawlReport:
        seeds = self.config.seeds
        ids = [node.id for node in seeds]
        index = {node_id: i for i, node_id in enumerate(ids)}
        logger.info(f"Crawling {len(seeds)} seed site(s) with {self.config.max_workers} worker(s)...")

        with ThreadPoolExecutor(max_workers=self.config.max_workers) as pool:
            results = list(pool.map(self.crawl_site, seeds))

        counts = np.zeros((len(ids), len(ids)), dtype=np.int64)
        report = CrawlReport()
        for res in results:
            i = index[res["node"]]
            for target, n in res["links"].items():
                counts[i, index[target]] += n
            report.fetched += res["pages"]
            report.pages_attempted += res["attempted"]
            report.skipped_robots += res["skipped"]
            report.failed.extend(res["failed"])
            report.pages_per_site[res["node"]] = res["pages"]
            if res["pages"] == 0:
                report.unreachable_sites.append(res["node"])

        report.failed.sort()
        report.resolved_edges = DirectedCountGraph(tuple(ids), counts)
        report.fetch_log = sorted(self.throttle.log, key=lambda r: r.started)
        if report.unreachable_sites:
            logger.warning(f"   -> {len(report.unreachable_sites)} site(s) yielded no pages: "
                           f"{', '.join(report.unreachable_sites)}")
        logger.info(f"   -> Fetched {report.fetched} page(s), {len(report.failed)} failure(s), "
                    f"{report.skipped_robots} robots exclusion(s), {report.resolved_edges.n_edges} directed edge(s)")
        return report

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit

import pytest

from src.config import CrawlConfig
from src.crawler import Crawler, HostResolver, canonicalize_url, extract_links, resolve_host
from src.graph_core import SiteNode

HTML = "text/html; charset=utf-8"

# (host, path) -> (status, content type, body)
CORPUS = {
    ("a.example", "/"): (200, HTML, "<html><body>"
                         + "".join(f'<a href="http://b.example/x{i}">b{i}</a>' for i in range(7))
                         + '<a href="/about">about</a>'
                         + '<a href="http://es.wikipedia.org/wiki/Brasil">es</a>'
                         + '<a href="https://en.wikipedia.org/wiki/Brazil">en</a>'
                         + '<a href="mailto:someone@a.example">mail</a>'
                         + '<a href="#top">top</a>'
                         + '<a href="http://unlisted.example/">other</a>'
                         + "</body></html>"),
    ("a.example", "/about"): (200, HTML, '<p><a href="http://b.example/">b</a><a href="/team">team</a>'),
    ("a.example", "/team"): (200, HTML, "<p>no links</p>"),
    ("b.example", "/"): (200, HTML, '<a href="http://www.a.example/">home of a</a><a href="/logo.png">logo</a>'),
    ("b.example", "/logo.png"): (200, "image/png", "PNG"),
    ("c.example", "/robots.txt"): (200, "text/plain", "User-agent: *\nDisallow: /\n"),
    ("c.example", "/"): (200, HTML, '<a href="http://a.example/">a</a>'),
}
UNREACHABLE = {"d.example"}


class CorpusProxy(BaseHTTPRequestHandler):
    """Plain HTTP proxy answering from CORPUS; requests arrive with absolute URLs."""

    def do_GET(self):
        parts = urlsplit(self.path)
        if parts.hostname in UNREACHABLE:
            self.send_error(502)
            return
        status, content_type, body = CORPUS.get((parts.hostname, parts.path or "/"), (404, HTML, "missing"))
        payload = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def proxy_url():
    server = ThreadingHTTPServer(("127.0.0.1", 0), CorpusProxy)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def make_seeds():
    return [
        SiteNode(id="A", host_patterns=("a.example",), geography="BR"),
        SiteNode(id="B", host_patterns=("b.example",), geography="DE"),
        SiteNode(id="C", host_patterns=("c.example",), geography="FR"),
        SiteNode(id="D", host_patterns=("d.example",), geography="PL"),
        SiteNode(id="eswiki", host_patterns=("es.wikipedia.org",), geography="ES"),
        SiteNode(id="wiki", host_patterns=("wikipedia.org",), geography="GLOBAL"),
    ]


def make_config(proxy, **overrides):
    params = dict(seeds=make_seeds(), max_depth=0, per_host_delay=0, timeout=5000, proxy=proxy)
    params.update(overrides)
    return CrawlConfig(**params)


def test_canonicalize_url():
    assert canonicalize_url("HTTP://Example.COM:80/a?q=1#frag") == "http://example.com/a?q=1"
    assert canonicalize_url("https://example.com") == "https://example.com/"
    assert canonicalize_url("http://example.com:8080/x") == "http://example.com:8080/x"


def test_extract_links_resolves_and_filters():
    html = ('<a href="/x">1</a><a href="http://b.example/">2</a><a href="http://b.example/">3</a>'
            '<a href="javascript:void(0)">4</a><a href="#">5</a><a>no href</a>')
    links = extract_links(html, "http://a.example/dir/page")

    assert links == ["http://a.example/x", "http://b.example/", "http://b.example/"]


def test_extract_links_honors_base_and_survives_bad_markup():
    html = '<head><base href="http://cdn.example/root/"></head><a href="page">p</a><div><a href="q"'
    links = extract_links(html, "http://a.example/")

    assert links[0] == "http://cdn.example/root/page"
    assert extract_links("", "http://a.example/") == []


def test_host_resolution_prefers_longest_suffix():
    seeds = make_seeds()

    assert resolve_host("http://es.wikipedia.org/wiki/NYC", seeds) == "eswiki"
    assert resolve_host("https://en.wikipedia.org/wiki/NYC", seeds) == "wiki"
    assert resolve_host("http://www.a.example/", seeds) == "A"
    assert resolve_host("http://a.example.evil.org/", seeds) is None
    assert HostResolver(seeds).resolve("not a url") is None


def test_crawl_counts_inter_seed_links(proxy_url):
    report = Crawler(make_config(proxy_url)).crawl()
    edges = report.resolved_edges

    assert edges.count("A", "B") == 7
    assert edges.count("A", "eswiki") == 1
    assert edges.count("A", "wiki") == 1
    assert edges.count("B", "A") == 1
    assert edges.count("A", "A") == 0


def test_crawl_matches_hand_count_and_repeats(proxy_url):
    """Every other cell of the edge matrix is zero, and a second crawl gives the same matrix."""
    first = Crawler(make_config(proxy_url)).crawl().resolved_edges
    second = Crawler(make_config(proxy_url)).crawl().resolved_edges

    expected = {("A", "B"): 7, ("A", "eswiki"): 1, ("A", "wiki"): 1, ("B", "A"): 1}
    for src in first.nodes:
        for dst in first.nodes:
            assert first.count(src, dst) == expected.get((src, dst), 0)
    assert first == second


def test_crawl_follows_same_site_pages_within_depth(proxy_url):
    shallow = Crawler(make_config(proxy_url, max_depth=1)).crawl()
    assert shallow.resolved_edges.count("A", "B") == 8
    assert shallow.pages_per_site["A"] == 2

    deep = Crawler(make_config(proxy_url, max_depth=2)).crawl()
    assert deep.pages_per_site["A"] == 3

    capped = Crawler(make_config(proxy_url, max_depth=2, max_pages_per_site=1)).crawl()
    assert capped.pages_per_site["A"] == 1


def test_robots_exclusion_and_failures_are_reported(proxy_url):
    report = Crawler(make_config(proxy_url)).crawl()

    assert report.skipped_robots == 1
    assert report.pages_per_site["C"] == 0
    assert report.resolved_edges.count("C", "A") == 0
    assert "D" in report.unreachable_sites
    assert any(reason == "HTTP 502" for url, reason in report.failed if "d.example" in url)
    assert report.summary()["n_edges"] == report.resolved_edges.n_edges


def test_robots_can_be_ignored(proxy_url):
    report = Crawler(make_config(proxy_url, respect_robots=False)).crawl()
    assert report.resolved_edges.count("C", "A") == 1


def test_non_html_pages_are_not_parsed(proxy_url):
    seeds = [SiteNode(id="B", host_patterns=("b.example",), geography="DE"),
             SiteNode(id="A", host_patterns=("a.example",), geography="BR")]
    config = CrawlConfig(seeds=seeds, start_urls={"B": "http://b.example/logo.png", "A": "http://a.example/team"},
                         per_host_delay=0, timeout=5000, proxy=proxy_url)
    report = Crawler(config).crawl()

    assert report.pages_per_site["B"] == 0
    assert any(reason.startswith("not html") for _, reason in report.failed)


def test_requests_to_one_host_are_spaced(proxy_url):
    """At 50 ms per host, consecutive fetches to the same host start at least 50 ms apart."""
    config = make_config(proxy_url, max_depth=2, per_host_delay=50)
    report = Crawler(config).crawl()

    starts = [r.started for r in report.fetch_log if r.host == "a.example"]
    assert len(starts) >= 3
    gaps = [b - a for a, b in zip(starts, starts[1:])]
    assert min(gaps) >= 0.05 - 1e-3


def test_unreachable_proxy_yields_empty_graph():
    config = make_config("http://127.0.0.1:1", timeout=2000)
    report = Crawler(config).crawl()

    assert sorted(report.unreachable_sites) == sorted(node.id for node in make_seeds())
    assert report.resolved_edges.n_edges == 0
    assert report.fetched == 0

import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from src.graph_core import DEFAULT_MAX_NODES, SiteNode, SymmetrizeRule

# (geography, language) per synthetic block
SYNTH_LOCALES = [
    ("BR", "pt"), ("DE", "de"), ("JP", "ja"), ("RU", "ru"), ("FR", "fr"),
    ("TR", "tr"), ("KR", "ko"), ("CN", "zh"), ("PL", "pl"), ("IT", "it"),
    ("ES", "es"), ("IN", "hi"), ("NL", "nl"), ("SE", "sv"), ("GR", "el"),
    ("IL", "he"), ("TH", "th"), ("VN", "vi"), ("ID", "id"), ("EG", "ar"),
]


def default_seed() -> int:
    raw = os.environ.get("DUALWEB_SEED")
    return int(raw) if raw not in (None, "") else 42


class SynthConfig(BaseModel):
    n_sites: int = Field(200, ge=1)
    n_blocks: int = Field(5, ge=1, le=len(SYNTH_LOCALES))
    n_global_sites: int = Field(10, ge=0)
    n_users: int = Field(10000, ge=0)
    p_in: float = Field(0.15, ge=0, le=1)
    p_out: float = Field(0.01, ge=0, le=1)
    p_global: float = Field(0.4, ge=0, le=1)
    ba_m: int = Field(3, ge=1)
    n_hubs: int = Field(10, ge=0, description="earliest entrants of the attachment order")
    p_hub: float = Field(0.5, ge=0, le=1)
    owner_cliques: list[list[str]] = Field(default_factory=list)
    seed: int = Field(default_factory=default_seed)

    @model_validator(mode="after")
    def _check(self):
        if self.p_in <= self.p_out:
            raise ValueError("p_in must exceed p_out (audiences favour in-block sites)")
        if self.n_global_sites > self.n_sites:
            raise ValueError("n_global_sites cannot exceed n_sites")
        if self.ba_m >= self.n_sites:
            raise ValueError("ba_m must be smaller than n_sites")
        return self


class CrawlConfig(BaseModel):
    seeds: list[SiteNode] = Field(min_length=1)
    max_pages_per_site: int = Field(20, ge=1)
    max_depth: int = Field(1, ge=0)
    per_host_delay: int = Field(1000, ge=0, description="milliseconds")
    timeout: int = Field(10000, ge=0, description="milliseconds")
    user_agent: str = "dualweb-crawler/0.1 (+research; polite)"
    respect_robots: bool = True
    max_workers: int = Field(4, ge=1)
    proxy: Optional[str] = None
    start_urls: dict[str, str] = Field(default_factory=dict)


class AudienceOptions(BaseModel):
    min_margin: float = Field(0.0, ge=0)
    top_k: Optional[int] = Field(None, ge=1)
    n_workers: int = Field(1, ge=1)


class HyperlinkOptions(BaseModel):
    symmetrize: SymmetrizeRule = "sum"


class MetricsOptions(BaseModel):
    clustering: Literal["avg-local", "transitivity"] = "avg-local"
    centralization: Literal["freeman", "hhi"] = "freeman"
    n_hubs: int = Field(10, ge=0)


class CommunityOptions(BaseModel):
    resolution: float = Field(1.0, gt=0)
    restarts: int = Field(5, ge=1)
    n_workers: int = Field(1, ge=1)


class QapOptions(BaseModel):
    n_permutations: int = Field(1000, ge=1)
    tail: Literal["two_sided", "greater", "less"] = "two_sided"
    transform: Literal["none", "log1p", "rank"] = "none"
    ties: Literal["valued", "binary"] = "valued"
    exhaustive_limit: int = Field(50000, ge=1)
    n_workers: int = Field(1, ge=1)


class LayoutOptions(BaseModel):
    iterations: int = Field(500, ge=0)
    width: float = Field(1000.0, gt=0)
    height: float = Field(1000.0, gt=0)
    c: float = Field(1.0, gt=0)


class RenderOptions(BaseModel):
    edge_quantile: float = Field(0.2, gt=0, le=1)
    node_radius: float = Field(6.0, gt=0)


INPUT_PATHS = ("metadata_path", "log_path", "panel_path", "edges_path")


class RunConfig(BaseModel):
    """
    One file pins every knob of `reproduce`. With `synth` set, inputs are generated into
    `output_dir/data`. Giving any input path switches synthesis off, and then all four
    paths are required; a config carrying both a `synth` block and input paths is rejected.
    """
    metadata_path: Optional[Path] = None
    log_path: Optional[Path] = None
    panel_path: Optional[Path] = None
    edges_path: Optional[Path] = None
    synth: Optional[SynthConfig] = Field(default_factory=SynthConfig)
    output_dir: Path = Path("data/processed")
    seed: int = Field(default_factory=default_seed)
    max_nodes: int = Field(DEFAULT_MAX_NODES, ge=1)
    allowed_geographies: Optional[list[str]] = Field(None, description="GLOBAL is always allowed")

    audience: AudienceOptions = Field(default_factory=AudienceOptions)
    hyperlink: HyperlinkOptions = Field(default_factory=HyperlinkOptions)
    metrics: MetricsOptions = Field(default_factory=MetricsOptions)
    communities: CommunityOptions = Field(default_factory=CommunityOptions)
    qap: QapOptions = Field(default_factory=QapOptions)
    layout: LayoutOptions = Field(default_factory=LayoutOptions)
    render: RenderOptions = Field(default_factory=RenderOptions)

    @model_validator(mode="before")
    @classmethod
    def _inputs_switch_off_synth(cls, data):
        if not isinstance(data, dict):
            return data
        given = [k for k in INPUT_PATHS if data.get(k) is not None]
        if not given:
            return data
        if data.get("synth") is not None:
            raise ValueError(f"give either a synth block or input paths, not both (got {', '.join(given)})")
        return {**data, "synth": None}

    @model_validator(mode="after")
    def _check_inputs(self):
        if self.synth is not None:
            return self
        named = {k: getattr(self, k) for k in INPUT_PATHS}
        missing = [k for k, v in named.items() if v is None]
        if missing:
            raise ValueError(f"missing input path(s) for a non-synthetic run: {', '.join(missing)}")
        absent = [f"{k}={v}" for k, v in named.items() if not Path(v).exists()]
        if absent:
            raise ValueError(f"input file(s) not found: {', '.join(absent)}")
        return self


# Default config instance
run_config = RunConfig()

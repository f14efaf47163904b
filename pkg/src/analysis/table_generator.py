from typing import Optional

import pandas as pd

from src.community_engine import CommunityPartition, PurityReport
from src.metrics_engine import NetworkStats
from src.schema import StatsTableSchema


class NetworkSummary:
    """Everything reported about one network in the side-by-side table."""
    def __init__(self, stats: NetworkStats, partition: Optional[CommunityPartition] = None,
                 geo_purity: Optional[PurityReport] = None, lang_purity: Optional[PurityReport] = None):
        self.stats = stats
        self.partition = partition
        self.geo_purity = geo_purity
        self.lang_purity = lang_purity

    def rows(self) -> dict[str, Optional[float]]:
        s = self.stats
        return {
            'nodes': s.n_nodes,
            'ties': s.n_ties,
            'density': s.density,
            'clustering coefficient': s.clustering_coefficient,
            'network centralization': s.centralization,
            'HHI': s.hhi,
            'communities': self.partition.n_communities if self.partition else None,
            'modularity Q': self.partition.modularity_q if self.partition else None,
            'geography purity': self.geo_purity.mean_purity if self.geo_purity else None,
            'language purity': self.lang_purity.mean_purity if self.lang_purity else None,
        }


class TableGenerator:
    def __init__(self, hyperlink: NetworkSummary, audience: NetworkSummary):
        self.hyperlink = hyperlink
        self.audience = audience

    def generate_stats_table(self) -> pd.DataFrame:
        """
        Descriptive statistics, one row per statistic, hyperlink and audience columns.
        """
        left, right = self.hyperlink.rows(), self.audience.rows()
        table = pd.DataFrame({
            'statistic': list(left.keys()),
            'hyperlink': [left[k] for k in left],
            'audience': [right[k] for k in left],
        })
        return StatsTableSchema.validate(table)

    def directional_checks(self) -> dict[str, bool]:
        """Orderings expected when audiences cluster and hyperlinks concentrate on hubs."""
        h, a = self.hyperlink.stats, self.audience.stats
        return {
            'audience_clustering_exceeds_hyperlink': a.clustering_coefficient > h.clustering_coefficient,
            'audience_centralization_below_hyperlink': a.centralization < h.centralization,
            'audience_density_exceeds_hyperlink': a.density > h.density,
        }

import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns

from src.graph_core import WeightedGraph
from src.metrics_engine import degree_ccdf

logger = logging.getLogger(__name__)

sns.set_theme(style="whitegrid", context="notebook")
plt.rcParams['font.family'] = 'sans-serif'
# fixed ids inside the SVG so identical inputs give identical files
plt.rcParams['svg.hashsalt'] = 'dualweb'

SVG_METADATA = {'Date': None, 'Creator': None}


class VisualEngine:
    """
    Degree distribution figures (log-log CCDF) for one or both networks.
    """
    def __init__(self, output_dir):
        self.output_dir = str(output_dir)
        os.makedirs(self.output_dir, exist_ok=True)

        self.network_colors = {
            'hyperlink': '#c0392b',
            'audience': '#2471a3',
        }

    def _save(self, fig, filename: str) -> str:
        output_path = os.path.join(self.output_dir, filename)
        fig.savefig(output_path, format='svg', bbox_inches='tight', metadata=SVG_METADATA)
        plt.close(fig)
        logger.info(f"   -> Saved figure to {output_path}")
        return output_path

    def _draw_ccdf(self, ax, df: pd.DataFrame, label: str, color: str):
        # log axes cannot show degree 0
        df = df[df['degree'] > 0]
        sns.scatterplot(data=df, x='degree', y='ccdf', color=color, s=30,
                        linewidth=0, label=label, ax=ax)
        ax.set_xscale('log')
        ax.set_yscale('log')
        ax.set_xlabel('Degree')
        ax.set_ylabel('P(D >= degree)')

    def plot_degree_ccdf(self, g: WeightedGraph, name: str, filename=None) -> str:
        fig, ax = plt.subplots(figsize=(6, 5))
        self._draw_ccdf(ax, degree_ccdf(g), name, self.network_colors.get(name, '#34495e'))
        ax.set_title(f'Degree distribution: {name} network', fontweight='bold')
        return self._save(fig, filename or f'degree_ccdf_{name}.svg')

    def plot_degree_comparison(self, hyperlink: WeightedGraph, audience: WeightedGraph,
                               filename='degree_comparison.svg') -> str:
        """Both networks side by side on shared log-log axes."""
        fig, axes = plt.subplots(1, 2, figsize=(12, 5), sharey=True)
        for ax, (name, g) in zip(axes, [('hyperlink', hyperlink), ('audience', audience)]):
            self._draw_ccdf(ax, degree_ccdf(g), name, self.network_colors[name])
            ax.set_title(f'{name.capitalize()} network', fontweight='bold')
        fig.suptitle('Degree distributions (CCDF)', fontsize=14, fontweight='bold')
        return self._save(fig, filename)

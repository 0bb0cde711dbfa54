"""
Batch export
Writes sampled realizations to CSV, with an optional JSON summary and a
per-realization timeline file
"""

import json
from collections import Counter
from pathlib import Path

import pandas as pd
from loguru import logger

from .config import CSV_FLOAT_FORMAT


class BatchExporter:
    def __init__(self, float_format=CSV_FLOAT_FORMAT):
        """
        Initialize Batch Exporter

        Args:
            float_format (str): printf-style float format for CSV cells
        """
        self.float_format = float_format

    def ensure_output_directory(self, path):
        """Create the parent directory of ``path`` if it doesn't exist"""
        parent = Path(path).parent
        if not parent.exists():
            parent.mkdir(parents=True)
            logger.info(f"Created output directory: {parent}")

    def export(self, batch, path, summary=False):
        """
        Export composite-variable values, one row per realization

        Args:
            batch (RealizationBatch): Sampled realizations
            path (str or Path): CSV destination
            summary (bool): Also write ``<stem>_summary.json`` next to it

        Returns:
            tuple: (export_path, realization_count, summary_stats or None)
        """
        path = Path(path)
        self.ensure_output_directory(path)
        batch.composite_values().to_csv(
            path, index=False, float_format=self.float_format, lineterminator="\n"
        )
        logger.info(f"Exported {batch.count} realizations to {path}")

        stats = None
        if summary:
            stats = self.generate_summary_stats(batch)
            summary_path = path.with_name(f"{path.stem}_summary.json")
            summary_path.write_text(json.dumps(stats, sort_keys=True, indent=2) + "\n", encoding="utf-8")
            logger.info(f"Summary written to {summary_path}")
        return path, batch.count, stats

    def export_timeline(self, batch, path):
        """
        Export the within-realization timeline: every atomic value plus the
        time points drawn by each mixing variable
        """
        path = Path(path)
        self.ensure_output_directory(path)
        frame = batch.atomic_frame().copy()
        drawn = pd.DataFrame(batch.realized_subsets, index=frame.index)
        for name in drawn.columns:
            frame[f"{name}.times"] = drawn[name].map(lambda subset: " ".join(str(t) for t in subset))
        frame.insert(0, "realization", range(batch.count))
        frame.to_csv(path, index=False, float_format=self.float_format, lineterminator="\n")
        logger.info(f"Exported timelines of {batch.count} realizations to {path}")
        return path

    def generate_summary_stats(self, batch):
        """
        Summary statistics for an exported batch

        Returns:
            dict: seed, count, per-variable mean/variance and realized-subset frequencies
        """
        values = batch.composite_values()
        frequencies = {}
        for record in batch.realized_subsets:
            for name, subset in record.items():
                frequencies.setdefault(name, Counter())[" ".join(str(t) for t in subset)] += 1
        return {
            "seed": batch.seed,
            "count": batch.count,
            "variables": {
                name: {
                    "mean": float(values[name].mean()),
                    "variance": float(values[name].var(ddof=0)),
                }
                for name in values.columns
            },
            "realized_subsets": {
                name: {subset: n / batch.count for subset, n in sorted(counts.items())}
                for name, counts in sorted(frequencies.items())
            },
        }

"""Section-structured mining of SEC IPO registration filings.

Subpackage map:

- ``model``        shared domain types (filings, industry divisions, label dictionary)
- ``edgar``        EDGAR retrieval with caching and rate limiting
- ``toc``          table-of-contents detection and parsing (ASCII + HTML)
- ``sections``     TOC-driven segmentation, label normalization, markup stripping
- ``judges``       judge adapter contract (HTTP chat endpoints, offline deterministic)
- ``validation``   completeness rules plus dual-signal judge policy
- ``images``       embedded-image extraction and ensemble vote aggregation
- ``charts``       chart feature extraction and misleadingness rating aggregates
- ``metrics``      agreement, diversity, and yearly corpus statistics
- ``store``        append-only JSONL manifests and dataset layout
- ``review_api``   HTTP review queue / explorer service
- ``cli``          pipeline orchestration commands
"""

__version__ = "0.1.0"

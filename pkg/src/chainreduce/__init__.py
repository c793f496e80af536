"""Decentralised pairwise gradient reduce with a learned aggregation scheduler."""
import logging

__version__ = "0.1.0"

logging.getLogger("chainreduce").addHandler(logging.NullHandler())

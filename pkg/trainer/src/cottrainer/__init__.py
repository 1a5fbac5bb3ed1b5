"""From-scratch decoder-only transformer trainer for trace datasets."""

__version__ = "0.1.0"

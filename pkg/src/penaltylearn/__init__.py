"""Supervised penalty learning for optimal-partitioning changepoint detection."""

"""Granger causality between two stationary curve time series."""

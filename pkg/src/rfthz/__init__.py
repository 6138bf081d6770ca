"""Hybrid RF/THz dual-hop link analysis."""

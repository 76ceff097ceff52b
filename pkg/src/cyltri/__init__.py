"""Cylinder triangulation from image silhouette lines."""

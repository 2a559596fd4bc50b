"""Computational services: data, scores, EMOS, clustering, inference, synthesis."""

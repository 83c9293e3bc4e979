"""Shared infrastructure: configuration, logging, errors and file output."""

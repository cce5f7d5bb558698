"""Shared utilities: configuration, errors, logging, paths and worker pools"""

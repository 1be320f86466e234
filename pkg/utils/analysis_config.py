"""
Analysis Configuration Module for the commitment analyzer
Holds numerical tolerances, size limits and optimizer settings
"""

import os
from contextlib import contextmanager

ENV_PREFIX = "QBC_"


class AnalysisConfig:
    def __init__(self):
        # Validation tolerances
        self.STATE_TOL = 1e-10
        self.CHANNEL_TOL = 1e-9
        self.WEIGHT_TOL = 1e-9
        self.PRUNE_TOL = 1e-15

        # Size limits
        self.MAX_MATRIX_ENTRIES = 2 ** 24
        self.BRANCH_CAP = 10 ** 4
        self.LOWRANK_THRESHOLD = 4096
        self.ORACLE_MAX_DIM = 4

        # Optimizers
        self.ALIGN_RESTARTS = 8
        self.ALIGN_MAX_ITER = 500
        self.ALIGN_TOL = 1e-9
        self.ASCENT_TOL = 1e-8
        self.ASCENT_MAX_ITER = 500

        # Reports
        self.SCHEMA_VERSION = "1"
        self.WORKERS = 1

        self.load_env(os.environ)

    def load_env(self, environ):
        """Apply QBC_<NAME> overrides from the environment."""
        for name in self.get_config_summary():
            key = ENV_PREFIX + name
            if key not in environ:
                continue
            raw = environ[key]
            current = getattr(self, name)
            try:
                if isinstance(current, str):
                    value = raw
                elif isinstance(current, int):
                    value = int(raw)
                else:
                    value = float(raw)
                self._check(name, value)
                setattr(self, name, value)
            except (TypeError, ValueError) as e:
                print(f"⚠️ Ignoring {key}={raw!r}: {e}")

    def _check(self, name, value):
        if name == "SCHEMA_VERSION":
            return
        if name.endswith("_TOL") and not 0 < value < 1:
            raise ValueError(f"{name} must lie in (0, 1)")
        if not name.endswith("_TOL") and value < 1:
            raise ValueError(f"{name} must be at least 1")

    def set_tolerance(self, name, value):
        """Set one of the *_TOL tolerances."""
        name = name.upper()
        if not name.endswith("_TOL"):
            name = name + "_TOL"
        if not hasattr(self, name):
            raise ValueError(f"Unknown tolerance: {name}")
        value = float(value)
        self._check(name, value)
        setattr(self, name, value)
        print(f"🎯 {name} set to: {value:g}")

    def set_workers(self, workers):
        """Set the number of worker threads for independent trials."""
        workers = int(workers)
        self._check("WORKERS", workers)
        self.WORKERS = workers
        print(f"🧵 Workers: {workers}")

    def set_branch_cap(self, cap):
        """Set the maximum number of live protocol branches."""
        cap = int(cap)
        self._check("BRANCH_CAP", cap)
        self.BRANCH_CAP = cap
        print(f"🌳 Branch cap: {cap}")

    @contextmanager
    def override(self, **values):
        """Temporarily replace settings; restores the previous values on exit."""
        previous = {}
        for name, value in values.items():
            name = name.upper()
            if not hasattr(self, name):
                raise ValueError(f"Unknown setting: {name}")
            previous[name] = getattr(self, name)
            setattr(self, name, value)
        try:
            yield self
        finally:
            for name, value in previous.items():
                setattr(self, name, value)

    def get_config_summary(self):
        """Get configuration summary."""
        return {
            'STATE_TOL': self.STATE_TOL,
            'CHANNEL_TOL': self.CHANNEL_TOL,
            'WEIGHT_TOL': self.WEIGHT_TOL,
            'PRUNE_TOL': self.PRUNE_TOL,
            'MAX_MATRIX_ENTRIES': self.MAX_MATRIX_ENTRIES,
            'BRANCH_CAP': self.BRANCH_CAP,
            'LOWRANK_THRESHOLD': self.LOWRANK_THRESHOLD,
            'ORACLE_MAX_DIM': self.ORACLE_MAX_DIM,
            'ALIGN_RESTARTS': self.ALIGN_RESTARTS,
            'ALIGN_MAX_ITER': self.ALIGN_MAX_ITER,
            'ALIGN_TOL': self.ALIGN_TOL,
            'ASCENT_TOL': self.ASCENT_TOL,
            'ASCENT_MAX_ITER': self.ASCENT_MAX_ITER,
            'SCHEMA_VERSION': self.SCHEMA_VERSION,
            'WORKERS': self.WORKERS,
        }

# Global analysis configuration instance
analysis_config = AnalysisConfig()

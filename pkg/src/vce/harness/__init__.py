"""Randomized verification suites with fitted constants."""

from vce.harness.suites import SUITES, SuiteConfig, VerificationReport, fit_constant, run_suite, seed_stability

__all__ = ["SUITES", "SuiteConfig", "VerificationReport", "fit_constant", "run_suite", "seed_stability"]
